use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_set, ChoiceModel};
use crate::error::{invalid, Result};
use crate::math;

/// Nested description of a tree node, used to build an [`NlTree`].
///
/// Leaves carry `item: Some(index)`; internal nodes carry children. The
/// root's `utility` is ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct NlNode {
    pub label: String,
    pub utility: f64,
    pub item: Option<usize>,
    pub children: Vec<NlNode>,
}

impl NlNode {
    pub fn leaf(label: impl Into<String>, item: usize, utility: f64) -> Self {
        NlNode { label: label.into(), utility, item: Some(item), children: Vec::new() }
    }

    pub fn nest(label: impl Into<String>, utility: f64, children: Vec<NlNode>) -> Self {
        NlNode { label: label.into(), utility, item: None, children }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub label: String,
    pub utility: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub item: Option<usize>,
}

/// Generalized nested logit: a rooted tree with one leaf per item and a
/// utility on every non-root node. A choice descends from the root, picking
/// among the children present in the induced subtree by MNL.
#[derive(Clone, Debug, PartialEq)]
pub struct NlTree {
    nodes: Vec<Node>,
    leaf_of: Vec<usize>,
    height: usize,
}

impl NlTree {
    pub fn new(root: NlNode, universe_len: usize) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut leaf_of = vec![usize::MAX; universe_len];
        let mut stack = vec![(root, None::<usize>, 0usize)];
        let mut height = 0;
        while let Some((spec, parent, depth)) = stack.pop() {
            let id = nodes.len();
            if parent.is_some() && !spec.utility.is_finite() {
                return Err(invalid(alloc::format!("node {} needs a finite utility", spec.label)));
            }
            match (spec.item, spec.children.is_empty()) {
                (Some(item), true) => {
                    if item >= universe_len {
                        return Err(invalid(alloc::format!("leaf {} refers to item {item} outside the universe", spec.label)));
                    }
                    if leaf_of[item] != usize::MAX {
                        return Err(invalid(alloc::format!("item {item} appears as more than one leaf")));
                    }
                    if parent.is_none() {
                        return Err(invalid("the root cannot be a leaf"));
                    }
                    leaf_of[item] = id;
                    height = height.max(depth);
                }
                (None, false) => {}
                (Some(_), false) => return Err(invalid(alloc::format!("leaf {} has children", spec.label))),
                (None, true) => return Err(invalid(alloc::format!("internal node {} has no children", spec.label))),
            }
            if let Some(p) = parent {
                let node: &mut Node = &mut nodes[p];
                node.children.push(id);
            }
            nodes.push(Node {
                label: spec.label,
                utility: spec.utility,
                parent,
                children: Vec::new(),
                item: spec.item,
            });
            for child in spec.children.into_iter().rev() {
                stack.push((child, Some(id), depth + 1));
            }
        }
        if let Some(missing) = leaf_of.iter().position(|&l| l == usize::MAX) {
            return Err(invalid(alloc::format!("item {missing} has no leaf in the tree")));
        }
        Ok(NlTree { nodes, leaf_of, height })
    }

    /// Longest root-to-leaf path, in edges.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn leaf(&self, item: usize) -> usize {
        self.leaf_of[item]
    }

    pub fn to_nested(&self) -> NlNode {
        self.nested_from(0)
    }

    fn nested_from(&self, id: usize) -> NlNode {
        let n = &self.nodes[id];
        NlNode {
            label: n.label.clone(),
            utility: n.utility,
            item: n.item,
            children: n.children.iter().map(|&c| self.nested_from(c)).collect(),
        }
    }

    /// Ancestors of `item`'s leaf from the leaf up to (excluding) the root.
    pub(crate) fn path(&self, item: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut v = self.leaf_of[item];
        while let Some(p) = self.nodes[v].parent {
            path.push(v);
            v = p;
        }
        path
    }

    /// Marks every node of the subtree induced by `set` and its ancestors.
    pub(crate) fn present(&self, set: &[usize]) -> Vec<bool> {
        let mut present = vec![false; self.nodes.len()];
        for &x in set {
            let mut v = self.leaf_of[x];
            loop {
                if present[v] {
                    break;
                }
                present[v] = true;
                match self.nodes[v].parent {
                    Some(p) => v = p,
                    None => break,
                }
            }
        }
        present
    }

    /// Leaf items under `id`.
    pub(crate) fn leaves_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            if let Some(item) = node.item {
                out.push(item);
            }
            stack.extend_from_slice(&node.children);
        }
        out
    }

    /// Parent relation expressed over leaf sets, for comparing topologies
    /// while ignoring labels and utilities.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = (0..self.nodes.len())
            .filter(|&v| self.nodes[v].item.is_none())
            .map(|v| {
                let mut l = self.leaves_under(v);
                l.sort_unstable();
                l
            })
            .collect();
        out.sort();
        out
    }
}

impl ChoiceModel for NlTree {
    fn universe_len(&self) -> usize {
        self.leaf_of.len()
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        check_set(set, self.leaf_of.len())?;
        let present = self.present(set);
        let mut log_den = vec![f64::NAN; self.nodes.len()];
        let mut out = Vec::with_capacity(set.len());
        for &x in set {
            let mut log_p = 0.0;
            let mut v = self.leaf_of[x];
            while let Some(p) = self.nodes[v].parent {
                if log_den[p].is_nan() {
                    let children = &self.nodes[p].children;
                    log_den[p] = math::log_sum_exp(
                        children.iter().filter(|&&c| present[c]).map(|&c| self.nodes[c].utility),
                    );
                }
                log_p += self.nodes[v].utility - log_den[p];
                v = p;
            }
            out.push(math::exp(log_p));
        }
        Ok(out)
    }
}
