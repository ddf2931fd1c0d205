use alloc::vec;
use alloc::vec::Vec;

use super::{grid_delta, pair_factor, ApproxConfig, ApproxResult, DimKind, Layout, Run};
use crate::error::Result;
use crate::math;
use crate::models::{ChoiceInstance, NlTree, Population};
use crate::objectives::Problem;

/// Where one individual's tree stores its alternative contributions.
struct Plan<'a> {
    tree: &'a NlTree,
    /// Node has an item of `C` below it.
    has_c: Vec<bool>,
    /// Log-sum dimension for alternative leaves directly under a node.
    sum_dim: Vec<Option<usize>>,
    /// Flag dimension for a child subtree made only of alternatives.
    flag_dim: Vec<Option<usize>>,
}

fn plans<'a>(trees: &[&'a NlTree], inst: &ChoiceInstance) -> (Vec<Plan<'a>>, Layout) {
    let mut kinds = Vec::new();
    let mut plans = Vec::with_capacity(trees.len());
    for tree in trees {
        let nodes = tree.nodes();
        let has_c = tree.present(inst.choice_set());
        let mut sum_dim = vec![None; nodes.len()];
        let mut flag_dim = vec![None; nodes.len()];
        for v in 0..nodes.len() {
            if !has_c[v] || nodes[v].item.is_some() {
                continue;
            }
            let mut wants_sum = false;
            for &c in &nodes[v].children {
                if has_c[c] {
                    continue;
                }
                if nodes[c].item.is_some() {
                    wants_sum = true;
                } else {
                    flag_dim[c] = Some(kinds.len());
                    kinds.push(DimKind::Flag);
                }
            }
            if wants_sum {
                sum_dim[v] = Some(kinds.len());
                kinds.push(DimKind::LogSum);
            }
        }
        plans.push(Plan { tree, has_c, sum_dim, flag_dim });
    }
    let init = kinds.iter().map(|k| if *k == DimKind::Flag { 0.0 } else { f64::NEG_INFINITY }).collect();
    let steps = inst
        .alternatives()
        .iter()
        .map(|&z| {
            plans
                .iter()
                .map(|p| {
                    let nodes = p.tree.nodes();
                    let leaf = p.tree.leaf(z);
                    let mut top = leaf;
                    while let Some(parent) = nodes[top].parent.filter(|&q| !p.has_c[q]) {
                        top = parent;
                    }
                    if top == leaf {
                        let parent = nodes[leaf].parent.expect("leaves have parents");
                        (p.sum_dim[parent].expect("planned"), nodes[leaf].utility)
                    } else {
                        (p.flag_dim[top].expect("planned"), 1.0)
                    }
                })
                .collect()
        })
        .collect();
    (plans, Layout { kinds, init, steps })
}

impl Plan<'_> {
    /// `Pr(x)` for each `x ∈ C` from the stored state.
    fn probs(&self, state: &[f64], choice_set: &[usize]) -> Vec<f64> {
        let nodes = self.tree.nodes();
        let mut log_den = vec![f64::NAN; nodes.len()];
        choice_set
            .iter()
            .map(|&x| {
                let mut log_p = 0.0;
                let mut v = self.tree.leaf(x);
                while let Some(parent) = nodes[v].parent {
                    if log_den[parent].is_nan() {
                        let kids = nodes[parent].children.iter().filter_map(|&c| {
                            if self.has_c[c] {
                                Some(nodes[c].utility)
                            } else {
                                match self.flag_dim[c] {
                                    Some(d) if state[d] == 1.0 => Some(nodes[c].utility),
                                    _ => None,
                                }
                            }
                        });
                        let alt = self.sum_dim[parent].map_or(f64::NEG_INFINITY, |d| state[d]);
                        log_den[parent] = math::log_add_exp(math::log_sum_exp(kids), alt);
                    }
                    log_p += nodes[v].utility - log_den[parent];
                    v = parent;
                }
                math::exp(log_p)
            })
            .collect()
    }
}

/// `min{(x+1)^{1/h} − 1, 1 − (1−x)^{1/h}} / m`; the second term is dropped
/// once `x ≥ 1`.
pub(crate) fn nl_delta(x: f64, h: usize, m: usize) -> f64 {
    let inv_h = 1.0 / h as f64;
    let up = math::powf(x + 1.0, inv_h) - 1.0;
    let d = if x < 1.0 { up.min(1.0 - math::powf(1.0 - x, inv_h)) } else { up };
    d / m as f64
}

/// NL variant for all three problems. Dimensions are the alternative
/// totals under each node that has alternative leaves as children, plus a
/// two-state flag for each child subtree holding only alternatives.
pub fn optimize_nl(pop: &Population, inst: &ChoiceInstance, cfg: &ApproxConfig) -> Result<ApproxResult> {
    cfg.validate()?;
    pop.check_instance(inst)?;
    let trees = pop.nl()?;
    let (k, m) = (inst.k(), inst.m());
    let h = trees.iter().map(|t| t.height()).max().unwrap_or(1).max(1);
    let x = match cfg.problem {
        Problem::Promotion { .. } => cfg.epsilon / 4.0,
        _ => cfg.epsilon / (2.0 * k as f64 * pair_factor(pop.len())),
    };
    let (plans, layout) = plans(&trees, inst);
    let run = Run {
        pop,
        inst,
        cfg,
        layout,
        delta: grid_delta(nl_delta(x, h, m), m),
        shift: Vec::new(),
        guarantee_applicable: true,
        bound: cfg.epsilon,
        stored_sums_exact: true,
    };
    run.solve(|state| plans.iter().map(|p| p.probs(state, inst.choice_set())).collect())
}

/// Promotion of `x_star` under NL, scored by ε-favorite count.
pub fn promote_nl(pop: &Population, inst: &ChoiceInstance, x_star: usize, eps: f64) -> Result<ApproxResult> {
    optimize_nl(pop, inst, &ApproxConfig::new(eps, Problem::Promotion { target: x_star }))
}
