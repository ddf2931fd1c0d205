use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_set, ChoiceModel};
use crate::error::{invalid, Result};

/// Elimination-by-aspects: each item owns a set of aspects, each aspect a
/// non-negative utility.
#[derive(Clone, Debug, PartialEq)]
pub struct EbaParams {
    aspect_names: Vec<String>,
    /// Sorted, deduplicated aspect indices per item.
    item_aspects: Vec<Vec<usize>>,
    utilities: Vec<f64>,
}

impl EbaParams {
    pub fn new(aspect_names: Vec<String>, item_aspects: Vec<Vec<usize>>, utilities: Vec<f64>) -> Result<Self> {
        if utilities.len() != aspect_names.len() {
            return Err(invalid("one utility per aspect is required"));
        }
        if utilities.iter().any(|u| !u.is_finite() || *u < 0.0) {
            return Err(invalid("aspect utilities must be finite and non-negative"));
        }
        let mut item_aspects = item_aspects;
        for (i, aspects) in item_aspects.iter_mut().enumerate() {
            aspects.sort_unstable();
            aspects.dedup();
            if aspects.is_empty() {
                return Err(invalid(alloc::format!("item {i} has no aspects")));
            }
            if aspects.iter().any(|&a| a >= aspect_names.len()) {
                return Err(invalid(alloc::format!("item {i} refers to an unknown aspect")));
            }
        }
        Ok(EbaParams { aspect_names, item_aspects, utilities })
    }

    pub fn aspect_names(&self) -> &[String] {
        &self.aspect_names
    }

    pub fn aspects_of(&self, item: usize) -> &[usize] {
        &self.item_aspects[item]
    }

    pub fn aspect_utility(&self, aspect: usize) -> f64 {
        self.utilities[aspect]
    }

    pub fn aspect_utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn shares_aspect(&self, x: usize, y: usize) -> bool {
        let (a, b) = (&self.item_aspects[x], &self.item_aspects[y]);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Distribution over a sorted restriction set, memoized by that set.
    fn restricted(&self, set: &[usize], memo: &mut BTreeMap<Vec<usize>, Vec<f64>>) -> Vec<f64> {
        if set.len() == 1 {
            return vec![1.0];
        }
        if let Some(d) = memo.get(set) {
            return d.clone();
        }
        // aspect -> members of `set` holding it
        let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (pos, &x) in set.iter().enumerate() {
            for &a in &self.item_aspects[x] {
                holders.entry(a).or_default().push(pos);
            }
        }
        // aspects in C' \ C⁰
        let splitting: Vec<(usize, Vec<usize>)> = holders.into_iter().filter(|(_, h)| h.len() < set.len()).collect();
        let total: f64 = splitting.iter().map(|(a, _)| self.utilities[*a]).sum();
        let mut dist = vec![0.0; set.len()];
        if total <= 0.0 {
            dist.iter_mut().for_each(|p| *p = 1.0 / set.len() as f64);
        } else {
            for (a, positions) in &splitting {
                let w = self.utilities[*a];
                if w == 0.0 {
                    continue;
                }
                let sub: Vec<usize> = positions.iter().map(|&p| set[p]).collect();
                let sub_dist = self.restricted(&sub, memo);
                for (&p, q) in positions.iter().zip(&sub_dist) {
                    dist[p] += w * q;
                }
            }
            // rounding can leave a sure choice one ulp above 1
            dist.iter_mut().for_each(|p| *p = (*p / total).min(1.0));
        }
        memo.insert(set.to_vec(), dist.clone());
        dist
    }
}

impl ChoiceModel for EbaParams {
    fn universe_len(&self) -> usize {
        self.item_aspects.len()
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        check_set(set, self.item_aspects.len())?;
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut memo = BTreeMap::new();
        let dist = self.restricted(&sorted, &mut memo);
        Ok(set
            .iter()
            .map(|x| dist[sorted.binary_search(x).expect("member of sorted set")])
            .collect())
    }
}
