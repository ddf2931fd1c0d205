//! Group objectives over a candidate set `Z ⊆ C̄`: disagreement `D(Z)`,
//! strict-favorite counts and ε-favorite counts.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{domain, Result};
use crate::models::{ChoiceInstance, ChoiceModel, Population};

/// A subset of the instance's alternatives, kept sorted by universe index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AlternativeSet {
    members: Vec<usize>,
}

impl AlternativeSet {
    pub fn new(inst: &ChoiceInstance, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|i| !inst.alternatives().contains(i)) {
            return Err(domain(alloc::format!("item {bad} is not an alternative of this instance")));
        }
        Ok(AlternativeSet { members })
    }

    pub fn from_names(inst: &ChoiceInstance, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| inst.index_of(n).ok_or_else(|| domain(alloc::format!("unknown item {n}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(inst, idx)
    }

    pub fn empty() -> Self {
        AlternativeSet::default()
    }

    /// Trusted constructor; `members` must be sorted alternatives.
    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        AlternativeSet { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Lexicographic order on the sorted member lists; used for tie-breaking.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.members.cmp(&other.members)
    }
}

/// The three choice-set optimization problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    /// Minimize `D(Z)`.
    Agreement,
    /// Maximize `D(Z)`.
    Disagreement,
    /// Maximize the number of individuals whose strict favorite in `C` is `target`.
    Promotion { target: usize },
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Agreement => "agreement",
            Problem::Disagreement => "disagreement",
            Problem::Promotion { .. } => "promotion",
        }
    }

    pub fn maximizes(self) -> bool {
        !matches!(self, Problem::Agreement)
    }

    /// `true` when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.maximizes() {
            a > b
        } else {
            a < b
        }
    }

    /// `true` when `a` improves on `b` by more than `margin`.
    pub fn improves(self, a: f64, b: f64, margin: f64) -> bool {
        if self.maximizes() {
            a > b + margin
        } else {
            a < b - margin
        }
    }
}

/// Position of `x_star` inside `C`.
pub fn target_position(inst: &ChoiceInstance, x_star: usize) -> Result<usize> {
    inst.choice_set()
        .iter()
        .position(|&x| x == x_star)
        .ok_or_else(|| domain(alloc::format!("target item {x_star} is not in the choice set")))
}

/// `Pr(a ← x | C ∪ Z)` for every individual `a` and every `x ∈ C`.
pub fn probabilities_on_choice_set(pop: &Population, inst: &ChoiceInstance, z: &[usize]) -> Result<Vec<Vec<f64>>> {
    let set = inst.offered(z);
    let k = inst.k();
    pop.individuals()
        .iter()
        .map(|ind| {
            let mut d = ind.params.distribution(&set)?;
            d.truncate(k);
            Ok(d)
        })
        .collect()
}

/// Sum over unordered pairs of individuals and items of `C` of the absolute
/// probability difference.
pub fn disagreement_from_probs(probs: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, pa) in probs.iter().enumerate() {
        for pb in &probs[i + 1..] {
            total += pa.iter().zip(pb).map(|(x, y)| crate::math::abs(x - y)).sum::<f64>();
        }
    }
    total
}

/// Individuals for whom position `target` strictly beats every other item.
pub fn favorites_from_probs(probs: &[Vec<f64>], target: usize) -> usize {
    probs
        .iter()
        .filter(|p| p.iter().enumerate().all(|(j, &q)| j == target || p[target] > q))
        .count()
}

/// Individuals for whom `Pr(target) + eps ≥ Pr(x)` for every item.
pub fn eps_favorites_from_probs(probs: &[Vec<f64>], target: usize, eps: f64) -> usize {
    probs.iter().filter(|p| p.iter().all(|&q| p[target] + eps >= q)).count()
}

pub fn disagreement(pop: &Population, inst: &ChoiceInstance, z: &AlternativeSet) -> Result<f64> {
    pop.check_instance(inst)?;
    Ok(disagreement_from_probs(&probabilities_on_choice_set(pop, inst, z.members())?))
}

pub fn favorite_count(pop: &Population, inst: &ChoiceInstance, z: &AlternativeSet, x_star: usize) -> Result<usize> {
    pop.check_instance(inst)?;
    let t = target_position(inst, x_star)?;
    Ok(favorites_from_probs(&probabilities_on_choice_set(pop, inst, z.members())?, t))
}

pub fn eps_favorite_count(
    pop: &Population,
    inst: &ChoiceInstance,
    z: &AlternativeSet,
    x_star: usize,
    eps: f64,
) -> Result<usize> {
    pop.check_instance(inst)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(domain("eps must be non-negative"));
    }
    let t = target_position(inst, x_star)?;
    Ok(eps_favorites_from_probs(&probabilities_on_choice_set(pop, inst, z.members())?, t, eps))
}

/// Objective value of `z` for `problem`: `D(Z)` or the strict-favorite count.
pub fn evaluate(pop: &Population, inst: &ChoiceInstance, z: &[usize], problem: Problem) -> Result<f64> {
    let probs = probabilities_on_choice_set(pop, inst, z)?;
    Ok(match problem {
        Problem::Agreement | Problem::Disagreement => disagreement_from_probs(&probs),
        Problem::Promotion { target } => favorites_from_probs(&probs, target_position(inst, target)?) as f64,
    })
}
