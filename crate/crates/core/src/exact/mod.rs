//! Exact baselines: exhaustive search, greedy, closed-form rules for the
//! tractable restrictions, and an LP-text export of the MNL bilinear programs.

mod miblp;
mod restricted;
mod stubborn;

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::models::{ChoiceInstance, Population};
use crate::objectives::{self, AlternativeSet, Problem};

pub use miblp::{build_miblp, parse_miblp, render_miblp, Constraint, MiblpModel, Relation, Sense};
pub use restricted::{promote_cdm_2item_equal, promote_eba_disjoint, promote_nl_same_tree};
pub use stubborn::{solve_equal_stubbornness, stubbornness};

/// Largest `m` accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 25;

/// Greedy additions must beat the incumbent by more than this.
pub const GREEDY_MIN_GAIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub set: AlternativeSet,
    /// `D(Z)` or the strict-favorite count.
    pub value: f64,
    pub evaluations: u64,
}

/// Exhaustive search over every subset of the alternatives.
pub fn brute_force(pop: &Population, inst: &ChoiceInstance, problem: Problem) -> Result<ExactResult> {
    let total = subset_count(inst)?;
    brute_force_range(pop, inst, problem, 0..total)
}

/// `2^m`, refusing instances past [`BRUTE_FORCE_LIMIT`].
pub fn subset_count(inst: &ChoiceInstance) -> Result<u64> {
    let m = inst.m();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { m, limit: BRUTE_FORCE_LIMIT });
    }
    Ok(1u64 << m)
}

/// Sorted members of the subset encoded by `mask` over `inst.alternatives()`.
pub fn subset_members(inst: &ChoiceInstance, mask: u64) -> Vec<usize> {
    let mut v: Vec<usize> =
        inst.alternatives().iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &z)| z).collect();
    v.sort_unstable();
    v
}

/// Exhaustive search over the masks in `masks`; pieces combine with [`merge`].
pub fn brute_force_range(
    pop: &Population,
    inst: &ChoiceInstance,
    problem: Problem,
    masks: Range<u64>,
) -> Result<ExactResult> {
    pop.check_instance(inst)?;
    subset_count(inst)?;
    if let Problem::Promotion { target } = problem {
        objectives::target_position(inst, target)?;
    }
    let mut best: Option<ExactResult> = None;
    let evaluations = masks.end.saturating_sub(masks.start);
    for mask in masks {
        let members = subset_members(inst, mask);
        let value = objectives::evaluate(pop, inst, &members, problem)?;
        let candidate = ExactResult { set: AlternativeSet::from_sorted(members), value, evaluations: 0 };
        best = Some(match best {
            None => candidate,
            Some(b) => pick(problem, b, candidate),
        });
    }
    let mut best = best.ok_or_else(|| Error::Precondition("empty mask range".into()))?;
    best.evaluations = evaluations;
    Ok(best)
}

fn pick(problem: Problem, a: ExactResult, b: ExactResult) -> ExactResult {
    if problem.better(b.value, a.value) || (b.value == a.value && b.set.lex_cmp(&a.set).is_lt()) {
        b
    } else {
        a
    }
}

/// Combines two partial searches; ties go to the lexicographically smaller set.
pub fn merge(problem: Problem, a: ExactResult, b: ExactResult) -> ExactResult {
    let evaluations = a.evaluations + b.evaluations;
    let mut out = pick(problem, a, b);
    out.evaluations = evaluations;
    out
}

/// Adds the single best alternative while it improves the objective by more
/// than [`GREEDY_MIN_GAIN`]. Ties go to the lowest universe index.
pub fn greedy(pop: &Population, inst: &ChoiceInstance, problem: Problem) -> Result<ExactResult> {
    pop.check_instance(inst)?;
    let mut pool: Vec<usize> = inst.alternatives().to_vec();
    pool.sort_unstable();
    let mut chosen: Vec<usize> = Vec::new();
    let mut value = objectives::evaluate(pop, inst, &chosen, problem)?;
    let mut evaluations = 1u64;
    loop {
        let mut step: Option<(usize, f64)> = None;
        for (i, &z) in pool.iter().enumerate() {
            let mut trial = chosen.clone();
            trial.push(z);
            trial.sort_unstable();
            let v = objectives::evaluate(pop, inst, &trial, problem)?;
            evaluations += 1;
            if step.is_none_or(|(_, bv)| problem.better(v, bv)) {
                step = Some((i, v));
            }
        }
        match step {
            Some((i, v)) if problem.improves(v, value, GREEDY_MIN_GAIN) => {
                chosen.push(pool.remove(i));
                chosen.sort_unstable();
                value = v;
            }
            _ => break,
        }
    }
    Ok(ExactResult { set: AlternativeSet::from_sorted(chosen), value, evaluations })
}
