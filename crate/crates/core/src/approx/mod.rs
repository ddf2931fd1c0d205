//! ε-additive approximation for choice-set optimization.
//!
//! Every candidate set `Z` is summarized by a handful of real numbers per
//! individual (exp-utility totals, per-item exp-utilities, per-node totals,
//! depending on the model). Those numbers are discretized on a `(1+δ)` log
//! grid and a sparse table keeps the first set that lands in each cell.
//! Alternatives are processed in the order the instance lists them, so the
//! result is deterministic but order dependent.

mod cdm;
mod mnl;
mod nl;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashSet;

use crate::error::{domain, Error, Result};
use crate::math;
use crate::models::{ChoiceInstance, Family, Population};
use crate::objectives::{self, AlternativeSet, Problem};

pub use cdm::{optimize_cdm, promote_cdm};
pub use mnl::optimize_mnl;
pub use nl::{optimize_nl, promote_nl};

/// Index reserved for a tracked quantity that is exactly zero (or a log
/// value of `-inf`). Kept apart from every real grid index.
pub const ZERO_CELL: i64 = i64::MIN;

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxConfig {
    pub epsilon: f64,
    pub problem: Problem,
    /// CDM only: shrink δ by 4 so the bound is ε rather than 4ε.
    pub guarantee_mode: bool,
    /// Re-score every stored set from scratch and report the largest gap
    /// against the value computed from stored sums.
    pub verify_from_scratch: bool,
    /// Return the final table alongside the result.
    pub keep_table: bool,
}

impl ApproxConfig {
    pub fn new(epsilon: f64, problem: Problem) -> Self {
        ApproxConfig { epsilon, problem, guarantee_mode: false, verify_from_scratch: false, keep_table: false }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(domain("epsilon must be a positive finite number"));
        }
        Ok(())
    }
}

/// A stored set together with its tracked state, in log space where the
/// dimension is a sum or product.
#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub set: AlternativeSet,
    pub state: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxResult {
    pub best: AlternativeSet,
    /// `D(best)`, or the ε-favorite count for promotion, re-scored from scratch.
    pub value: f64,
    pub cells_materialized: usize,
    /// `cells_materialized / 2^m`.
    pub search_fraction: f64,
    pub delta: f64,
    pub dimensions: usize,
    /// Per-individual constant added to utilities before discretization (MNL).
    pub shift: Vec<f64>,
    /// Whether the additive bound holds for this model and instance.
    pub guarantee_applicable: bool,
    /// The additive bound that applies when `guarantee_applicable` holds.
    pub bound: f64,
    pub verify_max_error: Option<f64>,
    pub table: Option<Vec<TableEntry>>,
}

/// Runs the variant matching the population's family.
pub fn optimize(pop: &Population, inst: &ChoiceInstance, cfg: &ApproxConfig) -> Result<ApproxResult> {
    match (pop.family(), cfg.problem) {
        (Family::Mnl, Problem::Promotion { .. }) => Err(Error::Precondition(
            "promotion under MNL does not depend on the alternatives; nothing to optimize".into(),
        )),
        (Family::Mnl, _) => optimize_mnl(pop, inst, cfg),
        (Family::Cdm | Family::CdmAlt, _) => optimize_cdm(pop, inst, cfg),
        (Family::Nl, _) => optimize_nl(pop, inst, cfg),
        (Family::Eba, _) => Err(Error::Precondition("no approximation algorithm exists for EBA".into())),
    }
}

/// How one tracked number evolves when an alternative is added.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum DimKind {
    /// Log of a running sum; steps are logs of the added terms.
    LogSum,
    /// Log of a running product; steps are added directly.
    LogAdd,
    /// 0 until any contributing alternative is added, then 1.
    Flag,
}

/// The tracked dimensions of one problem, the state of `∅`, and the sparse
/// per-alternative updates in processing order.
pub(crate) struct Layout {
    pub kinds: Vec<DimKind>,
    pub init: Vec<f64>,
    pub steps: Vec<Vec<(usize, f64)>>,
}

impl Layout {
    pub fn apply(&self, state: &mut [f64], alt: usize) {
        for &(d, v) in &self.steps[alt] {
            state[d] = match self.kinds[d] {
                DimKind::LogSum => math::log_add_exp(state[d], v),
                DimKind::LogAdd => state[d] + v,
                DimKind::Flag => 1.0,
            };
        }
    }

    /// State of a set given as positions into the processing order, applied
    /// in that order.
    #[cfg(test)]
    pub fn state_of(&self, positions: &[usize]) -> Vec<f64> {
        let mut s = self.init.clone();
        for &p in positions {
            self.apply(&mut s, p);
        }
        s
    }

    fn key(&self, state: &[f64], inv_log_step: f64, out: &mut Vec<i64>) {
        out.clear();
        out.extend(state.iter().zip(&self.kinds).map(|(&s, kind)| match kind {
            DimKind::Flag => s as i64,
            _ if s == f64::NEG_INFINITY => ZERO_CELL,
            // clamp keeps extreme values off the sentinel
            _ => math::floor(s * inv_log_step).clamp(-1e18, 1e18) as i64,
        }));
    }
}

struct Entry {
    parent: usize,
    alt: usize,
    state: Box<[f64]>,
}

const ROOT: usize = usize::MAX;

pub(crate) struct Table {
    entries: Vec<Entry>,
}

impl Table {
    /// Builds `L_m`: every stored set is extended by each alternative in
    /// turn, and an extension is kept only if its cell is still empty.
    pub fn build(layout: &Layout, m: usize, delta: f64) -> Table {
        let inv = 1.0 / math::ln_1p(delta);
        let mut entries = alloc::vec![Entry { parent: ROOT, alt: ROOT, state: layout.init.clone().into_boxed_slice() }];
        let mut occupied: HashSet<Box<[i64]>> = HashSet::new();
        let mut key = Vec::with_capacity(layout.kinds.len());
        layout.key(&layout.init, inv, &mut key);
        occupied.insert(key.clone().into_boxed_slice());
        let mut scratch = layout.init.clone();
        for alt in 0..m {
            let before = entries.len();
            for e in 0..before {
                scratch.copy_from_slice(&entries[e].state);
                layout.apply(&mut scratch, alt);
                layout.key(&scratch, inv, &mut key);
                if !occupied.contains(key.as_slice()) {
                    occupied.insert(key.clone().into_boxed_slice());
                    entries.push(Entry { parent: e, alt, state: scratch.clone().into_boxed_slice() });
                }
            }
        }
        Table { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn state(&self, e: usize) -> &[f64] {
        &self.entries[e].state
    }

    /// Positions (in processing order) of the alternatives in entry `e`.
    pub fn positions(&self, mut e: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while self.entries[e].parent != ROOT {
            out.push(self.entries[e].alt);
            e = self.entries[e].parent;
        }
        out.reverse();
        out
    }
}

/// Model-specific part of a run: how to score a stored state.
pub(crate) struct Run<'a> {
    pub pop: &'a Population,
    pub inst: &'a ChoiceInstance,
    pub cfg: &'a ApproxConfig,
    pub layout: Layout,
    pub delta: f64,
    pub shift: Vec<f64>,
    pub guarantee_applicable: bool,
    pub bound: f64,
    /// When false the stored sums are not trustworthy and every set is
    /// scored from scratch.
    pub stored_sums_exact: bool,
}

impl Run<'_> {
    /// Builds the table and picks the best stored set. `probs` turns a
    /// stored state into `Pr(a ← x)` for every individual and `x ∈ C`.
    pub fn solve(self, probs: impl Fn(&[f64]) -> Vec<Vec<f64>>) -> Result<ApproxResult> {
        let inst = self.inst;
        let m = inst.m();
        let table = Table::build(&self.layout, m, self.delta);
        let alternatives = inst.alternatives();
        let members_of = |e: usize| -> Vec<usize> {
            let mut v: Vec<usize> = table.positions(e).into_iter().map(|p| alternatives[p]).collect();
            v.sort_unstable();
            v
        };
        let target = match self.cfg.problem {
            Problem::Promotion { target } => Some(objectives::target_position(inst, target)?),
            _ => None,
        };
        let score = |p: &[Vec<f64>]| match target {
            Some(t) => objectives::eps_favorites_from_probs(p, t, self.cfg.epsilon) as f64,
            None => objectives::disagreement_from_probs(p),
        };
        let from_scratch = |members: &[usize]| -> Result<f64> {
            Ok(score(&objectives::probabilities_on_choice_set(self.pop, inst, members)?))
        };

        let mut best: Option<(usize, f64, Vec<usize>)> = None;
        let mut verify_max_error: Option<f64> = None;
        for e in 0..table.len() {
            let value = if self.stored_sums_exact {
                let v = score(&probs(table.state(e)));
                if self.cfg.verify_from_scratch {
                    let gap = math::abs(v - from_scratch(&members_of(e))?);
                    verify_max_error = Some(verify_max_error.map_or(gap, |g: f64| g.max(gap)));
                }
                v
            } else {
                from_scratch(&members_of(e))?
            };
            let replace = match &best {
                None => true,
                Some((_, bv, bm)) => {
                    self.cfg.problem.better(value, *bv)
                        || (value == *bv && members_of(e).cmp(bm) == Ordering::Less)
                }
            };
            if replace {
                best = Some((e, value, members_of(e)));
            }
        }
        let (_, _, members) = best.expect("the empty set is always stored");
        let value = from_scratch(&members)?;
        let cells = table.len();
        let table_out = self.cfg.keep_table.then(|| {
            (0..table.len())
                .map(|e| TableEntry { set: AlternativeSet::from_sorted(members_of(e)), state: table.state(e).to_vec() })
                .collect()
        });
        Ok(ApproxResult {
            best: AlternativeSet::from_sorted(members),
            value,
            cells_materialized: cells,
            search_fraction: cells as f64 / math::powf(2.0, m as f64),
            delta: self.delta,
            dimensions: self.layout.kinds.len(),
            shift: self.shift,
            guarantee_applicable: self.guarantee_applicable,
            bound: self.bound,
            verify_max_error,
            table: table_out,
        })
    }
}

/// Number of individual pairs, floored at one so a lone individual still
/// gets a finite grid.
pub(crate) fn pair_factor(n: usize) -> f64 {
    math::pairs(n).max(1) as f64
}

/// Guard for `m = 0`, where no grid is needed.
pub(crate) fn grid_delta(delta: f64, m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        delta
    }
}

/// Softmax over `C` plus one lumped "everything else" log-mass.
pub(crate) fn probs_with_rest(logits_c: &[f64], log_rest: f64) -> Vec<f64> {
    let lse = math::log_add_exp(math::log_sum_exp(logits_c.iter().copied()), log_rest);
    logits_c.iter().map(|&l| math::exp(l - lse)).collect()
}
