use alloc::vec::Vec;

use super::{grid_delta, pair_factor, probs_with_rest, ApproxConfig, ApproxResult, DimKind, Layout, Run};
use crate::error::{Error, Result};
use crate::models::{ChoiceInstance, Population};
use crate::objectives::Problem;

/// Smallest utility after the per-individual shift.
const SHIFT_FLOOR: f64 = 0.001;

/// One log-sum dimension per individual, holding `ln Σ_{z∈Z} e^{u_a(z)}`
/// on shifted utilities. Returns the layout and the shifts.
pub(super) fn layout(pop: &Population, inst: &ChoiceInstance) -> Result<(Layout, Vec<f64>)> {
    let params = pop.mnl()?;
    let shift: Vec<f64> = params
        .iter()
        .map(|p| {
            let min = p.utilities().iter().copied().filter(|u| u.is_finite()).fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                SHIFT_FLOOR - min
            } else {
                0.0
            }
        })
        .collect();
    let steps = inst
        .alternatives()
        .iter()
        .map(|&z| {
            params
                .iter()
                .enumerate()
                .filter(|(_, p)| p.utility(z) != f64::NEG_INFINITY)
                .map(|(a, p)| (a, p.utility(z) + shift[a]))
                .collect()
        })
        .collect();
    let n = params.len();
    Ok((Layout { kinds: alloc::vec![DimKind::LogSum; n], init: alloc::vec![f64::NEG_INFINITY; n], steps }, shift))
}

/// Agreement or Disagreement under MNL with `δ = ε / (2·k·m·C(n,2))`.
pub fn optimize_mnl(pop: &Population, inst: &ChoiceInstance, cfg: &ApproxConfig) -> Result<ApproxResult> {
    cfg.validate()?;
    pop.check_instance(inst)?;
    if let Problem::Promotion { .. } = cfg.problem {
        return Err(Error::Precondition("the MNL variant handles agreement and disagreement only".into()));
    }
    let params = pop.mnl()?;
    let (layout, shift) = layout(pop, inst)?;
    let (k, m) = (inst.k(), inst.m());
    let delta = grid_delta(cfg.epsilon / (2.0 * k as f64 * m as f64 * pair_factor(pop.len())), m);
    let logits: Vec<Vec<f64>> = params
        .iter()
        .zip(&shift)
        .map(|(p, s)| inst.choice_set().iter().map(|&x| p.utility(x) + s).collect())
        .collect();
    let run = Run {
        pop,
        inst,
        cfg,
        layout,
        delta,
        shift,
        guarantee_applicable: true,
        bound: cfg.epsilon,
        stored_sums_exact: true,
    };
    run.solve(|state| logits.iter().zip(state).map(|(l, &rest)| probs_with_rest(l, rest)).collect())
}
