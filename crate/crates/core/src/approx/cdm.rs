use alloc::vec::Vec;

use super::{grid_delta, pair_factor, probs_with_rest, ApproxConfig, ApproxResult, DimKind, Layout, Run};
use crate::error::Result;
use crate::models::{pull_views, ChoiceInstance, Population, PullView};
use crate::objectives::Problem;

/// Per individual: `k` log dimensions for the exp-utility of each item of
/// `C`, then one log-sum dimension for the total exp-utility of the added
/// alternatives. Alternatives' own exp-utilities are taken in the context
/// `C`, which is exact when alternatives do not pull on each other.
pub(super) fn layout(views: &[&dyn PullView], inst: &ChoiceInstance) -> Layout {
    let c = inst.choice_set();
    let k = c.len();
    let width = k + 1;
    let mut init = Vec::with_capacity(views.len() * width);
    for v in views {
        for &x in c {
            init.push(v.base(x) + c.iter().map(|&w| v.pull_on(w, x)).sum::<f64>());
        }
        init.push(f64::NEG_INFINITY);
    }
    let steps = inst
        .alternatives()
        .iter()
        .map(|&z| {
            let mut step = Vec::new();
            for (a, v) in views.iter().enumerate() {
                for (j, &x) in c.iter().enumerate() {
                    let p = v.pull_on(z, x);
                    if p != 0.0 {
                        step.push((a * width + j, p));
                    }
                }
                let own = v.base(z) + c.iter().map(|&w| v.pull_on(w, z)).sum::<f64>();
                if own != f64::NEG_INFINITY {
                    step.push((a * width + k, own));
                }
            }
            step
        })
        .collect();
    let mut kinds = Vec::with_capacity(init.len());
    for _ in views {
        kinds.extend(core::iter::repeat_n(DimKind::LogAdd, k));
        kinds.push(DimKind::LogSum);
    }
    Layout { kinds, init, steps }
}

/// True when no alternative pulls on another alternative, for every individual.
pub(super) fn alternatives_independent(views: &[&dyn PullView], inst: &ChoiceInstance) -> bool {
    let alts = inst.alternatives();
    views
        .iter()
        .all(|v| alts.iter().all(|&z| alts.iter().all(|&w| z == w || v.pull_on(z, w) == 0.0)))
}

/// CDM variant for all three problems; accepts both parameterizations.
///
/// Agreement/Disagreement use `δ = ε / (2·k·m·C(n,2))` (additive bound 4ε),
/// or a quarter of that with `guarantee_mode` (bound ε). Promotion uses
/// `δ = ε / (10·m)` and scores sets by ε-favorite count. Bounds hold only
/// when alternatives exert no pulls on one another; otherwise every stored
/// set is re-scored from scratch and the result is a heuristic.
pub fn optimize_cdm(pop: &Population, inst: &ChoiceInstance, cfg: &ApproxConfig) -> Result<ApproxResult> {
    cfg.validate()?;
    pop.check_instance(inst)?;
    let views = pull_views(pop)?;
    let (k, m) = (inst.k(), inst.m());
    let (delta, bound) = match cfg.problem {
        Problem::Promotion { .. } => (cfg.epsilon / (10.0 * m as f64), cfg.epsilon),
        _ => {
            let d = cfg.epsilon / (2.0 * k as f64 * m as f64 * pair_factor(pop.len()));
            if cfg.guarantee_mode {
                (d / 4.0, cfg.epsilon)
            } else {
                (d, 4.0 * cfg.epsilon)
            }
        }
    };
    let independent = alternatives_independent(&views, inst);
    let run = Run {
        pop,
        inst,
        cfg,
        layout: layout(&views, inst),
        delta: grid_delta(delta, m),
        shift: Vec::new(),
        guarantee_applicable: independent,
        bound,
        stored_sums_exact: independent,
    };
    run.solve(|state| state.chunks(k + 1).map(|s| probs_with_rest(&s[..k], s[k])).collect())
}

/// Promotion of `x_star` under CDM, scored by ε-favorite count.
pub fn promote_cdm(pop: &Population, inst: &ChoiceInstance, x_star: usize, eps: f64) -> Result<ApproxResult> {
    optimize_cdm(pop, inst, &ApproxConfig::new(eps, Problem::Promotion { target: x_star }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{optimize_mnl, tests::instance};
    use crate::exact::brute_force;
    use crate::models::{CdmAltParams, CdmParams, Individual, MnlParams, ModelParams, NEG_INF};
    use crate::objectives::{self, AlternativeSet};
    use alloc::vec;
    use proptest::prelude::*;

    fn cdm_pop(rows: Vec<(Vec<f64>, Vec<f64>)>) -> Population {
        Population::from_params(rows.into_iter().map(|(u, p)| ModelParams::Cdm(CdmParams::new(u, p).unwrap())).collect())
            .unwrap()
    }

    #[test]
    fn zero_pulls_match_mnl_variant() {
        let rows = [vec![0.3, 1.1, 0.2, 2.0, 0.7, 1.4], vec![1.5, 0.2, 1.8, 0.1, 0.6, 2.2]];
        let inst = instance(6, 2);
        let mnl = Population::from_params(rows.iter().map(|r| ModelParams::Mnl(MnlParams::new(r.clone()).unwrap())).collect()).unwrap();
        let cdm = cdm_pop(rows.iter().map(|r| (r.clone(), vec![0.0; 36])).collect());
        for problem in [Problem::Agreement, Problem::Disagreement] {
            let mut cfg = ApproxConfig::new(0.01, problem);
            cfg.guarantee_mode = true;
            let a = optimize_mnl(&mnl, &inst, &cfg).unwrap();
            let b = optimize_cdm(&cdm, &inst, &cfg).unwrap();
            assert!(b.guarantee_applicable);
            let opt = brute_force(&mnl, &inst, problem).unwrap().value;
            assert!((a.value - opt).abs() <= 0.01 + 1e-12);
            assert!((b.value - opt).abs() <= 0.01 + 1e-12);
        }
    }

    #[test]
    fn pulls_between_alternatives_flag_heuristic() {
        let n = 4;
        let mut pulls = vec![0.0; n * n];
        pulls[2 * n + 3] = 0.5;
        let pop = cdm_pop(vec![(vec![0.0, 1.0, 0.2, 0.3], pulls)]);
        let inst = instance(4, 2);
        let r = optimize_cdm(&pop, &inst, &ApproxConfig::new(0.1, Problem::Agreement)).unwrap();
        assert!(!r.guarantee_applicable);
        let again = objectives::disagreement(&pop, &inst, &r.best).unwrap();
        assert_eq!(r.value, again);
    }

    #[test]
    fn bound_and_delta_follow_mode() {
        let pop = cdm_pop(vec![(vec![0.0; 4], vec![0.0; 16]), (vec![1.0, 0.0, 0.0, 0.0], vec![0.0; 16])]);
        let inst = instance(4, 2);
        let mut cfg = ApproxConfig::new(0.08, Problem::Agreement);
        let loose = optimize_cdm(&pop, &inst, &cfg).unwrap();
        cfg.guarantee_mode = true;
        let tight = optimize_cdm(&pop, &inst, &cfg).unwrap();
        assert!((loose.delta - 0.08 / 8.0).abs() < 1e-15);
        assert!((tight.delta - loose.delta / 4.0).abs() < 1e-15);
        assert_eq!(loose.bound, 0.32);
        assert_eq!(tight.bound, 0.08);
        assert_eq!(loose.dimensions, 6);
        let promo = promote_cdm(&pop, &inst, 0, 0.1).unwrap();
        assert!((promo.delta - 0.1 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn promotes_single_individual_subset_sum() {
        // one individual, C = (x*, w, y), S = {2, 3, 4}, t = 5
        let s = [2.0, 3.0, 4.0];
        let t = 5.0;
        let n = 6;
        let mut pulls = vec![0.0; n * n];
        for (i, &z) in s.iter().enumerate() {
            pulls[(3 + i) * n] = z;
            pulls[(3 + i) * n + 2] = 2.0 * z;
        }
        let u = vec![1.0, t, -t, NEG_INF, NEG_INF, NEG_INF];
        let pop = Population::new(vec![Individual::new("a", ModelParams::Cdm(CdmParams::new(u, pulls).unwrap()))]).unwrap();
        let inst = instance(6, 3);
        let r = promote_cdm(&pop, &inst, 0, 0.01).unwrap();
        assert_eq!(r.value, 1.0);
        let strict = objectives::favorite_count(&pop, &inst, &r.best, 0).unwrap();
        assert_eq!(strict, 1);
        assert_eq!(r.best.members(), &[3, 4]);
    }

    #[test]
    fn zero_pulls_promotion_is_fixed() {
        let rows = vec![vec![0.3, 1.1, 0.2, 2.0], vec![1.5, 0.2, 1.8, 0.1]];
        let pop = cdm_pop(rows.into_iter().map(|r| (r, vec![0.0; 16])).collect());
        let inst = instance(4, 2);
        let fixed = objectives::favorite_count(&pop, &inst, &AlternativeSet::empty(), 1).unwrap();
        let r = promote_cdm(&pop, &inst, 1, 0.0001).unwrap();
        assert_eq!(r.value as usize, fixed);
        assert!(promote_cdm(&pop, &inst, 3, 0.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn restricted_instances_within_four_epsilon(
            u in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 10), 2..=2),
            p in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 16), 2..=2),
            maximize in any::<bool>(),
        ) {
            // alternatives pull only on C; the alt-form encodes everything
            let n = 10;
            let params: Vec<ModelParams> = u.iter().zip(&p).map(|(u, p)| {
                let mut q = vec![0.0; n * n];
                for w in 0..n {
                    for x in 0..2 {
                        if w != x {
                            q[w * n + x] = if w < 2 { u[x] } else { p[(w - 2) * 2 + x] };
                        }
                    }
                    for x in 2..n {
                        if w < 2 { q[w * n + x] = u[x] / 2.0; }
                    }
                }
                ModelParams::CdmAlt(CdmAltParams::new(n, q).unwrap())
            }).collect();
            let pop = Population::from_params(params).unwrap();
            let inst = instance(10, 2);
            let problem = if maximize { Problem::Disagreement } else { Problem::Agreement };
            let eps = 0.01;
            let r = optimize_cdm(&pop, &inst, &ApproxConfig::new(eps, problem)).unwrap();
            prop_assert!(r.guarantee_applicable);
            let b = brute_force(&pop, &inst, problem).unwrap();
            if maximize {
                prop_assert!(r.value >= b.value - 4.0 * eps);
            } else {
                prop_assert!(r.value <= b.value + 4.0 * eps);
            }
        }
    }
}
