//! The equal-stubbornness restriction of MNL, where Agreement and
//! Disagreement have fixed answers.

use alloc::borrow::Cow;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::models::{ChoiceInstance, MnlParams, Population};
use crate::objectives::{AlternativeSet, Problem};

/// Tolerance for the standard-form and equality checks.
pub const STUBBORN_TOL: f64 = 1e-9;

fn in_standard_form(p: &MnlParams) -> bool {
    let total: f64 = p.utilities().iter().sum();
    total.is_finite() && math::abs(total) <= STUBBORN_TOL
}

/// `σ = Σ_{x∈C} e^{u(x)}` for utilities in standard form (zero sum).
pub fn stubbornness(params: &MnlParams, inst: &ChoiceInstance) -> Result<f64> {
    if params.utilities().len() != inst.universe().len() {
        return Err(Error::InvalidModel("model and instance cover different universes".into()));
    }
    if !in_standard_form(params) {
        return Err(Error::Precondition("utilities must sum to zero over the universe".into()));
    }
    Ok(inst.choice_set().iter().map(|&x| params.exp_utility(x)).sum())
}

/// With equal stubbornness and identical alternative utilities, Agreement
/// is solved by taking every alternative and Disagreement by taking none.
/// `recenter` first moves each individual to standard form.
pub fn solve_equal_stubbornness(
    pop: &Population,
    inst: &ChoiceInstance,
    problem: Problem,
    recenter: bool,
) -> Result<AlternativeSet> {
    pop.check_instance(inst)?;
    let raw = pop.mnl()?;
    let params: Vec<Cow<'_, MnlParams>> = if recenter {
        raw.iter().map(|p| p.standard_form().map(Cow::Owned)).collect::<Result<_>>()?
    } else {
        raw.into_iter().map(Cow::Borrowed).collect()
    };
    let sigma = params.iter().map(|p| stubbornness(p, inst)).collect::<Result<Vec<_>>>()?;
    if sigma.iter().any(|s| math::abs(s - sigma[0]) > STUBBORN_TOL) {
        return Err(Error::Precondition("individuals are not equally stubborn".into()));
    }
    for &z in inst.alternatives() {
        let u0 = params[0].utility(z);
        if params.iter().any(|p| math::abs(p.utility(z) - u0) > STUBBORN_TOL) {
            return Err(Error::Precondition(alloc::format!(
                "individuals disagree on the utility of alternative {}",
                inst.item(z)
            )));
        }
    }
    match problem {
        Problem::Agreement => AlternativeSet::new(inst, inst.alternatives().iter().copied()),
        Problem::Disagreement => Ok(AlternativeSet::empty()),
        Problem::Promotion { .. } => Err(Error::Precondition("the equal-stubbornness rule covers agreement and disagreement".into())),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exact::brute_force;
    use crate::models::ModelParams;
    use crate::objectives::disagreement;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `n` individuals over `C = {0, 1, 2}` and `m` shared alternatives, in
    /// standard form with a common `σ`. For each individual `u_0` is free and
    /// `u_1, u_2 = r/2 ± d` with `2·e^{r/2}·cosh d = σ − e^{u_0}`.
    pub(crate) fn conforming(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Population {
        let alts: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum_c = -alts.iter().sum::<f64>();
        let sigma = 4.0 * (sum_c / 2.0).exp().max(1.0) + 3.0;
        let params = (0..n)
            .map(|_| {
                let u0: f64 = rng.gen_range(-1.0..0.5);
                let r = sum_c - u0;
                let q = sigma - u0.exp();
                let d = (q / (2.0 * (r / 2.0).exp())).acosh();
                let mut u = vec![u0, r / 2.0 + d, r / 2.0 - d];
                u.extend_from_slice(&alts);
                ModelParams::Mnl(MnlParams::new(u).unwrap())
            })
            .collect();
        Population::from_params(params).unwrap()
    }

    fn inst(m: usize) -> ChoiceInstance {
        let names: Vec<alloc::string::String> = (0..3 + m).map(|i| alloc::format!("i{i}")).collect();
        let r: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        ChoiceInstance::from_names(&r, &r[..3]).unwrap()
    }

    #[test]
    fn rule_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let m = rng.gen_range(1..=6);
            let pop = conforming(&mut rng, 3, m);
            let inst = inst(m);
            let agree = solve_equal_stubbornness(&pop, &inst, Problem::Agreement, false).unwrap();
            assert_eq!(agree.len(), m);
            let best = brute_force(&pop, &inst, Problem::Agreement).unwrap();
            assert!(disagreement(&pop, &inst, &agree).unwrap() <= best.value + 1e-12);
            let split = solve_equal_stubbornness(&pop, &inst, Problem::Disagreement, false).unwrap();
            let best = brute_force(&pop, &inst, Problem::Disagreement).unwrap();
            assert!(disagreement(&pop, &inst, &split).unwrap() >= best.value - 1e-12);
        }
    }

    #[test]
    fn identical_individuals() {
        let u = vec![0.5, -0.2, -0.3, 0.4, -0.4];
        let pop = Population::from_params(vec![ModelParams::Mnl(MnlParams::new(u.clone()).unwrap()); 2]).unwrap();
        let inst = inst(2);
        let s = stubbornness(&MnlParams::new(u).unwrap(), &inst).unwrap();
        assert!(s > 0.0);
        let z = solve_equal_stubbornness(&pop, &inst, Problem::Agreement, false).unwrap();
        assert_eq!(disagreement(&pop, &inst, &z).unwrap(), 0.0);
    }

    #[test]
    fn preconditions() {
        let inst = inst(2);
        let off = MnlParams::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(stubbornness(&off, &inst).is_err());
        let pop = Population::from_params(vec![ModelParams::Mnl(off.clone()), ModelParams::Mnl(off)]).unwrap();
        assert!(solve_equal_stubbornness(&pop, &inst, Problem::Agreement, false).is_err());
        assert!(solve_equal_stubbornness(&pop, &inst, Problem::Agreement, true).is_ok());

        let a = MnlParams::new(vec![0.3, -0.3, 0.0, 0.1, -0.1]).unwrap();
        let b = MnlParams::new(vec![0.3, -0.3, 0.0, -0.1, 0.1]).unwrap();
        let pop = Population::from_params(vec![ModelParams::Mnl(a), ModelParams::Mnl(b)]).unwrap();
        assert!(matches!(solve_equal_stubbornness(&pop, &inst, Problem::Agreement, false), Err(Error::Precondition(_))));
    }

    #[test]
    fn disagreement_falls_as_alternative_mass_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let m = 5;
        let pop = conforming(&mut rng, 3, m);
        let inst = inst(m);
        let params = pop.mnl().unwrap();
        let mut points: Vec<(f64, f64)> = (0u64..1 << m)
            .map(|mask| {
                let members = crate::exact::subset_members(&inst, mask);
                let mass: f64 = members.iter().map(|&z| params[0].exp_utility(z)).sum();
                let z = AlternativeSet::new(&inst, members).unwrap();
                (mass, disagreement(&pop, &inst, &z).unwrap())
            })
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in points.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
    }
}
