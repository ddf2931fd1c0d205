//! Instance generators that encode Partition / Subset Sum as choice-set
//! optimization, plus a checker that maps an optimizer's answer back to a
//! certificate.
//!
//! Items are laid out as the choice set first (`x`, `y` or `xstar`, `w`,
//! `y`), then one alternative `z<i>` per entry of `S`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::math::ln;
use crate::models::{
    CdmParams, ChoiceInstance, EbaParams, Individual, ItemId, MnlParams, ModelParams, NlNode, NlTree, Population,
    NEG_INF,
};
use crate::objectives::{AlternativeSet, Problem};

/// Default for constructions that need some `0 < ε < 1`.
pub const DEFAULT_GADGET_EPSILON: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GadgetKind {
    /// Two MNL individuals; Agreement is minimized exactly at `s_Z = Σ/2`.
    AgreementPartition,
    /// Two MNL individuals, one item; Disagreement peaks at `s_Z = t`.
    DisagreementSubsetSum,
    /// One CDM individual, three items.
    PromoCdm1x3,
    /// Two CDM individuals, two items.
    PromoCdm2x2,
    /// Two nested-logit individuals with mirrored trees.
    PromoNl,
    /// Two EBA individuals.
    PromoEba,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 6] = [
        GadgetKind::AgreementPartition,
        GadgetKind::DisagreementSubsetSum,
        GadgetKind::PromoCdm1x3,
        GadgetKind::PromoCdm2x2,
        GadgetKind::PromoNl,
        GadgetKind::PromoEba,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GadgetKind::AgreementPartition => "agreement-partition",
            GadgetKind::DisagreementSubsetSum => "disagreement-subsetsum",
            GadgetKind::PromoCdm1x3 => "promo-cdm-1x3",
            GadgetKind::PromoCdm2x2 => "promo-cdm-2x2",
            GadgetKind::PromoNl => "promo-nl",
            GadgetKind::PromoEba => "promo-eba",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let norm = s.replace('_', "-");
        Self::ALL.into_iter().find(|k| k.name() == norm)
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, GadgetKind::PromoCdm2x2 | GadgetKind::PromoNl | GadgetKind::PromoEba)
    }

    pub fn is_promotion(self) -> bool {
        !matches!(self, GadgetKind::AgreementPartition | GadgetKind::DisagreementSubsetSum)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetSpec {
    pub kind: GadgetKind,
    pub set: Vec<u64>,
    /// Required except for the partition gadget, where it is `Σ/2`.
    pub target: Option<u64>,
    /// Defaults to [`DEFAULT_GADGET_EPSILON`] where the construction needs it.
    pub epsilon: Option<f64>,
}

impl GadgetSpec {
    pub fn new(kind: GadgetKind, set: Vec<u64>, target: Option<u64>) -> Self {
        GadgetSpec { kind, set, target, epsilon: None }
    }

    /// Resolved `(t, ε)` after validating the set, target and ε.
    pub fn resolve(&self) -> Result<(u64, f64)> {
        if self.set.is_empty() {
            return Err(domain("the integer set must be non-empty"));
        }
        if self.set.contains(&0) {
            return Err(domain("set entries must be at least 1"));
        }
        let sum: u64 = self.set.iter().sum();
        let t = match (self.kind, self.target) {
            (GadgetKind::AgreementPartition, Some(_)) => {
                return Err(domain("the partition gadget takes its target from the set"))
            }
            (GadgetKind::AgreementPartition, None) if sum % 2 == 1 => {
                return Err(domain(format!("partition needs an even total, got {sum}")))
            }
            (GadgetKind::AgreementPartition, None) => sum / 2,
            (_, Some(t)) if t >= 1 => t,
            (_, Some(_)) => return Err(domain("the target must be at least 1")),
            (_, None) => return Err(domain(format!("{} needs a target sum", self.kind.name()))),
        };
        let eps = match (self.kind.uses_epsilon(), self.epsilon) {
            (true, None) => DEFAULT_GADGET_EPSILON,
            (true, Some(e)) if e > 0.0 && e < 1.0 => e,
            (true, Some(e)) => return Err(domain(format!("epsilon must lie in (0, 1), got {e}"))),
            (false, Some(_)) => return Err(domain(format!("{} takes no epsilon", self.kind.name()))),
            (false, None) => f64::NAN,
        };
        if self.kind == GadgetKind::PromoEba && 2.0 * (sum as f64 - eps) < t as f64 {
            return Err(domain("the EBA gadget needs t ≤ 2(Σ − ε) to keep aspect utilities non-negative"));
        }
        Ok((t, eps))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetInstance {
    pub spec: GadgetSpec,
    pub target_sum: u64,
    pub epsilon: Option<f64>,
    pub pop: Population,
    pub inst: ChoiceInstance,
    pub problem: Problem,
    /// Alternative item index and the integer it stands for.
    pub certificate: Vec<(usize, u64)>,
}

impl GadgetInstance {
    /// Best possible favorite count, reached exactly when a certificate exists.
    pub fn full_count(&self) -> usize {
        self.pop.len()
    }
}

fn universe(head: &[&str], m: usize) -> Result<Vec<ItemId>> {
    head.iter()
        .map(|s| s.to_string())
        .chain((0..m).map(|i| format!("z{i}")))
        .map(ItemId::new)
        .collect()
}

pub fn generate(spec: &GadgetSpec) -> Result<GadgetInstance> {
    let (t, eps) = spec.resolve()?;
    let s = &spec.set;
    let m = s.len();
    let tf = t as f64;
    let zs: Vec<f64> = s.iter().map(|&z| z as f64).collect();
    let log_z: Vec<f64> = zs.iter().map(|&z| ln(z)).collect();
    let mnl = |head: [f64; 2]| -> Result<ModelParams> {
        let mut u = head.to_vec();
        u.extend_from_slice(&log_z);
        Ok(ModelParams::Mnl(MnlParams::new(u)?))
    };

    let (head, individuals, problem): (&[&str], Vec<ModelParams>, Problem) = match spec.kind {
        GadgetKind::AgreementPartition => (
            &["x", "y"],
            vec![mnl([ln(tf), ln(tf)])?, mnl([ln(3.0 * tf), ln(2.0 * tf)])?],
            Problem::Agreement,
        ),
        GadgetKind::DisagreementSubsetSum => {
            let one = |u: f64| -> Result<ModelParams> {
                let mut v = vec![u];
                v.extend_from_slice(&log_z);
                Ok(ModelParams::Mnl(MnlParams::new(v)?))
            };
            (&["x"], vec![one(ln(2.0 * tf))?, one(ln(tf / 2.0))?], Problem::Disagreement)
        }
        GadgetKind::PromoCdm1x3 => {
            let n = 3 + m;
            let mut u = vec![1.0, tf, -tf];
            u.extend(core::iter::repeat_n(NEG_INF, m));
            let mut pulls = vec![0.0; n * n];
            for (i, &z) in zs.iter().enumerate() {
                pulls[(3 + i) * n] = z;
                pulls[(3 + i) * n + 2] = 2.0 * z;
            }
            (&["xstar", "w", "y"], vec![ModelParams::Cdm(CdmParams::new(u, pulls)?)], Problem::Promotion { target: 0 })
        }
        GadgetKind::PromoCdm2x2 => {
            let n = 2 + m;
            let build = |head: [f64; 2], onto: usize| -> Result<ModelParams> {
                let mut u = head.to_vec();
                u.extend(core::iter::repeat_n(NEG_INF, m));
                let mut pulls = vec![0.0; n * n];
                for (i, &z) in zs.iter().enumerate() {
                    pulls[(2 + i) * n + onto] = z;
                }
                Ok(ModelParams::Cdm(CdmParams::new(u, pulls)?))
            };
            (&["xstar", "y"], vec![build([tf + eps, 0.0], 1)?, build([eps, tf], 0)?], Problem::Promotion { target: 0 })
        }
        GadgetKind::PromoNl => {
            // `top` hangs off the root; `inner` sits under r with the alternatives
            let tree = |top: (&str, usize), inner: (&str, usize, f64)| -> Result<ModelParams> {
                let mut kids = vec![NlNode::leaf(inner.0, inner.1, ln(inner.2))];
                for (i, &lz) in log_z.iter().enumerate() {
                    kids.push(NlNode::leaf(format!("z{i}"), 2 + i, lz));
                }
                let root =
                    NlNode::nest("root", 0.0, vec![NlNode::leaf(top.0, top.1, 0.0), NlNode::nest("r", ln(2.0), kids)]);
                Ok(ModelParams::Nl(NlTree::new(root, 2 + m)?))
            };
            (
                &["xstar", "y"],
                vec![tree(("y", 1), ("xstar", 0, tf + eps))?, tree(("xstar", 0), ("y", 1, tf - eps))?],
                Problem::Promotion { target: 0 },
            )
        }
        GadgetKind::PromoEba => {
            let total: f64 = zs.iter().sum();
            // aspects: chi, psi, then chi_i, psi_i, gamma_i per alternative
            let mut names: Vec<String> = vec!["chi".into(), "psi".into()];
            for i in 0..m {
                names.push(format!("chi{i}"));
                names.push(format!("psi{i}"));
                names.push(format!("gamma{i}"));
            }
            let chi_i = |i: usize| 2 + 3 * i;
            let mut items = vec![vec![0], vec![1]];
            items[0].extend((0..m).map(chi_i));
            items[1].extend((0..m).map(|i| chi_i(i) + 1));
            items.extend((0..m).map(|i| vec![chi_i(i), chi_i(i) + 1, chi_i(i) + 2]));
            let utilities = |chi: f64, psi: f64, on_chi: bool| {
                let mut u = vec![chi, psi];
                for &z in &zs {
                    u.extend_from_slice(&if on_chi { [z, 0.0, total - z] } else { [0.0, z, total - z] });
                }
                u
            };
            let a = EbaParams::new(names.clone(), items.clone(), utilities(0.0, total - tf / 2.0 - eps, true))?;
            let b = EbaParams::new(names, items, utilities(total - tf / 2.0 + eps, 0.0, false))?;
            (&["xstar", "y"], vec![ModelParams::Eba(a), ModelParams::Eba(b)], Problem::Promotion { target: 0 })
        }
    };

    let k = head.len();
    let inst = ChoiceInstance::new(universe(head, m)?, (0..k).collect(), (k..k + m).collect())?;
    let pop = Population::new(
        individuals
            .into_iter()
            .enumerate()
            .map(|(i, p)| Individual::new(["a", "b"][i], p))
            .collect(),
    )?;
    Ok(GadgetInstance {
        spec: spec.clone(),
        target_sum: t,
        epsilon: spec.kind.uses_epsilon().then_some(eps),
        pop,
        inst,
        problem,
        certificate: s.iter().enumerate().map(|(i, &z)| (k + i, z)).collect(),
    })
}

/// Sum of the integers behind the members of `z`.
pub fn certificate_sum(g: &GadgetInstance, z: &AlternativeSet) -> u64 {
    g.certificate.iter().filter(|(item, _)| z.members().contains(item)).map(|&(_, v)| v).sum()
}

/// True exactly when `z`'s integers add up to the gadget's target.
pub fn verify_certificate(g: &GadgetInstance, z: &AlternativeSet) -> bool {
    certificate_sum(g, z) == g.target_sum
}

/// True when some subset of `set` sums to `t` (for small test sets).
pub fn subset_sum_exists(set: &[u64], t: u64) -> bool {
    let t = t as usize;
    let mut reach = vec![false; t + 1];
    reach[0] = true;
    for &z in set {
        let z = z as usize;
        for v in (z..=t).rev() {
            reach[v] |= reach[v - z];
        }
    }
    reach[t]
}
