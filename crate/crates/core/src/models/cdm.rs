use alloc::vec;
use alloc::vec::Vec;

use super::{check_set, ChoiceModel};
use crate::error::{invalid, Error, Result};
use crate::math;

/// Inner-product pulls: `pull(z, x) = ⟨context(z), target(x)⟩` for `z ≠ x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRank {
    pub rank: usize,
    pub targets: Vec<Vec<f64>>,
    pub contexts: Vec<Vec<f64>>,
}

impl LowRank {
    pub fn pull(&self, z: usize, x: usize) -> f64 {
        if z == x {
            return 0.0;
        }
        self.contexts[z].iter().zip(&self.targets[x]).map(|(c, t)| c * t).sum()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(invalid("low-rank CDM needs rank >= 1"));
        }
        if self.targets.len() != n || self.contexts.len() != n {
            return Err(invalid("low-rank CDM needs one target and one context vector per item"));
        }
        let ok = self
            .targets
            .iter()
            .chain(&self.contexts)
            .all(|v| v.len() == self.rank && v.iter().all(|x| x.is_finite()));
        if !ok {
            return Err(invalid("low-rank vectors must have length `rank` and finite entries"));
        }
        Ok(())
    }
}

/// Context-dependent random utility model: `u(x | S) = u(x) + Σ_{z∈S} p(z, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdmParams {
    utilities: Vec<f64>,
    /// Row-major `pulls[z * n + x]`.
    pulls: Vec<f64>,
    low_rank: Option<LowRank>,
}

impl CdmParams {
    /// Dense pulls given row-major as `pulls[z * n + x]`; the diagonal must be 0.
    pub fn new(utilities: Vec<f64>, pulls: Vec<f64>) -> Result<Self> {
        let n = utilities.len();
        if utilities.iter().any(|u| u.is_nan() || *u == f64::INFINITY) {
            return Err(invalid("CDM utilities must be finite or NEG_INF"));
        }
        if pulls.len() != n * n {
            return Err(invalid("CDM pull matrix must be n x n"));
        }
        if pulls.iter().any(|p| !p.is_finite()) {
            return Err(invalid("CDM pulls must be finite"));
        }
        if (0..n).any(|x| pulls[x * n + x] != 0.0) {
            return Err(invalid("CDM self-pulls p(x, x) must be 0"));
        }
        Ok(CdmParams { utilities, pulls, low_rank: None })
    }

    /// Pulls induced by a low-rank factorization.
    pub fn from_low_rank(utilities: Vec<f64>, low_rank: LowRank) -> Result<Self> {
        let n = utilities.len();
        low_rank.validate(n)?;
        let mut pulls = vec![0.0; n * n];
        for z in 0..n {
            for x in 0..n {
                pulls[z * n + x] = low_rank.pull(z, x);
            }
        }
        let mut p = Self::new(utilities, pulls)?;
        p.low_rank = Some(low_rank);
        Ok(p)
    }

    /// Builds from dense pulls and a low-rank factorization that must induce them.
    pub fn with_checked_low_rank(utilities: Vec<f64>, pulls: Vec<f64>, low_rank: LowRank) -> Result<Self> {
        let induced = Self::from_low_rank(utilities, low_rank)?;
        let close = induced.pulls.iter().zip(&pulls).all(|(a, b)| math::abs(a - b) <= 1e-9 * (1.0 + math::abs(*a)));
        if pulls.len() != induced.pulls.len() || !close {
            return Err(invalid("dense pulls disagree with the low-rank factorization"));
        }
        Ok(induced)
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn utility(&self, x: usize) -> f64 {
        self.utilities[x]
    }

    pub fn pull(&self, z: usize, x: usize) -> f64 {
        self.pulls[z * self.utilities.len() + x]
    }

    pub fn pulls(&self) -> &[f64] {
        &self.pulls
    }

    pub fn low_rank(&self) -> Option<&LowRank> {
        self.low_rank.as_ref()
    }

    /// `u(y | set)` for every `y` in `set`.
    pub fn adjusted_utilities(&self, set: &[usize]) -> Vec<f64> {
        set.iter()
            .map(|&y| {
                let u = self.utilities[y];
                if u == f64::NEG_INFINITY {
                    return u;
                }
                u + set.iter().map(|&z| self.pull(z, y)).sum::<f64>()
            })
            .collect()
    }
}

impl ChoiceModel for CdmParams {
    fn universe_len(&self) -> usize {
        self.utilities.len()
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        check_set(set, self.utilities.len())?;
        let logits = self.adjusted_utilities(set);
        let mut out = vec![0.0; set.len()];
        if !math::softmax_into(&logits, &mut out) {
            return Err(Error::Degenerate);
        }
        Ok(out)
    }
}

/// CDM with utility-adjusted pulls: `Pr(x | S) ∝ exp(Σ_{w∈S} q(w, x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct CdmAltParams {
    n: usize,
    q: Vec<f64>,
}

impl CdmAltParams {
    /// Row-major `q[w * n + x]`; the diagonal must be 0.
    pub fn new(n: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != n * n {
            return Err(invalid("q matrix must be n x n"));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(invalid("q entries must be finite"));
        }
        if (0..n).any(|x| q[x * n + x] != 0.0) {
            return Err(invalid("q(x, x) must be 0"));
        }
        Ok(CdmAltParams { n, q })
    }

    pub fn q(&self, w: usize, x: usize) -> f64 {
        self.q[w * self.n + x]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.q
    }
}

impl ChoiceModel for CdmAltParams {
    fn universe_len(&self) -> usize {
        self.n
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        check_set(set, self.n)?;
        let logits: Vec<f64> = set.iter().map(|&x| set.iter().map(|&w| self.q(w, x)).sum()).collect();
        let mut out = vec![0.0; set.len()];
        if !math::softmax_into(&logits, &mut out) {
            return Err(Error::Degenerate);
        }
        Ok(out)
    }
}

/// Common view of both CDM parameterizations: exp-utility of `x` within `S`
/// is `exp(base(x) + Σ_{w∈S} pull(w, x))`. The utility-adjusted form has
/// base 0 and pull `q`.
pub(crate) trait PullView {
    fn base(&self, x: usize) -> f64;
    fn pull_on(&self, w: usize, x: usize) -> f64;
}

impl PullView for CdmParams {
    fn base(&self, x: usize) -> f64 {
        self.utilities[x]
    }
    fn pull_on(&self, w: usize, x: usize) -> f64 {
        self.pull(w, x)
    }
}

impl PullView for CdmAltParams {
    fn base(&self, _x: usize) -> f64 {
        0.0
    }
    fn pull_on(&self, w: usize, x: usize) -> f64 {
        self.q(w, x)
    }
}
