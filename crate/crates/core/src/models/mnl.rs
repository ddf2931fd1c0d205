use alloc::vec;
use alloc::vec::Vec;

use super::{check_set, ChoiceModel};
use crate::error::{invalid, Error, Result};
use crate::math;

/// Multinomial logit: one utility per item, in nats. `NEG_INF` marks an item
/// whose exp-utility is exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MnlParams {
    utilities: Vec<f64>,
}

impl MnlParams {
    pub fn new(utilities: Vec<f64>) -> Result<Self> {
        if utilities.iter().any(|u| u.is_nan() || *u == f64::INFINITY) {
            return Err(invalid("MNL utilities must be finite or NEG_INF"));
        }
        Ok(MnlParams { utilities })
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub fn utility(&self, x: usize) -> f64 {
        self.utilities[x]
    }

    pub fn exp_utility(&self, x: usize) -> f64 {
        math::exp(self.utilities[x])
    }

    /// Same model with every utility shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        MnlParams { utilities: self.utilities.iter().map(|u| u + c).collect() }
    }

    /// Shifts utilities so they sum to zero over the universe.
    pub fn standard_form(&self) -> Result<Self> {
        if self.utilities.iter().any(|u| !u.is_finite()) {
            return Err(invalid("standard form needs finite utilities"));
        }
        let mean = self.utilities.iter().sum::<f64>() / self.utilities.len() as f64;
        Ok(self.shifted(-mean))
    }
}

impl ChoiceModel for MnlParams {
    fn universe_len(&self) -> usize {
        self.utilities.len()
    }

    fn distribution(&self, set: &[usize]) -> Result<Vec<f64>> {
        check_set(set, self.utilities.len())?;
        let logits: Vec<f64> = set.iter().map(|&x| self.utilities[x]).collect();
        let mut out = vec![0.0; set.len()];
        if !math::softmax_into(&logits, &mut out) {
            return Err(Error::Degenerate);
        }
        Ok(out)
    }
}
