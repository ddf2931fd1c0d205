use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ChoiceModel;
use crate::error::{Error, Result};

/// Seeded categorical sampler over a model's choice distribution.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Draws one item of `set`.
    pub fn draw<M: ChoiceModel + ?Sized>(&mut self, model: &M, set: &[usize]) -> Result<usize> {
        let dist = model.distribution(set)?;
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut last = None;
        for (&x, &p) in set.iter().zip(&dist) {
            if p > 0.0 {
                acc += p;
                last = Some(x);
                if u < acc {
                    return Ok(x);
                }
            }
        }
        // rounding left `acc` a hair under 1
        last.ok_or(Error::Degenerate)
    }
}

/// One draw from `set` with a fresh generator seeded by `seed`.
pub fn sample_choice<M: ChoiceModel + ?Sized>(model: &M, set: &[usize], seed: u64) -> Result<usize> {
    Sampler::new(seed).draw(model, set)
}
