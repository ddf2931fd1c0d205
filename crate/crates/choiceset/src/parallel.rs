//! Brute force split across the rayon pool.

use choiceset_core::exact::{brute_force_range, merge, subset_count, ExactResult};
use choiceset_core::{ChoiceInstance, Population, Problem, Result};
use rayon::prelude::*;

/// Same answer as `exact::brute_force`: ties resolve to the
/// lexicographically smallest set whatever the chunking.
pub fn par_brute_force(pop: &Population, inst: &ChoiceInstance, problem: Problem) -> Result<ExactResult> {
    let total = subset_count(inst)?;
    let pieces = (rayon::current_num_threads() as u64 * 4).clamp(1, total);
    let size = total.div_ceil(pieces);
    // recount so no chunk is empty
    let pieces = total.div_ceil(size);
    let parts = (0..pieces)
        .into_par_iter()
        .map(|i| brute_force_range(pop, inst, problem, i * size..((i + 1) * size).min(total)))
        .collect::<Result<Vec<_>>>()?;
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one subset");
    Ok(it.fold(first, |a, b| merge(problem, a, b)))
}
