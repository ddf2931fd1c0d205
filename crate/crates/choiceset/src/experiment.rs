//! Approximation-versus-greedy comparison over many choice sets.
//!
//! Each choice set `C` defines an instance with every other universe item as
//! an alternative. Approx and greedy always run; brute force runs while
//! `m ≤ brute_cap` and marks the set's rows `verified`.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Result};
use choiceset_core::approx::{self, ApproxConfig};
use choiceset_core::exact::greedy;
use choiceset_core::objectives::evaluate;
use choiceset_core::{ChoiceInstance, ItemId, Population, Problem};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::parallel::par_brute_force;

pub const REPORT_HEADER: [&str; 8] = ["choice_set", "problem", "method", "epsilon", "value", "cells", "time_ms", "verified"];

/// Largest pool verified by brute force unless configured otherwise.
pub const DEFAULT_BRUTE_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    AllPairs,
    /// `count` distinct sets; sizes uniform on `2..=max_size`, members uniform.
    Sampled { count: usize, max_size: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: Problem,
    pub epsilon: f64,
    pub seed: u64,
    pub brute_cap: usize,
    /// When false, `time_ms` is written as 0 so reports compare byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, problem: Problem, epsilon: f64) -> Self {
        ExperimentConfig { mode, problem, epsilon, seed: 0, brute_cap: DEFAULT_BRUTE_CAP, timing: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub choice_set: Vec<usize>,
    pub problem: Problem,
    pub method: &'static str,
    pub epsilon: Option<f64>,
    pub value: f64,
    pub cells: u64,
    pub time_ms: f64,
    pub verified: bool,
}

/// Choice sets to evaluate, sorted; promotion keeps only sets holding the target.
pub fn choice_sets(n: usize, mode: Mode, seed: u64, must_contain: Option<usize>) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        bail!("the universe needs at least 2 items");
    }
    let keep = |s: &Vec<usize>| must_contain.is_none_or(|t| s.contains(&t));
    let sets: BTreeSet<Vec<usize>> = match mode {
        Mode::AllPairs => (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).filter(keep).collect(),
        Mode::Sampled { count, max_size } => {
            if max_size < 2 {
                bail!("--max-size must be at least 2");
            }
            let hi = max_size.min(n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = BTreeSet::new();
            let mut draws = 0usize;
            // distinct sets only; give up once the space looks exhausted
            while out.len() < count && draws < count.saturating_mul(100).max(1000) {
                draws += 1;
                let size = rng.gen_range(2..=hi);
                let mut s: Vec<usize> = sample(&mut rng, n, size).into_vec();
                s.sort_unstable();
                if keep(&s) {
                    out.insert(s);
                }
            }
            out
        }
    };
    Ok(sets.into_iter().collect())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn rows_for(pop: &Population, universe: &[ItemId], set: &[usize], cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let rest: Vec<usize> = (0..universe.len()).filter(|i| !set.contains(i)).collect();
    let inst = ChoiceInstance::new(universe.to_vec(), set.to_vec(), rest)?;
    let verified = inst.m() <= cfg.brute_cap;
    let clock = |ms: f64| if cfg.timing { ms } else { 0.0 };
    let row = |method, epsilon, value, cells, ms| ReportRow {
        choice_set: set.to_vec(),
        problem: cfg.problem,
        method,
        epsilon,
        value,
        cells,
        time_ms: clock(ms),
        verified,
    };
    let (a, ms) = timed(|| approx::optimize(pop, &inst, &ApproxConfig::new(cfg.epsilon, cfg.problem)));
    let a = a?;
    let value = evaluate(pop, &inst, a.best.members(), cfg.problem)?;
    let mut rows = vec![row("approx", Some(cfg.epsilon), value, a.cells_materialized as u64, ms)];
    let (g, ms) = timed(|| greedy(pop, &inst, cfg.problem));
    let g = g?;
    rows.push(row("greedy", None, g.value, g.evaluations, ms));
    if verified {
        let (b, ms) = timed(|| par_brute_force(pop, &inst, cfg.problem));
        let b = b?;
        rows.push(row("brute", None, b.value, b.evaluations, ms));
    }
    Ok(rows)
}

/// Rows ordered by choice set, then approx / greedy / brute.
pub fn run_experiment(pop: &Population, universe: &[ItemId], cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    if pop.universe_len() != universe.len() {
        bail!("population and universe sizes differ");
    }
    let target = match cfg.problem {
        Problem::Promotion { target } => Some(target),
        _ => None,
    };
    let sets = choice_sets(universe.len(), cfg.mode, cfg.seed, target)?;
    let per_set = sets.par_iter().map(|s| rows_for(pop, universe, s, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(per_set.into_iter().flatten().collect())
}

fn problem_label(p: Problem, universe: &[ItemId]) -> String {
    match p {
        Problem::Promotion { target } => format!("promotion:{}", universe[target]),
        other => other.name().to_owned(),
    }
}

pub fn write_report<W: Write>(rows: &[ReportRow], universe: &[ItemId], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        let names: Vec<&str> = r.choice_set.iter().map(|&i| universe[i].as_str()).collect();
        w.write_record([
            names.join(";"),
            problem_label(r.problem, universe),
            r.method.to_owned(),
            r.epsilon.map(|e| e.to_string()).unwrap_or_default(),
            r.value.to_string(),
            r.cells.to_string(),
            format!("{:.3}", r.time_ms),
            r.verified.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
