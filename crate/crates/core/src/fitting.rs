//! Maximum-likelihood estimation of per-segment MNL and low-rank CDM models.
//!
//! Each segment is fitted independently by gradient ascent on the
//! regularized log-likelihood. The step is applied to the gradient divided
//! by the segment's observation count, grows by 1.5 after an accepted step
//! and halves (without moving) whenever the objective would get worse, so
//! the recorded nll trajectory never increases.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::math;
use crate::models::{
    CdmParams, ChoiceModel, Individual, ItemId, LowRank, MnlParams, ModelParams, Population, Sampler,
};

/// Central-difference step used by [`grad_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// One observed choice: `segment` picked `chosen` out of `choice_set`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceObservation {
    pub segment: String,
    pub choice_set: Vec<usize>,
    pub chosen: usize,
}

impl ChoiceObservation {
    pub fn new(segment: impl Into<String>, choice_set: Vec<usize>, chosen: usize) -> Result<Self> {
        let segment = segment.into();
        if segment.is_empty() {
            return Err(domain("segment labels must be non-empty"));
        }
        if choice_set.len() < 2 {
            return Err(domain("an observation needs a choice set of at least 2 items"));
        }
        let mut sorted = choice_set.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("duplicate item in choice set"));
        }
        if !choice_set.contains(&chosen) {
            return Err(domain(format!("chosen item {chosen} is not in its choice set")));
        }
        Ok(ChoiceObservation { segment, choice_set, chosen })
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ChoiceDataset {
    universe: Vec<ItemId>,
    observations: Vec<ChoiceObservation>,
    /// In order of first appearance.
    segments: Vec<String>,
}

impl ChoiceDataset {
    pub fn new(universe: Vec<ItemId>) -> Result<Self> {
        let mut sorted: Vec<&ItemId> = universe.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("duplicate item id in universe"));
        }
        Ok(ChoiceDataset { universe, observations: Vec::new(), segments: Vec::new() })
    }

    pub fn from_observations(universe: Vec<ItemId>, observations: Vec<ChoiceObservation>) -> Result<Self> {
        let mut d = Self::new(universe)?;
        for o in observations {
            d.push(o)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, obs: ChoiceObservation) -> Result<()> {
        if let Some(&bad) = obs.choice_set.iter().find(|&&x| x >= self.universe.len()) {
            return Err(domain(format!("item {bad} is outside the universe")));
        }
        if !self.segments.contains(&obs.segment) {
            self.segments.push(obs.segment.clone());
        }
        self.observations.push(obs);
        Ok(())
    }

    pub fn universe(&self) -> &[ItemId] {
        &self.universe
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.universe.iter().position(|i| i.as_str() == id)
    }

    pub fn observations(&self) -> &[ChoiceObservation] {
        &self.observations
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Observations of one segment with their dataset positions.
    pub fn segment_observations(&self, segment: &str) -> Vec<(usize, &ChoiceObservation)> {
        self.observations.iter().enumerate().filter(|(_, o)| o.segment == segment).collect()
    }

    /// Splits by observation position: every `fold`-th observation goes to the second half.
    pub fn split_every(&self, fold: usize) -> (ChoiceDataset, ChoiceDataset) {
        let mut a = ChoiceDataset { universe: self.universe.clone(), ..Default::default() };
        let mut b = a.clone();
        for (i, o) in self.observations.iter().enumerate() {
            let dst = if fold > 0 && i % fold == fold - 1 { &mut b } else { &mut a };
            // items were validated on the way in
            dst.push(o.clone()).expect("validated observation");
        }
        (a, b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub l2_weight: f64,
    pub rank: usize,
    pub seed: u64,
    /// Stop once the per-observation gradient norm drops below this.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { step_size: 0.05, max_iters: 1000, l2_weight: 0.00025, rank: 2, seed: 0, tol: 1e-6 }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(domain("step size must be positive"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(domain("tol must be positive"));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return Err(domain("l2 weight must be non-negative"));
        }
        Ok(())
    }
}

/// Optimization history of one segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentTrace {
    pub segment: String,
    pub observations: usize,
    /// Regularized nll after initialization and after every accepted step.
    pub nll: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub converged: bool,
    /// Per-observation gradient norm at the returned parameters.
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// One individual per segment, labeled by segment, in dataset order.
    pub population: Population,
    pub traces: Vec<SegmentTrace>,
    /// Regularized nll of the returned model over the whole dataset.
    pub nll: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    Mnl,
    LowRank(usize),
}

/// Flat parameter vector: utilities, then targets, then contexts (row per item).
struct Flat<'a> {
    shape: Shape,
    n: usize,
    theta: &'a [f64],
}

impl Flat<'_> {
    fn utility(&self, x: usize) -> f64 {
        self.theta[x]
    }

    fn target(&self, x: usize) -> &[f64] {
        match self.shape {
            Shape::Mnl => &[],
            Shape::LowRank(r) => &self.theta[self.n + x * r..self.n + (x + 1) * r],
        }
    }

    fn context(&self, z: usize) -> &[f64] {
        match self.shape {
            Shape::Mnl => &[],
            Shape::LowRank(r) => {
                let base = self.n + self.n * r;
                &self.theta[base + z * r..base + (z + 1) * r]
            }
        }
    }
}

fn param_len(shape: Shape, n: usize) -> usize {
    match shape {
        Shape::Mnl => n,
        Shape::LowRank(r) => n + 2 * n * r,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Regularized nll of one segment; accumulates its gradient when asked.
fn objective(
    flat: &Flat<'_>,
    obs: &[(usize, &ChoiceObservation)],
    l2: f64,
    mut grad: Option<&mut [f64]>,
) -> Result<f64> {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let r = match flat.shape {
        Shape::Mnl => 0,
        Shape::LowRank(r) => r,
    };
    let mut total = 0.0;
    let mut ctx_sum = vec![0.0; r];
    let mut logits = Vec::new();
    let mut resid = Vec::new();
    for &(pos, o) in obs {
        let set = &o.choice_set;
        ctx_sum.fill(0.0);
        for &z in set {
            for (s, c) in ctx_sum.iter_mut().zip(flat.context(z)) {
                *s += c;
            }
        }
        logits.clear();
        for &y in set {
            let pull = dot(&ctx_sum, flat.target(y)) - dot(flat.context(y), flat.target(y));
            logits.push(flat.utility(y) + pull);
        }
        let lse = math::log_sum_exp(logits.iter().copied());
        let chosen = set.iter().position(|&y| y == o.chosen).expect("validated observation");
        let lp = logits[chosen] - lse;
        if !lp.is_finite() {
            return Err(Error::ZeroProbability { observation: pos });
        }
        total -= lp;
        let Some(g) = grad.as_deref_mut() else { continue };
        // d(-log p)/d logit(y) = p(y) - 1{y = chosen}
        resid.clear();
        resid.extend(logits.iter().enumerate().map(|(i, &l)| math::exp(l - lse) - f64::from(i == chosen)));
        for (i, &y) in set.iter().enumerate() {
            g[y] += resid[i];
        }
        if r == 0 {
            continue;
        }
        let n = flat.n;
        for (i, &y) in set.iter().enumerate() {
            // logit(y) = u(y) + <Σ_{z≠y} c_z, t_y>
            let tg = n + y * r;
            for d in 0..r {
                g[tg + d] += resid[i] * (ctx_sum[d] - flat.context(y)[d]);
            }
        }
        // d logit(y) / d c_z = t_y for every y ≠ z in the set
        let mut weighted = vec![0.0; r];
        for (i, &y) in set.iter().enumerate() {
            for (w, t) in weighted.iter_mut().zip(flat.target(y)) {
                *w += resid[i] * t;
            }
        }
        for (i, &z) in set.iter().enumerate() {
            let cz = n + n * r + z * r;
            for d in 0..r {
                g[cz + d] += weighted[d] - resid[i] * flat.target(z)[d];
            }
        }
    }
    let norm_sq: f64 = flat.theta.iter().map(|t| t * t).sum();
    if let Some(g) = grad {
        for (gi, t) in g.iter_mut().zip(flat.theta) {
            *gi += 2.0 * l2 * t;
        }
    }
    Ok(total + l2 * norm_sq)
}

fn flatten(params: &ModelParams) -> Result<(Shape, Vec<f64>)> {
    match params {
        ModelParams::Mnl(p) => {
            if p.utilities().iter().any(|u| !u.is_finite()) {
                return Err(domain("gradients need finite utilities"));
            }
            Ok((Shape::Mnl, p.utilities().to_vec()))
        }
        ModelParams::Cdm(p) => {
            let lr = p.low_rank().ok_or_else(|| domain("only low-rank CDMs have a fitted parameterization"))?;
            if p.utilities().iter().any(|u| !u.is_finite()) {
                return Err(domain("gradients need finite utilities"));
            }
            let mut theta = p.utilities().to_vec();
            theta.extend(lr.targets.iter().flatten());
            theta.extend(lr.contexts.iter().flatten());
            Ok((Shape::LowRank(lr.rank), theta))
        }
        other => Err(Error::Family { expected: "mnl or low-rank cdm", found: other.family().name() }),
    }
}

fn unflatten(shape: Shape, n: usize, theta: &[f64]) -> Result<ModelParams> {
    match shape {
        Shape::Mnl => Ok(ModelParams::Mnl(MnlParams::new(theta.to_vec())?)),
        Shape::LowRank(r) => {
            let rows = |from: usize| theta[from..from + n * r].chunks(r).map(|c| c.to_vec()).collect();
            let low_rank = LowRank { rank: r, targets: rows(n), contexts: rows(n + n * r) };
            Ok(ModelParams::Cdm(CdmParams::from_low_rank(theta[..n].to_vec(), low_rank)?))
        }
    }
}

/// Squared norm of the parameters that carry the regularizer.
fn regularized_norm_sq(params: &ModelParams) -> Result<f64> {
    let sq = |v: &mut dyn Iterator<Item = &f64>| v.filter(|x| x.is_finite()).map(|x| x * x).sum::<f64>();
    match params {
        ModelParams::Mnl(p) => Ok(sq(&mut p.utilities().iter())),
        ModelParams::Cdm(p) => Ok(sq(&mut p.utilities().iter()) + match p.low_rank() {
            Some(lr) => sq(&mut lr.targets.iter().chain(&lr.contexts).flatten()),
            None => sq(&mut p.pulls().iter()),
        }),
        other => Err(Error::Family { expected: "mnl or cdm", found: other.family().name() }),
    }
}

fn individual_for<'a>(pop: &'a Population, segment: &str) -> Result<&'a Individual> {
    pop.individuals()
        .iter()
        .find(|i| i.label == segment)
        .ok_or_else(|| domain(format!("no individual labeled `{segment}`")))
}

/// `−Σ log Pr(chosen | set) + l2·‖θ‖²`, each observation scored by the
/// individual whose label equals its segment. Non-finite utilities are left
/// out of the norm.
pub fn nll(pop: &Population, data: &ChoiceDataset, l2_weight: f64) -> Result<f64> {
    if pop.universe_len() != data.universe().len() {
        return Err(domain("model and dataset universes differ in size"));
    }
    let mut total = 0.0;
    for seg in data.segments() {
        let ind = individual_for(pop, seg)?;
        for (pos, o) in data.segment_observations(seg) {
            let p = ind.params.prob(&o.choice_set, o.chosen)?;
            if p <= 0.0 {
                return Err(Error::ZeroProbability { observation: pos });
            }
            total -= math::ln(p);
        }
        if l2_weight > 0.0 {
            total += l2_weight * regularized_norm_sq(&ind.params)?;
        }
    }
    Ok(total)
}

/// Analytic gradient of [`nll`], concatenated over the dataset's segments.
pub fn gradient(pop: &Population, data: &ChoiceDataset, l2_weight: f64) -> Result<Vec<f64>> {
    let n = data.universe().len();
    let mut out = Vec::new();
    for seg in data.segments() {
        let (shape, theta) = flatten(&individual_for(pop, seg)?.params)?;
        let mut g = vec![0.0; theta.len()];
        objective(&Flat { shape, n, theta: &theta }, &data.segment_observations(seg), l2_weight, Some(&mut g))?;
        out.extend(g);
    }
    Ok(out)
}

/// Largest coordinate-wise gap between the analytic gradient and central
/// differences of [`nll`], relative to `max(1, |analytic|, |numeric|)`.
pub fn grad_check(pop: &Population, data: &ChoiceDataset, l2_weight: f64) -> Result<f64> {
    let n = data.universe().len();
    let mut worst: f64 = 0.0;
    for seg in data.segments() {
        let ind = individual_for(pop, seg)?;
        let (shape, theta) = flatten(&ind.params)?;
        let obs = data.segment_observations(seg);
        let mut g = vec![0.0; theta.len()];
        objective(&Flat { shape, n, theta: &theta }, &obs, l2_weight, Some(&mut g))?;
        // numeric side goes through the model's own probability code
        let sub = ChoiceDataset::from_observations(
            data.universe().to_vec(),
            obs.iter().map(|(_, o)| (*o).clone()).collect(),
        )?;
        let score = |t: &[f64]| -> Result<f64> {
            let p = Population::new(vec![Individual::new(seg.clone(), unflatten(shape, n, t)?)])?;
            nll(&p, &sub, l2_weight)
        };
        let mut probe = theta.clone();
        for i in 0..theta.len() {
            probe[i] = theta[i] + GRAD_CHECK_STEP;
            let hi = score(&probe)?;
            probe[i] = theta[i] - GRAD_CHECK_STEP;
            let lo = score(&probe)?;
            probe[i] = theta[i];
            let numeric = (hi - lo) / (2.0 * GRAD_CHECK_STEP);
            let scale = 1f64.max(math::abs(numeric)).max(math::abs(g[i]));
            worst = worst.max(math::abs(numeric - g[i]) / scale);
        }
    }
    Ok(worst)
}

fn ascend(
    shape: Shape,
    n: usize,
    mut theta: Vec<f64>,
    segment: &str,
    obs: &[(usize, &ChoiceObservation)],
    cfg: &FitConfig,
) -> Result<(Vec<f64>, SegmentTrace)> {
    let count = obs.len() as f64;
    let mut grad = vec![0.0; theta.len()];
    let mut f = objective(&Flat { shape, n, theta: &theta }, obs, cfg.l2_weight, Some(&mut grad))?;
    let mut trace = SegmentTrace {
        segment: segment.into(),
        observations: obs.len(),
        nll: vec![f],
        accepted: 0,
        rejected: 0,
        converged: false,
        grad_norm: f64::NAN,
    };
    let mut step = cfg.step_size;
    let mut cand = theta.clone();
    let mut cand_grad = grad.clone();
    for _ in 0..cfg.max_iters {
        let norm = math::sqrt(grad.iter().map(|g| g * g).sum::<f64>()) / count;
        if norm < cfg.tol {
            trace.converged = true;
            break;
        }
        for ((c, t), g) in cand.iter_mut().zip(&theta).zip(&grad) {
            *c = t - step * g / count;
        }
        match objective(&Flat { shape, n, theta: &cand }, obs, cfg.l2_weight, Some(&mut cand_grad)) {
            Ok(fc) if fc <= f => {
                core::mem::swap(&mut theta, &mut cand);
                core::mem::swap(&mut grad, &mut cand_grad);
                f = fc;
                trace.nll.push(f);
                trace.accepted += 1;
                step *= 1.5;
            }
            _ => {
                trace.rejected += 1;
                step *= 0.5;
                if step < 1e-300 {
                    break;
                }
            }
        }
    }
    trace.grad_norm = math::sqrt(grad.iter().map(|g| g * g).sum::<f64>()) / count;
    Ok((theta, trace))
}

fn fit(data: &ChoiceDataset, cfg: &FitConfig, shape: Shape) -> Result<FitResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(domain("cannot fit an empty dataset"));
    }
    let n = data.universe().len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut individuals = Vec::new();
    let mut traces = Vec::new();
    for seg in data.segments() {
        let obs = data.segment_observations(seg);
        let mut theta = vec![0.0; param_len(shape, n)];
        for t in &mut theta[n..] {
            *t = rng.gen_range(-0.1..0.1);
        }
        let (theta, trace) = ascend(shape, n, theta, seg, &obs, cfg)?;
        let params = match unflatten(shape, n, &theta)? {
            ModelParams::Mnl(p) => ModelParams::Mnl(p.standard_form()?),
            other => other,
        };
        individuals.push(Individual::new(seg.clone(), params));
        traces.push(trace);
    }
    let population = Population::new(individuals)?;
    let nll = nll(&population, data, cfg.l2_weight)?;
    Ok(FitResult { population, traces, nll })
}

/// Per-segment MNL; utilities come back in zero-sum standard form.
pub fn fit_mnl(data: &ChoiceDataset, cfg: &FitConfig) -> Result<FitResult> {
    fit(data, cfg, Shape::Mnl)
}

/// Per-segment CDM with `pull(z, x) = ⟨context(z), target(x)⟩` of rank `cfg.rank`.
/// Embeddings start from a seeded uniform(−0.1, 0.1) draw.
pub fn fit_cdm_lowrank(data: &ChoiceDataset, cfg: &FitConfig) -> Result<FitResult> {
    if cfg.rank == 0 {
        return Err(domain("rank must be at least 1"));
    }
    fit(data, cfg, Shape::LowRank(cfg.rank))
}

/// `count` draws per individual, cycling through `sets`; segments take the
/// individuals' labels.
pub fn synth_dataset(
    pop: &Population,
    universe: Vec<ItemId>,
    sets: &[Vec<usize>],
    count: usize,
    seed: u64,
) -> Result<ChoiceDataset> {
    if universe.len() != pop.universe_len() {
        return Err(domain("universe size does not match the population"));
    }
    if sets.is_empty() {
        return Err(domain("synthesis needs at least one choice set"));
    }
    let mut data = ChoiceDataset::new(universe)?;
    let mut sampler = Sampler::new(seed);
    for ind in pop.individuals() {
        for j in 0..count {
            let set = &sets[j % sets.len()];
            let chosen = sampler.draw(&ind.params, set)?;
            data.push(ChoiceObservation::new(ind.label.clone(), set.clone(), chosen)?)?;
        }
    }
    Ok(data)
}

/// `(item, share)` per (segment, sorted choice set).
pub type Frequencies = BTreeMap<(String, Vec<usize>), Vec<(usize, f64)>>;

/// Empirical choice frequencies per (segment, sorted set), for diagnostics.
pub fn empirical_frequencies(data: &ChoiceDataset) -> Frequencies {
    let mut counts: BTreeMap<(String, Vec<usize>), BTreeMap<usize, usize>> = BTreeMap::new();
    for o in data.observations() {
        let mut set = o.choice_set.clone();
        set.sort_unstable();
        let entry = counts.entry((o.segment.clone(), set.clone())).or_default();
        for x in set {
            entry.entry(x).or_insert(0);
        }
        *entry.get_mut(&o.chosen).expect("inserted above") += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| {
            let total: usize = c.values().sum();
            (k, c.into_iter().map(|(x, v)| (x, v as f64 / total as f64)).collect())
        })
        .collect()
}
