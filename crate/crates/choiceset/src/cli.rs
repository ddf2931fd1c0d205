//! `choiceset` command line. Results go to stdout as one JSON line each,
//! diagnostics to stderr. Exit codes: 0 success, 1 runtime failure, 2 usage
//! error or refused request.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use choiceset_core::approx::{self, ApproxConfig};
use choiceset_core::exact::{
    build_miblp, greedy, promote_cdm_2item_equal, promote_eba_disjoint, promote_nl_same_tree, render_miblp,
    solve_equal_stubbornness,
};
use choiceset_core::fitting::{fit_cdm_lowrank, fit_mnl, grad_check, synth_dataset, FitConfig};
use choiceset_core::gadgets::{generate, subset_sum_exists, GadgetKind, GadgetSpec};
use choiceset_core::objectives::evaluate;
use choiceset_core::{ChoiceInstance, Error as CoreError, Family, Population, Problem};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::experiment::{run_experiment, write_report, ExperimentConfig, Mode, DEFAULT_BRUTE_CAP};
use crate::ingest::{read_csv_path, write_csv};
use crate::parallel::par_brute_force;
use crate::record::{instance_digest, RunRecord};
use crate::schema::{CertificateEntry, FitFile, GadgetFile, ModelFile};

/// A request the tool refuses to run as given; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage errors and library refusals, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Domain(_) | CoreError::Family { .. } | CoreError::Precondition(_) | CoreError::TooLarge { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

#[derive(Parser, Debug)]
#[command(name = "choiceset", version, about = "Choice-set optimization for groups of discrete choice models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FitFamily {
    Mnl,
    CdmLowrank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Agreement,
    Disagreement,
    Promotion,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Approx,
    Greedy,
    Brute,
    Restricted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    AllPairs,
    Sampled,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SetsArg {
    /// Every 2-item subset.
    Pairs,
    /// Every subset with at least 2 items.
    All,
}

fn parse_kind(s: &str) -> std::result::Result<GadgetKind, String> {
    GadgetKind::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = GadgetKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown gadget kind `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(clap::Args, Debug)]
pub struct InstanceArgs {
    /// JSON model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Items of the choice set C; every other item is an alternative.
    /// Defaults to the model file's `choice_set`.
    #[arg(long, value_delimiter = ',')]
    pub choice_set: Option<Vec<String>>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit per-segment models to an observation CSV.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        family: FitFamily,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long, default_value_t = 0.00025)]
        l2: f64,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample an observation CSV from a model.
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "pairs")]
        sets: SetsArg,
        /// Observations per individual.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Choose alternatives to add for one objective.
    Optimize {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        /// Item to promote (promotion only).
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// CDM approximation: tighten the grid so the bound is ε rather than 4ε.
        #[arg(long)]
        guarantee: bool,
        /// Restricted MNL rule: move individuals to standard form first.
        #[arg(long)]
        recenter: bool,
    },
    /// Write a reduction instance with its certificate map.
    Gadget {
        #[arg(long, value_parser = parse_kind)]
        kind: GadgetKind,
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        target_sum: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare approx, greedy and brute force over many choice sets.
    Experiment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        max_size: usize,
        #[arg(long, value_enum, default_value = "agreement")]
        problem: ProblemArg,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BRUTE_CAP)]
        brute_cap: usize,
        /// Write time_ms as 0 so reports are byte-identical across runs.
        #[arg(long)]
        no_timing: bool,
        /// Report CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the exact mixed-integer bilinear program as LP text.
    ExportMiblp {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn emit(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{value}")?;
    Ok(())
}

fn problem_of(arg: ProblemArg, target: Option<&str>, inst: &ChoiceInstance) -> Result<Problem> {
    match (arg, target) {
        (ProblemArg::Promotion, None) => Err(usage("--problem promotion needs --target")),
        (ProblemArg::Promotion, Some(t)) => {
            let target = inst.index_of(t).ok_or_else(|| usage(format!("unknown target item `{t}`")))?;
            if !inst.choice_set().contains(&target) {
                return Err(usage(format!("target `{t}` is not in the choice set")));
            }
            Ok(Problem::Promotion { target })
        }
        (_, Some(_)) => Err(usage("--target only applies to promotion")),
        (ProblemArg::Agreement, None) => Ok(Problem::Agreement),
        (ProblemArg::Disagreement, None) => Ok(Problem::Disagreement),
    }
}

fn load(instance: &InstanceArgs) -> Result<(ModelFile, Population, ChoiceInstance)> {
    let file = ModelFile::read(&instance.model)?;
    let pop = file.population().context("building the population")?;
    let inst = file.instance(instance.choice_set.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    pop.check_instance(&inst)?;
    Ok((file, pop, inst))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Fit { data, family, out: path, rank, step, l2, max_iters, tol, seed } => {
            let (dataset, report) = read_csv_path(&data, None)?;
            eprintln!("ingested {} rows: {} accepted, {} rejected", report.rows, report.accepted, report.rejected());
            let cfg = FitConfig { step_size: step, max_iters, l2_weight: l2, rank, seed, tol };
            let (fit, method) = match family {
                FitFamily::Mnl => (fit_mnl(&dataset, &cfg)?, "mnl"),
                FitFamily::CdmLowrank => (fit_cdm_lowrank(&dataset, &cfg)?, "cdm-lowrank"),
            };
            let check = grad_check(&fit.population, &dataset, l2)?;
            let mut file = ModelFile::from_population(&fit.population, dataset.universe())?;
            let rank = matches!(family, FitFamily::CdmLowrank).then_some(rank);
            file.fit = Some(FitFile {
                method: method.into(),
                rank,
                nll: fit.nll,
                grad_check: check,
                l2_weight: l2,
                seed,
                observations: dataset.len(),
            });
            file.write(&path)?;
            emit(
                out,
                &json!({
                    "command": "fit",
                    "family": method,
                    "rank": rank,
                    "nll": fit.nll,
                    "grad_check": check,
                    "segments": dataset.segments().len(),
                    "observations": dataset.len(),
                    "rejected_rows": report.rejected(),
                    "converged": fit.traces.iter().all(|t| t.converged),
                    "out": path,
                }),
            )
        }
        Command::Synth { model, out: path, sets, count, seed } => {
            let file = ModelFile::read(&model)?;
            let pop = file.population()?;
            let n = file.universe.len();
            let sets: Vec<Vec<usize>> = match sets {
                SetsArg::Pairs => (0..n).flat_map(|a| (a + 1..n).map(move |b| vec![a, b])).collect(),
                SetsArg::All if n > 16 => return Err(usage("--sets all is limited to 16 items")),
                SetsArg::All => (1u32..1 << n)
                    .filter(|m| m.count_ones() >= 2)
                    .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
                    .collect(),
            };
            let data = synth_dataset(&pop, file.items()?, &sets, count, seed)?;
            let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&data, std::io::BufWriter::new(f))?;
            emit(out, &json!({"command": "synth", "observations": data.len(), "seed": seed, "out": path}))
        }
        Command::Optimize { instance, problem, target, method, epsilon, guarantee, recenter } => {
            let (file, pop, inst) = load(&instance)?;
            let problem = problem_of(problem, target.as_deref(), &inst)?;
            let start = Instant::now();
            let mut record = RunRecord {
                command: "optimize".into(),
                digest: instance_digest(&file, &inst),
                method: format!("{method:?}").to_lowercase(),
                problem: problem.name().into(),
                target,
                epsilon: None,
                set: Vec::new(),
                value: f64::NAN,
                eps_favorite_count: None,
                cells_materialized: None,
                evaluations: None,
                bound: None,
                guarantee_applicable: None,
                time_ms: 0.0,
                seed: None,
            };
            let set = match method {
                Method::Approx => {
                    let cfg = ApproxConfig { guarantee_mode: guarantee, ..ApproxConfig::new(epsilon, problem) };
                    let r = approx::optimize(&pop, &inst, &cfg)?;
                    record.epsilon = Some(epsilon);
                    record.cells_materialized = Some(r.cells_materialized as u64);
                    record.bound = Some(r.bound);
                    record.guarantee_applicable = Some(r.guarantee_applicable);
                    if matches!(problem, Problem::Promotion { .. }) {
                        record.eps_favorite_count = Some(r.value);
                    }
                    r.best
                }
                Method::Greedy => {
                    let r = greedy(&pop, &inst, problem)?;
                    record.evaluations = Some(r.evaluations);
                    r.set
                }
                Method::Brute => {
                    let r = par_brute_force(&pop, &inst, problem)?;
                    record.evaluations = Some(r.evaluations);
                    r.set
                }
                Method::Restricted => match (problem, pop.family()) {
                    (Problem::Promotion { target }, Family::Cdm) => promote_cdm_2item_equal(&pop, &inst, target)?,
                    (Problem::Promotion { target }, Family::Nl) => promote_nl_same_tree(&pop, &inst, target)?,
                    (Problem::Promotion { target }, Family::Eba) => promote_eba_disjoint(&pop, &inst, target)?,
                    (Problem::Promotion { .. }, f) => {
                        return Err(usage(format!("no restricted promotion rule for the {} family", f.name())))
                    }
                    (p, Family::Mnl) => solve_equal_stubbornness(&pop, &inst, p, recenter)?,
                    (_, f) => {
                        return Err(usage(format!(
                            "the restricted agreement/disagreement rule needs MNL, not {}",
                            f.name()
                        )))
                    }
                },
            };
            record.value = evaluate(&pop, &inst, set.members(), problem)?;
            record.set = inst.names(set.members());
            record.time_ms = start.elapsed().as_secs_f64() * 1e3;
            writeln!(out, "{}", record.to_line())?;
            Ok(())
        }
        Command::Gadget { kind, set, target_sum, eps, out: path } => {
            let spec = GadgetSpec { kind, set: set.clone(), target: target_sum, epsilon: eps };
            let g = generate(&spec).map_err(|e| usage(e.to_string()))?;
            let mut file = ModelFile::from_population(&g.pop, g.inst.universe())?;
            file.choice_set = Some(g.inst.names(g.inst.choice_set()));
            let target = match g.problem {
                Problem::Promotion { target } => Some(g.inst.item(target).to_string()),
                _ => None,
            };
            file.gadget = Some(GadgetFile {
                kind: kind.name().into(),
                set,
                target_sum: g.target_sum,
                epsilon: g.epsilon,
                problem: g.problem.name().into(),
                target: target.clone(),
                certificate: g
                    .certificate
                    .iter()
                    .map(|&(i, v)| CertificateEntry { item: g.inst.item(i).to_string(), value: v })
                    .collect(),
            });
            file.write(&path)?;
            let solvable = (g.target_sum <= 1 << 20).then(|| subset_sum_exists(&spec.set, g.target_sum));
            emit(
                out,
                &json!({
                    "command": "gadget",
                    "kind": kind.name(),
                    "target_sum": g.target_sum,
                    "problem": g.problem.name(),
                    "target": target,
                    "items": g.inst.universe().len(),
                    "subset_sum_exists": solvable,
                    "out": path,
                }),
            )
        }
        Command::Experiment {
            model,
            mode,
            count,
            max_size,
            problem,
            target,
            epsilon,
            seed,
            brute_cap,
            no_timing,
            out: path,
        } => {
            let file = ModelFile::read(&model)?;
            let pop = file.population()?;
            let items = file.items()?;
            let problem = match (problem, target.as_deref()) {
                (ProblemArg::Promotion, Some(t)) => Problem::Promotion {
                    target: file
                        .universe
                        .iter()
                        .position(|u| u == t)
                        .ok_or_else(|| usage(format!("unknown target item `{t}`")))?,
                },
                (ProblemArg::Promotion, None) => return Err(usage("--problem promotion needs --target")),
                (_, Some(_)) => return Err(usage("--target only applies to promotion")),
                (ProblemArg::Agreement, None) => Problem::Agreement,
                (ProblemArg::Disagreement, None) => Problem::Disagreement,
            };
            let mode = match mode {
                ModeArg::AllPairs => Mode::AllPairs,
                ModeArg::Sampled => Mode::Sampled { count, max_size },
            };
            let cfg = ExperimentConfig { mode, problem, epsilon, seed, brute_cap, timing: !no_timing };
            let rows = run_experiment(&pop, &items, &cfg).map_err(|e| match e.downcast::<CoreError>() {
                Ok(core) => anyhow::Error::new(core),
                Err(other) => usage(format!("{other:#}")),
            })?;
            match &path {
                Some(p) => {
                    let f = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                    write_report(&rows, &items, std::io::BufWriter::new(f))?;
                }
                None => write_report(&rows, &items, &mut *out)?,
            }
            let diffs: Vec<f64> = rows
                .windows(2)
                .filter(|w| w[0].method == "approx" && w[1].method == "greedy")
                .map(|w| w[0].value - w[1].value)
                .collect();
            let mean = (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64);
            let summary = json!({
                "command": "experiment",
                "rows": rows.len(),
                "choice_sets": diffs.len(),
                "mean_approx_minus_greedy": mean,
                "seed": seed,
                "out": path,
            });
            if path.is_some() {
                emit(out, &summary)
            } else {
                eprintln!("{summary}");
                Ok(())
            }
        }
        Command::ExportMiblp { instance, problem, out: path } => {
            let (_, pop, inst) = load(&instance)?;
            let problem = problem_of(problem, None, &inst)?;
            let model = build_miblp(&pop, &inst, problem)?;
            write_text(&path, &render_miblp(&model))?;
            emit(
                out,
                &json!({
                    "command": "export-miblp",
                    "problem": problem.name(),
                    "variables": model.variable_count(),
                    "binaries": model.binaries.len(),
                    "continuous": model.free.len(),
                    "constraints": model.constraints.len(),
                    "inequalities": model.inequality_count(),
                    "equalities": model.equality_count(),
                    "out": path,
                }),
            )
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
