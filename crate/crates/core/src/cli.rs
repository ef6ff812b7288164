//! Command-line surface: `solve`, `fair-eval` and `bench`.
//!
//! Only report data is written to standard output; progress and errors go to
//! standard error. Exit codes: 0 success, 2 usage or input error, 1 internal
//! failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::eval::{self, EvalParams, EvalTargets};
use crate::fair::{self, FairConfig, OrderPolicy};
use crate::io::{self, CsvOptions, NormalizeMethod, ReportFormat, ReportRow};
use crate::metric::MetricSpace;
use crate::unfair::{Clustering, Solver};

#[derive(Debug, Parser)]
#[command(
    name = "fair-kcenter",
    version,
    about = "Pairwise-fair k-center clustering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance with a deterministic algorithm (or one fair realization).
    Solve(SolveArgs),
    /// Run the fair algorithm for many trials and report fairness statistics.
    FairEval(FairEvalArgs),
    /// Sweep instances (a pmed directory) or a k-range (a CSV file).
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Pmed,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Gonz1,
    Gonzplus,
    Scr,
    Bruteforce,
}

impl From<AlgorithmArg> for Solver {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Gonz1 => Solver::Gonz1,
            AlgorithmArg::Gonzplus => Solver::GonzPlus,
            AlgorithmArg::Scr => Solver::Scr,
            AlgorithmArg::Bruteforce => Solver::BruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeArg {
    Minmax,
    Zscore,
    None,
}

impl From<NormalizeArg> for NormalizeMethod {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Minmax => NormalizeMethod::MinMax,
            NormalizeArg::Zscore => NormalizeMethod::ZScore,
            NormalizeArg::None => NormalizeMethod::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Given,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// pmed file, pmed directory (bench) or CSV file.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// CSV columns to use as coordinates (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    /// CSV column normalization.
    #[arg(long, value_enum, default_value = "minmax")]
    pub normalize: NormalizeArg,
    /// Uniform sample of CSV rows, drawn with --seed.
    #[arg(long)]
    pub sample_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub out_format: OutFormatArg,
    /// Sidecar CSV of `name,radius` known optima.
    #[arg(long)]
    pub optima: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct FairArgs {
    /// Exponential rate as a multiple of 1/R_scr (repeatable).
    #[arg(long = "lambda-scale", conflicts_with = "psi")]
    pub lambda_scale: Vec<f64>,
    /// Mean expansion as a multiple of the base radius (repeatable).
    #[arg(long)]
    pub psi: Vec<f64>,
    /// Master seed for trial streams and CSV sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cluster processing order.
    #[arg(long, value_enum, default_value = "random")]
    pub order: OrderArg,
    /// Communities are balls of radius R_scr / divisor.
    #[arg(long, default_value_t = 4.0)]
    pub community_divisor: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "scr")]
    pub algorithm: AlgorithmArg,
    /// Number of centers; defaults to the pmed file's p.
    #[arg(long)]
    pub k: Option<usize>,
    /// Run one fair realization on top of the algorithm.
    #[arg(long)]
    pub fair: bool,
    #[command(flatten)]
    pub fairness: FairArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FairEvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Base algorithm the fair expansion runs on.
    #[arg(long, value_enum, default_value = "scr")]
    pub algorithm: AlgorithmArg,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[command(flatten)]
    pub fairness: FairArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Unfair algorithms to report (repeatable).
    #[arg(long, value_enum)]
    pub algorithm: Vec<AlgorithmArg>,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    /// Inclusive k sweep, e.g. `2..20`.
    #[arg(long)]
    pub k_range: Option<String>,
    /// Add fair rows (one per lambda scale) on top of scr.
    #[arg(long)]
    pub fair: bool,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[command(flatten)]
    pub fairness: FairArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let threads = match &cli.command {
        Command::Solve(a) => a.output.threads,
        Command::FairEval(a) => a.output.threads,
        Command::Bench(a) => a.output.threads,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::FairEval(a) => cmd_fair_eval(&a),
        Command::Bench(a) => cmd_bench(&a),
    })
}

/// A loaded instance ready for solving.
struct Instance {
    name: String,
    space: MetricSpace,
    file_k: Option<usize>,
}

fn infer_format(input: &InputArgs) -> InputFormat {
    input.format.unwrap_or_else(|| {
        let is_csv = input
            .input
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            InputFormat::Csv
        } else {
            InputFormat::Pmed
        }
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_pmed(path: &Path) -> Result<Instance> {
    let inst = io::read_pmed(path)?;
    Ok(Instance {
        name: stem(path),
        space: inst.to_metric()?,
        file_k: Some(inst.k),
    })
}

fn load_csv(input: &InputArgs, seed: u64) -> Result<Instance> {
    if input.columns.is_empty() {
        return Err(Error::InvalidParameter(
            "--columns is required for CSV input".into(),
        ));
    }
    let options = CsvOptions {
        columns: input.columns.clone(),
        normalize: vec![input.normalize.into()],
        sample_size: input.sample_size,
        seed,
    };
    let points = io::load_points_csv(&input.input, &options)?;
    Ok(Instance {
        name: stem(&input.input),
        space: MetricSpace::from_points(&points)?,
        file_k: None,
    })
}

fn load_single(input: &InputArgs, seed: u64) -> Result<Instance> {
    match infer_format(input) {
        InputFormat::Pmed => load_pmed(&input.input),
        InputFormat::Csv => load_csv(input, seed),
    }
}

fn resolve_k(explicit: Option<usize>, inst: &Instance) -> Result<usize> {
    explicit
        .or(inst.file_k)
        .ok_or_else(|| Error::InvalidParameter("--k is required for CSV input".into()))
}

fn load_optima(output: &OutputArgs) -> Result<BTreeMap<String, f64>> {
    match &output.optima {
        Some(p) => io::load_known_optima(p),
        None => Ok(BTreeMap::new()),
    }
}

/// Lambda scales requested by the user, defaulting to 1, 4 and 16.
fn lambda_scales(f: &FairArgs, defaults: &[f64]) -> Result<Vec<f64>> {
    let scales: Vec<f64> = if !f.psi.is_empty() {
        f.psi.iter().map(|p| 1.0 / p).collect()
    } else if !f.lambda_scale.is_empty() {
        f.lambda_scale.clone()
    } else {
        defaults.to_vec()
    };
    if let Some(bad) = scales.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda scale / psi must be positive and finite (got scale {bad})"
        )));
    }
    Ok(scales)
}

fn order_policy(o: OrderArg) -> OrderPolicy {
    match o {
        OrderArg::Given => OrderPolicy::Given,
        OrderArg::Random => OrderPolicy::UniformRandom,
    }
}

/// Row label for a fair run at `scale`.
pub fn fair_label(scale: f64) -> String {
    match scale {
        1.0 => "fair-exact".into(),
        4.0 => "fair-medium".into(),
        16.0 => "fair-tight".into(),
        _ => "fair".into(),
    }
}

fn write_rows(rows: &[ReportRow], output: &OutputArgs) -> Result<()> {
    let format = match output.out_format {
        OutFormatArg::Csv => ReportFormat::Csv,
        OutFormatArg::Json => ReportFormat::Json,
    };
    io::write_report(rows, format, output.out.as_deref())
}

fn deterministic_row(
    name: &str,
    space: &MetricSpace,
    clustering: &Clustering,
    targets: &EvalTargets,
    solver: Solver,
    optimum: Option<f64>,
) -> Result<ReportRow> {
    let (pw, cr, rr) = eval::evaluate_deterministic(space, clustering, targets, optimum)?;
    Ok(ReportRow {
        instance: name.to_string(),
        algorithm: solver.name().to_string(),
        k: clustering.k(),
        lambda_scale: None,
        mean_max_radius: rr.mean_max_radius,
        radius_ratio_opt: rr.ratio_to_optimum,
        radius_ratio_scr: rr.ratio_to_reference,
        max_pair_ratio: pw.max_ratio,
        max_community_mean: cr.max_mean,
        trials: 1,
        seed: None,
    }
    .rounded())
}

#[allow(clippy::too_many_arguments)]
fn fair_row(
    name: &str,
    space: &MetricSpace,
    base: &Clustering,
    targets: &EvalTargets,
    scale: f64,
    fairness: &FairArgs,
    trials: u64,
    optimum: Option<f64>,
) -> Result<ReportRow> {
    let config = FairConfig::from_lambda_scale(scale, order_policy(fairness.order), fairness.seed)?;
    let ensemble = eval::run_trials(space, base, &config, targets, trials)?;
    let pw = eval::pairwise_fairness(&ensemble);
    let cr = eval::community_preservation(&ensemble);
    let rr = eval::radius_stats(&ensemble, optimum)?;
    Ok(ReportRow {
        instance: name.to_string(),
        algorithm: fair_label(scale),
        k: base.k(),
        lambda_scale: Some(scale),
        mean_max_radius: rr.mean_max_radius,
        radius_ratio_opt: rr.ratio_to_optimum,
        radius_ratio_scr: rr.ratio_to_reference,
        max_pair_ratio: pw.max_ratio,
        max_community_mean: cr.max_mean,
        trials,
        seed: Some(fairness.seed),
    }
    .rounded())
}

fn eval_params(f: &FairArgs) -> EvalParams {
    EvalParams {
        community_divisor: f.community_divisor,
        ..EvalParams::default()
    }
}

fn reference_radius(
    space: &MetricSpace,
    k: usize,
    solver: Solver,
    base: &Clustering,
) -> Result<f64> {
    if solver == Solver::Scr {
        Ok(base.max_radius())
    } else {
        Ok(Solver::Scr.solve(space, k)?.max_radius())
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let inst = load_single(&args.input, args.fairness.seed)?;
    let k = resolve_k(args.k, &inst)?;
    let solver: Solver = args.algorithm.into();
    let base = solver.solve(&inst.space, k)?;
    let optima = load_optima(&args.output)?;

    if args.fair {
        let scales = lambda_scales(&args.fairness, &[1.0])?;
        if scales.len() != 1 {
            return Err(Error::InvalidParameter(
                "solve --fair takes a single lambda scale or psi".into(),
            ));
        }
        let config = FairConfig::from_lambda_scale(
            scales[0],
            order_policy(args.fairness.order),
            args.fairness.seed,
        )?;
        let mut rng = fair::trial_rng(config.rng_seed, 0);
        let realization = fair::fair_assign(&inst.space, &base, &config, &mut rng)?;
        println!("{}", realization.max_radius());
        if args.output.out.is_some() {
            let reference = reference_radius(&inst.space, k, solver, &base)?;
            let targets = EvalTargets::new(&inst.space, reference, eval_params(&args.fairness))?;
            let row = fair_row(
                &inst.name,
                &inst.space,
                &base,
                &targets,
                scales[0],
                &args.fairness,
                1,
                optima.get(&inst.name).copied(),
            )?;
            write_rows(&[row], &args.output)?;
        }
        return Ok(());
    }

    eprintln!(
        "{}: {} k={} radius {}",
        inst.name,
        solver,
        k,
        base.max_radius()
    );
    println!("{}", base.max_radius());
    if args.output.out.is_some() {
        let reference = reference_radius(&inst.space, k, solver, &base)?;
        let targets = EvalTargets::new(&inst.space, reference, eval_params(&args.fairness))?;
        let row = deterministic_row(
            &inst.name,
            &inst.space,
            &base,
            &targets,
            solver,
            optima.get(&inst.name).copied(),
        )?;
        write_rows(&[row], &args.output)?;
    }
    Ok(())
}

pub fn cmd_fair_eval(args: &FairEvalArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(Error::InvalidParameter(
            "--trials must be at least 1".into(),
        ));
    }
    let inst = load_single(&args.input, args.fairness.seed)?;
    let k = resolve_k(args.k, &inst)?;
    let scales = lambda_scales(&args.fairness, &[1.0, 4.0, 16.0])?;
    let optima = load_optima(&args.output)?;
    let solver: Solver = args.algorithm.into();

    let reference = Solver::Scr.solve(&inst.space, k)?;
    let base = if solver == Solver::Scr {
        reference.clone()
    } else {
        solver.solve(&inst.space, k)?
    };
    let targets = EvalTargets::new(
        &inst.space,
        reference.max_radius(),
        eval_params(&args.fairness),
    )?;
    eprintln!(
        "{}: n={} k={} R_scr={} base={} R_base={}",
        inst.name,
        inst.space.len(),
        k,
        reference.max_radius(),
        solver,
        base.max_radius()
    );

    let mut rows = Vec::with_capacity(scales.len());
    for &scale in &scales {
        let row = fair_row(
            &inst.name,
            &inst.space,
            &base,
            &targets,
            scale,
            &args.fairness,
            args.trials,
            optima.get(&inst.name).copied(),
        )?;
        eprintln!(
            "  lambda={scale}/R: mean radius {} max pair ratio {} max community mean {}",
            row.mean_max_radius, row.max_pair_ratio, row.max_community_mean
        );
        rows.push(row);
    }
    write_rows(&rows, &args.output)
}

/// Parses an inclusive range written `a..b`, `a..=b` or `a-b`.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("invalid k range '{s}'"));
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'))
        .ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// pmed files of a directory, ordered by the number in their name.
pub fn pmed_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_pmed = path.is_file()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("pmed") && !n.contains("info"));
        if is_pmed {
            files.push(path);
        }
    }
    let key = |p: &PathBuf| {
        let s = stem(p);
        let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        (digits.parse::<u64>().unwrap_or(u64::MAX), s)
    };
    files.sort_by_key(key);
    Ok(files)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.trials == 0 {
        return Err(Error::InvalidParameter(
            "--trials must be at least 1".into(),
        ));
    }
    let algorithms: Vec<Solver> = if args.algorithm.is_empty() {
        vec![Solver::Gonz1, Solver::GonzPlus, Solver::Scr]
    } else {
        args.algorithm.iter().map(|&a| a.into()).collect()
    };
    let scales = if args.fair {
        lambda_scales(&args.fairness, &[1.0, 4.0, 16.0])?
    } else {
        Vec::new()
    };
    let optima = load_optima(&args.output)?;

    let mut cells: Vec<(Instance, Vec<usize>)> = Vec::new();
    match infer_format(&args.input) {
        InputFormat::Pmed if args.input.input.is_dir() => {
            let files = pmed_files(&args.input.input)?;
            if files.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "no pmed files in {}",
                    args.input.input.display()
                )));
            }
            for f in files {
                let inst = load_pmed(&f)?;
                let ks = bench_ks(args, &inst)?;
                cells.push((inst, ks));
            }
        }
        InputFormat::Pmed => {
            let inst = load_pmed(&args.input.input)?;
            let ks = bench_ks(args, &inst)?;
            cells.push((inst, ks));
        }
        InputFormat::Csv => {
            let inst = load_csv(&args.input, args.fairness.seed)?;
            let ks = bench_ks(args, &inst)?;
            cells.push((inst, ks));
        }
    }

    let mut rows = Vec::new();
    for (inst, ks) in &cells {
        for &k in ks {
            // CSV optima depend on k, so their sidecar keys carry it.
            let key = if inst.file_k.is_none() {
                format!("{}_k{k}", inst.name)
            } else {
                inst.name.clone()
            };
            let optimum = optima.get(&key).copied();
            let reference = Solver::Scr.solve(&inst.space, k)?;
            let targets = EvalTargets::new(
                &inst.space,
                reference.max_radius(),
                eval_params(&args.fairness),
            )?;
            eprintln!(
                "{}: n={} k={} R_scr={}",
                inst.name,
                inst.space.len(),
                k,
                reference.max_radius()
            );
            for &solver in &algorithms {
                let clustering = if solver == Solver::Scr {
                    reference.clone()
                } else {
                    solver.solve(&inst.space, k)?
                };
                rows.push(deterministic_row(
                    &inst.name,
                    &inst.space,
                    &clustering,
                    &targets,
                    solver,
                    optimum,
                )?);
            }
            for &scale in &scales {
                rows.push(fair_row(
                    &inst.name,
                    &inst.space,
                    &reference,
                    &targets,
                    scale,
                    &args.fairness,
                    args.trials,
                    optimum,
                )?);
            }
        }
    }
    write_rows(&rows, &args.output)
}

fn bench_ks(args: &BenchArgs, inst: &Instance) -> Result<Vec<usize>> {
    match (&args.k_range, args.k) {
        (Some(r), _) => parse_k_range(r),
        (None, Some(k)) => Ok(vec![k]),
        (None, None) => resolve_k(None, inst).map(|k| vec![k]),
    }
}
