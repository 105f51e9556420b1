//! `mpmd`: generate instances, run the online algorithm, analyse runs
//! against the offline optimum, and sweep instance families.
//!
//! Exit codes: 0 ok, 2 input error, 3 OPT unavailable, 4 checker violation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use mpmd_core::analysis::report::{optimal_for_analysis, ReportError};
use mpmd_core::analysis::{competitive_report, AnalysisOptions};
use mpmd_core::format::sig12;
use mpmd_core::instance::{
    generate_greedy_adversarial_line, generate_random_simultaneous, generate_uniform, jitter, load_instance,
};
use mpmd_core::offline::{greedy_matching, OfflineError, DEFAULT_DP_CAP, MAX_DP_REQUESTS};
use mpmd_core::{run_online, AlgorithmParams, Instance, SpaceKind, TieBreak};

const DP_CAP_VAR: &str = "MPMD_DP_CAP";
const SWEEP_HEADER: &str = "m,seed,alg,opt,ratio,opt_method";

#[derive(Parser)]
#[command(
    name = "mpmd",
    version,
    about = "Online min-cost perfect matching with delays: simulation and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run the online algorithm and write its trace.
    Run(RunArgs),
    /// Run, solve OPT and check every inequality of the analysis.
    Analyze(AnalyzeArgs),
    /// ALG and OPT costs over a family, sizes and seeds, as CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Uniform,
    Simultaneous,
    AdversarialLine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TieBreakArg {
    LowIdsFirst,
    HighIdsFirst,
}

#[derive(Args)]
struct ParamArgs {
    /// Budget growth rate (> 0).
    #[arg(long, default_value_t = 0.5, value_parser = parse_alpha)]
    alpha: f64,
    /// Budget balance factor (> 1).
    #[arg(long, default_value_t = 2.0, value_parser = parse_beta)]
    beta: f64,
    /// Order among pairs ready at the same instant.
    #[arg(long, value_enum, default_value = "low-ids-first")]
    tie_break: TieBreakArg,
}

impl ParamArgs {
    fn params(&self) -> AlgorithmParams {
        let tie_break = match self.tie_break {
            TieBreakArg::LowIdsFirst => TieBreak::LowIdsFirst,
            TieBreakArg::HighIdsFirst => TieBreak::HighIdsFirst,
        };
        AlgorithmParams::new(self.alpha, self.beta)
            .expect("validated at parse time")
            .with_tie_break(tie_break)
    }
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Space for uniform and simultaneous: line, euclidean, euclidean:D or matrix.
    #[arg(long, default_value = "line", value_parser = parse_metric)]
    metric: SpaceKind,
    /// Coordinates or edge lengths are drawn from [0, extent].
    #[arg(long, default_value_t = 100.0)]
    extent: f64,
    /// Arrival times of the uniform family are drawn from [0, horizon].
    #[arg(long, default_value_t = 100.0)]
    horizon: f64,
    /// Common arrival time of the simultaneous family.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Seeded perturbation making pairwise distances distinct (0 = none).
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
}

impl FamilyArgs {
    /// `size` is the number of pairs, or the level for adversarial-line.
    fn generate(&self, size: usize, seed: u64) -> Result<Instance, CliError> {
        let inst = match self.family {
            Family::Uniform => generate_uniform(size, self.metric, self.extent, self.horizon, seed),
            Family::Simultaneous => generate_random_simultaneous(size, self.metric, self.extent, self.t0, seed),
            Family::AdversarialLine => {
                let level = u32::try_from(size).map_err(|_| CliError::Input(format!("level {size} too large")))?;
                generate_greedy_adversarial_line(level, seed)
            }
        }
        .map_err(|e| CliError::Input(e.to_string()))?;
        jitter(&inst, self.jitter, seed).map_err(|e| CliError::Input(e.to_string()))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Number of request pairs (uniform, simultaneous).
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    /// Recursion level (adversarial-line): 2^(level+1) requests.
    #[arg(long, default_value_t = 3)]
    level: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Trace CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON (stdout if absent and --out is given).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Relative tolerance of every checker.
    #[arg(long, default_value_t = mpmd_core::analysis::checks::CHECK_TOL)]
    tol: f64,
    /// Seed of the random time samples of the three-case check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random time samples of the three-case check.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Report JSON (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Comma-separated pair counts, or levels for adversarial-line.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    sizes: Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// CSV output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Capacity(String),
    Violation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Violation(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Capacity(m) | CliError::Violation(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    AlgorithmParams::new(v, 2.0).map(|_| v).map_err(|e| e.to_string())
}

fn parse_beta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    AlgorithmParams::new(1.0, v).map(|_| v).map_err(|e| e.to_string())
}

fn parse_metric(s: &str) -> Result<SpaceKind, String> {
    match s {
        "line" => Ok(SpaceKind::Line),
        "matrix" => Ok(SpaceKind::Matrix),
        "euclidean" => Ok(SpaceKind::Euclidean(2)),
        _ => match s.strip_prefix("euclidean:").map(str::parse::<usize>) {
            Some(Ok(d)) if d > 0 => Ok(SpaceKind::Euclidean(d)),
            _ => Err(format!(
                "unknown metric {s:?}: expected line, euclidean, euclidean:D or matrix"
            )),
        },
    }
}

fn dp_cap() -> Result<usize, CliError> {
    match std::env::var(DP_CAP_VAR) {
        Err(_) => Ok(DEFAULT_DP_CAP),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(cap) if cap <= MAX_DP_REQUESTS => Ok(cap),
            _ => Err(CliError::Input(format!(
                "{DP_CAP_VAR}={v:?}: expected an integer in 0..={MAX_DP_REQUESTS}"
            ))),
        },
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Instance, CliError> {
    load_instance(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    let size = match args.family.family {
        Family::AdversarialLine => args.level,
        _ => args.pairs,
    };
    let inst = args.family.generate(size, args.seed)?;
    emit(args.out.as_deref(), &inst.to_json_string())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let inst = load(&args.instance)?;
    let params = args.params.params();
    let run = run_online(&inst, &params);
    let summary = json!({
        "alg_total": run.matching.total(),
        "m": inst.pairs(),
        "params": params,
    });
    let summary = format!(
        "{}\n",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    emit(args.out.as_deref(), &run.trace.to_csv())?;
    match (&args.summary, &args.out) {
        (Some(path), _) => emit(Some(path), &summary),
        (None, Some(_)) => emit(None, &summary),
        (None, None) => Ok(()),
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        return Err(CliError::Input(format!(
            "--tol must be finite and >= 0, got {}",
            args.tol
        )));
    }
    let inst = load(&args.instance)?;
    let options = AnalysisOptions {
        tol: args.tol,
        observation_samples: args.samples,
        seed: args.seed,
        dp_cap: dp_cap()?,
    };
    let report = competitive_report(&inst, &args.params.params(), &options).map_err(|e| match e {
        ReportError::Opt(_) => CliError::Capacity(e.to_string()),
        ReportError::Analysis(_) => CliError::Violation(e.to_string()),
    })?;
    emit(args.out.as_deref(), &report.to_json_string())?;
    if report.ok() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .verdicts
            .iter()
            .chain(&report.conservation)
            .filter(|v| !v.ok())
            .map(|v| v.check.as_str())
            .collect();
        Err(CliError::Violation(format!(
            "{} checker violations: {}",
            report.violations,
            failed.join(", ")
        )))
    }
}

struct SweepRow {
    size_index: usize,
    seed: u64,
    m: usize,
    alg: f64,
    opt: f64,
    method: &'static str,
}

impl SweepRow {
    fn to_csv(&self) -> String {
        let ratio = if self.opt > 0.0 {
            sig12(self.alg / self.opt)
        } else {
            String::new()
        };
        format!(
            "{},{},{},{},{},{}",
            self.m,
            self.seed,
            sig12(self.alg),
            sig12(self.opt),
            ratio,
            self.method
        )
    }
}

fn sweep_row(args: &SweepArgs, cap: usize, size_index: usize, seed: u64) -> Result<SweepRow, CliError> {
    let inst = args.family.generate(args.sizes[size_index], seed)?;
    let alg = run_online(&inst, &args.params.params()).matching.total();
    let (opt, method) = match optimal_for_analysis(&inst, cap) {
        Ok((m, method)) => (
            m.total(),
            match method {
                mpmd_core::analysis::OptMethod::Line => "line",
                _ => "exact",
            },
        ),
        Err(OfflineError::Capacity { .. }) => (greedy_matching(&inst).total(), "greedy-bound"),
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    Ok(SweepRow {
        size_index,
        seed,
        m: inst.pairs(),
        alg,
        opt,
        method,
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let cap = dp_cap()?;
    let jobs: Vec<(usize, u64)> = (0..args.sizes.len())
        .flat_map(|k| args.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|&(k, s)| sweep_row(args, cap, k, s))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by_key(|r| (r.size_index, r.seed));
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpmd: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
