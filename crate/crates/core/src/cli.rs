//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 no admissible pair, 3 budget exceeded.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evolution::{
    solve_ivp, uniform_grid, Forcing, IvpOptions, SampledForcing, DEFAULT_SUBSTEPS,
};
use crate::experiments::{
    emit_spectrum_plot, run_experiment, write_experiment, ExperimentReport, ExperimentSpec, Family,
    PairRecord, Which,
};
use crate::fsio::write_atomic;
use crate::highprec::DEFAULT_DIGITS;
use crate::matcore::{eigenpairs, C64};
use crate::pencil::{PencilJson, QuadraticPencil};
use crate::scoring::{catalog_pairs, SearchOptions, DEFAULT_BUDGET};
use crate::solvent::{make_pair, SolventOptions, DEFAULT_KAPPA_CAP};
use crate::splitting::{eigen_pairs, Splitting, DEFAULT_CLUSTER_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_PAIRS: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "QUADPENCIL_THREADS";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoPairs(_) | Error::InfeasibleSplitting { .. } => EXIT_NO_PAIRS,
        Error::Budget { .. } => EXIT_BUDGET,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "quadpencil",
    version,
    about = "Complete pairs of solvents for quadratic matrix pencils"
)]
pub struct Cli {
    /// More diagnostics on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate, build and score every admissible complete pair of a pencil.
    Pairs(PairsArgs),
    /// Solve x'' + Bx' + Cx = f with the two-exponential formula.
    Solve(SolveArgs),
    /// Run one seeded random experiment with best/worst oracle comparison.
    Experiment(ExperimentArgs),
    /// Draw the spectrum splitting of a stored experiment report.
    SpectrumPlot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Reject splittings whose eigenvector block or X - Z has a larger condition number.
    #[arg(long, default_value_t = DEFAULT_KAPPA_CAP)]
    pub kappa_cap: f64,
    /// Eigenvalues closer than this are kept on the same side.
    #[arg(long, default_value_t = DEFAULT_CLUSTER_TOL)]
    pub cluster_tol: f64,
    /// Maximum number of splittings to enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET as u64)]
    pub budget: u64,
    /// Ignore the splitting budget.
    #[arg(long)]
    pub full: bool,
}

impl SearchArgs {
    fn options(&self, pencil: &QuadraticPencil) -> SearchOptions {
        SearchOptions {
            cluster_tol: self.cluster_tol,
            solvent: SolventOptions {
                kappa_cap: self.kappa_cap,
                ..SolventOptions::default()
            },
            budget: (!self.full).then_some(u128::from(self.budget)),
            ..SearchOptions::for_pencil(pencil)
        }
    }
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Pencil file (JSON).
    #[arg(long)]
    pub pencil: PathBuf,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub pencil: PathBuf,
    /// "best", "worst", or comma-separated eigenvalue indices forming X.
    #[arg(long, default_value = "best")]
    pub pair: String,
    /// Initial value x(0) as a JSON array of numbers or [re, im] pairs.
    #[arg(long)]
    pub u0: Option<String>,
    /// Initial velocity x'(0), same format as --u0.
    #[arg(long)]
    pub u1: Option<String>,
    /// Forcing: zero, constant:<vector JSON> or file:<table JSON>.
    #[arg(long, default_value = "zero")]
    pub f: String,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Explicit time grid as a JSON array; overrides --t-end and --steps.
    #[arg(long)]
    pub grid: Option<String>,
    /// Simpson substeps per grid interval.
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    pub substeps: usize,
    #[arg(long, default_value = "trajectory.json")]
    pub out: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// complex_uniform, hermitian_real or gyroscopic_real (short forms complex, hermitian, gyroscopic).
    #[arg(long, default_value = "complex_uniform")]
    pub family: String,
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub scale_b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale_c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    pub oracle_digits: u32,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub oracle: Toggle,
    #[arg(long, default_value_t = DEFAULT_KAPPA_CAP)]
    pub kappa_cap: f64,
    #[arg(long, default_value_t = DEFAULT_BUDGET as u64)]
    pub budget: u64,
    /// Ignore the splitting budget (needed for the largest sizes).
    #[arg(long)]
    pub full: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WhichArg {
    Best,
    Worst,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// report.json written by `experiment`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value_t = WhichArg::Best)]
    pub which: WhichArg,
    /// SVG path; the CSV is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn load_pencil(path: &Path) -> Result<QuadraticPencil> {
    QuadraticPencil::from_json_str(&read(path)?)
}

fn json_number(v: &Value) -> Option<f64> {
    v.as_f64()
}

/// Parses `[1, 2]` or `[[1, 0], [0, 1]]` (re, im pairs).
pub fn parse_vector(text: &str) -> Result<Vec<C64>> {
    let v: Value = serde_json::from_str(text)?;
    let items = v
        .as_array()
        .ok_or_else(|| Error::InvalidInput(format!("expected a JSON array, got {text}")))?;
    items
        .iter()
        .map(|item| match item {
            Value::Array(p) if p.len() == 2 => match (json_number(&p[0]), json_number(&p[1])) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(Error::InvalidInput(format!("bad complex entry {item}"))),
            },
            _ => json_number(item)
                .map(|re| C64::new(re, 0.0))
                .ok_or_else(|| Error::InvalidInput(format!("bad vector entry {item}"))),
        })
        .collect()
}

pub fn parse_forcing(text: &str) -> Result<Forcing> {
    if text == "zero" {
        return Ok(Forcing::Zero);
    }
    if let Some(v) = text.strip_prefix("constant:") {
        return Ok(Forcing::Constant(parse_vector(v)?));
    }
    if let Some(path) = text.strip_prefix("file:") {
        let table: SampledForcing = serde_json::from_str(&read(Path::new(path))?)?;
        return Ok(Forcing::Sampled(SampledForcing::new(
            table.times,
            table.values,
        )?));
    }
    Err(Error::InvalidInput(format!(
        "forcing must be zero, constant:<vector> or file:<path>, got {text:?}"
    )))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(text)?;
    Ok(v)
}

#[derive(Serialize)]
struct RankedPair<'a> {
    index: usize,
    #[serde(flatten)]
    record: &'a PairRecord,
}

#[derive(Serialize)]
struct PairsReport<'a> {
    pencil: PencilJson,
    eigenvalues: Vec<C64>,
    splitting_count: u64,
    rejected: crate::scoring::RejectionCounts,
    best: usize,
    worst: usize,
    /// Sorted by `kappa_max`, ascending.
    pairs: Vec<RankedPair<'a>>,
}

fn cmd_pairs(args: &PairsArgs, verbose: u8) -> Result<()> {
    let pencil = load_pencil(&args.pencil)?;
    let catalog = catalog_pairs(&pencil, &args.search.options(&pencil))?;
    let (best, worst) = catalog.best_worst()?;
    let records: Vec<PairRecord> = catalog.scored.iter().map(PairRecord::from).collect();
    let mut ranked: Vec<RankedPair> = catalog
        .scored
        .iter()
        .zip(&records)
        .map(|(s, record)| RankedPair {
            index: s.score.splitting_index,
            record,
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.record
            .kappa
            .max
            .total_cmp(&b.record.kappa.max)
            .then(a.index.cmp(&b.index))
    });
    let report = PairsReport {
        pencil: PencilJson::from(&pencil),
        eigenvalues: catalog.eigenpairs.iter().map(|p| p.value).collect(),
        splitting_count: u64::try_from(catalog.attempted).unwrap_or(u64::MAX),
        rejected: catalog.rejected,
        best: best.score.splitting_index,
        worst: worst.score.splitting_index,
        pairs: ranked,
    };
    if verbose > 0 {
        eprintln!(
            "{} splittings, {} accepted, best kappa_max {:e}, worst {:e}",
            catalog.attempted,
            catalog.scored.len(),
            best.score.kappa_max,
            worst.score.kappa_max
        );
    }
    write_atomic(&args.out, serde_json::to_string_pretty(&report)?.as_bytes())
}

fn cmd_solve(args: &SolveArgs, verbose: u8) -> Result<()> {
    let pencil = load_pencil(&args.pencil)?;
    let n = pencil.n();
    let zeros = vec![C64::new(0.0, 0.0); n];
    let u0 = args
        .u0
        .as_deref()
        .map(parse_vector)
        .transpose()?
        .unwrap_or_else(|| zeros.clone());
    let u1 = args
        .u1
        .as_deref()
        .map(parse_vector)
        .transpose()?
        .unwrap_or(zeros);
    let forcing = parse_forcing(&args.f)?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => uniform_grid(args.t_end, args.steps)?,
    };
    let opts = args.search.options(&pencil);

    let pair = match args.pair.as_str() {
        "best" | "worst" => {
            let catalog = catalog_pairs(&pencil, &opts)?;
            let (best, worst) = catalog.best_worst()?;
            let pick = if args.pair == "best" { best } else { worst };
            if verbose > 0 {
                eprintln!(
                    "using splitting {} with kappa_max {:e}",
                    pick.score.splitting_index, pick.score.kappa_max
                );
            }
            catalog.pair(&pencil, pick, &opts.solvent)?
        }
        list => {
            let part = list
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad --pair {list:?}: {e}")))?;
            let pairs = eigen_pairs(&eigenpairs(&pencil.companion_matrix())?, opts.cluster_tol);
            let splitting = Splitting::from_part_x(part, 2 * n)?;
            make_pair(&pencil, &pairs, &splitting, &opts.solvent)?
        }
    };
    let result = solve_ivp(
        &pencil,
        &pair,
        &u0,
        &u1,
        &forcing,
        &grid,
        IvpOptions {
            substeps: args.substeps,
        },
    )?;
    if verbose > 0 {
        eprintln!(
            "{} grid points, residual_max {:e}",
            result.times.len(),
            result.residual_max
        );
    }
    write_atomic(&args.out, serde_json::to_string_pretty(&result)?.as_bytes())
}

fn cmd_experiment(args: &ExperimentArgs, verbose: u8) -> Result<()> {
    let family: Family = args.family.parse()?;
    let spec = ExperimentSpec {
        family,
        n: args.n,
        scale_b: args.scale_b,
        scale_c: args.scale_c,
        seed: args.seed,
        oracle_digits: matches!(args.oracle, Toggle::On).then_some(args.oracle_digits),
        kappa_cap: args.kappa_cap,
        budget: (!args.full).then_some(args.budget),
    };
    let report = run_experiment(&spec)?;
    if verbose > 0 {
        eprintln!(
            "{} splittings, {} accepted; best kappa_max {:e} eps {:?}; worst kappa_max {:e} eps {:?}; {:.3}s",
            report.splitting_count,
            report.pairs.len(),
            report.best.kappa.max,
            report.eps_best,
            report.worst.kappa.max,
            report.eps_worst,
            report.timing.total.as_secs_f64()
        );
    }
    write_experiment(&report, &args.out)
}

fn cmd_spectrum_plot(args: &PlotArgs) -> Result<()> {
    let report: ExperimentReport = serde_json::from_str(&read(&args.report)?)?;
    let which = match args.which {
        WhichArg::Best => Which::Best,
        WhichArg::Worst => Which::Worst,
    };
    emit_spectrum_plot(&report, which, &args.out)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let k: usize = v.parse().ok().filter(|&k| k > 0).ok_or_else(|| {
            Error::InvalidInput(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        // A pool that is already initialised keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Pairs(a) => cmd_pairs(a, cli.verbose),
        Command::Solve(a) => cmd_solve(a, cli.verbose),
        Command::Experiment(a) => cmd_experiment(a, cli.verbose),
        Command::SpectrumPlot(a) => cmd_spectrum_plot(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_and_forcing() {
        assert_eq!(
            parse_vector("[1, 2.5]").unwrap(),
            vec![C64::new(1.0, 0.0), C64::new(2.5, 0.0)]
        );
        assert_eq!(
            parse_vector("[[1, -1]]").unwrap(),
            vec![C64::new(1.0, -1.0)]
        );
        assert!(parse_vector("{}").is_err());
        assert!(parse_vector("[[1]]").is_err());
        assert!(matches!(parse_forcing("zero").unwrap(), Forcing::Zero));
        assert!(
            matches!(parse_forcing("constant:[1,0]").unwrap(), Forcing::Constant(v) if v.len() == 2)
        );
        assert!(parse_forcing("sine").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::NoPairs("x".into())), EXIT_NO_PAIRS);
        assert_eq!(
            exit_code(&Error::Budget {
                count: 2,
                budget: 1
            }),
            EXIT_BUDGET
        );
        assert_eq!(exit_code(&Error::InvalidGrid("x".into())), EXIT_INPUT);
        assert_eq!(
            main_with_args(["quadpencil", "pairs", "--bogus"]),
            EXIT_INPUT
        );
    }
}
