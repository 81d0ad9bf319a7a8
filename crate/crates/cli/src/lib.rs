//! `wulff` — command-line driver for the boundary-penalized random-walk
//! laboratory. Verbs cover chain sampling, grid sweeps, exact enumeration
//! oracles, lattice-animal isoperimetry checks, tilted-chain diagnostics,
//! power-law exponent fits, and interval exit-time bounds.
//!
//! Every run writes its outputs into a fresh directory (root chosen by
//! `--out-dir`, the `WULFF_RUN_DIR` environment variable, or `./wulff-runs`)
//! and seals a `manifest.json` with the resolved configuration, seeds,
//! version, timestamp, and SHA-256 digests of all outputs. The manifest
//! path is printed on stdout. Re-running with the same configuration and
//! seed reproduces byte-identical numeric outputs.
//!
//! Exit codes: 0 success, 2 usage errors (unknown verbs, flags, malformed
//! values), 3 resource refusals (requests beyond enumeration or tabulation
//! budgets), 1 anything else. Failures print a one-line JSON error record
//! on stderr.

pub mod config;
pub mod rundir;
pub mod verbs;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// CLI failure: either a usage problem (bad flags, malformed config) or an
/// error bubbled up from the core library.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(wulff_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

impl From<wulff_core::Error> for CliError {
    fn from(e: wulff_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(wulff_core::Error::Io(e))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// Machine-readable class for the stderr error record.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(wulff_core::Error::Config(_)) => "config",
            CliError::Core(wulff_core::Error::Domain(_)) => "domain",
            CliError::Core(wulff_core::Error::Resource(_)) => "resource",
            CliError::Core(wulff_core::Error::Numerical(_)) => "numerical",
            CliError::Core(wulff_core::Error::Io(_)) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(wulff_core::Error::Resource(_)) => 3,
            CliError::Core(_) => 1,
        }
    }

    /// One-line JSON record printed to stderr on failure.
    pub fn record(&self) -> String {
        let body = serde_json::json!({
            "error": self.class(),
            "message": self.to_string(),
        });
        body.to_string()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wulff",
    version,
    about = "Simulation and verification lab for boundary-penalized random walks",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Flat key = value config file; explicit flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel verbs (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Output root for run directories (overrides WULFF_RUN_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub verb: Verb,
}

/// Model flags shared by the stochastic and oracle verbs.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Lattice dimension (1..=4).
    #[arg(long)]
    pub dim: Option<usize>,

    /// Penalty strength (>= 0).
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,

    /// Fixed-step ensemble: number of jumps.
    #[arg(long)]
    pub steps: Option<u64>,

    /// Continuous-time ensemble: time horizon.
    #[arg(long, value_name = "TIME", allow_negative_numbers = true)]
    pub horizon: Option<f64>,

    /// Penalty variant: boundary | boundary-local-time | conditioned.
    #[arg(long)]
    pub variant: Option<String>,

    /// Master seed (64-bit); all randomness derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ModelArgs {
    fn overlay(&self, map: &mut config::ConfigMap) {
        map.overlay("dim", self.dim);
        map.overlay("beta", self.beta);
        map.overlay("steps", self.steps);
        map.overlay("horizon_time", self.horizon);
        map.overlay("variant", self.variant.clone());
        map.overlay("seed", self.seed);
    }
}

/// Chain-schedule flags shared by `sample` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Burn-in sweeps discarded before recording.
    #[arg(long, value_name = "SWEEPS")]
    pub burn_in: Option<u64>,

    /// Recorded samples after burn-in.
    #[arg(long)]
    pub samples: Option<u64>,

    /// Sweeps between recorded samples.
    #[arg(long, value_name = "SWEEPS")]
    pub thinning: Option<u64>,

    /// Move mix: default | large-system.
    #[arg(long)]
    pub mix: Option<String>,
}

impl ScheduleArgs {
    fn overlay(&self, map: &mut config::ConfigMap) {
        map.overlay("burn_in_sweeps", self.burn_in);
        map.overlay("samples", self.samples);
        map.overlay("thinning_sweeps", self.thinning);
        map.overlay("move_mix", self.mix.clone());
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Also export the final occupied range as a site-set file.
    #[arg(long)]
    pub snapshot: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Comma-separated penalty strengths for the grid.
    #[arg(long, value_name = "LIST")]
    pub beta_list: Option<String>,
    /// Comma-separated step counts (fixed-step grid).
    #[arg(long, value_name = "LIST")]
    pub steps_list: Option<String>,
    /// Comma-separated time horizons (continuous-time grid).
    #[arg(long, value_name = "LIST")]
    pub horizon_list: Option<String>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Jump-count truncation depth for the continuous-time oracle.
    #[arg(long)]
    pub truncation_depth: Option<usize>,
    /// Certified bound the truncation tail must stay below.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IsoArgs {
    /// Lattice dimension (the enumeration supports 2).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Largest connected-set size to enumerate.
    #[arg(long)]
    pub max_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TiltedArgs {
    /// Lattice dimension (1..=4).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Half-width of the tilted profile's support.
    #[arg(long, allow_negative_numbers = true)]
    pub half_width: Option<i64>,
    /// Smoothing floor added to the profile before normalizing.
    #[arg(long, allow_negative_numbers = true)]
    pub smoothing_floor: Option<f64>,
    /// Also compute the spectral gap and its canonical-path bound.
    #[arg(long)]
    pub gap: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Directory of `point-*.json` records from a sweep run.
    #[arg(long, value_name = "DIR")]
    pub records: PathBuf,
    /// Observable to fit: diam | volume.
    #[arg(long)]
    pub observable: Option<String>,
    /// Seed for the bootstrap confidence interval.
    #[arg(long)]
    pub bootstrap_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExitBoundArgs {
    /// Smallest interval width to tabulate.
    #[arg(long)]
    pub min_width: Option<usize>,
    /// Largest interval width to tabulate.
    #[arg(long)]
    pub max_width: Option<usize>,
    /// Number of time points per width.
    #[arg(long)]
    pub t_points: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Run one penalized-walk chain and record its trace.
    Sample(SampleArgs),
    /// Run a grid of chains in parallel and collect per-point records.
    Sweep(SweepArgs),
    /// Evaluate small systems exactly by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Enumerate connected lattice sets and check the boundary lemmas.
    Isoperimetry(IsoArgs),
    /// Build a tilted profile and report generator diagnostics.
    Tilted(TiltedArgs),
    /// Fit a power-law exponent to sweep records.
    Fit(FitArgs),
    /// Tabulate exact interval exit probabilities against the spectral bound.
    ExitBound(ExitBoundArgs),
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Sample(_) => "sample",
            Verb::Sweep(_) => "sweep",
            Verb::Oracle(_) => "oracle",
            Verb::Isoperimetry(_) => "isoperimetry",
            Verb::Tilted(_) => "tilted",
            Verb::Fit(_) => "fit",
            Verb::ExitBound(_) => "exit-bound",
        }
    }
}

/// Parses `argv`, runs the chosen verb, and maps failures to exit codes.
/// This is the whole program; `main` just forwards `std::env::args`.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.record());
            err.exit_code()
        }
    }
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        // Build the global pool exactly once per process; a second attempt
        // (e.g. in-process tests) keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let base = config::ConfigMap::load(cli.config.as_deref())?;
    let out_dir = cli.out_dir.as_deref();
    match cli.verb {
        Verb::Sample(args) => verbs::sample(&args, base, out_dir),
        Verb::Sweep(args) => verbs::sweep(&args, base, out_dir),
        Verb::Oracle(args) => verbs::oracle(&args, base, out_dir),
        Verb::Isoperimetry(args) => verbs::isoperimetry(&args, base, out_dir),
        Verb::Tilted(args) => verbs::tilted(&args, base, out_dir),
        Verb::Fit(args) => verbs::fit(&args, base, out_dir),
        Verb::ExitBound(args) => verbs::exit_bound(&args, base, out_dir),
    }
}
