//! Flag parsing and exit-code mapping for the `hypercut` binary.
//!
//! Every subcommand resolves its flags into a full
//! [`ExperimentConfig`] here, then hands off to the library executor.
//! Defaults that depend on the model (auto horizons, default start
//! grids, default thresholds) are resolved at parse time so the
//! embedded config is always concrete.

use std::fmt;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hypercut::mixing::default_k_grid;
use hypercut::ModelParams;
use hypercut_cli::commands::predicted_time;
use hypercut_cli::{
    execute, CliError, CommandTag, CoupleMode, ExperimentConfig, FormatTag, TGrid, ThetaSpec,
    VerifyLevel,
};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "hypercut",
    version,
    about = "Exact and Monte Carlo mixing analysis for a biased lazy walk on the hypercube",
    after_help = "Worker count follows RAYON_NUM_THREADS; all other behavior is flag-controlled.\n\
                  Exit codes: 0 success, 2 unusable request, 3 quantity unresolved within its horizon, 4 verification failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact distance-to-stationarity curve from one start weight
    Profile(ProfileArgs),
    /// Worst-start distance curve over a grid of start weights
    Worst(WorstArgs),
    /// Epsilon-mixing times read off an exact distance curve
    MixingTime(MixingTimeArgs),
    /// Closed-form lower-bound certificates at alpha-indexed times
    Bounds(BoundsArgs),
    /// Coalescence tail of a coupling, Monte Carlo
    Couple(CoupleArgs),
    /// Refresh-count statistics against closed-form moments, Monte Carlo
    Coupon(CouponArgs),
    /// Entrywise comparison of the two kernel constructions
    Equiv(EquivArgs),
    /// Cutoff-scale quantities under a dimension-dependent bias schedule
    ThetaN(ThetaNArgs),
    /// Run the cross-check suite; exits 4 on any failing check
    Verify(VerifyArgs),
}

/// Horizon flag: a step count, or `auto` for 3x the predicted cutoff.
#[derive(Clone, Copy, Debug)]
enum TMaxArg {
    Auto,
    Fixed(u64),
}

impl FromStr for TMaxArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(TMaxArg::Auto);
        }
        s.parse::<u64>()
            .map(TMaxArg::Fixed)
            .map_err(|_| format!("expected a step count or \"auto\", got {s:?}"))
    }
}

impl fmt::Display for TMaxArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TMaxArg::Auto => write!(f, "auto"),
            TMaxArg::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// Start flag for mixing-time: `worst` or a single weight.
#[derive(Clone, Debug)]
enum StartArg {
    Worst,
    Level(usize),
}

impl FromStr for StartArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("worst") {
            return Ok(StartArg::Worst);
        }
        s.parse::<usize>()
            .map(StartArg::Level)
            .map_err(|_| format!("expected a weight or \"worst\", got {s:?}"))
    }
}

impl fmt::Display for StartArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartArg::Worst => write!(f, "worst"),
            StartArg::Level(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Constant,
    Reciprocal,
    InverseSqrt,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Coordinatewise,
    Independence,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

impl OutputArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        cfg.format = match self.format {
            FormatArg::Csv => FormatTag::Csv,
            FormatArg::Json => FormatTag::Json,
        };
        cfg.out = self.out;
    }
}

#[derive(Args)]
struct ProfileArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Start weight (default: n, the far corner)
    #[arg(long)]
    k: Option<usize>,
    /// Time horizon: a step count, or "auto" for 3x the predicted cutoff
    #[arg(long, default_value_t = TMaxArg::Auto)]
    t_max: TMaxArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct WorstArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Start weights to take the pointwise worst over (default: the
    /// standard grid for n)
    #[arg(long, value_delimiter = ',')]
    k_grid: Vec<usize>,
    /// Time horizon: a step count, or "auto" for 3x the predicted cutoff
    #[arg(long, default_value_t = TMaxArg::Auto)]
    t_max: TMaxArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MixingTimeArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Distance thresholds to locate
    #[arg(long, value_delimiter = ',', default_values_t = [0.25])]
    eps: Vec<f64>,
    /// Start: "worst" for the standard worst-start grid, or one weight
    #[arg(long, default_value_t = StartArg::Worst)]
    start: StartArg,
    /// Time horizon: a step count, or "auto" for 3x the predicted cutoff
    #[arg(long, default_value_t = TMaxArg::Auto)]
    t_max: TMaxArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Alpha offsets indexing the evaluation times
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    alpha: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CoupleArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Which coupling to run
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Base weight of the shared lattice (independence mode; default n/2)
    #[arg(long)]
    k: Option<usize>,
    /// Start the second copy from a stationary draw instead of the far
    /// corner (independence mode)
    #[arg(long)]
    stationary_start: bool,
    /// Thresholds to report the coalescence tail at (default: predicted
    /// cutoff + {1,4,16} n, plus the 10x-predicted cap)
    #[arg(long, value_delimiter = ',')]
    t: Vec<u64>,
    /// Monte Carlo replicates
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    /// Master seed; replicate i draws from stream i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CouponArgs {
    /// Cube dimension
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Step counts to report at
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<u64>,
    /// Monte Carlo replicates per row
    #[arg(long, default_value_t = 10000)]
    replicates: usize,
    /// Master seed; row i offsets it by i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EquivArgs {
    /// Cube dimension (full enumeration: small n only)
    #[arg(long)]
    n: usize,
    /// Bias parameter, in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ThetaNArgs {
    /// Bias schedule evaluated at each dimension
    #[arg(long, value_enum, default_value = "reciprocal")]
    schedule: ScheduleArg,
    /// Bias value for the constant schedule
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Cube dimensions
    #[arg(long, value_delimiter = ',', default_values_t = [256, 1024])]
    n_grid: Vec<usize>,
    /// Alpha offsets past the predicted time
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    alpha: Vec<f64>,
    /// Monte Carlo replicates per dimension
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    /// Master seed; each dimension offsets it by n
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check depth
    #[arg(long, value_enum, default_value = "full")]
    level: LevelArg,
    #[command(flatten)]
    output: OutputArgs,
}

fn resolve_t_max(arg: TMaxArg, spec: &ThetaSpec, model: &ModelParams) -> Result<u64> {
    match arg {
        TMaxArg::Fixed(t) => Ok(t),
        TMaxArg::Auto => Ok((3.0 * predicted_time(spec, model)?).round() as u64),
    }
}

fn resolve(command: Command) -> Result<ExperimentConfig> {
    match command {
        Command::Profile(a) => {
            let theta = ThetaSpec::Constant { value: a.theta };
            let model = ModelParams::half_lazy(a.n, a.theta)?;
            let mut cfg = ExperimentConfig::base(CommandTag::Profile);
            cfg.n = vec![a.n];
            cfg.theta = theta;
            cfg.k = vec![a.k.unwrap_or(a.n)];
            cfg.t_grid = TGrid::UpTo { t_max: resolve_t_max(a.t_max, &theta, &model)? };
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Worst(a) => {
            let theta = ThetaSpec::Constant { value: a.theta };
            let model = ModelParams::half_lazy(a.n, a.theta)?;
            let mut cfg = ExperimentConfig::base(CommandTag::Worst);
            cfg.n = vec![a.n];
            cfg.theta = theta;
            cfg.k = if a.k_grid.is_empty() { default_k_grid(a.n) } else { a.k_grid };
            cfg.t_grid = TGrid::UpTo { t_max: resolve_t_max(a.t_max, &theta, &model)? };
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::MixingTime(a) => {
            let theta = ThetaSpec::Constant { value: a.theta };
            let model = ModelParams::half_lazy(a.n, a.theta)?;
            let mut cfg = ExperimentConfig::base(CommandTag::MixingTime);
            cfg.n = vec![a.n];
            cfg.theta = theta;
            cfg.k = match a.start {
                StartArg::Worst => default_k_grid(a.n),
                StartArg::Level(k) => vec![k],
            };
            cfg.eps = a.eps;
            cfg.t_grid = TGrid::UpTo { t_max: resolve_t_max(a.t_max, &theta, &model)? };
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Bounds(a) => {
            let mut cfg = ExperimentConfig::base(CommandTag::Bounds);
            cfg.n = vec![a.n];
            cfg.theta = ThetaSpec::Constant { value: a.theta };
            cfg.alpha = a.alpha;
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Couple(a) => {
            let theta = ThetaSpec::Constant { value: a.theta };
            let model = ModelParams::half_lazy(a.n, a.theta)?;
            let mut cfg = ExperimentConfig::base(CommandTag::Couple);
            cfg.n = vec![a.n];
            cfg.theta = theta;
            cfg.mode = Some(match a.mode {
                ModeArg::Coordinatewise => CoupleMode::Coordinatewise,
                ModeArg::Independence => CoupleMode::Independence,
            });
            if matches!(a.mode, ModeArg::Independence) {
                cfg.k = vec![a.k.unwrap_or(a.n / 2)];
            }
            cfg.stationary_start = a.stationary_start;
            cfg.t_grid = TGrid::Explicit {
                times: if a.t.is_empty() {
                    let predicted = predicted_time(&theta, &model)?;
                    let nf = a.n as f64;
                    let mut times: Vec<u64> = [1.0, 4.0, 16.0]
                        .iter()
                        .map(|c| (predicted + c * nf).round() as u64)
                        .collect();
                    times.push((10.0 * predicted).round() as u64);
                    times.sort_unstable();
                    times.dedup();
                    times
                } else {
                    a.t
                },
            };
            cfg.replicates = a.replicates;
            cfg.seed = a.seed;
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Coupon(a) => {
            let mut cfg = ExperimentConfig::base(CommandTag::Coupon);
            cfg.n = vec![a.n];
            cfg.theta = ThetaSpec::Constant { value: a.theta };
            cfg.t_grid = TGrid::Explicit { times: a.t };
            cfg.replicates = a.replicates;
            cfg.seed = a.seed;
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Equiv(a) => {
            let mut cfg = ExperimentConfig::base(CommandTag::Equiv);
            cfg.n = vec![a.n];
            cfg.theta = ThetaSpec::Constant { value: a.theta };
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::ThetaN(a) => {
            let mut cfg = ExperimentConfig::base(CommandTag::ThetaN);
            cfg.theta = match a.schedule {
                ScheduleArg::Constant => ThetaSpec::Constant { value: a.theta },
                ScheduleArg::Reciprocal => ThetaSpec::Reciprocal,
                ScheduleArg::InverseSqrt => ThetaSpec::InverseSqrt,
            };
            cfg.n = a.n_grid;
            cfg.alpha = a.alpha;
            cfg.replicates = a.replicates;
            cfg.seed = a.seed;
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
        Command::Verify(a) => {
            let mut cfg = ExperimentConfig::base(CommandTag::Verify);
            cfg.level = Some(match a.level {
                LevelArg::Quick => VerifyLevel::Quick,
                LevelArg::Full => VerifyLevel::Full,
            });
            a.output.apply(&mut cfg);
            Ok(cfg)
        }
    }
}

fn write_rendered(config: &ExperimentConfig, rendered: &str) -> Result<()> {
    match &config.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(rendered.as_bytes())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = resolve(cli.command)?;
    match execute(&config) {
        Ok(rendered) => write_rendered(&config, &rendered),
        Err(CliError::Verification { rendered }) => {
            write_rendered(&config, &rendered)?;
            Err(CliError::Verification { rendered })
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    // clap exits 2 on unusable flags and 0 on --help, matching the
    // documented codes.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
