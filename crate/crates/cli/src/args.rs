use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use landscape_core::goe::{DensityMode, DEFAULT_ASYMPTOTIC_DELTA};
use landscape_core::kacrice::IntervalSet;
use landscape_core::model::MixedModel;

/// Critical points of mixed spherical spin glasses in an external field.
#[derive(Debug, Parser)]
#[command(name = "landscape", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Field threshold `sqrt(xi'' - xi')`.
    Hc(HcArgs),
    /// Limiting exponential rate of the expected number of critical points.
    Rate(RateArgs),
    /// Limits of the global maximizer above the threshold.
    Predict(FieldArgs),
    /// Regime and maximizer of the variational problem.
    Maximize(FieldArgs),
    /// Expected (restricted) number of critical points at finite N.
    Kacrice(KacriceArgs),
    /// Averaged GOE spectral density.
    GoeRho(GoeRhoArgs),
    /// Expected absolute determinant of a shifted GOE matrix.
    GoeDet(GoeDetArgs),
    /// Disorder samples and critical-point census.
    Simulate(SimulateArgs),
    /// Acceptance checks with fixed seeds.
    Verify(VerifyArgs),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Hc(a) => &a.common,
            Command::Rate(a) => &a.common,
            Command::Predict(a) | Command::Maximize(a) => &a.common,
            Command::Kacrice(a) => &a.common,
            Command::GoeRho(a) => &a.common,
            Command::GoeDet(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Verify(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// `key=value` file with option defaults; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads, 0 for one per logical core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Print every resolved option to stderr before running.
    #[arg(long)]
    pub describe: bool,
}

#[derive(Debug, Args)]
pub struct HcArgs {
    /// Mixture `p:a_p[,p:a_p...]`.
    #[arg(long)]
    pub xi: MixedModel,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long)]
    pub xi: MixedModel,
    #[arg(long, default_value_t = 0.0, conflicts_with = "h_grid")]
    pub h: f64,
    /// Evenly spaced field strengths `start:stop:count`.
    #[arg(long)]
    pub h_grid: Option<Grid>,
    /// Also fit the rate from exact counts at these dimensions, e.g. `40,80,120,160`.
    #[arg(long, value_delimiter = ',')]
    pub fit_n: Vec<usize>,
    #[arg(long, default_value = "auto")]
    pub rho_mode: RhoMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long)]
    pub xi: MixedModel,
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct KacriceArgs {
    #[arg(long)]
    pub xi: MixedModel,
    #[arg(long)]
    pub h: f64,
    #[arg(long)]
    pub n: usize,
    /// Overlap intervals `lo:hi[,lo:hi...]` inside `[-1, 1]`.
    #[arg(long, default_value = "-1:1", allow_hyphen_values = true)]
    pub gamma: IntervalSet,
    /// Intervals for the radial derivative per site.
    #[arg(long, default_value = "-inf:inf", allow_hyphen_values = true)]
    pub radial: IntervalSet,
    /// Intervals for the energy per site.
    #[arg(long, default_value = "-inf:inf", allow_hyphen_values = true)]
    pub energy: IntervalSet,
    #[arg(long, default_value = "auto")]
    pub rho_mode: RhoMode,
    /// Target relative error of the count.
    #[arg(long, default_value_t = 1e-6)]
    pub rel_tol: f64,
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 10)]
    pub nodes: usize,
    #[arg(long, default_value_t = 3)]
    pub max_refinements: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GoeRhoArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(
        long,
        default_value_t = 0.0,
        allow_hyphen_values = true,
        conflicts_with = "x_grid"
    )]
    pub x: f64,
    /// Evenly spaced points `start:stop:count`.
    #[arg(long, allow_hyphen_values = true)]
    pub x_grid: Option<Grid>,
    #[arg(long, default_value = "exact")]
    pub rho_mode: RhoMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GoeDetArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x: f64,
    /// Monte Carlo draws for a sampled estimate next to the exact value, 0 to skip.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulateMode {
    /// Multistart critical-point search on each sample.
    Census,
    /// Empirical covariances of the field and its derivatives at one point.
    Covariance,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub xi: MixedModel,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SimulateMode::Census)]
    pub mode: SimulateMode,
    /// Disorder samples.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Random starts per sample.
    #[arg(long, default_value_t = 64)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Convergence threshold on the spherical gradient norm per site.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Two points are merged when their cosine exceeds this.
    #[arg(long, default_value_t = 1.0 - 1e-8)]
    pub dedup_cos: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criteria to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,4,5,8")]
    pub suites: Vec<u8>,
    #[command(flatten)]
    pub common: Common,
}

/// `start:stop:count`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{t}`"))
        };
        let count: usize = c.trim().parse().map_err(|_| format!("bad count `{c}`"))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        Ok(Grid {
            start: num(a)?,
            stop: num(b)?,
            count,
        })
    }
}

/// `exact`, `asymptotic[:delta]` or `auto` (exact up to N = 400).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoMode {
    Auto,
    Fixed(DensityMode),
}

impl RhoMode {
    pub fn resolve(self, n: usize) -> DensityMode {
        match self {
            RhoMode::Auto => landscape_core::kacrice::default_rho_mode(n),
            RhoMode::Fixed(m) => m,
        }
    }
}

impl FromStr for RhoMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(RhoMode::Auto),
            "exact" => Ok(RhoMode::Fixed(DensityMode::ExactHermite)),
            "asymptotic" => Ok(RhoMode::Fixed(DensityMode::Asymptotic {
                delta: DEFAULT_ASYMPTOTIC_DELTA,
            })),
            other => match other.strip_prefix("asymptotic:") {
                Some(d) => {
                    let delta: f64 = d.parse().map_err(|_| format!("bad delta `{d}`"))?;
                    if !(delta > 0.0) {
                        return Err(format!("delta must be positive, got {delta}"));
                    }
                    Ok(RhoMode::Fixed(DensityMode::Asymptotic { delta }))
                }
                None => Err(format!(
                    "expected exact, asymptotic[:delta] or auto, got `{other}`"
                )),
            },
        }
    }
}
