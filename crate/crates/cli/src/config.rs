//! Run configuration: command-line flags merged over an optional JSON file,
//! validated before dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qcurve_core::geometry::Dimension;
use qcurve_core::qcurv::{check_nu, default_nu, IterationConfig};
use qcurve_core::ucurve::{DetParams, Preset};

/// Default output directory when neither `--out` nor `QCURVE_OUT` is set.
pub const DEFAULT_OUT_DIR: &str = "qcurve_out";
/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QCURVE_OUT";
/// Default dimension.
pub const DEFAULT_N: i64 = 5;
/// Default kernel amplitude of single solves.
pub const DEFAULT_AMPLITUDE: f64 = 1e-3;
/// Default sweep amplitudes.
pub const DEFAULT_SWEEP: [f64; 4] = [-1e-3, -5e-4, 5e-4, 1e-3];
/// Default seed of the covariance check.
pub const DEFAULT_SEED: u64 = 20240611;
/// Default number of random pairs in the covariance check.
pub const DEFAULT_PAIRS: usize = 10;

/// Failure before any computation; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl From<qcurve_core::Error> for ConfigError {
    fn from(e: qcurve_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Output format echoed on stdout (files are always written in both forms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Canonical JSON report.
    Json,
    /// CSV profile or table.
    Csv,
}

/// Which self-check `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    /// Bessel-layer identities.
    Bessel,
    /// Conformal covariance of the Paneitz operator.
    Covariance,
    /// Scalar-curvature asymptotics.
    Asymptotics,
}

/// Command selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// Indicial roots and weight windows.
    Indicial,
    /// Normalized radial kernel element.
    Kernel,
    /// Single constant-Q solve.
    Solve,
    /// Family of constant-Q solves.
    Sweep,
    /// Constant-U solve.
    Ucurve,
    /// Boundary expansion of a solution.
    Expand,
    /// Self-checks.
    Verify,
}

/// Constant Q- and U-curvature metrics on the radial Poincaré ball.
#[derive(Debug, Parser)]
#[command(name = "qcurve", version, about)]
pub struct Cli {
    /// Subcommand (may instead come from the `command` key of `--config`).
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Options shared by every command.
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Options shared by every command.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON configuration file (flags override its values).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifold dimension n ≥ 4.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<i64>,
    /// Outer radius of the grid.
    #[arg(long, global = true)]
    pub r_max: Option<f64>,
    /// Number of grid points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Amplitude bound ε of the contraction scheme.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Stopping tolerance on sup-norm increments.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Output directory (default: $QCURVE_OUT, else `qcurve_out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// What to echo on stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

/// U-curvature coefficient selection.
#[derive(Debug, Args, Default, Clone)]
pub struct UArgs {
    /// Named coefficients: A, D2 or P.
    #[arg(long)]
    pub preset: Option<String>,
    /// Explicit coefficients `g1,g2,g3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
    /// U-family parameter α (indicial/kernel only).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Indicial roots, index set and weight windows.
    Indicial(UArgs),
    /// Normalized radial kernel element and its boundary fits.
    Kernel(UArgs),
    /// Constant-Q solve with a prescribed kernel amplitude.
    Solve(SolveArgs),
    /// Family of constant-Q solves over several amplitudes.
    Sweep(SweepArgs),
    /// Constant-U solve.
    Ucurve(UcurveArgs),
    /// Boundary expansion and scalar-curvature asymptotics of a solution.
    Expand(SolveArgs),
    /// Self-checks.
    Verify(VerifyArgs),
}

/// Target-curvature and amplitude options.
#[derive(Debug, Args, Default, Clone)]
pub struct SolveArgs {
    /// Kernel amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Relative bump size η of the target `Q(1 + η sech²r)` (0 = hyperbolic).
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Solution weight ν.
    #[arg(long)]
    pub nu: Option<f64>,
}

/// Sweep options.
#[derive(Debug, Args, Default, Clone)]
pub struct SweepArgs {
    /// Comma-separated kernel amplitudes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitudes: Option<Vec<f64>>,
    /// Relative bump size η of the target.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Solution weight ν.
    #[arg(long)]
    pub nu: Option<f64>,
}

/// U-solve options.
#[derive(Debug, Args, Default, Clone)]
pub struct UcurveArgs {
    /// Coefficients.
    #[command(flatten)]
    pub u: UArgs,
    /// Kernel amplitude.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Constant target Ũ (default: U of the model metric).
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
}

/// Self-check options.
#[derive(Debug, Args, Default, Clone)]
pub struct VerifyArgs {
    /// Which check.
    #[arg(value_enum)]
    pub check: Option<Check>,
    /// RNG seed (covariance).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random pairs (covariance).
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Kernel amplitude (asymptotics).
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
}

/// Contents of a `--config` file; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<CommandKind>,
    pub n: Option<i64>,
    pub r_max: Option<f64>,
    pub points: Option<usize>,
    pub epsilon: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub amplitude: Option<f64>,
    pub amplitudes: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub nu: Option<f64>,
    pub preset: Option<String>,
    pub gamma: Option<[f64; 3]>,
    pub alpha: Option<f64>,
    pub target: Option<f64>,
    pub check: Option<Check>,
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
}

impl FileConfig {
    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }
}

/// Operator family addressed by `indicial`, `kernel`, `ucurve`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Linearized constant-Q operator in dimension `n`.
    Q { n: usize },
    /// Linearized constant-U operator with parameter `alpha`.
    U { alpha: f64, params: Option<DetParams> },
}

/// Validated configuration (echoed into every report).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    pub r_max: f64,
    pub points: usize,
    pub iteration: IterationConfig,
    pub family: Family,
    pub amplitude: f64,
    pub amplitudes: Vec<f64>,
    pub eta: f64,
    pub target: Option<f64>,
    pub check: Option<Check>,
    pub seed: u64,
    pub pairs: usize,
    /// Dimension was given explicitly (verify runs its default set otherwise).
    pub n_explicit: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub format: Format,
}

impl RunConfig {
    /// Dimension handle (validated).
    pub fn dim(&self) -> Dimension {
        Dimension::new(self.n as i64).expect("validated dimension")
    }
}

fn u_family(u: &UArgs, file: &FileConfig, require: bool) -> Result<Option<Family>, ConfigError> {
    let preset = u.preset.clone().or_else(|| file.preset.clone());
    let gamma = u.gamma.clone().or_else(|| file.gamma.map(|g| g.to_vec()));
    let alpha = u.alpha.or(file.alpha);
    let params = match (preset, gamma) {
        (Some(_), Some(_)) => return Err(ConfigError("give either --preset or --gamma, not both".into())),
        (Some(tag), None) => {
            let p = Preset::parse(&tag)
                .ok_or_else(|| ConfigError(format!("unknown preset {tag:?} (expected A, D2 or P)")))?;
            Some(DetParams::preset(p)?)
        }
        (None, Some(g)) => {
            if g.len() != 3 {
                return Err(ConfigError(format!("--gamma needs three values (got {})", g.len())));
            }
            Some(DetParams::new(g[0], g[1], g[2])?)
        }
        (None, None) => None,
    };
    let family = match (params, alpha) {
        (Some(_), Some(_)) => return Err(ConfigError("give either coefficients or --alpha, not both".into())),
        (Some(p), None) => {
            p.check_solvable()?;
            Some(Family::U { alpha: p.alpha(), params: Some(p) })
        }
        (None, Some(a)) => {
            if !a.is_finite() {
                return Err(ConfigError(format!("alpha must be finite (got {a})")));
            }
            if (a + 1.0).abs() < 1e-12 {
                return Err(qcurve_core::Error::DegenerateAlpha.into());
            }
            Some(Family::U { alpha: a, params: None })
        }
        (None, None) if require => {
            return Err(ConfigError("ucurve needs --preset {A|D2|P} or --gamma g1,g2,g3".into()))
        }
        (None, None) => None,
    };
    Ok(family)
}

fn finite_positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError(format!("{name} must be positive and finite (got {v})")))
    }
}

/// Merges flags over the optional file and validates the result.
pub fn parse_config(cli: Cli) -> Result<RunConfig, ConfigError> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let c = &cli.common;
    let n_given = c.n.or(file.n);
    let n = n_given.unwrap_or(DEFAULT_N);
    let dim = Dimension::new(n)?;

    let command_kind = match &cli.command {
        Some(Command::Indicial(_)) => Some(CommandKind::Indicial),
        Some(Command::Kernel(_)) => Some(CommandKind::Kernel),
        Some(Command::Solve(_)) => Some(CommandKind::Solve),
        Some(Command::Sweep(_)) => Some(CommandKind::Sweep),
        Some(Command::Ucurve(_)) => Some(CommandKind::Ucurve),
        Some(Command::Expand(_)) => Some(CommandKind::Expand),
        Some(Command::Verify(_)) => Some(CommandKind::Verify),
        None => file.command,
    };
    let command = command_kind.ok_or_else(|| ConfigError("no command given (see --help)".into()))?;

    let r_max = finite_positive("r_max", c.r_max.or(file.r_max).unwrap_or(qcurve_core::grid::DEFAULT_R_MAX))?;
    let points = c.points.or(file.points).unwrap_or(qcurve_core::grid::DEFAULT_POINTS);
    qcurve_core::grid::RadialGrid::new(r_max, points)?;

    let defaults = IterationConfig::default();
    let mut iteration = IterationConfig {
        epsilon: c.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        tol: c.tol.or(file.tol).unwrap_or(defaults.tol),
        max_iter: c.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
        nu: None,
    };

    let empty_u = UArgs::default();
    let empty_solve = SolveArgs::default();
    let empty_sweep = SweepArgs::default();
    let empty_verify = VerifyArgs::default();
    let (u_args, solve_args, sweep_args, verify_args, u_amp, u_target) = match &cli.command {
        Some(Command::Indicial(u)) | Some(Command::Kernel(u)) => {
            (u, &empty_solve, &empty_sweep, &empty_verify, None, None)
        }
        Some(Command::Solve(s)) | Some(Command::Expand(s)) => (&empty_u, s, &empty_sweep, &empty_verify, None, None),
        Some(Command::Sweep(s)) => (&empty_u, &empty_solve, s, &empty_verify, None, None),
        Some(Command::Ucurve(a)) => (&a.u, &empty_solve, &empty_sweep, &empty_verify, a.amplitude, a.target),
        Some(Command::Verify(v)) => (&empty_u, &empty_solve, &empty_sweep, v, None, None),
        None => (&empty_u, &empty_solve, &empty_sweep, &empty_verify, None, None),
    };

    let family = match command {
        CommandKind::Indicial | CommandKind::Kernel => {
            u_family(u_args, &file, false)?.unwrap_or(Family::Q { n: dim.n() })
        }
        CommandKind::Ucurve => u_family(u_args, &file, true)?.expect("required family"),
        _ => Family::Q { n: dim.n() },
    };

    let amplitude =
        solve_args.amplitude.or(u_amp).or(verify_args.amplitude).or(file.amplitude).unwrap_or(DEFAULT_AMPLITUDE);
    if !amplitude.is_finite() {
        return Err(ConfigError(format!("amplitude must be finite (got {amplitude})")));
    }
    let amplitudes =
        sweep_args.amplitudes.clone().or_else(|| file.amplitudes.clone()).unwrap_or(DEFAULT_SWEEP.to_vec());
    if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(ConfigError("amplitudes must be a non-empty list of finite numbers".into()));
    }
    let eta = solve_args.eta.or(sweep_args.eta).or(file.eta).unwrap_or(0.0);
    if !eta.is_finite() || eta <= -1.0 {
        return Err(ConfigError(format!("eta must be finite and > -1 (got {eta})")));
    }
    let nu = solve_args.nu.or(sweep_args.nu).or(file.nu);
    if let Some(nu) = nu {
        check_nu(dim, nu)?;
    }
    iteration.nu = nu;
    if matches!(command, CommandKind::Solve | CommandKind::Sweep | CommandKind::Expand) && eta != 0.0 && nu.is_none() {
        iteration.nu = Some(default_nu(dim));
    }
    iteration.validate()?;

    let target = u_target.or(file.target);
    if let Some(t) = target {
        if !t.is_finite() {
            return Err(ConfigError(format!("target must be finite (got {t})")));
        }
    }
    let check = verify_args.check.or(file.check);
    if command == CommandKind::Verify && check.is_none() {
        return Err(ConfigError("verify needs one of: bessel, covariance, asymptotics".into()));
    }
    let pairs = verify_args.pairs.or(file.pairs).unwrap_or(DEFAULT_PAIRS);
    if pairs == 0 {
        return Err(ConfigError("pairs must be positive".into()));
    }

    let out_dir = c
        .out
        .clone()
        .or_else(|| file.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    Ok(RunConfig {
        command,
        n: dim.n(),
        r_max,
        points,
        iteration,
        family,
        amplitude,
        amplitudes,
        eta,
        target,
        check,
        seed: verify_args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        pairs,
        n_explicit: n_given.is_some(),
        out_dir,
        format: c.format.or(file.format).unwrap_or(Format::Json),
    })
}
