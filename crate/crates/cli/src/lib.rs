//! The `gpi` command line: moments, single inequality checks, sweeps and
//! conjecture hunts. Data goes to `out` as JSON or CSV; everything else goes
//! to `err`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use gpi_core::bounds::{InequalityCase, Kind};
use gpi_core::linalg::{CorrelationMatrix, SymMatrix};
use gpi_core::moments::{moment, ExponentVector, McOptions, MethodChoice};
use gpi_core::verifier::{
    check_case, emit_report, hunt_gpi, sweep, write_report, CheckOptions, HuntConfig, MatrixFamily, Report,
    ReportFormat, SweepConfig,
};
use gpi_core::GpiError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gpi", version, about = "Gaussian product inequalities: moments, bounds and randomized checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mixed absolute moment E[∏|X_j|^α_j] for X ~ N(0, Σ)
    Moment {
        /// Covariance matrix as JSON {"n": .., "rows": [[..], ..]}
        #[arg(long)]
        sigma: PathBuf,
        /// Comma-separated exponents, e.g. -0.5,2,2
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// auto, closed, nabeya, isserlis, quad or mc
        #[arg(long, default_value = "auto")]
        method: MethodChoice,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Evaluate one inequality and print the checked case
    Bound {
        #[arg(long)]
        kind: Kind,
        /// Correlation matrix as JSON {"n": .., "rows": [[..], ..]}
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// Number of leading coordinates in the first block (wei_a3, even_gpi_subset_1_7)
        #[arg(long)]
        split: Option<usize>,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Check the explicit cases listed in a config file
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Randomized sweep over inequality kinds
    Sweep {
        /// Sweep configuration as JSON; omitted fields take their defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured number of trials per kind
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides the configured master seed
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo search for counterexamples to the GPI with positive exponents
    Hunt {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo samples per case
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        /// Upper end of the exponent range (0, max)
        #[arg(long, default_value_t = 4.0)]
        alpha_max: f64,
        /// Draw exponents from {2, 4} only
        #[arg(long)]
        even_only: bool,
        #[arg(long, default_value = "gram_normalized")]
        family: MatrixFamily,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct McArgs {
    /// Monte Carlo samples
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Monte Carlo seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl McArgs {
    fn options(&self) -> McOptions {
        McOptions { samples: self.samples, seed: self.seed }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
}

/// Contents of a `verify` config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub cases: Vec<InequalityCase>,
    #[serde(default = "default_tolerance")]
    pub tolerance_abs: f64,
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_tolerance() -> f64 {
    1e-7
}

fn default_samples() -> u64 {
    SweepConfig::default().mc_samples
}

fn exit_code(e: &GpiError) -> i32 {
    match e {
        GpiError::Invalid(_) | GpiError::Io(_) | GpiError::Domain(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, GpiError> {
    let text = fs::read_to_string(path).map_err(|e| GpiError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| GpiError::Invalid(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), GpiError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn deliver(report: &Report, output: &OutputArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, GpiError> {
    match &output.out {
        Some(path) => emit_report(report, output.format, path)?,
        None => write_report(report, output.format, &mut *out)?,
    }
    let s = report.summary;
    let _ = writeln!(err, "total {} passed {} failed {} skipped {}", s.total, s.passed, s.failed, s.skipped);
    Ok(if s.failed > 0 { EXIT_VIOLATION } else { EXIT_OK })
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, GpiError> {
    match cli.command {
        Command::Moment { sigma, alpha, method, mc } => {
            let sigma: SymMatrix = read_json(&sigma)?;
            let alphas = ExponentVector::parse(&alpha)?;
            let est = moment(&sigma, &alphas, method, mc.options())?;
            print_json(out, &est)?;
            Ok(EXIT_OK)
        }
        Command::Bound { kind, sigma, alpha, split, tolerance, mc } => {
            let sigma: CorrelationMatrix = read_json(&sigma)?;
            let case = InequalityCase::new(kind, sigma, ExponentVector::parse(&alpha)?, split)?;
            let mut opts = CheckOptions { tolerance_abs: tolerance, ..CheckOptions::default() };
            opts.eval.mc = mc.options();
            let mut r = check_case(&case, &opts);
            r.case_id = kind.to_string();
            print_json(out, &r)?;
            if let Some(m) = &r.message {
                let _ = writeln!(err, "{m}");
            }
            Ok(if r.pass {
                EXIT_OK
            } else if r.failed() && r.method != "error" {
                EXIT_VIOLATION
            } else {
                EXIT_NUMERIC
            })
        }
        Command::Verify { config, output } => {
            let cfg: VerifyConfig = read_json(&config)?;
            if !(cfg.tolerance_abs > 0.0) {
                return Err(GpiError::Invalid(format!("tolerance_abs must be positive, got {}", cfg.tolerance_abs)));
            }
            let base = SweepConfig { tolerance_abs: cfg.tolerance_abs, mc_samples: cfg.mc_samples, ..SweepConfig::default() };
            let results = cfg
                .cases
                .iter()
                .enumerate()
                .map(|(i, case)| {
                    case.validate()?;
                    let seed = cfg.seed ^ i as u64;
                    let mut r = check_case(case, &base.check_options(seed));
                    r.case_id = format!("case-{i:05}");
                    Ok(r)
                })
                .collect::<Result<Vec<_>, GpiError>>()?;
            deliver(&Report::new(&cfg, results)?, &output, out, err)
        }
        Command::Sweep { config, trials, seed, output } => {
            let mut cfg: SweepConfig = match config {
                Some(path) => read_json(&path)?,
                None => SweepConfig::default(),
            };
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            deliver(&sweep(&cfg)?, &output, out, err)
        }
        Command::Hunt { n, trials, seed, samples, alpha_max, even_only, family, output } => {
            let cfg = HuntConfig {
                n,
                trials,
                master_seed: seed,
                samples,
                alpha_range: (HuntConfig::default().alpha_range.0, alpha_max),
                even_only,
                matrix_family: family,
                ..HuntConfig::default()
            };
            deliver(&hunt_gpi(&cfg)?, &output, out, err)
        }
    }
}

/// Parses `argv` (program name first) and runs the command, returning the
/// process exit code: 0 success, 1 violation or candidate, 2 usage error,
/// 3 numeric or capability error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
