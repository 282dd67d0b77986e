//! Command-line front end behind the `threshdiff` binary.
//!
//! Exit codes: 0 success, 1 usage or argument error, 2 model file error,
//! 3 precondition violated, 4 verification failed, 5 numerical failure.
//! Numeric output is CSV with a header, 17 significant digits, LF endings.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::escape::escape_to_minus_infinity;
use crate::model::ThresholdModel;
use crate::montecarlo::{
    estimate_escape, estimate_hit_laplace, estimate_stationary_histogram, sample_exponential_time_law, Histogram,
    SimConfig,
};
use crate::passage::{exit_probability_down, PassageKernel};
use crate::potential::Resolvent;
use crate::stationary::{scale_function, speed_density, StationaryLaw};
use crate::verify::{self, VerifyOptions};

/// One CSV line of 17-significant-digit numbers.
pub fn csv_row(values: &[f64]) -> String {
    let mut s = values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `MIN:MAX:N` (inclusive, `N ≥ 2`, `MIN < MAX`) or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [lo, hi, n] = parts[..] else {
                return Err(format!("grid must be MIN:MAX:N, got {s:?}"));
            };
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|e| format!("bad grid count {n:?}: {e}"))?;
            if n < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("grid needs N >= 2 and finite MIN < MAX, got {s:?}"));
            }
            Ok(Grid((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()))
        } else {
            let v = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err("grid values must be finite".into());
            }
            Ok(Grid(v))
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "threshdiff", version, about = "Passage, potential, stationary and escape computations for threshold diffusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file (JSON with thresholds, drifts, vols).
    #[arg(long)]
    pub model: PathBuf,
    /// Also write the parsed model to this path.
    #[arg(long, value_name = "PATH")]
    pub dump_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write CSV here instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimate {
    /// `E_x[e^{−qτ_target}]`.
    Hit,
    /// Histogram of `X_{e_q}`.
    Law,
    /// Frequency of leaving `[a₁ − M, a_n + M]` downwards, for `M` and `2M`.
    Escape,
    /// Time-average histogram of one long path.
    Stationary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Density of `X_{e_q}` started at x, on a grid of z.
    EvalDensity {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// Print the closed-form exponential pieces instead.
        #[arg(long)]
        pieces: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One-sided hitting transform, or two-sided exit transforms with
    /// `--lower` and `--upper` (`--q 0` gives exit probabilities).
    Hitting {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["lower", "upper"], required_unless_present_all = ["lower", "upper"])]
        target: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "upper")]
        lower: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "lower")]
        upper: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Stationary density on a grid.
    Stationary {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Scale function and speed density on a grid.
    Scale {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: Grid,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Escape probabilities from each starting point.
    Escape {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
        y: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo estimates with standard errors.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        estimate: Estimate,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
        /// Histogram edges for `law` and `stationary`.
        #[arg(long, allow_hyphen_values = true)]
        bins: Option<Grid>,
        /// Half-width M for `escape`.
        #[arg(long)]
        width: Option<f64>,
        #[arg(long, default_value_t = 50.0)]
        burn_in: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Defaults to 50/q when q is given.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        antithetic: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        /// Additional model to run the model-independent identities on.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Also run the Δt-halving and burn-in checks.
        #[arg(long)]
        full: bool,
        /// Path count for the Monte Carlo stage.
        #[arg(long, default_value_t = 100_000)]
        paths: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Model(String),
    Lib(Error),
    Io(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Model(_) => 2,
            Failure::Lib(Error::InvalidModel(_)) => 2,
            Failure::Lib(Error::InvalidArgument(_)) => 1,
            Failure::Lib(Error::Precondition(_)) => 3,
            Failure::Verify => 4,
            Failure::Lib(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Model(m) | Failure::Io(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
            Failure::Verify => "verification failed".into(),
        }
    }
}

fn load_model(path: &Path) -> Result<ThresholdModel, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Model(format!("cannot read model {}: {e}", path.display())))?;
    ThresholdModel::from_json(&text).map_err(|e| Failure::Model(format!("{}: {e}", path.display())))
}

fn model_from(args: &ModelArgs) -> Result<ThresholdModel, Failure> {
    let m = load_model(&args.model)?;
    if let Some(p) = &args.dump_model {
        std::fs::write(p, m.to_json()).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(m)
}

fn emit(out: &OutArgs, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn need<T>(v: Option<T>, what: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("this estimate needs {what}")))
}

fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_left,bin_right,mass,se\n");
    for (k, e) in h.mass.iter().enumerate() {
        s.push_str(&csv_row(&[h.edges[k], h.edges[k + 1], e.estimate, e.std_error]));
    }
    s
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::EvalDensity { model, q, x, grid, pieces, out } => {
            let m = model_from(&model)?;
            let res = Resolvent::new(&m, q)?;
            let text = if pieces {
                res.pieces(x)?.csv()
            } else {
                let grid = need(grid, "--grid (or use --pieces)")?;
                let mut s = String::from("z,density\n");
                for z in grid.0 {
                    s.push_str(&csv_row(&[z, res.density(x, z)?]));
                }
                s
            };
            emit(&out, &text, stdout)
        }
        Command::Hitting { model, q, x, target, lower, upper, out } => {
            let m = model_from(&model)?;
            let text = match (target, lower, upper) {
                (Some(t), _, _) => {
                    let k = PassageKernel::new(&m, q)?;
                    format!("x,target,laplace\n{}", csv_row(&[x, t, k.hit(x, t)?]))
                }
                (None, Some(y), Some(z)) if q == 0.0 => {
                    let down = exit_probability_down(&m, x, y, z)?;
                    format!("x,lower,upper,down,up\n{}", csv_row(&[x, y, z, down, 1.0 - down]))
                }
                (None, Some(y), Some(z)) => {
                    let k = PassageKernel::new(&m, q)?;
                    format!("x,lower,upper,down,up\n{}", csv_row(&[x, y, z, k.exit_down(x, y, z)?, k.exit_up(x, y, z)?]))
                }
                _ => return Err(Failure::Usage("give --target, or both --lower and --upper".into())),
            };
            emit(&out, &text, stdout)
        }
        Command::Stationary { model, grid, out } => {
            let m = model_from(&model)?;
            let law = StationaryLaw::new(&m)?;
            let mut s = String::from("z,density\n");
            for z in grid.0 {
                s.push_str(&csv_row(&[z, law.density_at(z)]));
            }
            emit(&out, &s, stdout)
        }
        Command::Scale { model, grid, out } => {
            let m = model_from(&model)?;
            let mut s = String::from("x,phi,speed\n");
            for x in grid.0 {
                s.push_str(&csv_row(&[x, scale_function(&m, x)?, speed_density(&m, x)?]));
            }
            emit(&out, &s, stdout)
        }
        Command::Escape { model, y, out } => {
            let m = model_from(&model)?;
            let mut s = String::from("y,p_minus,p_plus\n");
            for y in y {
                let p = escape_to_minus_infinity(&m, y)?;
                s.push_str(&csv_row(&[y, p, 1.0 - p]));
            }
            emit(&out, &s, stdout)
        }
        Command::Simulate {
            model,
            estimate,
            x,
            q,
            target,
            bins,
            width,
            burn_in,
            seed,
            paths,
            dt,
            horizon,
            antithetic,
            out,
        } => {
            let m = model_from(&model)?;
            let base = SimConfig::default();
            let cfg = SimConfig {
                dt: dt.unwrap_or(base.dt),
                paths: paths.unwrap_or(base.paths),
                horizon: horizon.or(q.map(|q| 50.0 / q)).unwrap_or(base.horizon),
                seed: seed.unwrap_or(base.seed),
                antithetic,
                ..base
            };
            let text = match estimate {
                Estimate::Hit => {
                    let (q, t) = (need(q, "--q")?, need(target, "--target")?);
                    let e = estimate_hit_laplace(&m, q, x, t, &cfg)?;
                    let exact = PassageKernel::new(&m, q)?.hit(x, t)?;
                    let v = e.value;
                    format!(
                        "estimate,std_error,paths,exact,truncation_bias,unresolved\n{}",
                        csv_row(&[v.estimate, v.std_error, v.paths as f64, exact, e.truncation_bias, e.unresolved as f64])
                    )
                }
                Estimate::Law => {
                    let (q, b) = (need(q, "--q")?, need(bins, "--bins")?);
                    let law = sample_exponential_time_law(&m, q, x, &cfg, &b.0, &[])?;
                    let _ = writeln!(stderr, "outside bins: below {} above {}; truncated {}", law.below, law.above, law.truncated);
                    histogram_csv(&Histogram { edges: law.edges, mass: law.mass })
                }
                Estimate::Escape => {
                    let w = need(width, "--width")?;
                    let e = estimate_escape(&m, w, x, &cfg)?;
                    let exact = escape_to_minus_infinity(&m, x)?;
                    let mut s = String::from("half_width,estimate,std_error,paths,exact\n");
                    for (hw, v) in [(w, e.inner), (2.0 * w, e.outer)] {
                        s.push_str(&csv_row(&[hw, v.estimate, v.std_error, v.paths as f64, exact]));
                    }
                    if e.unresolved > 0 {
                        let _ = writeln!(stderr, "{} paths unresolved at the horizon", e.unresolved);
                    }
                    s
                }
                Estimate::Stationary => {
                    let b = need(bins, "--bins")?;
                    histogram_csv(&estimate_stationary_histogram(&m, x, &cfg, &b.0, burn_in)?)
                }
            };
            emit(&out, &text, stdout)
        }
        Command::Verify { model, full, paths, out } => {
            let model = model.as_deref().map(load_model).transpose()?;
            let report = verify::run(&VerifyOptions { full, paths, model });
            let table = report.table();
            if out.out.is_some() {
                stdout.write_all(table.as_bytes()).map_err(|e| Failure::Io(e.to_string()))?;
            }
            emit(&out, &table, stdout)?;
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "threshdiff: {}", f.message());
            f.code()
        }
    }
}
