//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solver nonconvergence,
//! 3 uncertified degree where a certificate was required.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::degree::{degree_on, DegreeOptions, DegreeReport, Region};
use crate::error::{Error, Result};
use crate::homotopy::{annulus_search, fmt_f64, Schedule};
use crate::operators::{Grid, Homogeneity, MonotoneOp};
use crate::pde::{build_elliptic, build_parabolic, solve_elliptic_annulus, WEAK_TOL};
use crate::report::VerifierReport;
use crate::space::{Gauge, PVector};
use crate::spec::{validate_tol, ProblemFile};
use crate::yosida::{
    default_lambda_schedule, quasibound_probe, resolvent, verify_approximant_properties, verify_homogeneity_transmission,
    verify_joint_continuity, verify_uniform_bound,
};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "YOSIDA_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "yosida", version, about = "Yosida approximants, degrees and annulus search for monotone inclusions")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Residual tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory (default: $YOSIDA_OUT_DIR, then ./yosida-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Monotonicity, min-section bound, convergence and blow-up of A_lambda.
    Properties,
    UniformBound,
    Quasibound,
    Continuity,
    Homogeneity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NamedOp {
    Zero,
    /// x^3 per coordinate.
    Cube,
    /// |x| x per coordinate.
    Absxx,
    /// 2 x.
    Linear,
    /// Subdifferential of the l1 norm.
    Soft,
    Huber,
    /// Normal cone of [-1, 1]^n.
    Box,
    /// Normal cone of the unit Euclidean ball.
    Ball,
    /// max(x, 0)^2 per coordinate.
    Halfpower,
    /// Discrete p-Laplacian on a line with dim + 1 intervals.
    Plap,
}

impl NamedOp {
    pub fn build(self, dim: usize, p: f64) -> Result<MonotoneOp> {
        match self {
            NamedOp::Zero => MonotoneOp::zero(dim),
            NamedOp::Cube => MonotoneOp::power(3.0, 1.0, dim),
            NamedOp::Absxx => MonotoneOp::power(2.0, 1.0, dim),
            NamedOp::Linear => MonotoneOp::scaled_identity(2.0, dim),
            NamedOp::Soft => MonotoneOp::l1(1.0, dim),
            NamedOp::Huber => MonotoneOp::huber(1.0, dim),
            NamedOp::Box => MonotoneOp::box_cone(vec![-1.0; dim], vec![1.0; dim]),
            NamedOp::Ball => MonotoneOp::ball_cone(dim, 1.0, 2.0),
            NamedOp::Halfpower => MonotoneOp::one_sided_power(2.0, 1.0, dim),
            NamedOp::Plap => MonotoneOp::p_laplacian(Grid::new_line(dim + 1)?, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NamedMap {
    Identity,
    /// |x| x - x per coordinate.
    AbsxxMinusX,
    /// x^3 - x per coordinate.
    CubicMinusX,
    /// Complex squaring on the plane.
    Square,
    /// The constant (1, 0, ..., 0).
    Constant,
}

impl NamedMap {
    pub fn eval(self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            NamedMap::Identity => x.to_vec(),
            NamedMap::AbsxxMinusX => x.iter().map(|v| v.abs() * v - v).collect(),
            NamedMap::CubicMinusX => x.iter().map(|v| v * v * v - v).collect(),
            NamedMap::Square => {
                if x.len() != 2 {
                    return Err(Error::Validation("the squaring map is planar".into()));
                }
                vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]
            }
            NamedMap::Constant => {
                let mut v = vec![0.0; x.len()];
                v[0] = 1.0;
                v
            }
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a numerical verification suite on a catalog operator.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_enum)]
        op: NamedOp,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Gauge exponent (ignored by the homogeneity suite, which uses gamma + 1).
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Compute J_lambda x and A_lambda x.
    Resolvent {
        #[arg(long, value_enum)]
        op: NamedOp,
        #[arg(long)]
        lambda: f64,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
    },
    /// Brouwer degree of a catalog map on an interval or centered ball.
    Degree {
        #[arg(long, value_enum)]
        map: NamedMap,
        #[arg(long, num_args = 2, allow_hyphen_values = true, conflicts_with = "ball")]
        interval: Option<Vec<f64>>,
        /// Radius of a centered Euclidean ball.
        #[arg(long)]
        ball: Option<f64>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Report heuristic values instead of failing with exit code 3.
        #[arg(long)]
        allow_uncertified: bool,
    },
    /// Degree certificates and annulus search for a problem file.
    Annulus {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Fail with exit code 3 unless both degrees are certified.
        #[arg(long)]
        require_certified: bool,
    },
    /// Elliptic p-Laplacian problem from the `[elliptic]` section.
    Elliptic {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Implicit Euler for the `[parabolic]` section.
    Parabolic {
        #[arg(long)]
        spec: PathBuf,
        /// Number of steps (default: horizon / dt).
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    /// Comma-separated t schedule override.
    #[arg(long, value_delimiter = ',')]
    pub t_schedule: Option<Vec<f64>>,
    /// Comma-separated epsilon schedule override.
    #[arg(long, value_delimiter = ',')]
    pub eps_schedule: Option<Vec<f64>>,
}

/// Validated run settings shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub tol: Option<f64>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_args(common: &CommonArgs) -> Result<Self> {
        let tol = common.tol.map(validate_tol).transpose()?;
        let out_dir = common
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("yosida-out"));
        Ok(Self { seed: common.seed, tol, out_dir })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }
}

fn schedule_override(args: &ScheduleArgs, fallback: Schedule) -> Result<Schedule> {
    match (&args.t_schedule, &args.eps_schedule) {
        (None, None) => Ok(fallback),
        (Some(t), Some(e)) => Schedule::new(t.clone(), e.clone()),
        (Some(t), None) => Schedule::new(t.clone(), t.clone()),
        (None, Some(_)) => Err(Error::Validation("--eps-schedule needs --t-schedule".into())),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::SearchFailure(_) | Error::StepFailed { .. } => EXIT_NONCONVERGENCE,
        Error::Uncertified(_) | Error::BoundaryDegenerate(_) | Error::DegenerateZero(_) => EXIT_UNCERTIFIED,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(out, "{e}");
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::from_args(&cli.common)?;
    match &cli.command {
        Command::Verify { suite, op, dim, p } => verify(&cfg, *suite, *op, *dim, *p, out),
        Command::Resolvent { op, lambda, x, p } => {
            let operator = op.build(x.len(), *p)?;
            let g = Gauge::new(*p)?;
            let r = resolvent(&operator, &g, *lambda, &PVector::primal(x.clone(), *p)?, cfg.tol.unwrap_or(1e-12))?;
            let join = |v: &[f64]| v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(",");
            writeln!(out, "x_lambda = {}", join(r.x_lambda.coords()))?;
            writeln!(out, "A_lambda = {}", join(r.a_lambda.coords()))?;
            writeln!(out, "residual = {:.3e} after {} iterations", r.residual, r.iterations)?;
            Ok(EXIT_OK)
        }
        Command::Degree { map, interval, ball, dim, allow_uncertified } => {
            let region = match (interval, ball) {
                (Some(iv), None) => {
                    if *dim != 1 {
                        return Err(Error::Validation("--interval implies --dim 1".into()));
                    }
                    Region::Interval { a: iv[0], b: iv[1] }
                }
                (None, Some(r)) => Region::centered_ball(*dim, *r, 2.0)?,
                _ => return Err(Error::Validation("give exactly one of --interval or --ball".into())),
            };
            let report = degree_on(|x: &[f64]| map.eval(x), &region, &DegreeOptions::default())?;
            print_degree(out, &report)?;
            if report.certified || *allow_uncertified {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_UNCERTIFIED)
            }
        }
        Command::Annulus { spec, schedule, require_certified } => {
            let file = load(spec)?;
            let prob = file.inclusion_problem()?;
            let sched = schedule_override(schedule, file.schedule_for(prob.gamma())?)?;
            let mut ms = file.multistart()?;
            if let Some(t) = cfg.tol {
                ms.tol = t;
            }
            let trace = annulus_search(&prob, &sched, &ms)?;
            let csv = cfg.write("annulus_trace.csv", &trace.to_csv()?)?;
            let summary = trace.summary();
            cfg.write("annulus_summary.txt", &summary)?;
            write!(out, "{summary}")?;
            writeln!(out, "trace written to {}", csv.display())?;
            let certified = trace.degree_g1.certified && trace.degree_g2.certified;
            Ok(if *require_certified && !certified { EXIT_UNCERTIFIED } else { EXIT_OK })
        }
        Command::Elliptic { spec, schedule } => {
            let file = load(spec)?;
            let es = file.elliptic.as_ref().ok_or_else(|| Error::Validation("missing [elliptic] section".into()))?;
            let problem = build_elliptic(es)?;
            let sched = schedule_override(schedule, file.schedule_for(problem.problem.gamma())?)?;
            let mut ms = file.multistart()?;
            if let Some(t) = cfg.tol {
                ms.tol = t;
            }
            let sol = solve_elliptic_annulus(&problem, Some(&sched), &ms)?;
            let csv = cfg.write("elliptic_trace.csv", &sol.trace.to_csv()?)?;
            let summary = sol.summary(es.p);
            cfg.write("elliptic_summary.txt", &summary)?;
            write!(out, "{summary}")?;
            writeln!(out, "trace written to {}", csv.display())?;
            if sol.weak_residuals.iter().any(|r| !(*r <= WEAK_TOL)) {
                return Ok(EXIT_NONCONVERGENCE);
            }
            Ok(EXIT_OK)
        }
        Command::Parabolic { spec, steps } => {
            let file = load(spec)?;
            let ps = file.parabolic.as_ref().ok_or_else(|| Error::Validation("missing [parabolic] section".into()))?;
            let problem = build_parabolic(ps)?;
            let traj = crate::pde::step_parabolic(&problem, steps.unwrap_or(problem.steps))?;
            let csv = cfg.write("parabolic_trajectory.csv", &traj.to_csv()?)?;
            let last = traj.states.last().unwrap();
            let fmt: Vec<String> = last.iter().map(|v| format!("{v:.12}")).collect();
            writeln!(out, "steps: {}", traj.residuals.len())?;
            writeln!(out, "final state: [{}]", fmt.join(", "))?;
            writeln!(out, "max step residual: {:.3e}", traj.residuals.iter().fold(0.0_f64, |a, b| a.max(*b)))?;
            writeln!(out, "trajectory written to {}", csv.display())?;
            Ok(EXIT_OK)
        }
    }
}

fn load(path: &Path) -> Result<ProblemFile> {
    ProblemFile::load(path)
}

fn print_degree(out: &mut dyn Write, r: &DegreeReport) -> Result<()> {
    match r.value {
        Some(v) => writeln!(out, "{v}")?,
        None => writeln!(out, "uncertified")?,
    }
    writeln!(out, "method: {:?}, {}", r.method, r.describe())?;
    Ok(())
}

fn verify(cfg: &RunConfig, suite: Suite, op: NamedOp, dim: usize, p: f64, out: &mut dyn Write) -> Result<i32> {
    let operator = op.build(dim, p)?;
    let n = operator.dim();
    let g = Gauge::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report: VerifierReport = match suite {
        Suite::Properties => {
            let mut xs: Vec<Vec<f64>> = (0..6).map(|_| operator.sample_domain(&mut rng)).collect();
            if !operator.in_domain(&vec![3.0; n]) {
                xs.push(vec![3.0; n]);
            }
            verify_approximant_properties(&operator, &g, &xs, &default_lambda_schedule())?
        }
        Suite::UniformBound => verify_uniform_bound(&operator, &g, 2.0, 1e-3, 1.0, 64, cfg.seed)?,
        Suite::Quasibound => quasibound_probe(&operator, &g, 2.0, 2.0, 64, cfg.seed)?,
        Suite::Continuity => {
            let x = operator.sample_domain(&mut rng);
            let path: Vec<(f64, Vec<f64>)> = (1..=20)
                .map(|k| {
                    let h = 0.5f64.powi(k);
                    (0.5 + h, x.iter().map(|v| v + h).collect())
                })
                .collect();
            verify_joint_continuity(&operator, &g, &path, &(0.5, x))?
        }
        Suite::Homogeneity => {
            let gamma = match operator.homogeneity() {
                Homogeneity::Degree(d) => d,
                Homogeneity::Any => 1.0,
                Homogeneity::None => {
                    return Err(Error::Usage(format!("{} has no homogeneity degree", operator.name())));
                }
            };
            let g = Gauge::new(gamma + 1.0)?;
            let x = operator.sample_domain(&mut rng);
            verify_homogeneity_transmission(&operator, gamma, &g, 0.1, 2.0, &x)?
        }
    };
    let name = format!("verify_{}_{}.txt", suite_name(suite), op_name(op));
    let text = report.render();
    let path = cfg.write(&name, &text)?;
    write!(out, "{text}")?;
    writeln!(out, "report written to {}", path.display())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}

fn suite_name(s: Suite) -> String {
    s.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn op_name(o: NamedOp) -> String {
    o.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(args.iter().copied(), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn degree_command() {
        let (code, text) = run_capture(&["yosida", "degree", "--map", "absxx-minus-x", "--interval", "-2", "2"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.starts_with("1\n"));
        let (code, text) = run_capture(&["yosida", "degree", "--map", "identity", "--ball", "1", "--dim", "3"]);
        assert_eq!(code, 0, "{text}");
        let (code, _) = run_capture(&["yosida", "degree", "--map", "constant", "--ball", "1", "--dim", "3"]);
        assert_eq!(code, EXIT_UNCERTIFIED);
    }

    #[test]
    fn resolvent_command() {
        let (code, text) = run_capture(&["yosida", "resolvent", "--op", "soft", "--lambda", "1", "--x", "3,-0.5"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("x_lambda = 2.0000000000000000e0,0.0000000000000000e0"), "{text}");
    }

    #[test]
    fn bad_tolerance_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _) = run_capture(&["yosida", "--tol", "5", "--out", out, "verify", "--suite", "quasibound", "--op", "cube"]);
        assert_eq!(code, EXIT_VALIDATION);
    }
}
