//! Command-line front end for `lek-core`.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error,
//! 3 a solver did not converge.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lek_core::frequencies::{continuity_scan, lambda_pq_with_solution, perimeter_upper_bound};
use lek_core::onedim::{consistency_integral, localization_constant, pi_pq, wb1_center, wi_center, wi_mass};
use lek_core::pde::{solve_lane_emden, Descent, GridFunction, SolveOptions, SolveReport};
use lek_core::verify::convexity::{check_hidden_convexity, empirical_infimum};
use lek_core::verify::{
    check_comparison, check_linfty, check_localization, check_pointwise_bounds, check_slab_asymptotics, VerifyReport,
};
use lek_core::{ConvexDomain, Error, Exec, PQParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Parser, Debug)]
#[command(name = "lek", version, about = "Sub-homogeneous Lane-Emden problems for the p-Laplacian")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Run the data-parallel loops on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One-dimensional constants for (p, q).
    Constants {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Dimension used for the ball and localization constants.
        #[arg(long = "N", default_value_t = 2)]
        n: usize,
    },
    /// Solve the Lane-Emden problem and optionally write the solution CSV.
    Solve {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = DescentArg::Newton)]
        descent: DescentArg,
        /// CSV output `x[,y],value` over interior nodes.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generalized principal frequency λ_{p,q}.
    Lambda {
        #[command(flatten)]
        problem: Problem,
    },
    /// Run one verification check.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Slab solutions for increasing lengths against the interval profile.
    Slab {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Comma-separated, nondecreasing lengths.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        lengths: Vec<f64>,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        h: f64,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// λ_{p,q} along increasing q with both bounds; CSV via `--out`.
    Scan {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        p: f64,
        /// Comma-separated, increasing values of q.
        #[arg(long, value_delimiter = ',')]
        qs: Vec<f64>,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Problem {
    /// Domain description (JSON).
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    /// Grid spacing; at most a quarter of the inradius.
    #[arg(long)]
    pub h: f64,
    /// Relative residual tolerance (default 1e-8 in 1D, 1e-6 in 2D).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Outer iteration cap of the solver.
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
}

#[derive(Subcommand, Debug)]
pub enum Check {
    /// λ |Ω|^{(p-q)/q} r^p (2/π_{p,q})^p ≥ 1 up to the discretization allowance.
    HerschProtter {
        #[command(flatten)]
        problem: Problem,
    },
    /// w on an inner domain stays below w on the outer one.
    Comparison {
        #[command(flatten)]
        problem: Problem,
        /// The contained domain (JSON).
        #[arg(long)]
        inner: PathBuf,
    },
    /// Ball lower bound and interval upper barrier at every node.
    Pointwise {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Two-sided bound on the sup norm.
    Linfty {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Depth of the near-maximum nodes.
    Localization {
        #[command(flatten)]
        problem: Problem,
    },
    /// Hidden convexity of the discrete Dirichlet integral on random pairs.
    HiddenConvexity {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Seeded infimum of the quantified convexity gap of |·|^r.
    Gap {
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DescentArg {
    Newton,
    Bb,
}

enum Failure {
    Usage(String),
    Check,
    NoConvergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric { .. } => Failure::NoConvergence(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match execute(&cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Check) => EXIT_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::NoConvergence(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NO_CONVERGENCE
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Some(n) = std::env::var("LEK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_domain(path: &Path) -> std::result::Result<ConvexDomain, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn options(cli: &Cli, tol: Option<f64>) -> SolveOptions {
    let mut o = SolveOptions::default().with_exec(if cli.sequential { Exec::Sequential } else { Exec::Parallel });
    o.tol = tol;
    o
}

fn problem_options(cli: &Cli, problem: &Problem) -> SolveOptions {
    let mut o = options(cli, problem.tol);
    o.max_iterations = problem.max_iter;
    o
}

/// Solve report without the wall time, so repeated runs print the same bytes.
fn solve_json(rep: &SolveReport) -> Value {
    json!({
        "converged": rep.converged,
        "iterations": rep.iterations,
        "inner_iterations": rep.inner_iterations,
        "energy": rep.energy,
        "residual": rep.residual,
        "threshold": rep.threshold,
    })
}

fn emit(out: &mut dyn Write, cli: &Cli, value: &Value) -> Outcome {
    if cli.json {
        writeln!(out, "{value}").map_err(io_failure)?;
    } else if let Value::Object(map) = value {
        for (k, v) in map {
            match v {
                Value::Object(inner) => {
                    for (k2, v2) in inner {
                        writeln!(out, "{k}.{k2} = {v2}").map_err(io_failure)?;
                    }
                }
                _ => writeln!(out, "{k} = {v}").map_err(io_failure)?,
            }
        }
    }
    Ok(())
}

fn emit_report(out: &mut dyn Write, cli: &Cli, rep: &VerifyReport) -> Outcome {
    let value = serde_json::to_value(rep).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(out, cli, &value)?;
    if rep.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> lek_core::Result<()>) -> Outcome {
    let file = File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(io_failure)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Constants { p, q, n } => {
            let (p, q, n) = (*p, *q, *n);
            PQParams::unit(p, q)?;
            if !(1..=3).contains(&n) {
                return Err(Failure::Usage(format!("--N must be 1, 2 or 3, got {n}")));
            }
            let value = json!({
                "p": p,
                "q": q,
                "N": n,
                "pi_pq": pi_pq(p, q)?,
                "wI_center": wi_center(p, q)?,
                "wI_mass": wi_mass(p, q)?,
                "wB1_center": wb1_center(p, q, n)?,
                "localization_constant": localization_constant(n, p, q)?,
                "consistency_integral": consistency_integral(p, q)?,
            });
            emit(out, cli, &value)
        }
        Command::Solve { problem, alpha, descent, out: path } => {
            let domain = load_domain(&problem.domain)?;
            let params = PQParams::new(problem.p, problem.q, *alpha)?;
            let descent = match descent {
                DescentArg::Newton => Descent::NewtonCg,
                DescentArg::Bb => Descent::ProjectedBb,
            };
            let opts = problem_options(cli, problem).with_descent(descent);
            let (w, rep) = solve_lane_emden(&domain, &params, problem.h, &opts)?;
            if let Some(path) = path {
                write_file(path, |f| w.write_csv(f))?;
            }
            let value = json!({
                "domain": domain.label(),
                "p": params.p,
                "q": params.q,
                "alpha": params.alpha,
                "h": problem.h,
                "nodes": w.grid().interior_count(),
                "max": w.max_interior().1,
                "solve": solve_json(&rep),
            });
            emit(out, cli, &value)?;
            if rep.converged {
                Ok(())
            } else {
                Err(Failure::NoConvergence(format!("residual {:e} above {:e}", rep.residual, rep.threshold)))
            }
        }
        Command::Lambda { problem } => {
            let domain = load_domain(&problem.domain)?;
            let (f, _) = lambda_frequency(cli, problem, &domain)?;
            let value = json!({
                "domain": domain.label(),
                "p": problem.p,
                "q": problem.q,
                "h": problem.h,
                "lambda": f.lambda,
                "mass": f.mass,
                "hp_ratio": f.hp_ratio,
                "perimeter_upper_bound": perimeter_upper_bound(&domain, problem.p, problem.q)?,
                "solve": solve_json(&f.solve),
            });
            emit(out, cli, &value)
        }
        Command::Verify { check } => verify(cli, check, out),
        Command::Slab { p, q, lengths, h, tol } => {
            let rep = check_slab_asymptotics(*p, *q, lengths, *h, &options(cli, *tol))?;
            emit_report(out, cli, &rep)
        }
        Command::Scan { domain, p, qs, h, tol, out: path } => {
            let domain = load_domain(domain)?;
            let table = continuity_scan(&domain, *p, qs, *h, &options(cli, *tol))?;
            if let Some(path) = path {
                write_file(path, |f| table.write_csv(f))?;
            }
            let value = serde_json::to_value(&table).map_err(|e| Failure::Usage(e.to_string()))?;
            if cli.json {
                writeln!(out, "{value}").map_err(io_failure)?;
            } else {
                table.write_csv(&mut *out)?;
                writeln!(out, "max_jump = {}\nbracket_holds = {}", table.max_jump, table.bracket_holds)
                    .map_err(io_failure)?;
            }
            if table.bracket_holds {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
    }
}

fn lambda_frequency(
    cli: &Cli,
    problem: &Problem,
    domain: &ConvexDomain,
) -> std::result::Result<(lek_core::frequencies::FrequencyResult, GridFunction), Failure> {
    Ok(lambda_pq_with_solution(domain, problem.p, problem.q, problem.h, &problem_options(cli, problem))?)
}

fn verify(cli: &Cli, check: &Check, out: &mut dyn Write) -> Outcome {
    let rep = match check {
        Check::HerschProtter { problem } => {
            let domain = load_domain(&problem.domain)?;
            let (f, _) = lambda_frequency(cli, problem, &domain)?;
            VerifyReport::new("hersch_protter", f.hp_ratio - 1.0, f.eps_h)
                .with_params(problem.p, problem.q, 1.0)
                .with_grid(problem.h, &domain)
                .metric("ratio", f.hp_ratio)
                .metric("lambda", f.lambda)
                .metric("perimeter_upper_bound", perimeter_upper_bound(&domain, problem.p, problem.q)?)
        }
        Check::Comparison { problem, inner } => {
            let outer = load_domain(&problem.domain)?;
            let inner = load_domain(inner)?;
            check_comparison(&inner, &outer, problem.p, problem.q, problem.h, &problem_options(cli, problem))?
        }
        Check::Pointwise { problem, alpha } => {
            let domain = load_domain(&problem.domain)?;
            check_pointwise_bounds(&domain, problem.p, problem.q, *alpha, problem.h, &problem_options(cli, problem))?
        }
        Check::Linfty { problem, alpha } => {
            let domain = load_domain(&problem.domain)?;
            check_linfty(&domain, problem.p, problem.q, *alpha, problem.h, &problem_options(cli, problem))?
        }
        Check::Localization { problem } => {
            let domain = load_domain(&problem.domain)?;
            check_localization(&domain, problem.p, problem.q, problem.h, &problem_options(cli, problem))?
        }
        Check::HiddenConvexity { domain, p, r, h, samples } => {
            let domain = load_domain(domain)?;
            hidden_convexity_sweep(&domain, *p, *r, *h, *samples, cli.seed)?
        }
        Check::Gap { r, dim, samples } => {
            let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
            let inf = empirical_infimum(*r, *dim, *samples, cli.seed, exec)?;
            VerifyReport::new("gap_infimum", inf, 0.0)
                .metric("r", *r)
                .metric("samples", *samples as f64)
        }
    };
    emit_report(out, cli, &rep)
}

/// Worst hidden-convexity margin over seeded random nonnegative pairs.
fn hidden_convexity_sweep(
    domain: &ConvexDomain,
    p: f64,
    r: f64,
    h: f64,
    samples: usize,
    seed: u64,
) -> std::result::Result<VerifyReport, Failure> {
    use rand::{Rng, SeedableRng};

    let grid = std::sync::Arc::new(domain.rasterize(h)?);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut f = GridFunction::zeros(grid.clone());
        for &k in grid.interior() {
            f.values_mut()[k] = rng.gen_range(0.0..1.0);
        }
        f
    };
    let mut worst: Option<VerifyReport> = None;
    let mut failures = 0usize;
    for _ in 0..samples.max(1) {
        let v = draw(&mut rng);
        let w = draw(&mut rng);
        let t = rng.gen_range(0.0..1.0);
        let rep = check_hidden_convexity(&v, &w, t, r, p)?;
        if !rep.pass {
            failures += 1;
        }
        if worst.as_ref().is_none_or(|b| rep.worst + b.tol < b.worst + rep.tol) {
            worst = Some(rep);
        }
    }
    let mut rep = worst.expect("at least one sample");
    rep.domain = Some(domain.label());
    rep.pass = failures == 0;
    Ok(rep.metric("samples", samples as f64).metric("failures", failures as f64))
}
