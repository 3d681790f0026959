use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use isvp_core::baseline::{alg1_solve_tracked, newton_exact_solve_tracked};
use isvp_core::cayley_free::{self, SecondStageProjection};
use isvp_core::harness::verify::run_verification;
use isvp_core::harness::{
    build_b0, emit_reports, generate_instance, perturb_c_star, run_experiment, Algorithm, ExperimentConfig,
    OutputFormat,
};
use isvp_core::{approx_jacobian, full_svd, IsvpError, IsvpInstance, Result, SolveReport, SolveStatus, SolverConfig};

/// Inverse singular value problem solvers and experiment runner.
#[derive(Parser)]
#[command(name = "isvp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded sweep over one size and one solver; writes trace.csv / summary.json.
    Run(RunArgs),
    /// Write a random instance; its generating vector goes to FILE.cstar.
    Gen(GenArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Run the randomized invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long, default_value = "cayley-free")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    /// Exit 0 even when a solve does not converge.
    #[arg(long = "allow-nonconverged")]
    allow_nonconverged: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// `a..b` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "1..10", value_parser = parse_seeds)]
    seeds: Seeds,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csv,json", value_parser = parse_formats)]
    format: Formats,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Starting coefficients, whitespace separated.
    #[arg(long, conflicts_with = "beta")]
    c0: Option<PathBuf>,
    /// Perturb the generating vector stored next to the instance.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long = "max-m", default_value_t = 50)]
    max_m: usize,
    #[arg(long = "max-n", default_value_t = 30)]
    max_n: usize,
}

#[derive(Debug, Clone)]
struct Seeds(Vec<u64>);

#[derive(Debug, Clone)]
struct Formats(Vec<OutputFormat>);

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let bad = |e: std::num::ParseIntError| format!("invalid seed in `{s}`: {e}");
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(bad)?;
        let hi: u64 = hi.trim().parse().map_err(bad)?;
        if hi < lo {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(Seeds((lo..=hi).collect()));
    }
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse().map_err(bad))
        .collect::<std::result::Result<_, _>>()
        .map(Seeds)
}

fn parse_formats(s: &str) -> std::result::Result<Formats, String> {
    s.split(',')
        .map(|t| t.parse().map_err(|e: IsvpError| e.to_string()))
        .collect::<std::result::Result<_, _>>()
        .map(Formats)
}

fn cstar_path(instance: &Path) -> PathBuf {
    let mut name = instance.as_os_str().to_owned();
    name.push(".cstar");
    PathBuf::from(name)
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let text = std::fs::read_to_string(path)?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| IsvpError::Parse(format!("{}: {e}", path.display()))))
        .collect::<Result<_>>()?;
    Ok(DVector::from_vec(values))
}

fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let body: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    std::fs::write(path, body.join("\n") + "\n")?;
    Ok(())
}

fn outcome(converged: bool, allow: bool) -> ExitCode {
    if converged || allow {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let config = ExperimentConfig {
        tol: args.solver.tol,
        max_iter: args.solver.max_iter,
        ..ExperimentConfig::new(args.m, args.n, args.beta, args.mu, args.seeds.0, args.solver.algorithm)
    };
    let bundle = run_experiment(&config)?;
    for t in &bundle.trials {
        println!(
            "seed {:>4}  {:<14} iterations {:>3}  {:>10.3} ms{}",
            t.seed,
            format!("{:?}", t.status),
            t.iterations,
            t.total_ms,
            t.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default()
        );
    }
    let agg = &bundle.aggregates;
    println!(
        "converged {}/{}  median iterations {}  mean wall {} ms",
        agg.converged,
        agg.trials,
        agg.median_iterations.map_or("-".into(), |x| x.to_string()),
        agg.mean_wall_ms.map_or("-".into(), |x| format!("{x:.3}"))
    );
    for path in emit_reports(&bundle, &args.format.0, &args.out)? {
        println!("wrote {}", path.display());
    }
    Ok(outcome(agg.converged == agg.trials, args.solver.allow_nonconverged))
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let (instance, c_star) = generate_instance(args.m, args.n, args.seed)?;
    instance.write(&args.out)?;
    let cstar = cstar_path(&args.out);
    write_vector(&cstar, &c_star)?;
    println!("wrote {} and {}", args.out.display(), cstar.display());
    Ok(ExitCode::SUCCESS)
}

fn print_report(report: &SolveReport) {
    println!("k,d_k,cond_J,err_c");
    for r in &report.records {
        let err = r.err_c.map(|e| format!("{e:.5e}")).unwrap_or_default();
        println!("{},{:.5e},{:.5e},{}", r.k, r.d_k, r.cond_j, err);
    }
    println!("status {:?} after {} iterations", report.status, report.iterations);
    if let Some(f) = &report.failure {
        println!("failure: {f}");
    }
    let c: Vec<String> = report.c_final.iter().map(|x| format!("{x:.16e}")).collect();
    println!("c = [{}]", c.join(", "));
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let instance = IsvpInstance::read(&args.instance)?;
    let cstar_file = cstar_path(&args.instance);
    let truth = cstar_file.exists().then(|| read_vector(&cstar_file)).transpose()?;
    let c0 = match (&args.c0, args.beta) {
        (Some(path), _) => read_vector(path)?,
        (None, Some(beta)) => {
            let c_star = truth.as_ref().ok_or_else(|| {
                IsvpError::InvalidConfig(format!("--beta needs {}", cstar_file.display()))
            })?;
            perturb_c_star(c_star, beta, args.seed)
        }
        (None, None) => return Err(IsvpError::InvalidConfig("one of --c0 or --beta is required".into())),
    };
    let config = SolverConfig {
        tol: args.solver.tol,
        max_iter: args.solver.max_iter,
        ..SolverConfig::default()
    };
    let truth = truth.filter(|t| t.len() == instance.n());
    let truth = truth.as_ref();
    let report = match args.solver.algorithm {
        Algorithm::CayleyFree => {
            let svd = full_svd(&instance.evaluate_a(&c0)?)?;
            let j0 = approx_jacobian(&svd.u, &svd.v, &instance)?;
            let (b0, _) = build_b0(&j0, args.mu, args.seed)?;
            cayley_free::solve_tracked(&instance, &c0, &b0, &config, SecondStageProjection::Refined, truth)?
        }
        Algorithm::Alg1 => alg1_solve_tracked(&instance, &c0, &config, truth)?,
        Algorithm::NewtonOracle => newton_exact_solve_tracked(&instance, &c0, &config, truth)?,
    };
    print_report(&report);
    Ok(outcome(report.status == SolveStatus::Converged, args.solver.allow_nonconverged))
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut ok = true;
    for s in run_verification(args.trials, args.max_m, args.max_n) {
        ok &= s.passed();
        println!(
            "{}  {:<40} trials {:>4}  failures {:>3}  worst error/tol {:.3e}",
            if s.passed() { "PASS" } else { "FAIL" },
            s.check.label(),
            s.trials,
            s.failures,
            s.worst_ratio
        );
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
