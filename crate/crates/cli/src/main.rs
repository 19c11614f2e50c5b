//! `haar-bvp`: solve, sweep and check Emden-Fowler boundary value problems
//! from the command line.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use haar_bvp::newton::GuessSpace;
use haar_bvp::refdata::{self, ComparisonReport, ReferenceData};
use haar_bvp::report;
use haar_bvp::study::{convergence_study, SolverConfig};
use haar_bvp::{
    BoundaryKind, EmdenFowlerProblem, Error, Example, Execution, InitialGuess, JacobianMode,
    Method, PowerGuard, QlmSettings, RobinScheme, SolutionGrid,
};

const EXIT_SOLVER: u8 = 1;
const EXIT_COMPARE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "haar-bvp",
    version,
    about = "Haar wavelet collocation for y'' + sigma t^gamma y^beta = 0"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem at one resolution level.
    Solve(SolveArgs),
    /// Solve over several levels and emit a refinement CSV.
    Convergence(ConvergenceArgs),
    /// Solve a built-in example and check it against the embedded tables.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Built-in example 1-4 (excludes --sigma/--gamma/--beta/--bc).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    example: Option<u8>,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// dirichlet: y(1) = 0; robin: y'(1) = y(1).
    #[arg(long)]
    bc: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "newton")]
    method: String,
    /// Quasilinearization: report iterate r + 1. Newton: iteration cap.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Constant initial guess.
    #[arg(long, allow_hyphen_values = true)]
    guess: Option<f64>,
    /// coefficients | values (Newton only; quasilinearization guesses values).
    #[arg(long)]
    guess_space: Option<String>,
    /// augmented | endpoint
    #[arg(long)]
    robin_scheme: Option<String>,
    /// Maximum step halvings per Newton iteration (0 = plain Newton).
    #[arg(long)]
    damping: Option<u32>,
    /// analytic | fd
    #[arg(long)]
    jacobian: Option<String>,
    /// error | signed: how to treat negative y under a fractional power.
    #[arg(long)]
    guard: Option<String>,
    /// Disable rayon even when it is compiled in.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long = "J", short = 'J', default_value_t = 3)]
    level: u32,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Evaluation points, comma separated (default 0.1,...,0.9).
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<f64>>,
    /// Report max |R(t)| over the evaluation points.
    #[arg(long)]
    residual: bool,
    /// Compare against the embedded table for this example, method and J.
    #[arg(long)]
    compare: bool,
    /// Compare against the extrapolated reference column instead.
    #[arg(long)]
    ealgo: bool,
    #[arg(long, default_value_t = 5e-5)]
    atol: f64,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7,8")]
    levels: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    example: u8,
    #[arg(long, default_value = "newton")]
    method: String,
    #[arg(long = "J", short = 'J')]
    level: u32,
    #[arg(long, default_value_t = 5e-5)]
    atol: f64,
    #[arg(long)]
    ealgo: bool,
    #[arg(long)]
    sequential: bool,
}

/// Error split by the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularMatrix { .. }
            | Error::NonFinite { .. }
            | Error::MaxIterations { .. }
            | Error::DampingExhausted { .. }
            | Error::NegativeBaseFractionalPower { .. }
            | Error::SingularPoint
            | Error::DimensionMismatch { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn parse_with<T: std::str::FromStr<Err = Error>>(
    value: &Option<String>,
) -> Result<Option<T>, Failure> {
    value
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(Failure::from)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse().map_err(Failure::from)
}

fn parse_guard(s: &str) -> Result<PowerGuard, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "error" => Ok(PowerGuard::Error),
        "signed" => Ok(PowerGuard::Signed),
        other => Err(config_err(format!("unknown guard `{other}`"))),
    }
}

fn parse_jacobian(s: &str) -> Result<JacobianMode, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "analytic" => Ok(JacobianMode::Analytic),
        "fd" | "finite-difference" => Ok(JacobianMode::FiniteDifference),
        other => Err(config_err(format!("unknown Jacobian mode `{other}`"))),
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

/// The example shortcut or the explicit parameters, never both.
fn resolve_problem(args: &ProblemArgs) -> Result<(Option<Example>, EmdenFowlerProblem), Failure> {
    let explicit =
        args.sigma.is_some() || args.gamma.is_some() || args.beta.is_some() || args.bc.is_some();
    match (args.example, explicit) {
        (Some(_), true) => Err(config_err(
            "--example cannot be combined with --sigma/--gamma/--beta/--bc",
        )),
        (Some(id), false) => {
            let ex = Example::from_id(id)?;
            Ok((Some(ex), ex.problem()))
        }
        (None, true) => {
            let (Some(sigma), Some(gamma), Some(beta)) = (args.sigma, args.gamma, args.beta) else {
                return Err(config_err(
                    "explicit problems need --sigma, --gamma and --beta",
                ));
            };
            let bc: BoundaryKind = parse_with(&args.bc)?.unwrap_or(BoundaryKind::Dirichlet);
            let problem = EmdenFowlerProblem::new(sigma, gamma, beta, bc)?;
            Ok((None, problem))
        }
        (None, false) => Err(config_err(
            "give either --example or --sigma/--gamma/--beta [--bc]",
        )),
    }
}

/// Start from the table protocol for built-in examples (converged runs for
/// custom problems) and apply the command-line overrides.
fn build_solver(example: Option<Example>, args: &SolverArgs) -> Result<SolverConfig, Failure> {
    let method = parse_method(&args.method)?;
    let mut solver = match example {
        Some(ex) => SolverConfig::table_protocol(ex, method)?,
        None => SolverConfig::converged(method),
    };
    let guard = args.guard.as_deref().map(parse_guard).transpose()?;
    let guess_space: Option<GuessSpace> = parse_with(&args.guess_space)?;
    match &mut solver {
        SolverConfig::Qlm(s) => {
            if let Some(r) = args.iters {
                let keep = s.clone();
                *s = QlmSettings {
                    eval_points: keep.eval_points,
                    ..QlmSettings::through_iterate(r)
                };
            }
            if let Some(tol) = args.tol {
                s.tol = tol;
            }
            if let Some(g) = args.guess {
                s.init_guess = InitialGuess::Constant(g);
            }
            if let Some(g) = guard {
                s.guard = g;
            }
            if guess_space == Some(GuessSpace::Coefficients) {
                return Err(config_err(
                    "quasilinearization guesses are collocation values",
                ));
            }
            if args.robin_scheme.is_some() || args.damping.is_some() || args.jacobian.is_some() {
                return Err(config_err(
                    "--robin-scheme, --damping and --jacobian apply to Newton only",
                ));
            }
        }
        SolverConfig::Newton(s) => {
            if let Some(n) = args.iters {
                s.max_iter = n;
            }
            if let Some(tol) = args.tol {
                s.tol = tol;
            }
            if let Some(g) = args.guess {
                s.init_guess = InitialGuess::Constant(g);
            }
            if let Some(space) = guess_space {
                s.guess_space = space;
            }
            if let Some(scheme) = parse_with::<RobinScheme>(&args.robin_scheme)? {
                s.robin_scheme = scheme;
            }
            if let Some(d) = args.damping {
                s.damping = d;
            }
            if let Some(j) = args.jacobian.as_deref() {
                s.jacobian_mode = parse_jacobian(j)?;
            }
            if let Some(g) = guard {
                s.guard = g;
            }
        }
    }
    solver.set_execution(execution(args.sequential));
    Ok(solver)
}

fn check_points(points: &[f64]) -> Result<(), Failure> {
    if points.is_empty() {
        return Err(config_err("--points is empty"));
    }
    if let Some(t) = points.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(config_err(format!("evaluation point {t} outside [0, 1]")));
    }
    Ok(())
}

fn reference_comparison(
    sol: &SolutionGrid,
    example: Example,
    method: Method,
    atol: f64,
    ealgo: bool,
) -> Result<(ComparisonReport, String), Failure> {
    let data = ReferenceData::load()?;
    let table = data.table(example, method)?;
    if sol.eval_points.len() != table.rows.len()
        || sol
            .eval_points
            .iter()
            .zip(&table.rows)
            .any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(config_err(
            "comparison needs the default evaluation points 0.1,...,0.9",
        ));
    }
    if ealgo {
        let col = table.ealgo.as_ref().ok_or_else(|| {
            Failure::from(Error::MissingCell(format!(
                "example {} has no extrapolated column",
                example.id()
            )))
        })?;
        let rep = refdata::compare_values(sol, &table.rows, col, atol)?;
        Ok((rep, format!("example {} extrapolated values", example.id())))
    } else {
        let rep = refdata::compare(sol, &table, atol)?;
        let label = format!(
            "example {} {} J={}",
            example.id(),
            method,
            sol.config.level()
        );
        Ok((rep, label))
    }
}

fn cmd_solve(args: &SolveArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let (example, problem) = resolve_problem(&args.problem)?;
    let mut solver = build_solver(example, &args.solver)?;
    if let Some(points) = &args.points {
        check_points(points)?;
        solver.set_eval_points(points.clone());
    }
    let compare_to = if args.compare || args.ealgo {
        Some(example.ok_or_else(|| config_err("--compare needs --example"))?)
    } else {
        None
    };
    let sol = solver.solve_at(&problem, args.level)?;

    let text = match args.format {
        Format::Table => report::solution_table(&sol, args.residual),
        Format::Csv => {
            if args.residual {
                match sol.residual_sup {
                    Some(r) => eprintln!("R_inf = {}", report::csv_number(r)),
                    None => eprintln!("R_inf = unavailable"),
                }
            }
            report::solution_csv(&sol)
        }
    };
    write_out(out, &text)?;

    if let Some(ex) = compare_to {
        let (rep, label) = reference_comparison(&sol, ex, solver.method(), args.atol, args.ealgo)?;
        let block = report::comparison_block(&rep, &label);
        match args.format {
            Format::Table => write_out(out, &block)?,
            Format::Csv => eprint!("{block}"),
        }
        if !rep.pass {
            return Ok(EXIT_COMPARE);
        }
    }
    Ok(0)
}

fn cmd_convergence(args: &ConvergenceArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let (example, problem) = resolve_problem(&args.problem)?;
    let mut solver = build_solver(example, &args.solver)?;
    if let Some(points) = &args.points {
        check_points(points)?;
        solver.set_eval_points(points.clone());
    }
    let study = convergence_study(
        &problem,
        &solver,
        &args.levels,
        execution(args.solver.sequential),
    )?;
    write_out(out, &study.to_csv())?;
    let failures = study.failures();
    for (level, e) in &failures {
        eprintln!("J={level}: {e}");
    }
    Ok(if failures.is_empty() { 0 } else { EXIT_SOLVER })
}

fn cmd_compare(args: &CompareArgs, out: &mut impl Write) -> Result<u8, Failure> {
    let example = Example::from_id(args.example)?;
    let method = parse_method(&args.method)?;
    let mut solver = SolverConfig::table_protocol(example, method)?;
    solver.set_execution(execution(args.sequential));
    // Fail on a missing reference before paying for the solve.
    ReferenceData::load()?
        .table(example, method)?
        .column(args.level)?;
    let sol = solver.solve_at(&example.problem(), args.level)?;
    let (rep, label) = reference_comparison(&sol, example, method, args.atol, args.ealgo)?;
    write_out(out, &report::comparison_block(&rep, &label))?;
    Ok(if rep.pass { 0 } else { EXIT_COMPARE })
}

fn write_out(out: &mut impl Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| config_err(format!("cannot write output: {e}")))
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &mut out),
        Command::Convergence(a) => cmd_convergence(a, &mut out),
        Command::Compare(a) => cmd_compare(a, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failed: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
