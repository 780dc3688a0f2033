use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use ttts::cross::CrossConfig;
use ttts_cli::{
    approximate, bench, bench_csv, cross_for, load_problem, read_file, solve, write_file, CliError, CliResult,
    ModelFile, SolveOptions, Solver, Suite,
};

#[derive(Parser)]
#[command(
    name = "ttts",
    version,
    about = "Tensor-train tree search for hybrid discrete-continuous planning"
)]
struct Cli {
    /// Worker threads for parallel evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the tensor-train value model of a problem.
    Approximate(ApproximateArgs),
    /// Run a solver and write a results document.
    Solve(SolveArgs),
    /// Run a benchmark suite and write a CSV table.
    Bench(BenchArgs),
    /// Print the resolved config of a built-in problem or config file.
    Config { problem: String },
}

#[derive(Args)]
struct ApproximateArgs {
    /// Built-in problem name or problem config path.
    problem: String,
    /// Model file to write.
    #[arg(short, long)]
    output: PathBuf,
    /// Diagnostics file (default: standard output).
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Maximum TT rank (default: per problem).
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = CrossConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = CrossConfig::default().max_sweeps)]
    sweeps: usize,
    #[arg(long, default_value_t = CrossConfig::default().validation_samples)]
    validation_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    /// Built-in problem name or problem config path; defaults to the
    /// problem stored in the model file.
    problem: Option<String>,
    #[arg(long, value_enum, default_value_t = Solver::Ttts)]
    solver: Solver,
    /// Prebuilt model from `approximate`.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = SolveOptions::default().iters)]
    iters: usize,
    #[arg(long, default_value_t = SolveOptions::default().tau)]
    tau: usize,
    /// Exploration constant of the UCB rule.
    #[arg(long = "c", default_value_t = SolveOptions::default().c_explore)]
    c_explore: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Polish the weights of every returned candidate with CMA-ES.
    #[arg(long, action = ArgAction::Set, default_value_t = true)]
    refine: bool,
    /// Complete paths by sampling from the value model.
    #[arg(long)]
    stochastic: bool,
    /// Correct the value model with observed costs during backprop.
    #[arg(long)]
    update_q: bool,
    #[arg(long, default_value_t = 1)]
    instances: usize,
    #[arg(long, default_value_t = SolveOptions::default().visit_round_rank)]
    visit_rank: usize,
    /// TTGO sample count.
    #[arg(long, default_value_t = SolveOptions::default().samples)]
    samples: usize,
    /// Maximum TT rank when the model is built here (default: per problem).
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = SolveOptions::default().population)]
    population: usize,
    #[arg(long, default_value_t = SolveOptions::default().cma_iters)]
    cma_iters: usize,
    /// Wall-time budget for the table search, in milliseconds.
    #[arg(long)]
    budget_ms: Option<u64>,
    /// Condition values (task parameters), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    condition: Option<Vec<f64>>,
    /// Results file (default: standard output).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite config: {"problems": [...], "solvers": [...], "seeds": [...], "options": {...}}.
    suite: PathBuf,
    /// CSV file (default: standard output).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(output: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Approximate(a) => {
            let problem = load_problem(&a.problem)?;
            let cross = CrossConfig {
                tol: a.tol,
                max_sweeps: a.sweeps,
                validation_samples: a.validation_samples,
                ..cross_for(&problem, a.rank, a.seed)
            };
            let (model, diag) = approximate(&problem, &cross)?;
            write_file(&a.output, &model.to_json()?)?;
            let diag = serde_json::to_string_pretty(&diag).map_err(ttts::Error::from)?;
            emit(a.diagnostics.as_ref(), &diag)
        }
        Command::Solve(s) => {
            let model = match &s.model {
                Some(p) => Some(ModelFile::from_json(&read_file(p)?)?),
                None => None,
            };
            let problem = match (&s.problem, &model) {
                (Some(p), _) => load_problem(p)?,
                (None, Some(m)) => m.problem.clone(),
                (None, None) => return Err(CliError::Config("solve needs a problem or a --model".into())),
            };
            let opts = SolveOptions {
                iters: s.iters,
                tau: s.tau,
                c_explore: s.c_explore,
                seed: s.seed,
                refine: s.refine,
                stochastic: s.stochastic,
                update_q: s.update_q,
                instances: s.instances,
                visit_round_rank: s.visit_rank,
                samples: s.samples,
                max_rank: s.rank,
                population: s.population,
                cma_iters: s.cma_iters,
                budget_ms: s.budget_ms,
                condition: s.condition,
            };
            let results = solve(&problem, s.solver, &opts, model.as_ref())?;
            emit(s.output.as_ref(), &results.to_json()?)
        }
        Command::Bench(b) => {
            let suite = Suite::from_json(&read_file(&b.suite)?)?;
            let rows = bench(&suite, |problem, solver, e| {
                eprintln!("skipping {} on {problem}: {e}", solver.label());
            })?;
            let csv = bench_csv(&rows)?;
            match &b.output {
                Some(p) => write_file(p, &csv),
                None => emit(None, csv.trim_end()),
            }
        }
        Command::Config { problem } => {
            let cfg = load_problem(&problem)?;
            emit(None, &serde_json::to_string_pretty(&cfg).map_err(ttts::Error::from)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
