//! Command implementations behind the `ttts` binary: model building,
//! solver runs and benchmark tables.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ttts::cross::{CrossConfig, CrossDiagnostics};
use ttts::oracle::table_mcts;
use ttts::problems::config::{builtin, ProblemConfig};
use ttts::problems::Problem;
use ttts::refine::{cmaes_solve, refine_solutions, CmaesConfig};
use ttts::search::{build_model, search_model, SearchConfig, SolutionSet, TraceEntry};
use ttts::tt::{TensorTrain, TtFile};
use ttts::ttgo::{ttgo_solve, TtgoConfig};

pub const MODEL_SCHEMA: &str = "ttts-model/1";
pub const RESULTS_SCHEMA: &str = "ttts-results/1";
pub const DIAGNOSTICS_SCHEMA: &str = "ttts-diagnostics/1";
pub const CSV_HEADER: [&str; 6] = ["problem", "solver", "seed", "error", "cost", "time_ms"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Incompatible(String),

    #[error(transparent)]
    Solver(ttts::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Incompatible(_) => 4,
            CliError::Solver(_) => 1,
        }
    }
}

impl From<ttts::Error> for CliError {
    fn from(e: ttts::Error) -> Self {
        use ttts::Error as E;
        match e {
            E::Config(_) | E::InfeasibleGrid(_) | E::Serialization(_) => CliError::Config(e.to_string()),
            E::Incompatible(_) | E::SizeLimit { .. } => CliError::Incompatible(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A built-in problem name or the path of a problem config file.
pub fn load_problem(spec: &str) -> CliResult<ProblemConfig> {
    if let Some(cfg) = builtin(spec) {
        return Ok(cfg);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "{spec} is neither a built-in problem ({}) nor an existing file",
            ttts::problems::config::BUILTIN.join(", ")
        )));
    }
    Ok(ProblemConfig::from_json(&read_file(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub problem: ProblemConfig,
    pub cross: CrossConfig,
    pub tt: TtFile,
}

impl ModelFile {
    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string(self).map_err(ttts::Error::from)?)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let m: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Config(format!("model file: {e}")))?;
        if m.schema != MODEL_SCHEMA {
            return Err(CliError::Config(format!(
                "model schema {:?}, expected {MODEL_SCHEMA:?}",
                m.schema
            )));
        }
        Ok(m)
    }

    pub fn tensor(&self) -> CliResult<TensorTrain> {
        Ok(TensorTrain::from_file(self.tt.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub schema: String,
    pub problem: String,
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub storage: usize,
    pub cross: CrossDiagnostics,
    pub wall_ms: f64,
}

/// Cross settings with the per-problem rank default filled in.
pub fn cross_for(problem: &ProblemConfig, max_rank: Option<usize>, seed: u64) -> CrossConfig {
    CrossConfig {
        max_rank: max_rank.unwrap_or_else(|| problem.kind.default_max_rank()),
        seed,
        ..CrossConfig::default()
    }
}

pub fn approximate(problem_cfg: &ProblemConfig, cross: &CrossConfig) -> CliResult<(ModelFile, Diagnostics)> {
    let problem = problem_cfg.build()?;
    let started = Instant::now();
    let (tt, diag) = build_model(&problem, cross)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let diagnostics = Diagnostics {
        schema: DIAGNOSTICS_SCHEMA.into(),
        problem: problem.name.clone(),
        shape: tt.shape(),
        ranks: tt.ranks(),
        storage: tt.storage(),
        cross: diag,
        wall_ms,
    };
    let model = ModelFile {
        schema: MODEL_SCHEMA.into(),
        problem: problem_cfg.clone(),
        cross: cross.clone(),
        tt: tt.to_file(),
    };
    Ok((model, diagnostics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Ttts,
    Ttgo,
    Cmaes,
    Mcts,
}

impl Solver {
    pub fn label(self) -> &'static str {
        match self {
            Solver::Ttts => "ttts",
            Solver::Ttgo => "ttgo",
            Solver::Cmaes => "cmaes",
            Solver::Mcts => "mcts",
        }
    }

    fn uses_model(self) -> bool {
        matches!(self, Solver::Ttts | Solver::Ttgo)
    }
}

/// Solver settings shared by `solve` and `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub iters: usize,
    pub tau: usize,
    pub c_explore: f64,
    pub seed: u64,
    pub refine: bool,
    pub stochastic: bool,
    pub update_q: bool,
    pub instances: usize,
    pub visit_round_rank: usize,
    pub samples: usize,
    pub max_rank: Option<usize>,
    pub population: usize,
    pub cma_iters: usize,
    pub budget_ms: Option<u64>,
    pub condition: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        let s = SearchConfig::default();
        Self {
            iters: s.max_iters,
            tau: s.tau,
            c_explore: s.c_explore,
            seed: 0,
            refine: true,
            stochastic: s.stochastic,
            update_q: s.update_q,
            instances: s.instances,
            visit_round_rank: s.visit_round_rank,
            samples: TtgoConfig::default().samples,
            max_rank: None,
            population: 25,
            cma_iters: 20,
            budget_ms: None,
            condition: None,
        }
    }
}

impl SolveOptions {
    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            tau: self.tau,
            c_explore: self.c_explore,
            max_iters: self.iters,
            visit_round_rank: self.visit_round_rank,
            update_q: self.update_q,
            stochastic: self.stochastic,
            instances: self.instances,
            seed: self.seed,
        }
    }

    pub fn cmaes(&self, problem: &Problem) -> CmaesConfig {
        CmaesConfig {
            population: self.population,
            iterations: self.cma_iters,
            seed: self.seed,
            ..CmaesConfig::for_problem(problem)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub actions: Vec<i64>,
    pub weights: Vec<f64>,
    pub cost: f64,
    pub error_metric: f64,
}

/// Everything that determined a run, after defaults were applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub solver: Solver,
    pub options: SolveOptions,
    pub condition: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross: Option<CrossConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ttgo: Option<TtgoConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cmaes: Option<CmaesConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub schema: String,
    pub problem: ProblemConfig,
    pub config: ResolvedConfig,
    pub seed: u64,
    pub solutions: Vec<SolutionRecord>,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross: Option<CrossDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage: Option<usize>,
    #[serde(default)]
    pub truncated: bool,
    pub wall_ms: f64,
}

impl Results {
    pub fn best(&self) -> Option<&SolutionRecord> {
        self.solutions.first()
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self).map_err(ttts::Error::from)?)
    }
}

/// Removes every `wall_ms` field, leaving the deterministic part of a
/// results document.
pub fn strip_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("wall_ms");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Runs one solver. A prebuilt model is reused when given, otherwise the
/// tensor-train solvers build their own with `opts.seed`.
pub fn solve(
    problem_cfg: &ProblemConfig,
    solver: Solver,
    opts: &SolveOptions,
    model: Option<&ModelFile>,
) -> CliResult<Results> {
    let mut problem = problem_cfg.build()?;
    let z = match &opts.condition {
        Some(z) => z.clone(),
        None => problem.default_condition.clone(),
    };
    if z.len() != problem.condition_dims.len() {
        return Err(CliError::Config(format!(
            "problem {} takes {} condition values, got {}",
            problem.name,
            problem.condition_dims.len(),
            z.len()
        )));
    }
    problem.default_condition = z.clone();
    if solver == Solver::Cmaes && !problem.action_dims.is_empty() {
        return Err(CliError::Incompatible(format!(
            "cmaes cannot search problem {}: it has {} discrete action layers",
            problem.name,
            problem.action_dims.len()
        )));
    }

    let started = Instant::now();
    let mut resolved = ResolvedConfig {
        solver,
        options: opts.clone(),
        condition: z.clone(),
        cross: None,
        search: None,
        ttgo: None,
        cmaes: None,
    };
    let mut out = Results {
        schema: RESULTS_SCHEMA.into(),
        problem: problem_cfg.clone(),
        config: resolved.clone(),
        seed: opts.seed,
        solutions: vec![],
        trace: vec![],
        evaluations: 0,
        cross: None,
        storage: None,
        truncated: false,
        wall_ms: 0.0,
    };

    let q_aug = if solver.uses_model() {
        Some(match model {
            Some(m) => {
                let tt = m.tensor()?;
                if tt.shape() != problem.augmented_shape() {
                    return Err(CliError::Config(format!(
                        "model shape {:?} does not match problem shape {:?}",
                        tt.shape(),
                        problem.augmented_shape()
                    )));
                }
                resolved.cross = Some(m.cross.clone());
                tt
            }
            None => {
                let cross = cross_for(problem_cfg, opts.max_rank, opts.seed);
                let (tt, diag) = build_model(&problem, &cross)?;
                out.evaluations += diag.evaluations_used + diag.validation_evaluations;
                out.cross = Some(diag);
                resolved.cross = Some(cross);
                tt
            }
        })
    } else {
        None
    };

    let mut set = match solver {
        Solver::Ttts => {
            let search = opts.search();
            let res = search_model(&problem, q_aug.as_ref().expect("model built"), &z, &search)?;
            resolved.search = Some(search);
            out.trace = res.trace;
            out.evaluations += res.evaluations;
            out.storage = Some(res.storage);
            res.solutions
        }
        Solver::Ttgo => {
            let cfg = TtgoConfig {
                samples: opts.samples,
                tau: opts.tau,
                seed: opts.seed,
            };
            let q_aug = q_aug.as_ref().expect("model built");
            let q = ttts::ttgo::condition(q_aug, &z, &problem.condition_dims)?;
            let set = ttgo_solve(&problem, &q, &z, &cfg)?;
            resolved.ttgo = Some(cfg);
            out.evaluations += cfg.samples + 1;
            out.storage = Some(q_aug.storage());
            set
        }
        Solver::Mcts => {
            let search = opts.search();
            let budget = opts.budget_ms.map(Duration::from_millis);
            let res = table_mcts(&problem, &search, budget)?;
            resolved.search = Some(search);
            out.trace = res.trace;
            out.evaluations += res.evaluations;
            out.storage = Some(res.node_count);
            out.truncated = res.truncated;
            res.solutions
        }
        Solver::Cmaes => {
            let cfg = opts.cmaes(&problem);
            let best = cmaes_solve(&problem, &z, &cfg)?;
            out.evaluations += 1 + cfg.population * cfg.iterations;
            resolved.cmaes = Some(cfg);
            let mut set = SolutionSet::new(1);
            set.insert(best);
            set
        }
    };

    if opts.refine && solver != Solver::Cmaes && !problem.weight_dims.is_empty() {
        let cfg = opts.cmaes(&problem);
        set = refine_solutions(&problem, &z, &set, &cfg)?;
        out.evaluations += set.len() * (1 + cfg.population * cfg.iterations);
        resolved.cmaes = Some(cfg);
    }

    out.solutions = set
        .entries()
        .iter()
        .map(|s| {
            Ok(SolutionRecord {
                error_metric: problem.error_metric(&z, &s.actions, &s.weights)?,
                actions: s.actions.clone(),
                weights: s.weights.clone(),
                cost: s.cost,
            })
        })
        .collect::<CliResult<_>>()?;
    out.config = resolved;
    out.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

/// A benchmark suite: every listed solver on every listed problem and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    /// Built-in names or problem config paths.
    #[serde(default)]
    pub problems: Vec<String>,
    #[serde(default)]
    pub solvers: Vec<Solver>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub options: SolveOptions,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Suite {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("suite: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub problem: String,
    pub solver: Solver,
    pub seed: u64,
    pub error: f64,
    pub cost: f64,
    pub time_ms: f64,
}

/// Runs a suite. Incompatible (problem, solver) pairs are reported through
/// `skipped` and produce no row.
pub fn bench(suite: &Suite, mut skipped: impl FnMut(&str, Solver, &CliError)) -> CliResult<Vec<BenchRow>> {
    let problems: Vec<ProblemConfig> = suite
        .problems
        .iter()
        .map(|p| load_problem(p))
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    for cfg in &problems {
        let name = cfg.name();
        for &solver in &suite.solvers {
            for &seed in &suite.seeds {
                let opts = SolveOptions {
                    seed,
                    ..suite.options.clone()
                };
                match solve(cfg, solver, &opts, None) {
                    Ok(r) => {
                        let best = r.best().ok_or_else(|| {
                            CliError::Config(format!("{} returned no solution on {name}", solver.label()))
                        })?;
                        rows.push(BenchRow {
                            problem: name.clone(),
                            solver,
                            seed,
                            error: best.error_metric,
                            cost: best.cost,
                            time_ms: r.wall_ms,
                        });
                    }
                    Err(e @ CliError::Incompatible(_)) => skipped(&name, solver, &e),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.solver.label().to_string(),
            r.seed.to_string(),
            r.error.to_string(),
            r.cost.to_string(),
            format!("{:.3}", r.time_ms),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
