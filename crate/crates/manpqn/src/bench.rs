//! Experiment harness: batches of seeded instances, per-algorithm averages
//! in the layout of the solver comparison tables, and per-run trace files.
//!
//! Instance i uses RNG seed `base_seed + i`; every algorithm of the
//! experiment starts from the same random point of that instance. Results
//! are a pure function of the configuration; a worker pool only changes
//! wall-clock time, never the aggregates.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::driver::{manpg_solve, manpqn_solve, PgVariant, RunTrace, SolverConfig};
use crate::error::{Error, Result};
use crate::problems::{
    cm_problem, gen_jointdiag_random, gen_spca_random, jointdiag_problem, load_matrix_market,
    spca_problem, spca_problem_sparse, ProblemSpec,
};
use crate::stiefel::{random_stiefel, StiefelPoint};

/// The four solvers the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    ManPqn,
    ManPg,
    ManPgAda,
    NlsManPg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ManPqn,
        Algorithm::ManPg,
        Algorithm::ManPgAda,
        Algorithm::NlsManPg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::ManPqn => "manpqn",
            Algorithm::ManPg => "manpg",
            Algorithm::ManPgAda => "manpg-ada",
            Algorithm::NlsManPg => "nls-manpg",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "manpqn" => Ok(Algorithm::ManPqn),
            "manpg" => Ok(Algorithm::ManPg),
            "manpg-ada" => Ok(Algorithm::ManPgAda),
            "nls-manpg" => Ok(Algorithm::NlsManPg),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm '{other}' (expected manpqn, manpg, manpg-ada or nls-manpg)"
            ))),
        }
    }

    pub fn run(
        &self,
        problem: &ProblemSpec,
        x0: &StiefelPoint,
        cfg: &SolverConfig,
    ) -> Result<RunTrace> {
        match self {
            Algorithm::ManPqn => manpqn_solve(problem, x0, cfg),
            Algorithm::ManPg => manpg_solve(problem, x0, cfg, PgVariant::Plain),
            Algorithm::ManPgAda => manpg_solve(problem, x0, cfg, PgVariant::Ada),
            Algorithm::NlsManPg => manpg_solve(problem, x0, cfg, PgVariant::Nls),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which benchmark to instantiate, with its parameters.
#[derive(Clone, Debug)]
pub enum ProblemKind {
    Cm {
        n: usize,
        r: usize,
        mu: f64,
    },
    Spca {
        m_rows: usize,
        n: usize,
        r: usize,
        mu: f64,
    },
    SpcaMtx {
        path: PathBuf,
        r: usize,
        mu: f64,
    },
    JointDiag {
        n: usize,
        big_n: usize,
        r: usize,
        mu: f64,
    },
}

impl ProblemKind {
    pub fn label(&self) -> String {
        match self {
            ProblemKind::Cm { n, r, mu } => format!("cm_n{n}_r{r}_mu{mu}"),
            ProblemKind::Spca { m_rows, n, r, mu } => format!("spca_m{m_rows}_n{n}_r{r}_mu{mu}"),
            ProblemKind::SpcaMtx { path, r, mu } => {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "mtx".into());
                format!("spca_{stem}_r{r}_mu{mu}")
            }
            ProblemKind::JointDiag { n, big_n, r, mu } => {
                format!("jd_n{n}_N{big_n}_r{r}_mu{mu}")
            }
        }
    }
}

/// One experiment: a problem, the algorithms to compare, and the batch size.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub algorithms: Vec<Algorithm>,
    pub instances: usize,
    pub base_seed: u64,
    pub solver: SolverConfig,
    /// Directory for the table CSV and per-run traces; nothing is written
    /// when absent.
    pub out_dir: Option<PathBuf>,
    /// Force single-threaded execution (bitwise reproducibility checks).
    pub serial: bool,
    pub write_traces: bool,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemKind, algorithms: Vec<Algorithm>) -> Self {
        Self {
            problem,
            algorithms,
            instances: 50,
            base_seed: 0,
            solver: SolverConfig::default(),
            out_dir: None,
            serial: false,
            write_traces: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::InvalidConfig("instances must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        if let ProblemKind::SpcaMtx { path, .. } = &self.problem {
            if !path.exists() {
                return Err(Error::InvalidConfig(format!(
                    "matrix file {} does not exist",
                    path.display()
                )));
            }
        }
        self.solver.validate()
    }
}

/// Per-algorithm averages over the instance batch. Non-converged runs are
/// included in the averages (they are real results) and counted separately
/// in `failures`.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub algorithm: String,
    pub mean_iters: f64,
    pub mean_f: f64,
    pub mean_sparsity: f64,
    pub mean_cpu_s: f64,
    /// Mean over instances of the per-run total of line-search backtracks.
    pub mean_line_search: f64,
    /// Mean semismooth Newton iterations per outer iteration.
    pub mean_ssn: f64,
    pub failures: usize,
}

/// Materializes the data and the shared starting point of instance `seed`.
/// The data generators consume the seed itself; the starting point uses a
/// derived stream so data and X0 stay independent.
pub fn build_instance(kind: &ProblemKind, seed: u64) -> Result<(ProblemSpec, StiefelPoint)> {
    let x0_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    match kind {
        ProblemKind::Cm { n, r, mu } => {
            let problem = cm_problem(*n, *r, *mu)?;
            Ok((problem, random_stiefel(*n, *r, x0_seed)?))
        }
        ProblemKind::Spca { m_rows, n, r, mu } => {
            let a = gen_spca_random(*m_rows, *n, seed);
            let problem = spca_problem(&a, *r, *mu)?;
            Ok((problem, random_stiefel(*n, *r, x0_seed)?))
        }
        ProblemKind::SpcaMtx { path, r, mu } => {
            let a = load_matrix_market(path)?;
            let n = a.ncols();
            let problem = if n <= 2000 {
                spca_problem(&a.to_dense(), *r, *mu)?
            } else {
                spca_problem_sparse(&a, *r, *mu)?
            };
            Ok((problem, random_stiefel(n, *r, x0_seed)?))
        }
        ProblemKind::JointDiag { n, big_n, r, mu } => {
            let mats = gen_jointdiag_random(*n, *big_n, seed);
            let problem = jointdiag_problem(&mats, *r, *mu)?;
            Ok((problem, random_stiefel(*n, *r, x0_seed)?))
        }
    }
}

struct InstanceResult {
    traces: Vec<RunTrace>,
}

/// Runs the batch and aggregates. Any run aborting on a diagnostics error
/// fails the experiment with the offending seed attached.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    let results = if cfg.serial || cfg.instances == 1 {
        run_serial(cfg)?
    } else {
        run_parallel(cfg)?
    };

    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        if cfg.write_traces {
            for (i, instance) in results.iter().enumerate() {
                for trace in &instance.traces {
                    let path =
                        dir.join(format!("trace_{}_{}_{i}.csv", cfg.problem.label(), trace.algorithm));
                    emit_trace(trace, &path)?;
                }
            }
        }
    }

    let rows = aggregate(cfg, &results);
    if let Some(dir) = &cfg.out_dir {
        emit_csv(&rows, &dir.join(format!("table_{}.csv", cfg.problem.label())))?;
    }
    Ok(rows)
}

fn run_one_instance(cfg: &ExperimentConfig, index: usize) -> Result<InstanceResult> {
    let seed = cfg.base_seed + index as u64;
    let (problem, x0) = build_instance(&cfg.problem, seed)?;
    let mut traces = Vec::with_capacity(cfg.algorithms.len());
    for algo in &cfg.algorithms {
        let trace = algo.run(&problem, &x0, &cfg.solver).map_err(|e| {
            Error::Internal(format!("{algo} aborted on instance seed {seed}: {e}"))
        })?;
        traces.push(trace);
    }
    Ok(InstanceResult { traces })
}

fn run_serial(cfg: &ExperimentConfig) -> Result<Vec<InstanceResult>> {
    (0..cfg.instances).map(|i| run_one_instance(cfg, i)).collect()
}

fn run_parallel(cfg: &ExperimentConfig) -> Result<Vec<InstanceResult>> {
    let workers = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1)
        .min(cfg.instances);
    let mut slots: Vec<Option<Result<InstanceResult>>> =
        (0..cfg.instances).map(|_| None).collect();
    let next = Mutex::new(0usize);
    let slots_mutex = Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().unwrap();
                    if *guard >= cfg.instances {
                        break;
                    }
                    let i = *guard;
                    *guard += 1;
                    i
                };
                let outcome = run_one_instance(cfg, index);
                slots_mutex.lock().unwrap()[index] = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.expect("every instance index was claimed"))
        .collect()
}

fn aggregate(cfg: &ExperimentConfig, results: &[InstanceResult]) -> Vec<ReportRow> {
    let count = results.len() as f64;
    cfg.algorithms
        .iter()
        .enumerate()
        .map(|(a, algo)| {
            let runs: Vec<&RunTrace> = results.iter().map(|r| &r.traces[a]).collect();
            ReportRow {
                algorithm: algo.name().to_string(),
                mean_iters: runs.iter().map(|t| t.total_iters as f64).sum::<f64>() / count,
                mean_f: runs.iter().map(|t| t.f_final).sum::<f64>() / count,
                mean_sparsity: runs.iter().map(|t| t.sparsity).sum::<f64>() / count,
                mean_cpu_s: runs.iter().map(|t| t.cpu_seconds).sum::<f64>() / count,
                mean_line_search: runs
                    .iter()
                    .map(|t| t.total_line_search_steps() as f64)
                    .sum::<f64>()
                    / count,
                mean_ssn: runs.iter().map(|t| t.mean_ssn_iters()).sum::<f64>() / count,
                failures: runs.iter().filter(|t| !t.converged).count(),
            }
        })
        .collect()
}

/// Table CSV with header `algo,iters,F,sparsity,cpu_s,linesearch,ssn_iters`.
pub fn emit_csv(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path.as_ref())?;
    writeln!(f, "algo,iters,F,sparsity,cpu_s,linesearch,ssn_iters")?;
    for row in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            row.algorithm,
            row.mean_iters,
            row.mean_f,
            row.mean_sparsity,
            row.mean_cpu_s,
            row.mean_line_search,
            row.mean_ssn
        )?;
    }
    Ok(())
}

/// Per-iteration trace with header `k,F,normV,alpha,ls,ssn`.
pub fn emit_trace(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path.as_ref())?;
    writeln!(f, "k,F,normV,alpha,ls,ssn")?;
    for rec in &trace.records {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            rec.k, rec.f, rec.norm_v, rec.alpha, rec.line_search_steps, rec.ssn_iters
        )?;
    }
    Ok(())
}

/// Parses a table CSV back into rows (shortest-roundtrip floats, so values
/// come back exactly).
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "algo,iters,F,sparsity,cpu_s,linesearch,ssn_iters" {
                return Err(Error::Parse {
                    line: 1,
                    message: "unexpected table header".into(),
                });
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 7 fields, got {}", parts.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid number '{s}'"),
            })
        };
        rows.push(ReportRow {
            algorithm: parts[0].to_string(),
            mean_iters: num(parts[1])?,
            mean_f: num(parts[2])?,
            mean_sparsity: num(parts[3])?,
            mean_cpu_s: num(parts[4])?,
            mean_line_search: num(parts[5])?,
            mean_ssn: num(parts[6])?,
            failures: 0,
        });
    }
    Ok(rows)
}

/// Parses a trace file back into (k, F, normV, alpha, ls, ssn) tuples.
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64, f64, usize, usize)>> {
    let reader = BufReader::new(File::open(path.as_ref())?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "k,F,normV,alpha,ls,ssn" {
                return Err(Error::Parse {
                    line: 1,
                    message: "unexpected trace header".into(),
                });
            }
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 6 fields, got {}", parts.len()),
            });
        }
        let bad = |s: &str| Error::Parse {
            line: i + 1,
            message: format!("invalid number '{s}'"),
        };
        rows.push((
            parts[0].parse::<usize>().map_err(|_| bad(parts[0]))?,
            parts[1].parse::<f64>().map_err(|_| bad(parts[1]))?,
            parts[2].parse::<f64>().map_err(|_| bad(parts[2]))?,
            parts[3].parse::<f64>().map_err(|_| bad(parts[3]))?,
            parts[4].parse::<usize>().map_err(|_| bad(parts[4]))?,
            parts[5].parse::<usize>().map_err(|_| bad(parts[5]))?,
        ));
    }
    Ok(rows)
}

/// Prints rows as an aligned console table.
pub fn format_table(rows: &[ReportRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>10} {:>12} {:>9} {:>9} {:>12} {:>9} {:>9}\n",
        "algo", "iters", "F", "sparsity", "cpu_s", "linesearch", "ssn", "failures"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<10} {:>10.2} {:>12.4} {:>9.3} {:>9.4} {:>12.2} {:>9.2} {:>9}\n",
            r.algorithm,
            r.mean_iters,
            r.mean_f,
            r.mean_sparsity,
            r.mean_cpu_s,
            r.mean_line_search,
            r.mean_ssn,
            r.failures
        ));
    }
    out
}
