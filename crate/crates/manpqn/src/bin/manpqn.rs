//! Command-line interface: `solve` one instance, `bench` a batch into a
//! table, or `trace` a single run into a per-iteration file.
//!
//! All numeric flags may also come from a plain-text `key=value` config file
//! via `--config`; command-line flags win. Exit codes: 0 success, 1
//! configuration error, 2 numerical abort.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manpqn::bench::{format_table, ProblemKind};
use manpqn::{
    build_instance, emit_trace, run_experiment, Algorithm, Error, ExperimentConfig, SolverConfig,
};

#[derive(Parser)]
#[command(name = "manpqn", about = "Proximal quasi-Newton solvers on the Stiefel manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a summary.
    Solve(RunArgs),
    /// Run a batch of seeded instances and print/write the averaged table.
    Bench(RunArgs),
    /// Solve one instance and write its per-iteration trace file.
    Trace(RunArgs),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Problem kind: cm | spca | spca-mtx | jd
    #[arg(long)]
    problem: Option<String>,
    /// Ambient dimension n.
    #[arg(long)]
    n: Option<usize>,
    /// Number of columns r.
    #[arg(long)]
    r: Option<usize>,
    /// l1 weight mu.
    #[arg(long)]
    mu: Option<f64>,
    /// Data rows m for random sparse PCA.
    #[arg(long = "m-rows")]
    m_rows: Option<usize>,
    /// Number of matrices N for joint diagonalization.
    #[arg(long = "big-n")]
    big_n: Option<usize>,
    /// Matrix Market file for spca-mtx.
    #[arg(long)]
    mtx: Option<PathBuf>,
    /// Algorithm, repeatable: manpqn | manpg | manpg-ada | nls-manpg
    #[arg(long = "algo")]
    algos: Vec<String>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Stopping rule factor: stop when ||V||^2 <= tol_factor * n * r.
    #[arg(long = "tol-factor")]
    tol_factor: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Nonmonotone window m.
    #[arg(long)]
    window: Option<usize>,
    /// Quasi-Newton pair capacity p.
    #[arg(long)]
    pairs: Option<usize>,
    /// Base metric weight delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Maximum inner (semismooth Newton) iterations.
    #[arg(long = "max-inner")]
    max_inner: Option<usize>,
    /// Baseline stepsize t (default 1/L when available).
    #[arg(long = "t-init")]
    t_init: Option<f64>,
    /// Output directory for tables/traces.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Force single-threaded execution.
    #[arg(long, default_value_t = false)]
    serial: bool,
    /// Plain-text key=value configuration file (flags win).
    #[arg(long)]
    config: Option<PathBuf>,
}

fn merge_config(args: &mut RunArgs) -> Result<(), String> {
    let Some(path) = args.config.clone() else {
        return Ok(());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("config line {}: expected key=value", i + 1));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let parse = |v: &String, key: &str| -> Result<f64, String> {
        v.parse::<f64>()
            .map_err(|_| format!("config key {key}: invalid number '{v}'"))
    };
    for (key, value) in &map {
        match key.as_str() {
            "problem" => {
                args.problem.get_or_insert(value.clone());
            }
            "n" => {
                args.n.get_or_insert(parse(value, key)? as usize);
            }
            "r" => {
                args.r.get_or_insert(parse(value, key)? as usize);
            }
            "mu" => {
                args.mu.get_or_insert(parse(value, key)?);
            }
            "m-rows" | "m_rows" => {
                args.m_rows.get_or_insert(parse(value, key)? as usize);
            }
            "big-n" | "big_n" => {
                args.big_n.get_or_insert(parse(value, key)? as usize);
            }
            "mtx" => {
                args.mtx.get_or_insert(PathBuf::from(value));
            }
            "algo" => {
                if args.algos.is_empty() {
                    args.algos = value.split(',').map(|s| s.trim().to_string()).collect();
                }
            }
            "instances" => {
                args.instances.get_or_insert(parse(value, key)? as usize);
            }
            "seed" => {
                args.seed.get_or_insert(parse(value, key)? as u64);
            }
            "max-iter" | "max_iter" => {
                args.max_iter.get_or_insert(parse(value, key)? as usize);
            }
            "tol-factor" | "tol_factor" => {
                args.tol_factor.get_or_insert(parse(value, key)?);
            }
            "gamma" => {
                args.gamma.get_or_insert(parse(value, key)?);
            }
            "sigma" => {
                args.sigma.get_or_insert(parse(value, key)?);
            }
            "window" => {
                args.window.get_or_insert(parse(value, key)? as usize);
            }
            "pairs" => {
                args.pairs.get_or_insert(parse(value, key)? as usize);
            }
            "delta" => {
                args.delta.get_or_insert(parse(value, key)?);
            }
            "max-inner" | "max_inner" => {
                args.max_inner.get_or_insert(parse(value, key)? as usize);
            }
            "t-init" | "t_init" => {
                args.t_init.get_or_insert(parse(value, key)?);
            }
            "out" => {
                args.out.get_or_insert(PathBuf::from(value));
            }
            other => return Err(format!("unknown config key '{other}'")),
        }
    }
    Ok(())
}

fn problem_kind(args: &RunArgs) -> Result<ProblemKind, String> {
    let kind = args.problem.as_deref().unwrap_or("cm");
    let r = args.r.unwrap_or(4);
    let mu = args.mu.unwrap_or(0.1);
    match kind {
        "cm" => Ok(ProblemKind::Cm {
            n: args.n.unwrap_or(64),
            r,
            mu,
        }),
        "spca" => Ok(ProblemKind::Spca {
            m_rows: args.m_rows.unwrap_or(50),
            n: args.n.unwrap_or(100),
            r,
            mu,
        }),
        "spca-mtx" => {
            let path = args
                .mtx
                .clone()
                .ok_or_else(|| "spca-mtx requires --mtx <path>".to_string())?;
            Ok(ProblemKind::SpcaMtx { path, r, mu })
        }
        "jd" => Ok(ProblemKind::JointDiag {
            n: args.n.unwrap_or(50),
            big_n: args.big_n.unwrap_or(5),
            r,
            mu,
        }),
        other => Err(format!(
            "unknown problem '{other}' (expected cm, spca, spca-mtx or jd)"
        )),
    }
}

fn solver_config(args: &RunArgs) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(v) = args.max_iter {
        cfg.max_iter = v;
    }
    if let Some(v) = args.tol_factor {
        cfg.tol_factor = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.window {
        cfg.window = v;
    }
    if let Some(v) = args.pairs {
        cfg.pairs = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.max_inner {
        cfg.max_inner = v;
    }
    if args.t_init.is_some() {
        cfg.t_init = args.t_init;
    }
    cfg
}

fn algorithms(args: &RunArgs) -> Result<Vec<Algorithm>, String> {
    if args.algos.is_empty() {
        return Ok(vec![Algorithm::ManPqn]);
    }
    args.algos
        .iter()
        .map(|name| Algorithm::parse(name).map_err(|e| e.to_string()))
        .collect()
}

fn experiment(args: &RunArgs, instances: usize) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::new(problem_kind(args)?, algorithms(args)?);
    cfg.instances = args.instances.unwrap_or(instances);
    cfg.base_seed = args.seed.unwrap_or(0);
    cfg.solver = solver_config(args);
    cfg.out_dir = args.out.clone();
    cfg.serial = args.serial;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), (u8, String)> {
    let config_err = |m: String| (1u8, m);
    let numeric_err = |e: Error| (2u8, e.to_string());
    match command {
        Command::Solve(mut args) => {
            merge_config(&mut args).map_err(config_err)?;
            let mut cfg = experiment(&args, 1).map_err(config_err)?;
            cfg.instances = 1;
            cfg.serial = true;
            cfg.validate().map_err(|e| config_err(e.to_string()))?;
            let rows = run_experiment(&cfg).map_err(numeric_err)?;
            println!("problem: {}", cfg.problem.label());
            print!("{}", format_table(&rows));
            Ok(())
        }
        Command::Bench(mut args) => {
            merge_config(&mut args).map_err(config_err)?;
            let mut cfg = experiment(&args, 50).map_err(config_err)?;
            cfg.write_traces = cfg.out_dir.is_some();
            cfg.validate().map_err(|e| config_err(e.to_string()))?;
            let rows = run_experiment(&cfg).map_err(numeric_err)?;
            println!(
                "problem: {}  instances: {}  base seed: {}",
                cfg.problem.label(),
                cfg.instances,
                cfg.base_seed
            );
            print!("{}", format_table(&rows));
            if let Some(dir) = &cfg.out_dir {
                println!("wrote table and traces under {}", dir.display());
            }
            Ok(())
        }
        Command::Trace(mut args) => {
            merge_config(&mut args).map_err(config_err)?;
            let cfg = experiment(&args, 1).map_err(config_err)?;
            cfg.validate().map_err(|e| config_err(e.to_string()))?;
            let seed = cfg.base_seed;
            let (problem, x0) =
                build_instance(&cfg.problem, seed).map_err(|e| config_err(e.to_string()))?;
            let algo = cfg.algorithms[0];
            let trace = algo.run(&problem, &x0, &cfg.solver).map_err(numeric_err)?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| config_err(e.to_string()))?;
            let path = dir.join(format!("trace_{}_{}_{}.csv", cfg.problem.label(), algo, seed));
            emit_trace(&trace, &path).map_err(numeric_err)?;
            println!(
                "{}: {} iterations, F = {:.6}, sparsity = {:.3}, converged = {}",
                algo, trace.total_iters, trace.f_final, trace.sparsity, trace.converged
            );
            println!("trace written to {}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
