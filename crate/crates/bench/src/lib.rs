//! Benchmark harness: runs every selected solver from shared random starts
//! on each problem and writes CSV tables, merged fronts and scatter plots.
//!
//! Output layout under `out`:
//!
//! * `results.csv`: one row per run.
//! * `aggregates.csv`: mean iterations, mean time and purity per (problem, solver).
//! * `profiles.csv`: performance profiles over iterations and purity.
//! * `profiles_time.csv`: performance profile over wall time.
//! * `<problem>/fronts.csv`, `<problem>/front.svg`: nondominated final points.
//!
//! Everything except the wall-time columns and `profiles_time.csv` is a
//! deterministic function of the configuration.

pub mod config;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use mofista::metrics::{performance_profile, purity, Front, FrontEntry, PerformanceProfile};
use mofista::suite::{estimate_lipschitz, sample_initial_points};
use mofista::{run_solver, Problem, ProblemDescriptor, ProblemRegistry, SolverConfig, Variant};
use rayon::prelude::*;

pub use config::{BenchConfig, SolverKind};
pub use svg::{emit_svg_scatter, render_svg_scatter};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Solver(#[from] mofista::Error),
}

/// One problem with its shared starting points.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub problem: Problem,
    pub desc: ProblemDescriptor,
    pub starts: Vec<Vec<f64>>,
    /// Constant L handed to the fixed-step and plain proximal gradient runs.
    pub fixed_lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub problem: String,
    pub solver: SolverKind,
    pub run_id: usize,
    pub status: String,
    pub failed: bool,
    pub iterations: usize,
    pub backtracks_total: usize,
    pub wall_ms: f64,
    pub final_residual: Option<f64>,
    pub objectives: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub problem: String,
    pub solver: SolverKind,
    pub mean_iter: f64,
    pub mean_ms: f64,
    pub purity: f64,
}

#[derive(Debug)]
pub struct BenchReport {
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<Aggregate>,
    pub out: PathBuf,
}

impl BenchReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.failed)
    }

    pub fn aggregate(&self, problem: &str, solver: SolverKind) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.problem == problem && a.solver == solver)
    }
}

/// Seed for a problem's starting points; depends on the name, not its position in the list.
pub fn start_seed(seed: u64, problem: &str) -> u64 {
    // FNV-1a, stable across platforms and releases
    let h = problem
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3));
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Resolve names against the registry and draw the shared starts.
pub fn prepare_problems(bc: &BenchConfig) -> Result<Vec<PreparedProblem>, BenchError> {
    let mut registry = ProblemRegistry::builtin();
    for path in &bc.problem_files {
        registry
            .register_file(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    }
    let names = if bc.problems.iter().any(|p| p.eq_ignore_ascii_case("all")) {
        registry.names()
    } else {
        bc.problems.clone()
    };
    names
        .iter()
        .map(|name| {
            let (problem, desc) = registry.get(name).map_err(|e| BenchError::Config(e.to_string()))?;
            let seed = start_seed(bc.seed, &desc.name);
            let l = match desc.l_true {
                Some(l) => l,
                None => estimate_lipschitz(&problem, &desc, 2000, seed)?,
            };
            Ok(PreparedProblem {
                starts: sample_initial_points(&desc, bc.runs, seed),
                fixed_lipschitz: bc.fixed_l_factor * l,
                problem,
                desc,
            })
        })
        .collect()
}

pub fn solver_config(bc: &BenchConfig, kind: SolverKind, fixed_lipschitz: f64) -> SolverConfig {
    let variant = match kind {
        SolverKind::Backtracking => Variant::Backtracking,
        SolverKind::Fixed => Variant::FixedStep { lipschitz: fixed_lipschitz },
        SolverKind::Pgm => Variant::PlainProxGrad { lipschitz: fixed_lipschitz },
    };
    bc.solver_config().with_variant(variant)
}

fn run_one(bc: &BenchConfig, prep: &PreparedProblem, kind: SolverKind, run_id: usize) -> RunRow {
    let cfg = solver_config(bc, kind, prep.fixed_lipschitz);
    let x0 = &prep.starts[run_id];
    let clock = Instant::now();
    let outcome = run_solver(&prep.problem, x0, &cfg);
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    let mut row = RunRow {
        problem: prep.desc.name.clone(),
        solver: kind,
        run_id,
        status: String::new(),
        failed: true,
        iterations: 0,
        backtracks_total: 0,
        wall_ms,
        final_residual: None,
        objectives: vec![f64::NAN; prep.desc.m],
        x: x0.clone(),
    };
    match outcome {
        Ok(res) => {
            if let Some(msg) = &res.message {
                log::debug!("{} {} run {run_id}: {msg}", row.problem, kind.as_str());
            }
            row.status = res.status.as_str().to_string();
            row.failed = !res.status.is_success();
            row.iterations = res.iterations();
            row.backtracks_total = res.total_backtracks();
            row.final_residual = res.final_residual();
            row.objectives = res.final_objectives().to_vec();
            row.x = res.final_x;
        }
        Err(e) => {
            log::warn!("{} {} run {run_id}: {e}", row.problem, kind.as_str());
            row.status = "error".to_string();
        }
    }
    row
}

/// Run the whole protocol and write every output file.
pub fn run_benchmark(bc: &BenchConfig) -> Result<BenchReport, BenchError> {
    bc.validate()?;
    let prepared = prepare_problems(bc)?;
    let jobs: Vec<(usize, SolverKind, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(pi, _)| bc.solvers.iter().flat_map(move |&s| (0..bc.runs).map(move |r| (pi, s, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(bc.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    log::info!("{} runs over {} problems", jobs.len(), prepared.len());
    // indexed parallel collect keeps job order
    let rows: Vec<RunRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pi, s, r)| run_one(bc, &prepared[pi], s, r))
            .collect()
    });

    std::fs::create_dir_all(&bc.out)?;
    let mut aggregates = Vec::new();
    for prep in &prepared {
        let name = &prep.desc.name;
        let fronts: Vec<(SolverKind, Front)> = bc
            .solvers
            .iter()
            .map(|&s| {
                let entries = rows
                    .iter()
                    .filter(|r| &r.problem == name && r.solver == s && r.objectives.iter().all(|v| v.is_finite()))
                    .map(|r| FrontEntry { x: r.x.clone(), objectives: r.objectives.clone() })
                    .collect();
                (s, Front::from_entries(entries))
            })
            .collect();
        let all: Vec<&Front> = fronts.iter().map(|(_, f)| f).collect();
        for (s, front) in &fronts {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| &r.problem == name && r.solver == *s).collect();
            let n = mine.len() as f64;
            aggregates.push(Aggregate {
                problem: name.clone(),
                solver: *s,
                mean_iter: mine.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_ms: mine.iter().map(|r| r.wall_ms).sum::<f64>() / n,
                purity: purity(front, &all),
            });
        }
        let dir = bc.out.join(name);
        std::fs::create_dir_all(&dir)?;
        write_fronts(&dir.join("fronts.csv"), &fronts, &prep.desc)?;
        if prep.desc.m >= 2 {
            let labelled: Vec<(&str, &Front)> = fronts.iter().map(|(s, f)| (s.as_str(), f)).collect();
            let axes: Vec<usize> = (0..prep.desc.m.min(3)).collect();
            emit_svg_scatter(&labelled, &axes, &dir.join("front.svg"))?;
        }
    }

    write_results(&bc.out.join("results.csv"), &rows)?;
    write_aggregates(&bc.out.join("aggregates.csv"), &aggregates)?;
    let problems: Vec<&str> = prepared.iter().map(|p| p.desc.name.as_str()).collect();
    let table = |metric: &dyn Fn(&Aggregate) -> Option<f64>| -> PerformanceProfile {
        let costs: Vec<Vec<Option<f64>>> = bc
            .solvers
            .iter()
            .map(|&s| {
                problems
                    .iter()
                    .map(|p| {
                        let ok = rows.iter().any(|r| r.problem == *p && r.solver == s && !r.failed);
                        aggregates
                            .iter()
                            .find(|a| a.problem == *p && a.solver == s)
                            .and_then(|a| if ok { metric(a) } else { None })
                    })
                    .collect()
            })
            .collect();
        performance_profile(&costs)
    };
    let iterations = table(&|a| Some(a.mean_iter));
    let purity_profile = table(&|a| (a.purity > 0.0).then(|| 1.0 / a.purity));
    let time = table(&|a| Some(a.mean_ms));
    write_profiles(&bc.out.join("profiles.csv"), &bc.solvers, &[("iterations", &iterations), ("purity", &purity_profile)])?;
    write_profiles(&bc.out.join("profiles_time.csv"), &bc.solvers, &[("time", &time)])?;

    Ok(BenchReport { rows, aggregates, out: bc.out.clone() })
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn padded(values: &[f64], width: usize) -> impl Iterator<Item = String> + '_ {
    (0..width).map(move |i| values.get(i).map_or(String::new(), |v| fmt_f64(*v)))
}

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}_{i}"))
}

fn write_results(path: &Path, rows: &[RunRow]) -> Result<(), BenchError> {
    let m = rows.iter().map(|r| r.objectives.len()).max().unwrap_or(0);
    let n = rows.iter().map(|r| r.x.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let head = ["problem", "solver", "run_id", "status", "iterations", "backtracks_total", "wall_ms", "final_residual"];
    w.write_record(head.iter().map(|s| s.to_string()).chain(numbered("F", m)).chain(numbered("x", n)))?;
    for r in rows {
        let fixed = [
            r.problem.clone(),
            r.solver.as_str().to_string(),
            r.run_id.to_string(),
            r.status.clone(),
            r.iterations.to_string(),
            r.backtracks_total.to_string(),
            format!("{:.3}", r.wall_ms),
            r.final_residual.map_or(String::new(), fmt_f64),
        ];
        w.write_record(fixed.into_iter().chain(padded(&r.objectives, m)).chain(padded(&r.x, n)))?;
    }
    w.flush()?;
    Ok(())
}

fn write_aggregates(path: &Path, aggregates: &[Aggregate]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["problem", "solver", "mean_iter", "mean_ms", "purity"])?;
    for a in aggregates {
        w.write_record([
            a.problem.clone(),
            a.solver.as_str().to_string(),
            fmt_f64(a.mean_iter),
            format!("{:.3}", a.mean_ms),
            fmt_f64(a.purity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_fronts(path: &Path, fronts: &[(SolverKind, Front)], desc: &ProblemDescriptor) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("solver".to_string()).chain(numbered("F", desc.m)).chain(numbered("x", desc.n)))?;
    for (s, front) in fronts {
        for e in front.entries() {
            w.write_record(
                std::iter::once(s.as_str().to_string())
                    .chain(padded(&e.objectives, desc.m))
                    .chain(padded(&e.x, desc.n)),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_profiles(path: &Path, solvers: &[SolverKind], profiles: &[(&str, &PerformanceProfile)]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "solver", "tau", "rho"])?;
    for (metric, profile) in profiles {
        for (s, curve) in solvers.iter().zip(&profile.curves) {
            for (tau, rho) in curve.breakpoints() {
                w.write_record([metric.to_string(), s.as_str().to_string(), fmt_f64(tau), fmt_f64(rho)])?;
            }
            w.write_record([metric.to_string(), s.as_str().to_string(), "inf".into(), fmt_f64(curve.success_fraction())])?;
        }
    }
    w.flush()?;
    Ok(())
}
