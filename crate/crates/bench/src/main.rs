use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mofista_bench::{run_benchmark, BenchConfig, BenchError};

/// Run multiobjective solvers on the built-in test problems.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Comma-separated problem names, or "all".
    #[arg(long)]
    problems: Option<String>,
    /// Runs per (problem, solver), sharing starting points across solvers.
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated subset of backtracking, fixed, pgm.
    #[arg(long)]
    solvers: Option<String>,
    /// Initial curvature estimate for backtracking.
    #[arg(long)]
    l0: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// Constant-L baselines use this multiple of L(f).
    #[arg(long = "fixed-l-factor")]
    fixed_l_factor: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<String>,
    /// Quadratic problem-definition file (TOML); repeatable.
    #[arg(long = "problem-file")]
    problem_file: Vec<PathBuf>,
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<BenchConfig, BenchError> {
    let mut bc = BenchConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        bc.apply_config_text(&text)?;
    }
    let flags = [
        ("problems", &cli.problems),
        ("runs", &cli.runs),
        ("seed", &cli.seed),
        ("solvers", &cli.solvers),
        ("l0", &cli.l0),
        ("beta", &cli.beta),
        ("sigma", &cli.sigma),
        ("eps", &cli.eps),
        ("max-iter", &cli.max_iter),
        ("fixed-l-factor", &cli.fixed_l_factor),
        ("jobs", &cli.jobs),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            bc.set(key, v)?;
        }
    }
    if let Some(out) = &cli.out {
        bc.out = out.clone();
    }
    bc.problem_files.extend(cli.problem_file.iter().cloned());
    bc.validate()?;
    Ok(bc)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|bc| run_benchmark(&bc));
    match outcome {
        Ok(report) => {
            for a in &report.aggregates {
                println!(
                    "{:<10} {:<13} mean_iter {:>9.1}  mean_ms {:>9.3}  purity {:.3}",
                    a.problem,
                    a.solver.as_str(),
                    a.mean_iter,
                    a.mean_ms,
                    a.purity
                );
            }
            let failed = report.rows.iter().filter(|r| r.failed).count();
            if failed > 0 {
                eprintln!("{failed} of {} runs failed; see results.csv", report.rows.len());
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ BenchError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
