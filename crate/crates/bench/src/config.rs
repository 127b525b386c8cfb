use std::path::PathBuf;
use std::str::FromStr;

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Backtracking,
    Fixed,
    Pgm,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Backtracking, SolverKind::Fixed, SolverKind::Pgm];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Backtracking => "backtracking",
            SolverKind::Fixed => "fixed",
            SolverKind::Pgm => "pgm",
        }
    }
}

impl FromStr for SolverKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| BenchError::Config(format!("unknown solver {s:?} (expected backtracking, fixed or pgm)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Problem names; `["all"]` selects every registered problem.
    pub problems: Vec<String>,
    pub runs: usize,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub l_init: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Constant-L baselines use this multiple of `L(f)` (or of its estimate).
    pub fixed_l_factor: f64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Extra quadratic problem-definition files to register.
    pub problem_files: Vec<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            problems: vec!["all".into()],
            runs: 200,
            seed: 0,
            solvers: vec![SolverKind::Backtracking, SolverKind::Fixed],
            l_init: 1.0,
            beta: 2.0,
            sigma: 2.0,
            eps: 1e-3,
            max_iter: 1000,
            fixed_l_factor: 10.0,
            out: PathBuf::from("bench-out"),
            jobs: 0,
            problem_files: Vec::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, BenchError> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::Config(format!("invalid value {value:?} for {key}")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl BenchConfig {
    /// Set one option by its flag name (`max-iter` and `max_iter` both work).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        match key.trim().replace('_', "-").as_str() {
            "problems" => self.problems = list(value).map(String::from).collect(),
            "runs" => self.runs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "solvers" => self.solvers = list(value).map(str::parse).collect::<Result<_, _>>()?,
            "l0" => self.l_init = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "max-iter" => self.max_iter = parse(key, value)?,
            "fixed-l-factor" => self.fixed_l_factor = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "jobs" => self.jobs = parse(key, value)?,
            "problem-file" => self.problem_files.extend(list(value).map(PathBuf::from)),
            other => return Err(BenchError::Config(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key, value)
                .map_err(|e| BenchError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: &str| Err(BenchError::Config(msg.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required");
        }
        if self.problems.is_empty() {
            return bad("at least one problem is required");
        }
        if !(self.fixed_l_factor > 0.0 && self.fixed_l_factor.is_finite()) {
            return bad("fixed-l-factor must be positive");
        }
        self.solver_config().validate().map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Base solver settings shared by all variants.
    pub fn solver_config(&self) -> mofista::SolverConfig {
        mofista::SolverConfig {
            l_init: self.l_init,
            beta: self.beta,
            sigma: self.sigma,
            max_iter: self.max_iter,
            ..Default::default()
        }
        .with_eps(self.eps)
    }
}
