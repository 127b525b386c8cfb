//! Accelerated proximal gradient solver with backtracking, plus the
//! fixed-step accelerated method and plain proximal gradient as baselines.
//!
//! Index convention: iteration `k` starts from `x_k` and `x_{k−1}` and the
//! previous momentum `t_{k−1}`, forms `(t_k, θ_k, y_k)` with [`fista_step`]
//! using `ω_{k−1} = L_k / L_{k−1}`, and accepts `x_{k+1} = p_{L_k}(x_k, y_k)`.
//! Seeds are `x_{−1} = x_0`, `t_{−1} = 0` and `L_{−1} = L_init`, so the first
//! iteration is a plain proximal step with `t_0 = 1` and `y_0 = x_0`.

use std::time::{Duration, Instant};

use crate::problem::Problem;
use crate::subproblem::{SubproblemConfig, SubproblemModel};
use crate::vecops::{dist_inf, dot, norm, norm_inf};
use crate::{Error, Result};

/// Hard cap on β-inflations within one iteration.
pub const MAX_BACKTRACKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Curvature estimate adapted by backtracking (no knowledge of `L(f)` needed).
    Backtracking,
    /// Accelerated method with a constant `L ≥ L(f)`.
    FixedStep { lipschitz: f64 },
    /// Proximal gradient without momentum, constant `L`.
    PlainProxGrad { lipschitz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub l_init: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub variant: Variant,
    pub subproblem: SubproblemConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let eps = 1e-3;
        SolverConfig {
            l_init: 1.0,
            beta: 2.0,
            sigma: 2.0,
            eps,
            max_iter: 1000,
            variant: Variant::Backtracking,
            subproblem: SubproblemConfig::coupled_to(eps),
        }
    }
}

impl SolverConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Set `eps` and re-couple the subproblem tolerance to it.
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self.subproblem.tol = SubproblemConfig::coupled_to(eps).tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.l_init) {
            return Err(Error::invalid(format!("L_init must be positive, got {}", self.l_init)));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(Error::invalid(format!("beta must exceed 1, got {}", self.beta)));
        }
        if !(self.sigma > 1.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must exceed 1, got {}", self.sigma)));
        }
        if !positive(self.eps) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        match self.variant {
            Variant::FixedStep { lipschitz } | Variant::PlainProxGrad { lipschitz } if !positive(lipschitz) => {
                return Err(Error::invalid(format!("fixed L must be positive, got {lipschitz}")));
            }
            _ => {}
        }
        self.subproblem.validate()
    }
}

/// Output of one momentum update.
#[derive(Debug, Clone, PartialEq)]
pub struct FistaStep {
    pub t: f64,
    pub theta: f64,
    pub y: Vec<f64>,
}

/// `t = (1 + √(1 + 4ω t_prev²))/2`, `θ = (t_prev − 1)/t`,
/// `y = x_prev + θ (x_prev − x_prev2)`.
pub fn fista_step(x_prev: &[f64], x_prev2: &[f64], t_prev: f64, omega: f64) -> FistaStep {
    let t = 0.5 * (1.0 + (1.0 + 4.0 * omega * t_prev * t_prev).sqrt());
    let theta = (t_prev - 1.0) / t;
    let y = x_prev
        .iter()
        .zip(x_prev2)
        .map(|(a, b)| a + theta * (a - b))
        .collect();
    FistaStep { t, theta, y }
}

/// Steps below this size relative to `1 + ‖y‖∞` compare curvature through
/// gradients instead of function values.
const TINY_STEP: f64 = 1e-7;

fn descent_holds(p: &Problem, f_y: &[f64], jac_y: &[Vec<f64>], f_z: &[f64], y: &[f64], z: &[f64], l: f64) -> Result<bool> {
    let d: Vec<f64> = z.iter().zip(y).map(|(a, b)| a - b).collect();
    let nd = dot(&d, &d);
    if norm_inf(&d) <= TINY_STEP * (1.0 + norm_inf(y)) {
        // f(z) − f(y) − ⟨∇f(y), d⟩ is pure cancellation here; ½⟨∇f(z) − ∇f(y), d⟩
        // equals it for quadratics and to third order otherwise. Gradients carry
        // rounding of order ε(‖∇f‖ + L‖x‖) whenever L ≥ L(f), which is allowed for.
        let jac_z = p.smooth_jacobian(z)?;
        let (ny, nz, nd_root) = (norm(y), norm(z), nd.sqrt());
        return Ok(jac_z.iter().zip(jac_y).all(|(gz, gy)| {
            let curvature: f64 = gz.iter().zip(gy).zip(&d).map(|((a, b), c)| (a - b) * c).sum();
            let noise = 16.0 * f64::EPSILON * (norm(gy) + norm(gz) + l * (ny + nz)) * nd_root;
            curvature <= l * nd + noise
        }));
    }
    Ok(f_z
        .iter()
        .zip(f_y)
        .zip(jac_y)
        .all(|((fz, fy), g)| *fz <= fy + dot(g, &d) + 0.5 * l * nd))
}

/// Whether every smooth part satisfies the descent-lemma bound
/// `f_i(z) ≤ f_i(y) + ⟨∇f_i(y), z − y⟩ + (L/2)‖z − y‖²`.
///
/// The nonsmooth term appears on both sides of the composite form and cancels.
/// Rounding-level steps use the gradient form of the curvature term.
pub fn sufficient_decrease_check(p: &Problem, y: &[f64], z: &[f64], lipschitz: f64) -> Result<bool> {
    let f_y = p.smooth_values(y)?;
    let jac = p.smooth_jacobian(y)?;
    let f_z = p.smooth_values(z)?;
    descent_holds(p, &f_y, &jac, &f_z, y, z, lipschitz)
}

/// Mutable state of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub y: Vec<f64>,
    pub t_curr: f64,
    pub t_prev: f64,
    pub l_curr: f64,
    pub l_prev: f64,
    /// `L_curr / L_prev`, maintained multiplicatively.
    pub omega_prev: f64,
    pub backtracks_this_iter: usize,
}

/// One accepted iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// Accepted `L_k`.
    pub lipschitz: f64,
    /// `ω_{k−1} = L_k / L_{k−1}` used for the momentum.
    pub omega: f64,
    pub backtracks: usize,
    /// `‖x_{k+1} − y_k‖_∞`.
    pub residual: f64,
    pub t: f64,
    pub theta: f64,
    pub y: Vec<f64>,
    /// Accepted point `x_{k+1}`.
    pub x_next: Vec<f64>,
    /// `F(x_{k+1})`.
    pub objectives: Vec<f64>,
    pub lambda: Vec<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    SubproblemFailure,
    BacktrackLimit,
    EvaluationFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::SubproblemFailure => "subproblem_failure",
            SolveStatus::BacktrackLimit => "backtrack_limit",
            SolveStatus::EvaluationFailure => "evaluation_failure",
        }
    }

    /// Whether the run ended without an error condition.
    pub fn is_success(&self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::MaxIter)
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of [`run_solver`], including the full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x0: Vec<f64>,
    pub objectives_x0: Vec<f64>,
    pub final_x: Vec<f64>,
    pub status: SolveStatus,
    pub records: Vec<IterationRecord>,
    /// Error detail when `status` is a failure.
    pub message: Option<String>,
    pub variant: Variant,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    pub fn final_objectives(&self) -> &[f64] {
        self.records.last().map_or(&self.objectives_x0, |r| &r.objectives)
    }

    /// `x_0, x_1, ..., x_K`.
    pub fn iterates(&self) -> Vec<&[f64]> {
        std::iter::once(self.x0.as_slice())
            .chain(self.records.iter().map(|r| r.x_next.as_slice()))
            .collect()
    }

    pub fn elapsed(&self) -> Duration {
        self.records.last().map_or(Duration::ZERO, |r| r.elapsed)
    }
}

enum Abort {
    Status(SolveStatus, String),
}

impl From<Error> for Abort {
    fn from(e: Error) -> Self {
        match e {
            Error::SubproblemNoConvergence { .. } => Abort::Status(SolveStatus::SubproblemFailure, e.to_string()),
            other => Abort::Status(SolveStatus::EvaluationFailure, other.to_string()),
        }
    }
}

struct Accepted {
    record: IterationRecord,
    l: f64,
}

struct Run<'a> {
    p: &'a Problem,
    cfg: &'a SolverConfig,
    state: SolverState,
    objectives_curr: Vec<f64>,
    warm_lambda: Option<Vec<f64>>,
    start: Instant,
}

impl Run<'_> {
    fn iterate(&mut self) -> std::result::Result<Accepted, Abort> {
        let cfg = self.cfg;
        let st = &mut self.state;
        let (mut l_trial, mut omega) = match cfg.variant {
            Variant::Backtracking => (st.l_prev / cfg.sigma, 1.0 / cfg.sigma),
            Variant::FixedStep { lipschitz } | Variant::PlainProxGrad { lipschitz } => (lipschitz, 1.0),
        };
        st.backtracks_this_iter = 0;
        loop {
            // Momentum for the current iteration from (x_k, x_{k−1}, t_{k−1});
            // recomputed after every inflation because ω changes θ_k and y_k.
            let step = match cfg.variant {
                Variant::PlainProxGrad { .. } => FistaStep { t: 1.0, theta: 0.0, y: st.x_curr.clone() },
                _ => fista_step(&st.x_curr, &st.x_prev, st.t_prev, omega),
            };
            let f_y = self.p.smooth_values(&step.y)?;
            let jac_y = self.p.smooth_jacobian(&step.y)?;
            let model = SubproblemModel::from_parts(
                &step.y,
                &f_y,
                jac_y.clone(),
                &self.objectives_curr,
                l_trial,
                self.p.nonsmooth(),
            )?;
            let sol = model.solve(&cfg.subproblem, self.warm_lambda.as_deref())?;

            if cfg.variant == Variant::Backtracking {
                let f_z = self.p.smooth_values(&sol.z_star)?;
                if !descent_holds(self.p, &f_y, &jac_y, &f_z, &step.y, &sol.z_star, l_trial)? {
                    st.backtracks_this_iter += 1;
                    if st.backtracks_this_iter > MAX_BACKTRACKS {
                        return Err(Abort::Status(
                            SolveStatus::BacktrackLimit,
                            format!("no acceptable L after {MAX_BACKTRACKS} inflations (last L = {l_trial:e})"),
                        ));
                    }
                    l_trial *= cfg.beta;
                    omega *= cfg.beta;
                    continue;
                }
            }

            let objectives = self.p.evaluate(&sol.z_star)?.0;
            st.y = step.y.clone();
            st.t_curr = step.t;
            st.l_curr = l_trial;
            st.omega_prev = omega;
            let record = IterationRecord {
                k: st.k,
                lipschitz: l_trial,
                omega,
                backtracks: st.backtracks_this_iter,
                residual: dist_inf(&sol.z_star, &step.y),
                t: step.t,
                theta: step.theta,
                y: step.y,
                x_next: sol.z_star,
                objectives,
                lambda: sol.lambda,
                elapsed: self.start.elapsed(),
            };
            return Ok(Accepted { record, l: l_trial });
        }
    }

    fn advance(&mut self, accepted: &Accepted) {
        let st = &mut self.state;
        st.x_prev = std::mem::replace(&mut st.x_curr, accepted.record.x_next.clone());
        st.t_prev = accepted.record.t;
        st.l_prev = accepted.l;
        st.k += 1;
        self.objectives_curr = accepted.record.objectives.clone();
        self.warm_lambda = Some(accepted.record.lambda.clone());
    }
}

/// Run the configured method from `x0`.
///
/// Returns `Err` only for invalid input (configuration or the starting point).
/// Failures during the iteration are reported through [`SolveResult::status`].
pub fn run_solver(p: &Problem, x0: &[f64], cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let objectives_x0 = p.evaluate(x0)?.0;
    let mut run = Run {
        p,
        cfg,
        state: SolverState {
            k: 0,
            x_curr: x0.to_vec(),
            x_prev: x0.to_vec(),
            y: x0.to_vec(),
            t_curr: 1.0,
            t_prev: 0.0,
            l_curr: cfg.l_init,
            l_prev: cfg.l_init,
            omega_prev: 1.0,
            backtracks_this_iter: 0,
        },
        objectives_curr: objectives_x0.clone(),
        warm_lambda: None,
        start: Instant::now(),
    };
    let mut records = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut message = None;
    while records.len() < cfg.max_iter {
        match run.iterate() {
            Ok(accepted) => {
                run.advance(&accepted);
                let done = accepted.record.residual < cfg.eps;
                records.push(accepted.record);
                if done {
                    status = SolveStatus::Converged;
                    break;
                }
            }
            Err(Abort::Status(s, msg)) => {
                status = s;
                message = Some(msg);
                break;
            }
        }
    }
    Ok(SolveResult {
        x0: x0.to_vec(),
        objectives_x0,
        final_x: run.state.x_curr,
        status,
        records,
        message,
        variant: cfg.variant,
    })
}

/// Every accepted `L_k ≤ max(β·L_true, L_init)`; vacuous for constant-L variants.
pub fn accepted_l_bound_check(trace: &SolveResult, l_true: f64, cfg: &SolverConfig) -> bool {
    if trace.variant != Variant::Backtracking {
        return true;
    }
    let cap = (cfg.beta * l_true).max(cfg.l_init);
    trace.records.iter().all(|r| r.lipschitz <= cap)
}
