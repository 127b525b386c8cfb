//! Replays of the convergence relations on recorded traces.
//!
//! The auxiliary sequences for a reference point `z` are
//!
//! ```text
//! σ_k(z) = min_i [F_i(x_k) − F_i(z)]
//! ρ_k(z) = t_{k−1} x_k − (t_{k−1} − 1) x_{k−1} − z
//! E_k(z) = 2 t_{k−1}² σ_k(z) / L_{k−1} + ‖ρ_k(z)‖²
//! ```
//!
//! and the checks below assert the one-step inequalities, the monotonicity of
//! `E_k`, the `O(1/k²)` bound and the momentum identities numerically. Each
//! check returns `false` rather than erroring when a relation fails, so the
//! callers can report which one broke.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::Problem;
use crate::solver::{SolveResult, SolverConfig};
use crate::vecops::{all_finite, dist_sq, dot, norm_sq};
use crate::{Error, Result};

/// Absolute slack for the per-step inequalities.
pub const STEP_SLACK: f64 = 1e-8;
/// Relative slack for energy monotonicity.
pub const ENERGY_SLACK: f64 = 1e-6;

/// Candidate points `z` with their squared distances `R_z = ‖x0 − z‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    points: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

impl ReferenceSet {
    pub fn new(points: Vec<Vec<f64>>, x0: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("reference set must be nonempty"));
        }
        if points.iter().any(|z| z.len() != x0.len() || !all_finite(z)) {
            return Err(Error::invalid("reference points must be finite and match the dimension of x0"));
        }
        let radii = points.iter().map(|z| dist_sq(x0, z)).collect();
        Ok(ReferenceSet { points, radii })
    }

    /// Regular grid over a box with `steps + 1` points per axis (`n ≤ 2`).
    pub fn grid(lower: &[f64], upper: &[f64], steps: usize, x0: &[f64]) -> Result<Self> {
        let n = lower.len();
        if n == 0 || n > 2 || upper.len() != n || steps == 0 {
            return Err(Error::invalid("grid reference sets need n ≤ 2 and a positive step count"));
        }
        let axis = |j: usize| -> Vec<f64> {
            (0..=steps)
                .map(|i| lower[j] + (upper[j] - lower[j]) * i as f64 / steps as f64)
                .collect()
        };
        let points = if n == 1 {
            axis(0).into_iter().map(|a| vec![a]).collect()
        } else {
            let (a0, a1) = (axis(0), axis(1));
            a0.iter().flat_map(|&u| a1.iter().map(move |&v| vec![u, v])).collect()
        };
        Self::new(points, x0)
    }

    /// Uniform samples from the box restricted to the level set `F(z) ≤ F(x0)`.
    pub fn level_set_samples(
        p: &Problem,
        lower: &[f64],
        upper: &[f64],
        x0: &[f64],
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        let level = p.evaluate(x0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = vec![x0.to_vec()];
        let mut attempts = 0;
        while points.len() < count + 1 && attempts < 100 * count {
            attempts += 1;
            let z: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect();
            if let Ok(fz) = p.evaluate(&z) {
                if fz.0.iter().zip(&level.0).all(|(a, b)| a <= b) {
                    points.push(z);
                }
            }
        }
        Self::new(points, x0)
    }

    /// Append points, recomputing radii from `x0`.
    pub fn extend(&mut self, extra: Vec<Vec<f64>>, x0: &[f64]) -> Result<()> {
        let more = ReferenceSet::new(extra, x0)?;
        self.points.extend(more.points);
        self.radii.extend(more.radii);
        Ok(())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSample {
    pub k: usize,
    pub sigma_k: f64,
    pub rho_k: Vec<f64>,
    pub energy: f64,
}

/// `min_i [F_i(x_k) − F_i(z)]`.
pub fn sigma_k(objectives_xk: &[f64], objectives_z: &[f64]) -> f64 {
    objectives_xk
        .iter()
        .zip(objectives_z)
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min)
}

/// `t_prev·x_k − (t_prev − 1)·x_prev − z`.
pub fn rho_k(x_k: &[f64], x_prev: &[f64], t_prev: f64, z: &[f64]) -> Vec<f64> {
    x_k.iter()
        .zip(x_prev)
        .zip(z)
        .map(|((a, b), c)| t_prev * a - (t_prev - 1.0) * b - c)
        .collect()
}

fn objectives_at(trace: &SolveResult, k: usize) -> &[f64] {
    if k == 0 {
        &trace.objectives_x0
    } else {
        &trace.records[k - 1].objectives
    }
}

/// `E_k(z)` for `k = 1..=K`.
pub fn lyapunov_samples(trace: &SolveResult, p: &Problem, z: &[f64]) -> Result<Vec<LyapunovSample>> {
    let fz = p.evaluate(z)?.0;
    let xs = trace.iterates();
    Ok((1..xs.len())
        .map(|k| {
            let prev = &trace.records[k - 1];
            let sigma = sigma_k(objectives_at(trace, k), &fz);
            let rho = rho_k(xs[k], xs[k - 1], prev.t, z);
            let energy = 2.0 * prev.t * prev.t * sigma / prev.lipschitz + norm_sq(&rho);
            LyapunovSample { k, sigma_k: sigma, rho_k: rho, energy }
        })
        .collect())
}

/// The two one-step inequalities for every recorded step `x_k → x_{k+1}`:
///
/// ```text
/// σ_k − σ_{k+1} ≥ −(L_k/2)[2⟨y_k − x_{k+1}, y_k − x_k⟩ + ‖x_{k+1} − y_k‖²]
/// σ_{k+1}       ≤  (L_k/2)[2⟨y_k − x_{k+1}, y_k − z⟩ − ‖x_{k+1} − y_k‖²]
/// ```
pub fn one_step_bound_check(trace: &SolveResult, p: &Problem, z: &[f64]) -> Result<bool> {
    let fz = p.evaluate(z)?.0;
    let xs = trace.iterates();
    for (k, r) in trace.records.iter().enumerate() {
        let (x_k, x_next, y) = (xs[k], xs[k + 1], r.y.as_slice());
        let step: Vec<f64> = y.iter().zip(x_next).map(|(a, b)| a - b).collect();
        let from_x: Vec<f64> = y.iter().zip(x_k).map(|(a, b)| a - b).collect();
        let from_z: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
        let step_sq = norm_sq(&step);
        let s_k = sigma_k(objectives_at(trace, k), &fz);
        let s_next = sigma_k(objectives_at(trace, k + 1), &fz);
        let half_l = 0.5 * r.lipschitz;
        let decrease = s_k - s_next >= -half_l * (2.0 * dot(&step, &from_x) + step_sq) - STEP_SLACK;
        let upper = s_next <= half_l * (2.0 * dot(&step, &from_z) - step_sq) + STEP_SLACK;
        if !(decrease && upper) {
            log::debug!("one-step inequality fails at k={k} (decrease {decrease}, upper {upper})");
            return Ok(false);
        }
    }
    Ok(true)
}

/// `E_{k+1} ≤ E_k + 1e-6·(1 + |E_k|)` for every `k ≥ 1`.
pub fn lyapunov_monotone_check(trace: &SolveResult, p: &Problem, z: &[f64]) -> Result<bool> {
    let samples = lyapunov_samples(trace, p, z)?;
    Ok(samples
        .windows(2)
        .all(|w| w[1].energy <= w[0].energy + ENERGY_SLACK * (1.0 + w[0].energy.abs())))
}

/// `E_1(z) ≤ ‖x0 − z‖² + 1e-8`.
pub fn first_energy_check(trace: &SolveResult, p: &Problem, z: &[f64]) -> Result<bool> {
    let samples = lyapunov_samples(trace, p, z)?;
    Ok(samples
        .first()
        .map_or(true, |s| s.energy <= dist_sq(&trace.x0, z) + STEP_SLACK))
}

/// `max_{z ∈ Z} min_i [F_i(x) − F_i(z)]`, a lower bound on the merit `u₀(x)`.
pub fn merit_u0_lower_bound(p: &Problem, x: &[f64], reference: &ReferenceSet) -> Result<f64> {
    let fx = p.evaluate(x)?.0;
    let mut best = f64::NEG_INFINITY;
    for z in reference.points() {
        best = best.max(sigma_k(&fx, &p.evaluate(z)?.0));
    }
    Ok(best)
}

/// Per-reference-point form of the `O(1/k²)` bound:
/// `min_i [F_i(x_k) − F_i(z)] ≤ 4βL(f)‖x0 − z‖²/(k + 1)² + 1e-8` for all
/// produced iterates `k ≥ 1` and all `z ∈ Z`.
pub fn rate_bound_check(trace: &SolveResult, p: &Problem, cfg: &SolverConfig, reference: &ReferenceSet) -> Result<bool> {
    let l_true = p
        .lipschitz()
        .ok_or_else(|| Error::invalid("rate bound needs a problem with known L(f)"))?;
    let scale = 4.0 * cfg.beta * l_true;
    for (z, radius) in reference.points().iter().zip(reference.radii()) {
        let fz = p.evaluate(z)?.0;
        for k in 1..=trace.records.len() {
            let bound = scale * radius / ((k + 1) as f64).powi(2) + STEP_SLACK;
            if sigma_k(objectives_at(trace, k), &fz) > bound {
                log::debug!("rate bound fails at k={k} for z={z:?}");
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `F_i(x_k) ≤ F_i(x_0) + 1e-8` for every component and iterate.
pub fn monotone_cap_check(trace: &SolveResult) -> bool {
    trace.records.iter().all(|r| {
        r.objectives
            .iter()
            .zip(&trace.objectives_x0)
            .all(|(a, b)| *a <= b + STEP_SLACK)
    })
}

/// `t_k(t_k − 1)/L_k = t_{k−1}²/L_{k−1}` to relative error `1e-10`.
pub fn t_identity_check(trace: &SolveResult) -> bool {
    trace.records.windows(2).all(|w| {
        let rhs = w[0].t * w[0].t / w[0].lipschitz;
        let lhs = w[1].t * (w[1].t - 1.0) / w[1].lipschitz;
        (lhs - rhs).abs() <= 1e-10 * (1.0 + rhs)
    })
}

/// `½ + √ω·t_{k−1} ≤ t_k ≤ (1 + √ω)·t_{k−1}` with `ω = L_k/L_{k−1}`.
pub fn t_bounds_check(trace: &SolveResult) -> bool {
    trace.records.windows(2).all(|w| {
        let root = w[1].omega.sqrt();
        let (prev, t) = (w[0].t, w[1].t);
        0.5 + root * prev <= t + 1e-10 && t <= (1.0 + root) * prev + 1e-10
    })
}

/// `θ_k² ≤ L_{k−1}/L_k` for `k ≥ 1`.
pub fn theta_ratio_check(trace: &SolveResult) -> bool {
    trace.records.windows(2).all(|w| w[1].theta * w[1].theta <= w[0].lipschitz / w[1].lipschitz * (1.0 + 1e-12))
}

/// `t_k²/L_k ≥ k²/(4βL(f)) − 1e-8` for all accepted `k`.
pub fn t_growth_check(trace: &SolveResult, l_true: f64, beta: f64) -> bool {
    trace
        .records
        .iter()
        .all(|r| r.t * r.t / r.lipschitz >= (r.k * r.k) as f64 / (4.0 * beta * l_true) - STEP_SLACK)
}
