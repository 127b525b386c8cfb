//! The proximal min-max subproblem
//!
//! ```text
//! φ(z; x, y) = max_i [⟨∇f_i(y), z − y⟩ + g(z) + f_i(y) − F_i(x)] + (L/2)‖z − y‖²
//! ```
//!
//! is strongly convex in `z`; its minimizer is `p_L(x, y)` and its value is
//! `θ_L(x, y)`. It is solved through the concave dual over the simplex
//!
//! ```text
//! D(λ) = min_z Σ λ_i h_i(z) + g(z) + (L/2)‖z − y‖²,   h_i(z) = ⟨∇f_i(y), z − y⟩ + f_i(y) − F_i(x)
//! ```
//!
//! whose inner minimizer is the prox-gradient point `prox_{g/L}(y − Σ λ_i ∇f_i(y) / L)`.
//! Every returned solution carries its duality gap `φ(z*) − D(λ)`, which
//! certifies both optimality of `z*` and complementarity of `λ`.

use nalgebra::{DMatrix, DVector};

use crate::problem::{Nonsmooth, Problem};
use crate::vecops::{dist_inf, dist_sq, dot, norm, project_simplex};
use crate::{Error, Result};

/// Tolerances for the dual solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemConfig {
    /// Relative duality-gap tolerance: accept when `gap ≤ tol·(1 + |θ|)`.
    pub tol: f64,
    pub max_inner_iter: usize,
}

impl Default for SubproblemConfig {
    fn default() -> Self {
        SubproblemConfig { tol: 1e-10, max_inner_iter: 10_000 }
    }
}

impl SubproblemConfig {
    /// Tolerance tied to an outer stopping tolerance `eps`: `min(1e-10, (eps/100)²)`.
    pub fn coupled_to(eps: f64) -> Self {
        SubproblemConfig { tol: 1e-10_f64.min((eps / 100.0).powi(2)), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("subproblem tol must be positive, got {}", self.tol)));
        }
        if self.max_inner_iter == 0 {
            return Err(Error::invalid("subproblem max_inner_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    /// `p_L(x, y)`.
    pub z_star: Vec<f64>,
    /// `θ_L(x, y) = φ(z_star)`.
    pub theta: f64,
    /// Simplex multipliers `λ(x, y)`.
    pub lambda: Vec<f64>,
    /// Zero-based indices attaining the max in `φ(z_star)`.
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    pub dual_gap: f64,
}

/// The subproblem at a fixed `(x, y, L)`, with `f(y)`, `∇f(y)` and `F(x)` evaluated once.
#[derive(Debug, Clone)]
pub struct SubproblemModel<'a> {
    y: Vec<f64>,
    grads: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    lipschitz: f64,
    nonsmooth: &'a Nonsmooth,
}

fn check_lipschitz(l: f64) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::invalid(format!("proximal parameter L must be positive, got {l}")));
    }
    Ok(())
}

fn check_simplex(lambda: &[f64], m: usize) -> Result<()> {
    if lambda.len() != m {
        return Err(Error::invalid(format!("lambda has length {}, expected {m}", lambda.len())));
    }
    let sum: f64 = lambda.iter().sum();
    if lambda.iter().any(|&l| l < -1e-12 || !l.is_finite()) || (sum - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("lambda must lie on the probability simplex"));
    }
    Ok(())
}

impl<'a> SubproblemModel<'a> {
    pub fn new(p: &'a Problem, x: &[f64], y: &[f64], lipschitz: f64) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        let f_x = p.evaluate(x)?;
        let f_y = p.smooth_values(y)?;
        let jac_y = p.smooth_jacobian(y)?;
        Self::from_parts(y, &f_y, jac_y, &f_x.0, lipschitz, p.nonsmooth())
    }

    /// Build from `f(y)`, `∇f(y)` rows and `F(x)` the caller already holds.
    pub fn from_parts(
        y: &[f64],
        f_y: &[f64],
        jac_y: Vec<Vec<f64>>,
        objectives_x: &[f64],
        lipschitz: f64,
        nonsmooth: &'a Nonsmooth,
    ) -> Result<Self> {
        check_lipschitz(lipschitz)?;
        if f_y.len() != jac_y.len() || f_y.len() != objectives_x.len() || f_y.is_empty() {
            return Err(Error::invalid("inconsistent objective counts in subproblem data"));
        }
        if jac_y.iter().any(|row| row.len() != y.len()) {
            return Err(Error::invalid("gradient dimension does not match y"));
        }
        let offsets = f_y.iter().zip(objectives_x).map(|(fy, fx)| fy - fx).collect();
        Ok(SubproblemModel { y: y.to_vec(), grads: jac_y, offsets, lipschitz, nonsmooth })
    }

    pub fn m(&self) -> usize {
        self.grads.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `h_i(z) = ⟨∇f_i(y), z − y⟩ + f_i(y) − F_i(x)`.
    fn inner_terms(&self, z: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = z.iter().zip(&self.y).map(|(a, b)| a - b).collect();
        self.grads.iter().zip(&self.offsets).map(|(g, a)| a + dot(g, &d)).collect()
    }

    fn proximal_tail(&self, z: &[f64]) -> f64 {
        self.nonsmooth.value(z) + 0.5 * self.lipschitz * dist_sq(z, &self.y)
    }

    /// `φ(z; x, y)`.
    pub fn phi(&self, z: &[f64]) -> f64 {
        let max = self.inner_terms(z).into_iter().fold(f64::NEG_INFINITY, f64::max);
        max + self.proximal_tail(z)
    }

    fn gradient_mix(&self, lambda: &[f64]) -> Vec<f64> {
        let mut mix = vec![0.0; self.y.len()];
        for (l, g) in lambda.iter().zip(&self.grads) {
            for (acc, gj) in mix.iter_mut().zip(g) {
                *acc += l * gj;
            }
        }
        mix
    }

    /// Minimizer in `z` of the λ-weighted Lagrangian.
    pub fn primal_step(&self, lambda: &[f64]) -> Vec<f64> {
        let mix = self.gradient_mix(lambda);
        let v: Vec<f64> = self.y.iter().zip(&mix).map(|(y, g)| y - g / self.lipschitz).collect();
        self.nonsmooth.prox_unchecked(1.0 / self.lipschitz, &v)
    }

    /// Dual value `D(λ)` together with the primal point `z(λ)`.
    fn dual_at(&self, lambda: &[f64]) -> (f64, Vec<f64>) {
        let z = self.primal_step(lambda);
        let weighted = dot(lambda, &self.inner_terms(&z));
        (weighted + self.proximal_tail(&z), z)
    }

    pub fn dual(&self, lambda: &[f64]) -> Result<f64> {
        check_simplex(lambda, self.m())?;
        Ok(self.dual_at(lambda).0)
    }

    /// Stationarity residual `‖Σ λ_i ∇f_i(y) + L(z − y) + s‖` with `s ∈ ∂g(z)`
    /// chosen closest to balancing the other two terms.
    pub fn kkt_residual(&self, z: &[f64], lambda: &[f64]) -> f64 {
        let mix = self.gradient_mix(lambda);
        let r: Vec<f64> = mix
            .iter()
            .zip(z.iter().zip(&self.y))
            .map(|(g, (zj, yj))| -(g + self.lipschitz * (zj - yj)))
            .collect();
        match self.nonsmooth {
            Nonsmooth::Zero => norm(&r),
            Nonsmooth::WeightedL1(w) => r
                .iter()
                .zip(z)
                .map(|(&rj, &zj)| {
                    let e = if zj > 0.0 {
                        rj - w
                    } else if zj < 0.0 {
                        rj + w
                    } else {
                        (rj.abs() - w).max(0.0)
                    };
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            Nonsmooth::Custom(_) => {
                // s = L(v − prox(v)) is a subgradient at prox(v), v = y − Σλ∇f/L
                self.lipschitz * dist_sq(&self.primal_step(lambda), z).sqrt()
            }
        }
    }

    fn gap_of(&self, lambda: &[f64]) -> (f64, Vec<f64>) {
        let z = self.primal_step(lambda);
        let terms = self.inner_terms(&z);
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let theta = max + self.proximal_tail(&z);
        // measured against the same threshold as `certify`
        let gap = (max - dot(lambda, &terms) - self.rounding_floor(&z)).max(0.0);
        (gap / (1.0 + theta.abs()), z)
    }

    /// Solve the subproblem. `warm` seeds the multipliers when `m ≥ 3`.
    pub fn solve(&self, cfg: &SubproblemConfig, warm: Option<&[f64]>) -> Result<SubproblemSolution> {
        cfg.validate()?;
        let lambda = match self.m() {
            1 => vec![1.0],
            2 => self.bisect_pair(),
            _ => self.ascend(cfg, warm),
        };
        self.certify(lambda, cfg)
    }

    fn certify(&self, lambda: Vec<f64>, cfg: &SubproblemConfig) -> Result<SubproblemSolution> {
        let z = self.primal_step(&lambda);
        let terms = self.inner_terms(&z);
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let theta = max + self.proximal_tail(&z);
        let dual_gap = (max - dot(&lambda, &terms)).max(0.0);
        if !theta.is_finite() || dual_gap > cfg.tol * (1.0 + theta.abs()) + self.rounding_floor(&z) {
            return Err(Error::SubproblemNoConvergence { z, gap: dual_gap });
        }
        let cut = max - 1e-8 * (1.0 + max.abs());
        let active_set = terms.iter().enumerate().filter(|(_, &h)| h >= cut).map(|(i, _)| i).collect();
        let kkt_residual = self.kkt_residual(&z, &lambda);
        Ok(SubproblemSolution { z_star: z, theta, lambda, active_set, kkt_residual, dual_gap })
    }

    /// Gap attainable in double precision: rounding in the offsets, in
    /// `⟨∇f_i(y), z − y⟩`, and the ulp-level resolution of `λ`, whose effect on
    /// `h(z(λ))` scales with `‖∇f_i(y)‖²/L`.
    fn rounding_floor(&self, z: &[f64]) -> f64 {
        let offsets = self.offsets.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let grad = self.grads.iter().fold(0.0_f64, |a, g| a.max(norm(g)));
        let step = dist_sq(z, &self.y).sqrt();
        64.0 * f64::EPSILON * (offsets + grad * (step + grad / self.lipschitz))
    }

    /// Two objectives: `D(s, 1 − s)` is concave with derivative
    /// `h_1(z(s)) − h_2(z(s))`, so bisect on the sign of that difference.
    fn bisect_pair(&self) -> Vec<f64> {
        let slope = |s: f64| {
            let h = self.inner_terms(&self.primal_step(&[s, 1.0 - s]));
            h[0] - h[1]
        };
        let at_zero = slope(0.0);
        if at_zero <= 0.0 {
            return vec![0.0, 1.0];
        }
        let at_one = slope(1.0);
        if at_one >= 0.0 {
            return vec![1.0, 0.0];
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let (mut slope_lo, mut slope_hi) = (at_zero, at_one);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let d = slope(mid);
            if d == 0.0 {
                return vec![mid, 1.0 - mid];
            } else if d > 0.0 {
                lo = mid;
                slope_lo = d;
            } else {
                hi = mid;
                slope_hi = d;
            }
        }
        let secant = (lo + slope_lo / (slope_lo - slope_hi) * (hi - lo)).clamp(lo, hi);
        [lo, hi, secant]
            .into_iter()
            .map(|s| vec![s, 1.0 - s])
            .min_by(|a, b| self.gap_of(a).0.total_cmp(&self.gap_of(b).0))
            .expect("three candidates")
    }

    /// Three or more objectives: accelerated projected gradient ascent on the
    /// dual, with active-set polishing for `g ∈ {0, w‖·‖₁}`.
    fn ascend(&self, cfg: &SubproblemConfig, warm: Option<&[f64]>) -> Vec<f64> {
        let m = self.m();
        let mut lambda = match warm {
            Some(w) if w.len() == m && w.iter().all(|v| v.is_finite()) => project_simplex(w),
            _ => vec![1.0 / m as f64; m],
        };
        let mut best = (self.gap_of(&lambda).0, lambda.clone());
        if best.0 <= cfg.tol {
            return best.1;
        }
        if let Some((gap, l)) = self.polish(&self.primal_step(&lambda), cfg.tol) {
            if gap < best.0 {
                best = (gap, l);
            }
            if best.0 <= cfg.tol {
                return best.1;
            }
        }

        // ∇D is Lipschitz with constant ‖G‖²/L since prox is nonexpansive.
        let bound = self.grads.iter().map(|g| dot(g, g)).sum::<f64>() / self.lipschitz;
        if bound == 0.0 {
            let terms = self.inner_terms(&self.primal_step(&lambda));
            let top = (0..m).max_by(|&a, &b| terms[a].total_cmp(&terms[b])).unwrap_or(0);
            let mut e = vec![0.0; m];
            e[top] = 1.0;
            return e;
        }
        let mut estimate = bound / 64.0;
        let mut extrapolated = lambda.clone();
        let mut t = 1.0_f64;
        for iter in 1..=cfg.max_inner_iter {
            let (d_ext, z_ext) = self.dual_at(&extrapolated);
            let grad = self.inner_terms(&z_ext);
            let next = loop {
                let step: Vec<f64> =
                    extrapolated.iter().zip(&grad).map(|(l, g)| l + g / estimate).collect();
                let candidate = project_simplex(&step);
                let diff: Vec<f64> = candidate.iter().zip(&extrapolated).map(|(a, b)| a - b).collect();
                let model = d_ext + dot(&grad, &diff) - 0.5 * estimate * dot(&diff, &diff);
                let (d_new, _) = self.dual_at(&candidate);
                if d_new >= model - 1e-15 * (1.0 + d_ext.abs()) || estimate >= bound {
                    break candidate;
                }
                estimate = (2.0 * estimate).min(bound);
            };
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_next;
            extrapolated = next
                .iter()
                .zip(&lambda)
                .map(|(a, b)| a + momentum * (a - b))
                .collect();
            extrapolated = project_simplex(&extrapolated);
            lambda = next;
            t = t_next;

            if iter % 25 == 0 || iter == cfg.max_inner_iter {
                let (gap, z) = self.gap_of(&lambda);
                if gap < best.0 {
                    best = (gap, lambda.clone());
                }
                if best.0 > cfg.tol {
                    if let Some((pg, pl)) = self.polish(&z, cfg.tol) {
                        if pg < best.0 {
                            best = (pg, pl);
                        }
                    }
                }
                if best.0 <= cfg.tol {
                    break;
                }
            }
        }
        best.1
    }

    /// Guess the optimal support of `λ` and the zero pattern of `z`, then solve
    /// the resulting equality-constrained system exactly. Returns the best
    /// multipliers found with their relative gap.
    ///
    /// The pattern is first read off `hint` and refined; if that does not reach
    /// `tol` and the instance is small, every sign pattern is tried. Some
    /// pattern and support are always consistent with the optimum, so the
    /// exhaustive pass is exact.
    fn polish(&self, hint: &[f64], tol: f64) -> Option<(f64, Vec<f64>)> {
        let weight = match self.nonsmooth {
            Nonsmooth::Zero => 0.0,
            Nonsmooth::WeightedL1(w) => *w,
            Nonsmooth::Custom(_) => return None,
        };
        let m = self.m();
        if m > 6 {
            return None;
        }
        let keep = |best: &mut Option<(f64, Vec<f64>)>, cand: (f64, Vec<f64>)| {
            if best.as_ref().map_or(true, |(g, _)| cand.0 < *g) {
                *best = Some(cand);
            }
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut pattern_source = hint.to_vec();
        for _ in 0..3 {
            // sign per coordinate; None = pinned at zero by the l1 kink
            let signs: Vec<Option<f64>> = pattern_source
                .iter()
                .map(|&z| if weight > 0.0 && z == 0.0 { None } else { Some(if weight > 0.0 { z.signum() } else { 0.0 }) })
                .collect();
            let Some(round) = self.best_support(&signs, weight) else { break };
            if best.as_ref().map_or(false, |(g, _)| round.0 >= *g) {
                break;
            }
            pattern_source = self.primal_step(&round.1);
            best = Some(round);
        }
        let n = self.y.len();
        let patterns = 3usize.checked_pow(n as u32).unwrap_or(usize::MAX);
        let settled = best.as_ref().map_or(false, |(g, _)| *g <= tol);
        if weight > 0.0 && !settled && patterns.saturating_mul((1 << m) - 1) <= 4096 {
            for code in 0..patterns {
                let mut rest = code;
                let signs: Vec<Option<f64>> = (0..n)
                    .map(|_| {
                        let digit = rest % 3;
                        rest /= 3;
                        [None, Some(1.0), Some(-1.0)][digit]
                    })
                    .collect();
                if let Some(cand) = self.best_support(&signs, weight) {
                    keep(&mut best, cand);
                }
                if best.as_ref().map_or(false, |(g, _)| *g <= tol) {
                    break;
                }
            }
        }
        best
    }

    /// Best multipliers over all supports for one sign pattern.
    fn best_support(&self, signs: &[Option<f64>], weight: f64) -> Option<(f64, Vec<f64>)> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << self.m()) {
            let support: Vec<usize> = (0..self.m()).filter(|i| mask & (1 << i) != 0).collect();
            let Some(lambda) = self.solve_support(&support, signs, weight) else { continue };
            let (gap, _) = self.gap_of(&lambda);
            if best.as_ref().map_or(true, |(g, _)| gap < *g) {
                best = Some((gap, lambda));
            }
        }
        best
    }

    fn solve_support(&self, support: &[usize], signs: &[Option<f64>], weight: f64) -> Option<Vec<f64>> {
        let s = support.len();
        let l = self.lipschitz;
        let mut a = DMatrix::<f64>::zeros(s + 1, s + 1);
        let mut rhs = DVector::<f64>::zeros(s + 1);
        for (r, &i) in support.iter().enumerate() {
            let gi = &self.grads[i];
            for (c, &k) in support.iter().enumerate() {
                let gk = &self.grads[k];
                let coupling: f64 = signs
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.is_some())
                    .map(|(j, _)| gi[j] * gk[j])
                    .sum();
                a[(r, c)] = -coupling / l;
            }
            a[(r, s)] = -1.0;
            let mut b = -self.offsets[i];
            for (j, sign) in signs.iter().enumerate() {
                match sign {
                    Some(sj) => b += gi[j] * weight * sj / l,
                    None => b += gi[j] * self.y[j],
                }
            }
            rhs[r] = b;
        }
        for c in 0..s {
            a[(s, c)] = 1.0;
        }
        rhs[s] = 1.0;
        let sol = a.lu().solve(&rhs)?;
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut lambda = vec![0.0; self.m()];
        for (r, &i) in support.iter().enumerate() {
            if sol[r] < -1e-12 {
                return None;
            }
            lambda[i] = sol[r].max(0.0);
        }
        let total: f64 = lambda.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        lambda.iter_mut().for_each(|v| *v /= total);
        Some(lambda)
    }
}

/// `φ(z; x, y)` at proximal parameter `L`.
pub fn phi_value(z: &[f64], x: &[f64], y: &[f64], lipschitz: f64, p: &Problem) -> Result<f64> {
    if z.len() != p.n() {
        return Err(Error::invalid("z has the wrong dimension"));
    }
    Ok(SubproblemModel::new(p, x, y, lipschitz)?.phi(z))
}

/// `prox_{g/L}(y − Σ λ_i ∇f_i(y) / L)`.
pub fn inner_primal_step(lambda: &[f64], y: &[f64], lipschitz: f64, p: &Problem) -> Result<Vec<f64>> {
    check_lipschitz(lipschitz)?;
    check_simplex(lambda, p.m())?;
    let f_y = p.smooth_values(y)?;
    let jac = p.smooth_jacobian(y)?;
    // offsets do not affect the minimizer
    let model = SubproblemModel::from_parts(y, &f_y, jac, &f_y, lipschitz, p.nonsmooth())?;
    Ok(model.primal_step(lambda))
}

/// Concave dual `D(λ)` of the subproblem.
pub fn dual_value(lambda: &[f64], x: &[f64], y: &[f64], lipschitz: f64, p: &Problem) -> Result<f64> {
    SubproblemModel::new(p, x, y, lipschitz)?.dual(lambda)
}

/// Solve for `p_L(x, y)`, `θ_L(x, y)` and `λ(x, y)`.
pub fn solve_subproblem(
    x: &[f64],
    y: &[f64],
    lipschitz: f64,
    p: &Problem,
    cfg: &SubproblemConfig,
) -> Result<SubproblemSolution> {
    SubproblemModel::new(p, x, y, lipschitz)?.solve(cfg, None)
}

/// Stationarity residual of a solution returned by [`solve_subproblem`].
pub fn kkt_residual(sol: &SubproblemSolution, x: &[f64], y: &[f64], lipschitz: f64, p: &Problem) -> Result<f64> {
    let model = SubproblemModel::new(p, x, y, lipschitz)?;
    Ok(model.kkt_residual(&sol.z_star, &sol.lambda))
}

/// `‖p_L(x, y) − y‖_∞`; zero exactly when `y` is weakly Pareto optimal.
pub fn weak_pareto_residual(
    x: &[f64],
    y: &[f64],
    lipschitz: f64,
    p: &Problem,
    cfg: &SubproblemConfig,
) -> Result<f64> {
    let sol = solve_subproblem(x, y, lipschitz, p, cfg)?;
    Ok(dist_inf(&sol.z_star, y))
}
