//! Composite multiobjective problems `F_i = f_i + g`.
//!
//! The smooth parts `f_1..f_m` come from a [`SmoothPart`] oracle; the
//! nonsmooth part `g` is shared by every component, which is what makes the
//! dual of the proximal subproblem tractable (`Σ λ_i g = g` on the simplex).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::vecops::{all_finite, dot};
use crate::{Error, Result};

/// Values and Jacobian of the smooth components `f_1..f_m`.
pub trait SmoothPart: Send + Sync {
    /// `(f_1(x), ..., f_m(x))`.
    fn values(&self, x: &[f64]) -> Vec<f64>;

    /// Row `i` is `∇f_i(x)`.
    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>>;
}

/// A user-supplied nonsmooth term with its proximal map.
pub trait ProxFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_w { g(w) + ‖w - v‖² / (2t) }` for `t > 0`.
    fn prox(&self, t: f64, v: &[f64]) -> Vec<f64>;
}

/// The nonsmooth part `g`, shared by all objectives.
#[derive(Clone)]
pub enum Nonsmooth {
    Zero,
    /// `g(x) = weight · ‖x‖₁`.
    WeightedL1(f64),
    Custom(Arc<dyn ProxFunction>),
}

impl fmt::Debug for Nonsmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonsmooth::Zero => write!(f, "Zero"),
            Nonsmooth::WeightedL1(w) => write!(f, "WeightedL1({w})"),
            Nonsmooth::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Nonsmooth {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Nonsmooth::Zero => 0.0,
            Nonsmooth::WeightedL1(w) => w * x.iter().map(|v| v.abs()).sum::<f64>(),
            Nonsmooth::Custom(g) => g.value(x),
        }
    }

    /// Step-scaled proximal map `prox_{t g}(v)`. Callers guarantee `t > 0`.
    pub(crate) fn prox_unchecked(&self, t: f64, v: &[f64]) -> Vec<f64> {
        match self {
            Nonsmooth::Zero => v.to_vec(),
            Nonsmooth::WeightedL1(w) => {
                let level = t * w;
                v.iter()
                    .map(|&vi| vi.signum() * (vi.abs() - level).max(0.0))
                    .collect()
            }
            Nonsmooth::Custom(g) => g.prox(t, v),
        }
    }

    pub fn prox(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!("prox step must be positive, got {t}")));
        }
        Ok(self.prox_unchecked(t, v))
    }
}

/// `prox_{t g}(v)`; errors when `t ≤ 0`.
pub fn prox_nonsmooth(part: &Nonsmooth, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    part.prox(t, v)
}

/// A point in objective space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector(pub Vec<f64>);

impl ObjectiveVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for ObjectiveVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A composite problem `F = f + g` on `ℝⁿ` with `m` objectives.
///
/// Immutable after construction; clones share the oracles.
#[derive(Clone)]
pub struct Problem {
    n: usize,
    m: usize,
    smooth: Arc<dyn SmoothPart>,
    nonsmooth: Nonsmooth,
    lipschitz: Option<f64>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("nonsmooth", &self.nonsmooth)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Problem {
    pub fn new(n: usize, m: usize, smooth: Arc<dyn SmoothPart>, nonsmooth: Nonsmooth) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("problem dimensions must be positive"));
        }
        if let Nonsmooth::WeightedL1(w) = nonsmooth {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid(format!("l1 weight must be nonnegative, got {w}")));
            }
        }
        Ok(Problem { n, m, smooth, nonsmooth, lipschitz: None })
    }

    /// Attach the known Lipschitz constant `L(f)` of the gradients.
    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = Some(lipschitz);
        self
    }

    pub fn with_nonsmooth(mut self, nonsmooth: Nonsmooth) -> Self {
        self.nonsmooth = nonsmooth;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nonsmooth(&self) -> &Nonsmooth {
        &self.nonsmooth
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "expected a point of dimension {}, got {}",
                self.n,
                x.len()
            )));
        }
        Ok(())
    }

    /// `(f_1(x), ..., f_m(x))`.
    pub fn smooth_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let v = self.smooth.values(x);
        if v.len() != self.m || !all_finite(&v) {
            return Err(Error::EvaluationFailure { x: x.to_vec() });
        }
        Ok(v)
    }

    pub fn smooth_jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x)?;
        let jac = self.smooth.jacobian(x);
        if jac.len() != self.m || jac.iter().any(|row| row.len() != self.n || !all_finite(row)) {
            return Err(Error::EvaluationFailure { x: x.to_vec() });
        }
        Ok(jac)
    }

    pub fn nonsmooth_value(&self, x: &[f64]) -> f64 {
        self.nonsmooth.value(x)
    }

    /// `F(x) = (f_i(x) + g(x))_i`.
    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        if !all_finite(x) {
            return Err(Error::EvaluationFailure { x: x.to_vec() });
        }
        let mut values = self.smooth_values(x)?;
        let g = self.nonsmooth.value(x);
        if !g.is_finite() {
            return Err(Error::EvaluationFailure { x: x.to_vec() });
        }
        values.iter_mut().for_each(|v| *v += g);
        Ok(ObjectiveVector(values))
    }
}

/// `F(x)` for problem `p`.
pub fn evaluate_objectives(p: &Problem, x: &[f64]) -> Result<ObjectiveVector> {
    p.evaluate(x)
}

fn same_len(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "objective vectors differ in length ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

/// `u ≼ v`, i.e. `v - u` lies in the nonnegative orthant.
pub fn pareto_leq(u: &[f64], v: &[f64]) -> Result<bool> {
    same_len(u, v)?;
    Ok(u.iter().zip(v).all(|(a, b)| a <= b))
}

/// `u ≺ v`, i.e. `v - u` lies in the interior of the orthant.
pub fn pareto_lt(u: &[f64], v: &[f64]) -> Result<bool> {
    same_len(u, v)?;
    Ok(u.iter().zip(v).all(|(a, b)| a < b))
}

/// Smooth part given by closures.
pub struct FnSmooth<V, J> {
    values: V,
    jacobian: J,
}

impl<V, J> FnSmooth<V, J>
where
    V: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync,
{
    pub fn new(values: V, jacobian: J) -> Self {
        FnSmooth { values, jacobian }
    }
}

impl<V, J> SmoothPart for FnSmooth<V, J>
where
    V: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync,
{
    fn values(&self, x: &[f64]) -> Vec<f64> {
        (self.values)(x)
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (self.jacobian)(x)
    }
}

/// `f(x) = ½ xᵀ Q x + bᵀ x + c` with symmetric `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticObjective {
    pub hessian: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
}

impl QuadraticObjective {
    /// `‖x - center‖² · scale`.
    pub fn scaled_distance(center: &[f64], scale: f64) -> Self {
        let n = center.len();
        let hessian = (0..n)
            .map(|j| (0..n).map(|k| if j == k { 2.0 * scale } else { 0.0 }).collect())
            .collect();
        QuadraticObjective {
            hessian,
            linear: center.iter().map(|c| -2.0 * scale * c).collect(),
            constant: scale * dot(center, center),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .hessian
            .iter()
            .zip(x)
            .map(|(row, xj)| xj * dot(row, x))
            .sum();
        0.5 * quad + dot(&self.linear, x) + self.constant
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.hessian
            .iter()
            .zip(&self.linear)
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mat = DMatrix::from_fn(n, n, |r, c| 0.5 * (self.hessian[r][c] + self.hessian[c][r]));
        SymmetricEigen::new(mat).eigenvalues.iter().copied().collect()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.hessian.len() != n || self.hessian.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("quadratic hessian must be n x n"));
        }
        for r in 0..n {
            for c in 0..r {
                if (self.hessian[r][c] - self.hessian[c][r]).abs() > 1e-12 * (1.0 + self.hessian[r][c].abs()) {
                    return Err(Error::invalid("quadratic hessian must be symmetric"));
                }
            }
        }
        Ok(())
    }
}

/// A family of quadratic objectives sharing the decision space.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    objectives: Vec<QuadraticObjective>,
}

impl Quadratic {
    pub fn new(objectives: Vec<QuadraticObjective>) -> Result<Self> {
        let Some(first) = objectives.first() else {
            return Err(Error::invalid("need at least one objective"));
        };
        let n = first.dim();
        for q in &objectives {
            if q.dim() != n {
                return Err(Error::invalid("quadratic objectives differ in dimension"));
            }
            q.validate()?;
        }
        Ok(Quadratic { objectives })
    }

    pub fn objectives(&self) -> &[QuadraticObjective] {
        &self.objectives
    }

    pub fn dim(&self) -> usize {
        self.objectives[0].dim()
    }

    /// Largest Hessian eigenvalue over all objectives, i.e. `L(f)`.
    pub fn lipschitz(&self) -> f64 {
        self.objectives
            .iter()
            .flat_map(|q| q.eigenvalues())
            .fold(0.0, |acc: f64, e| acc.max(e.abs()))
    }

    /// All Hessians positive semidefinite.
    pub fn is_convex(&self) -> bool {
        self.objectives
            .iter()
            .flat_map(|q| q.eigenvalues())
            .all(|e| e >= -1e-12)
    }

    /// Wrap as a problem with `L(f)` attached.
    pub fn into_problem(self, nonsmooth: Nonsmooth) -> Result<Problem> {
        let (n, m, l) = (self.dim(), self.objectives.len(), self.lipschitz());
        Ok(Problem::new(n, m, Arc::new(self), nonsmooth)?.with_lipschitz(l))
    }
}

impl SmoothPart for Quadratic {
    fn values(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|q| q.value(x)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.objectives.iter().map(|q| q.gradient(x)).collect()
    }
}
