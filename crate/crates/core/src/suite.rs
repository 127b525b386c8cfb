//! Built-in test problems, a name registry, and user problem files.
//!
//! The convex quadratic instances carry their exact `L(f)`. The "_l1"
//! variants share `g(x) = ‖x‖₁` (weight 1) across objectives. Box bounds are
//! used only to sample starting points; the problems themselves are
//! unconstrained.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::problem::{FnSmooth, Nonsmooth, Problem, Quadratic, QuadraticObjective};
use crate::vecops::{dist_sq, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDescriptor {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub l1_weight: f64,
    pub convex: bool,
    pub l_true: Option<f64>,
}

impl ProblemDescriptor {
    fn validate(&self) -> Result<()> {
        if self.lower.len() != self.n || self.upper.len() != self.n {
            return Err(Error::invalid(format!("{}: bounds must have length n = {}", self.name, self.n)));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::invalid(format!("{}: lower bounds must be below upper bounds", self.name)));
        }
        Ok(())
    }
}

type Builder = Arc<dyn Fn() -> Result<(Problem, ProblemDescriptor)> + Send + Sync>;

/// Named problem constructors, listed in registration order.
#[derive(Clone, Default)]
pub struct ProblemRegistry {
    entries: Vec<(String, Builder)>,
}

impl std::fmt::Debug for ProblemRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl ProblemRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry with every built-in instance.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for l1 in [false, true] {
            r.register(&suffixed("BK1", l1), move || quadratic_entry("BK1", l1, bk1(), [-5.0, -5.0], [10.0, 10.0]));
            r.register(&suffixed("JOS1", l1), move || quadratic_entry("JOS1", l1, jos1(2), [-5.0, -5.0], [5.0, 5.0]));
            r.register(&suffixed("SP1", l1), move || quadratic_entry("SP1", l1, sp1(), [2.0, -2.0], [3.0, 3.0]));
        }
        r.register("MHHM1", || {
            let q = Quadratic::new([0.8, 0.85, 0.9].iter().map(|c| QuadraticObjective::scaled_distance(&[*c], 1.0)).collect())?;
            quadratic_entry("MHHM1", false, q, [0.0], [1.0])
        });
        r.register("MHHM2", || {
            let q = Quadratic::new(vec![
                QuadraticObjective::scaled_distance(&[0.8, 0.6], 1.0),
                QuadraticObjective::scaled_distance(&[0.85, 0.7], 1.0),
                QuadraticObjective::scaled_distance(&[0.9, 0.6], 1.0),
            ])?;
            quadratic_entry("MHHM2", false, q, [0.0, 0.0], [1.0, 1.0])
        });
        r.register("VFM1", || {
            let shifted = |c: [f64; 2], k: f64| {
                let mut q = QuadraticObjective::scaled_distance(&c, 1.0);
                q.constant += k;
                q
            };
            let q = Quadratic::new(vec![shifted([0.0, 1.0], 0.0), shifted([0.0, -1.0], 1.0), shifted([1.0, 0.0], 2.0)])?;
            quadratic_entry("VFM1", false, q, [-2.0, -2.0], [2.0, 2.0])
        });
        r.register("DD1", dd1);
        r.register("FF1", ff1);
        r.register("PNR", pnr);
        for l1 in [false, true] {
            r.register(&suffixed("VU1", l1), move || vu1(l1));
        }
        r
    }

    /// Add or replace a named constructor.
    pub fn register<F>(&mut self, name: &str, builder: F)
    where
        F: Fn() -> Result<(Problem, ProblemDescriptor)> + Send + Sync + 'static,
    {
        let builder: Builder = Arc::new(builder);
        match self.entries.iter_mut().find(|(n, _)| n.eq_ignore_ascii_case(name)) {
            Some(slot) => slot.1 = builder,
            None => self.entries.push((name.to_string(), builder)),
        }
    }

    /// Register the quadratic problem described in a file under its own name.
    pub fn register_file(&mut self, path: impl AsRef<Path>) -> Result<String> {
        let (problem, desc) = load_problem_file(path)?;
        let name = desc.name.clone();
        self.register(&name, move || Ok((problem.clone(), desc.clone())));
        Ok(name)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Result<(Problem, ProblemDescriptor)> {
        match self.entries.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)) {
            Some((_, build)) => build(),
            None => Err(Error::UnknownProblem { name: name.to_string(), available: self.names() }),
        }
    }
}

/// Look up a built-in problem by name.
pub fn builtin_problem(name: &str) -> Result<(Problem, ProblemDescriptor)> {
    ProblemRegistry::builtin().get(name)
}

fn suffixed(base: &str, l1: bool) -> String {
    if l1 {
        format!("{base}_l1")
    } else {
        base.to_string()
    }
}

fn bk1() -> Quadratic {
    Quadratic::new(vec![
        QuadraticObjective::scaled_distance(&[0.0, 0.0], 1.0),
        QuadraticObjective::scaled_distance(&[5.0, 5.0], 1.0),
    ])
    .expect("static data")
}

fn jos1(n: usize) -> Quadratic {
    let scale = 1.0 / n as f64;
    Quadratic::new(vec![
        QuadraticObjective::scaled_distance(&vec![0.0; n], scale),
        QuadraticObjective::scaled_distance(&vec![2.0; n], scale),
    ])
    .expect("static data")
}

fn sp1() -> Quadratic {
    // f1 = (x1 − 1)² + (x1 − x2)²,  f2 = (x2 − 3)² + (x1 − x2)²
    Quadratic::new(vec![
        QuadraticObjective {
            hessian: vec![vec![4.0, -2.0], vec![-2.0, 2.0]],
            linear: vec![-2.0, 0.0],
            constant: 1.0,
        },
        QuadraticObjective {
            hessian: vec![vec![2.0, -2.0], vec![-2.0, 4.0]],
            linear: vec![0.0, -6.0],
            constant: 9.0,
        },
    ])
    .expect("static data")
}

fn quadratic_entry<const N: usize>(
    base: &str,
    l1: bool,
    q: Quadratic,
    lower: [f64; N],
    upper: [f64; N],
) -> Result<(Problem, ProblemDescriptor)> {
    let l1_weight = if l1 { 1.0 } else { 0.0 };
    let desc = ProblemDescriptor {
        name: suffixed(base, l1),
        n: q.dim(),
        m: q.objectives().len(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        l1_weight,
        convex: q.is_convex(),
        l_true: Some(q.lipschitz()),
    };
    let nonsmooth = if l1 { Nonsmooth::WeightedL1(l1_weight) } else { Nonsmooth::Zero };
    Ok((q.into_problem(nonsmooth)?, desc))
}

fn smooth_entry<V, J>(
    name: &str,
    n: usize,
    m: usize,
    bounds: (f64, f64),
    l1: bool,
    values: V,
    jacobian: J,
) -> Result<(Problem, ProblemDescriptor)>
where
    V: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    J: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
{
    let l1_weight = if l1 { 1.0 } else { 0.0 };
    let nonsmooth = if l1 { Nonsmooth::WeightedL1(l1_weight) } else { Nonsmooth::Zero };
    let problem = Problem::new(n, m, Arc::new(FnSmooth::new(values, jacobian)), nonsmooth)?;
    let desc = ProblemDescriptor {
        name: name.to_string(),
        n,
        m,
        lower: vec![bounds.0; n],
        upper: vec![bounds.1; n],
        l1_weight,
        convex: false,
        l_true: None,
    };
    Ok((problem, desc))
}

fn dd1() -> Result<(Problem, ProblemDescriptor)> {
    smooth_entry(
        "DD1",
        5,
        2,
        (-20.0, 20.0),
        false,
        |x| {
            let d = x[3] - x[4];
            vec![x.iter().map(|v| v * v).sum(), 3.0 * x[0] + 2.0 * x[1] - x[2] / 3.0 + 0.01 * d * d * d]
        },
        |x| {
            let d2 = 0.03 * (x[3] - x[4]).powi(2);
            vec![x.iter().map(|v| 2.0 * v).collect(), vec![3.0, 2.0, -1.0 / 3.0, d2, -d2]]
        },
    )
}

fn ff1() -> Result<(Problem, ProblemDescriptor)> {
    let c = 1.0 / 2f64.sqrt();
    let bump = move |x: &[f64], s: f64| (-(x[0] - s * c).powi(2) - (x[1] - s * c).powi(2)).exp();
    smooth_entry(
        "FF1",
        2,
        2,
        (-1.0, 1.0),
        false,
        move |x| vec![1.0 - bump(x, 1.0), 1.0 - bump(x, -1.0)],
        move |x| {
            [1.0, -1.0]
                .iter()
                .map(|&s| {
                    let e = bump(x, s);
                    vec![2.0 * (x[0] - s * c) * e, 2.0 * (x[1] - s * c) * e]
                })
                .collect()
        },
    )
}

fn pnr() -> Result<(Problem, ProblemDescriptor)> {
    smooth_entry(
        "PNR",
        2,
        2,
        (-2.0, 2.0),
        false,
        |x| {
            let (a, b) = (x[0], x[1]);
            vec![a.powi(4) + b.powi(4) - a * a + b * b - 10.0 * a * b + 20.0, a * a + b * b]
        },
        |x| {
            let (a, b) = (x[0], x[1]);
            vec![
                vec![4.0 * a.powi(3) - 2.0 * a - 10.0 * b, 4.0 * b.powi(3) + 2.0 * b - 10.0 * a],
                vec![2.0 * a, 2.0 * b],
            ]
        },
    )
}

fn vu1(l1: bool) -> Result<(Problem, ProblemDescriptor)> {
    smooth_entry(
        &suffixed("VU1", l1),
        2,
        2,
        (-3.0, 3.0),
        l1,
        |x| {
            let r = x[0] * x[0] + x[1] * x[1] + 1.0;
            vec![1.0 / r, x[0] * x[0] + 3.0 * x[1] * x[1] + 1.0]
        },
        |x| {
            let r = x[0] * x[0] + x[1] * x[1] + 1.0;
            let s = -2.0 / (r * r);
            vec![vec![s * x[0], s * x[1]], vec![2.0 * x[0], 6.0 * x[1]]]
        },
    )
}

/// `count` points uniform in the descriptor's box, deterministic per seed.
pub fn sample_initial_points(desc: &ProblemDescriptor, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            desc.lower
                .iter()
                .zip(&desc.upper)
                .map(|(l, u)| rng.gen_range(*l..*u))
                .collect()
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: String,
    n: usize,
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(default)]
    l1_weight: f64,
    objectives: Vec<QuadraticObjective>,
}

/// Parse a quadratic problem definition (TOML).
///
/// ```toml
/// name = "quad2"
/// n = 2
/// m = 2
/// lower = [-1.0, -1.0]
/// upper = [1.0, 1.0]
/// l1_weight = 0.5          # optional, default 0
///
/// [[objectives]]           # f(x) = ½ xᵀ H x + bᵀ x + c
/// hessian = [[2.0, 0.0], [0.0, 2.0]]
/// linear = [0.0, 0.0]
/// constant = 0.0           # optional
/// ```
pub fn parse_problem_definition(text: &str) -> Result<(Problem, ProblemDescriptor)> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| Error::ProblemFile(e.to_string()))?;
    if file.objectives.len() != file.m {
        return Err(Error::ProblemFile(format!("m = {} but {} objectives given", file.m, file.objectives.len())));
    }
    if file.objectives.iter().any(|q| q.dim() != file.n) {
        return Err(Error::ProblemFile(format!("every objective must have dimension n = {}", file.n)));
    }
    if !(file.l1_weight >= 0.0) {
        return Err(Error::ProblemFile("l1_weight must be nonnegative".into()));
    }
    let q = Quadratic::new(file.objectives).map_err(|e| Error::ProblemFile(e.to_string()))?;
    let desc = ProblemDescriptor {
        name: file.name,
        n: file.n,
        m: file.m,
        lower: file.lower,
        upper: file.upper,
        l1_weight: file.l1_weight,
        convex: q.is_convex(),
        l_true: Some(q.lipschitz()),
    };
    desc.validate().map_err(|e| Error::ProblemFile(e.to_string()))?;
    let nonsmooth = if file.l1_weight > 0.0 { Nonsmooth::WeightedL1(file.l1_weight) } else { Nonsmooth::Zero };
    Ok((q.into_problem(nonsmooth)?, desc))
}

pub fn load_problem_file(path: impl AsRef<Path>) -> Result<(Problem, ProblemDescriptor)> {
    parse_problem_definition(&std::fs::read_to_string(path)?)
}

/// Largest finite-difference gradient growth `‖∇f_i(x + h d) − ∇f_i(x)‖ / h`
/// over random points in the box and random unit directions.
pub fn estimate_lipschitz(p: &Problem, desc: &ProblemDescriptor, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for x in sample_initial_points(desc, samples, rng.gen()) {
        let mut d: Vec<f64> = (0..p.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = norm(&d);
        if len == 0.0 {
            continue;
        }
        d.iter_mut().for_each(|v| *v /= len);
        let h = 1e-5;
        let shifted: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let (g0, g1) = (p.smooth_jacobian(&x)?, p.smooth_jacobian(&shifted)?);
        for (a, b) in g0.iter().zip(&g1) {
            best = best.max(dist_sq(a, b).sqrt() / h);
        }
    }
    Ok(best)
}

/// Minimizer of `Σ w_i f_i + g` by proximal gradient; for convex problems
/// this is a weakly Pareto optimal point.
pub fn weighted_sum_minimizer(p: &Problem, weights: &[f64], start: &[f64], max_iter: usize) -> Result<Vec<f64>> {
    if weights.len() != p.m() || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::invalid("weights must be nonnegative with one entry per objective"));
    }
    let lipschitz = p
        .lipschitz()
        .ok_or_else(|| Error::invalid("weighted-sum solve needs a known L(f)"))?;
    let step = 1.0 / lipschitz;
    let mut x = start.to_vec();
    for _ in 0..max_iter {
        let jac = p.smooth_jacobian(&x)?;
        let v: Vec<f64> = (0..p.n())
            .map(|j| x[j] - step * weights.iter().zip(&jac).map(|(w, g)| w * g[j]).sum::<f64>())
            .collect();
        let next = p.nonsmooth().prox(step, &v)?;
        let moved = dist_sq(&next, &x);
        x = next;
        if moved == 0.0 {
            break;
        }
    }
    Ok(x)
}

/// Weakly Pareto points of a convex instance from weighted sums on a simplex grid
/// (`m ≤ 3`; `divisions + 1` weights per edge).
pub fn weakly_pareto_samples(p: &Problem, desc: &ProblemDescriptor, divisions: usize) -> Result<Vec<Vec<f64>>> {
    let center: Vec<f64> = desc.lower.iter().zip(&desc.upper).map(|(l, u)| 0.5 * (l + u)).collect();
    let d = divisions.max(1);
    let weights: Vec<Vec<f64>> = match p.m() {
        1 => vec![vec![1.0]],
        2 => (0..=d).map(|i| vec![i as f64 / d as f64, 1.0 - i as f64 / d as f64]).collect(),
        3 => (0..=d)
            .flat_map(|i| (0..=d - i).map(move |j| vec![i as f64, j as f64, (d - i - j) as f64]))
            .map(|w| w.into_iter().map(|v| v / d as f64).collect())
            .collect(),
        _ => return Err(Error::invalid("weakly_pareto_samples supports m ≤ 3")),
    };
    weights
        .iter()
        .map(|w| weighted_sum_minimizer(p, w, &center, 200_000))
        .collect()
}
