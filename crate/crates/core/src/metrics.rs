//! Front quality: nondominated filtering, purity and performance profiles.

use crate::vecops::dist_inf;

/// Objective vectors within this ∞-distance are the same point for purity.
pub const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontEntry {
    pub x: Vec<f64>,
    pub objectives: Vec<f64>,
}

/// Objective vectors with their origins; nondominated unless built with `unfiltered`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Front {
    entries: Vec<FrontEntry>,
}

impl Front {
    /// Filter `entries` down to the nondominated ones, preserving order.
    pub fn from_entries(entries: Vec<FrontEntry>) -> Self {
        let keep: Vec<bool> = entries
            .iter()
            .map(|u| !entries.iter().any(|v| dominates(&v.objectives, &u.objectives)))
            .collect();
        Self {
            entries: entries.into_iter().zip(keep).filter_map(|(e, k)| k.then_some(e)).collect(),
        }
    }

    /// Keep `entries` as given, dominated points included.
    pub fn unfiltered(entries: Vec<FrontEntry>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[FrontEntry] {
        &self.entries
    }

    pub fn objectives(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|e| e.objectives.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `v ≤ u` componentwise and `v ≠ u`.
fn dominates(v: &[f64], u: &[f64]) -> bool {
    v.len() == u.len() && v.iter().zip(u).all(|(a, b)| a <= b) && v.iter().zip(u).any(|(a, b)| a < b)
}

/// Nondominated subset of bare objective vectors (decision points left empty).
pub fn nondominated_filter(points: &[Vec<f64>]) -> Front {
    Front::from_entries(
        points
            .iter()
            .map(|f| FrontEntry { x: Vec::new(), objectives: f.clone() })
            .collect(),
    )
}

/// Share of `front` that survives in the nondominated union of `all_fronts`.
pub fn purity(front: &Front, all_fronts: &[&Front]) -> f64 {
    if front.is_empty() {
        return 0.0;
    }
    let union: Vec<Vec<f64>> = all_fronts
        .iter()
        .flat_map(|f| f.objectives().map(<[f64]>::to_vec))
        .collect();
    let reference = nondominated_filter(&union);
    let hits = front
        .objectives()
        .filter(|a| reference.objectives().any(|r| dist_inf(a, r) <= MATCH_TOL))
        .count();
    hits as f64 / front.len() as f64
}

/// Step function `ρ(τ)` of one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    /// Sorted finite ratios `cost / best`, one per solved problem.
    pub ratios: Vec<f64>,
    pub problems: usize,
}

impl ProfileCurve {
    /// Fraction of problems solved within a factor `tau` of the best.
    pub fn rho(&self, tau: f64) -> f64 {
        if self.problems == 0 {
            return 0.0;
        }
        self.ratios.partition_point(|r| *r <= tau) as f64 / self.problems as f64
    }

    pub fn success_fraction(&self) -> f64 {
        if self.problems == 0 {
            0.0
        } else {
            self.ratios.len() as f64 / self.problems as f64
        }
    }

    /// `(τ, ρ(τ))` at every jump.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, r) in self.ratios.iter().enumerate() {
            let rho = (i + 1) as f64 / self.problems as f64;
            match out.last_mut() {
                Some(last) if last.0 == *r => last.1 = rho,
                _ => out.push((*r, rho)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceProfile {
    pub curves: Vec<ProfileCurve>,
    /// Problem indices dropped because every algorithm failed on them.
    pub excluded: Vec<usize>,
}

/// Ratio-based profile from `costs[algorithm][problem]`.
///
/// `None`, non-finite and non-positive costs count as failures.
pub fn performance_profile(costs: &[Vec<Option<f64>>]) -> PerformanceProfile {
    let problems = costs.iter().map(Vec::len).max().unwrap_or(0);
    let cost = |a: usize, p: usize| -> Option<f64> {
        costs[a].get(p).copied().flatten().filter(|c| c.is_finite() && *c > 0.0)
    };
    let mut excluded = Vec::new();
    let mut best = Vec::new();
    for p in 0..problems {
        match (0..costs.len()).filter_map(|a| cost(a, p)).min_by(f64::total_cmp) {
            Some(b) => best.push((p, b)),
            None => {
                log::warn!("performance profile: every algorithm failed on problem {p}; excluded");
                excluded.push(p);
            }
        }
    }
    let curves = (0..costs.len())
        .map(|a| {
            let mut ratios: Vec<f64> = best.iter().filter_map(|&(p, b)| cost(a, p).map(|c| c / b)).collect();
            ratios.sort_by(f64::total_cmp);
            ProfileCurve { ratios, problems: best.len() }
        })
        .collect();
    PerformanceProfile { curves, excluded }
}
