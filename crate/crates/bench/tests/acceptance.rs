//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.
//!
//! Run with `cargo test -p mofista-bench --test acceptance`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use mofista::diagnostics::{
    first_energy_check, lyapunov_monotone_check, monotone_cap_check, one_step_bound_check, rate_bound_check,
    ReferenceSet,
};
use mofista::metrics::{purity, Front, FrontEntry};
use mofista::solver::accepted_l_bound_check;
use mofista::suite::{sample_initial_points, weakly_pareto_samples};
use mofista::{
    builtin_problem, fista_step, run_solver, solve_subproblem, Nonsmooth, Problem, Quadratic, QuadraticObjective,
    SolveStatus, SolverConfig, SubproblemConfig, Variant,
};
use mofista_bench::{run_benchmark, BenchConfig, SolverKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONVEX: [&str; 9] = ["BK1", "BK1_l1", "JOS1", "JOS1_l1", "SP1", "SP1_l1", "MHHM1", "MHHM2", "VFM1"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let clock = Instant::now();
    let mut o = f();
    let spent = clock.elapsed();
    o.detail = format!("{} [{:.2?}]", o.detail, spent);
    if let Some(limit) = limit {
        if spent > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {:?}", o.detail, limit);
        }
    }
    o
}

/// Random (t, ω) chains of length ≤ 8 with t₀ ∈ [1, 10], ω ∈ [0.1, 10].
fn t_chains(count: usize, seed: u64) -> Vec<Vec<(f64, f64, f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=8);
            let mut t = rng.gen_range(1.0..=10.0);
            let mut l = rng.gen_range(0.1..=10.0);
            (0..len)
                .map(|_| {
                    let omega = rng.gen_range(0.1..=10.0);
                    let next = fista_step(&[0.0], &[0.0], t, omega).t;
                    let step = (t, l, next, omega * l);
                    t = next;
                    l *= omega;
                    step
                })
                .collect()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let chains = t_chains(100_000, 1);
    let mut worst: f64 = 0.0;
    for &(t, l, next, l_next) in chains.iter().flatten() {
        let lhs = next * (next - 1.0) / l_next;
        let rhs = t * t / l;
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs));
    }
    outcome(worst <= 1e-10, format!("worst relative defect {worst:.2e} over 1e5 chains"))
}

fn criterion_2() -> Outcome {
    let chains = t_chains(100_000, 2);
    let mut violations = 0;
    for &(t, l, next, l_next) in chains.iter().flatten() {
        let root = (l_next / l).sqrt();
        if !(0.5 + root * t <= next + 1e-12 && next <= (1.0 + root) * t + 1e-12) {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations"))
}

/// Independent evaluation of φ from raw oracle data.
struct PhiData {
    y: Vec<f64>,
    grads: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    weight: f64,
    lipschitz: f64,
}

impl PhiData {
    fn at(&self, z: &[f64]) -> f64 {
        let max = self
            .grads
            .iter()
            .zip(&self.offsets)
            .map(|(g, a)| a + g.iter().zip(z.iter().zip(&self.y)).map(|(gj, (zj, yj))| gj * (zj - yj)).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        let quad: f64 = z.iter().zip(&self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        max + self.weight * l1 + 0.5 * self.lipschitz * quad
    }

    /// Minimizer over the lattice `pitch·ℤⁿ` inside the box that must contain z*.
    fn grid_argmin(&self, pitch: f64) -> Vec<f64> {
        let gmax = self.grads.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
        let radius = (gmax + self.weight) / self.lipschitz + pitch;
        let range = |c: f64| ((c - radius) / pitch).floor() as i64..=((c + radius) / pitch).ceil() as i64;
        let mut best = (f64::INFINITY, vec![]);
        match self.y.len() {
            1 => {
                for i in range(self.y[0]) {
                    let z = [i as f64 * pitch];
                    let v = self.at(&z);
                    if v < best.0 {
                        best = (v, z.to_vec());
                    }
                }
            }
            2 => {
                let r1 = range(self.y[1]);
                for i in range(self.y[0]) {
                    for j in r1.clone() {
                        let z = [i as f64 * pitch, j as f64 * pitch];
                        let v = self.at(&z);
                        if v < best.0 {
                            best = (v, z.to_vec());
                        }
                    }
                }
            }
            _ => unreachable!("grid oracle handles n ≤ 2"),
        }
        best.1
    }
}

fn random_quadratic(rng: &mut ChaCha8Rng, n: usize) -> QuadraticObjective {
    let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let hessian = (0..n)
        .map(|r| (0..n).map(|c| (0..n).map(|k| a[r * n + k] * a[c * n + k]).sum()).collect())
        .collect();
    QuadraticObjective {
        hessian,
        linear: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        constant: rng.gen_range(-1.0..1.0),
    }
}

fn criterion_3() -> Outcome {
    let pitch = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_dist, mut worst_kkt) = (0.0_f64, 0.0_f64);
    let mut failures = Vec::new();
    for case in 0..200 {
        let n = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=3);
        let weight = if rng.gen_bool(0.5) { rng.gen_range(0.1..0.5) } else { 0.0 };
        let q = Quadratic::new((0..m).map(|_| random_quadratic(&mut rng, n)).collect()).unwrap();
        let g = if weight > 0.0 { Nonsmooth::WeightedL1(weight) } else { Nonsmooth::Zero };
        let p = q.into_problem(g).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lipschitz = rng.gen_range(2.0..6.0);

        let sol = match solve_subproblem(&x, &y, lipschitz, &p, &SubproblemConfig::default()) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        let fy = p.smooth_values(&y).unwrap();
        let fx = p.evaluate(&x).unwrap();
        let data = PhiData {
            grads: p.smooth_jacobian(&y).unwrap(),
            offsets: fy.iter().zip(&fx.0).map(|(a, b)| a - b).collect(),
            y,
            weight,
            lipschitz,
        };
        let grid = data.grid_argmin(pitch);
        let dist = sol.z_star.iter().zip(&grid).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst_dist = worst_dist.max(dist);
        worst_kkt = worst_kkt.max(sol.kkt_residual);
        if dist > 2.0 * pitch || sol.kkt_residual > 1e-8 {
            let excess = data.at(&sol.z_star) - data.at(&grid);
            failures.push(format!(
                "case {case} (n={n}, m={m}, w={weight:.2}): dist {dist:.2e}, kkt {:.2e}, φ(z*)−φ(grid) {excess:.1e}",
                sol.kkt_residual
            ));
        }
    }
    outcome(
        failures.is_empty(),
        format!("max ‖z*−grid‖ {worst_dist:.2e}, max KKT {worst_kkt:.2e}; {} failures {:?}", failures.len(), failures),
    )
}

fn criterion_4() -> Outcome {
    let p = Quadratic::new(vec![QuadraticObjective::scaled_distance(&[0.0, 0.0, 0.0], 0.5)])
        .unwrap()
        .into_problem(Nonsmooth::WeightedL1(0.0))
        .unwrap();
    let x0 = vec![3.0, -2.0, 0.7];
    let (l_init, beta, sigma, eps) = (4.0, 2.0, 2.0, 1e-20);
    let cfg = SolverConfig { l_init, beta, sigma, max_iter: 50, ..Default::default() }.with_eps(eps);
    let trace = run_solver(&p, &x0, &cfg).unwrap();

    // classical FISTA with ω-scaled t-update and a decreasing-then-backtracking L
    let f = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let (mut x, mut x_prev, mut t_prev, mut l_prev) = (x0.clone(), x0.clone(), 0.0_f64, l_init);
    let mut reference = Vec::new();
    for _ in 0..50 {
        let mut l = l_prev / sigma;
        let (z, y) = loop {
            let t = 0.5 * (1.0 + (1.0 + 4.0 * (l / l_prev) * t_prev * t_prev).sqrt());
            let theta = (t_prev - 1.0) / t;
            let y: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a + theta * (a - b)).collect();
            let z: Vec<f64> = y.iter().map(|v| v - v / l).collect();
            let d: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
            let lin: f64 = y.iter().zip(&d).map(|(a, b)| a * b).sum();
            if f(&z) <= f(&y) + lin + 0.5 * l * d.iter().map(|v| v * v).sum::<f64>() {
                t_prev = t;
                break (z, y);
            }
            l *= beta;
        };
        l_prev = l;
        let done = z.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < eps;
        x_prev = std::mem::replace(&mut x, z.clone());
        reference.push(z);
        if done {
            break;
        }
    }
    let ours: Vec<&[f64]> = trace.records.iter().map(|r| r.x_next.as_slice()).collect();
    let worst = ours
        .iter()
        .zip(&reference)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max);
    outcome(
        ours.len() == reference.len() && worst <= 1e-10,
        format!("{} vs {} iterates, max deviation {worst:.2e}", ours.len(), reference.len()),
    )
}

fn variants_for(l_true: f64) -> [Variant; 3] {
    [
        Variant::Backtracking,
        Variant::FixedStep { lipschitz: l_true },
        Variant::PlainProxGrad { lipschitz: l_true },
    ]
}

fn criterion_5() -> Outcome {
    let mut bad = Vec::new();
    let mut runs = 0;
    for name in CONVEX {
        let (p, d) = builtin_problem(name).unwrap();
        for seed in 0..10 {
            let x0 = &sample_initial_points(&d, 1, seed)[0];
            for variant in variants_for(d.l_true.unwrap()) {
                let cfg = SolverConfig::default().with_variant(variant);
                let trace = run_solver(&p, x0, &cfg).unwrap();
                runs += 1;
                if !trace.status.is_success() || !monotone_cap_check(&trace) {
                    bad.push(format!("{name}/{seed}/{variant:?}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{runs} runs, violations {bad:?}"))
}

fn segment(from: f64, to: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let s = from + (to - from) * i as f64 / (count - 1) as f64;
            vec![s, s]
        })
        .collect()
}

/// Traces shared by criteria 6 and 7: (problem, reference points, runs).
fn rate_traces() -> Vec<(Problem, Vec<Vec<f64>>, Vec<mofista::SolveResult>, SolverConfig)> {
    let cfg = SolverConfig { beta: 2.0, max_iter: 1000, ..Default::default() }.with_eps(1e-9);
    [("JOS1", segment(0.0, 2.0, 20)), ("BK1", segment(0.0, 5.0, 20))]
        .into_iter()
        .map(|(name, zs)| {
            let (p, d) = builtin_problem(name).unwrap();
            let traces = (0..10)
                .map(|seed| run_solver(&p, &sample_initial_points(&d, 1, 100 + seed)[0], &cfg).unwrap())
                .collect();
            (p, zs, traces, cfg)
        })
        .collect()
}

fn criterion_6(data: &[(Problem, Vec<Vec<f64>>, Vec<mofista::SolveResult>, SolverConfig)]) -> Outcome {
    let mut bad = 0;
    let mut iterations = 0;
    for (p, zs, traces, cfg) in data {
        for trace in traces {
            iterations += trace.iterations();
            let reference = ReferenceSet::new(zs.clone(), &trace.x0).unwrap();
            if !rate_bound_check(trace, p, cfg, &reference).unwrap() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("20 traces, {iterations} accepted iterations, {bad} violating traces"))
}

fn criterion_7(data: &[(Problem, Vec<Vec<f64>>, Vec<mofista::SolveResult>, SolverConfig)]) -> Outcome {
    let mut bad = Vec::new();
    for (p, zs, traces, _) in data {
        for (seed, trace) in traces.iter().enumerate() {
            for z in zs {
                let ok = one_step_bound_check(trace, p, z).unwrap()
                    && lyapunov_monotone_check(trace, p, z).unwrap()
                    && first_energy_check(trace, p, z).unwrap();
                if !ok {
                    bad.push(format!("seed {seed} z {z:?}"));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("400 (trace, z) pairs, failures {:?}", bad.iter().take(3).collect::<Vec<_>>()))
}

fn criterion_8() -> Outcome {
    let mut bad = Vec::new();
    let mut vacuous = 0;
    for name in CONVEX {
        let (p, d) = builtin_problem(name).unwrap();
        let l_true = d.l_true.unwrap();
        for seed in 0..10 {
            let x0 = &sample_initial_points(&d, 1, 200 + seed)[0];
            for l_init in [0.01 * l_true, 1.0, l_true, 100.0 * l_true] {
                let cfg = SolverConfig { l_init, ..Default::default() }.with_eps(1e-10);
                let trace = run_solver(&p, x0, &cfg).unwrap();
                if !accepted_l_bound_check(&trace, l_true, &cfg) {
                    bad.push(format!("{name}/{seed}: L above cap from L_init {l_init}"));
                }
                if l_init == 100.0 * l_true {
                    let window = (100f64.ln() / cfg.sigma.ln()).ceil() as usize + 2;
                    let reached = trace.records.iter().take(window).any(|r| r.lipschitz < 2.0 * cfg.beta * l_true);
                    // a run that stops before the window has no iteration left to lower L in
                    let stopped_early = trace.status == SolveStatus::Converged && trace.records.len() < window;
                    if stopped_early {
                        vacuous += 1;
                    } else if !reached {
                        bad.push(format!("{name}/{seed}: L still ≥ 2βL after {window} iterations"));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!(
            "{} problems × 10 seeds × 4 starts; {vacuous} runs from 100·L stopped before the window; failures {bad:?}",
            CONVEX.len()
        ))
}

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    let mut starts = 0;
    for name in CONVEX {
        let (p, d) = builtin_problem(name).unwrap();
        let mut points = weakly_pareto_samples(&p, &d, 6).unwrap();
        points.extend(match name {
            "BK1" => segment(0.0, 5.0, 6),
            "BK1_l1" => segment(0.0, 4.5, 6),
            "JOS1" => segment(0.0, 2.0, 6),
            "JOS1_l1" => segment(0.0, 1.0, 6),
            "MHHM1" => vec![vec![0.8], vec![0.85], vec![0.9]],
            _ => vec![],
        });
        for x0 in &points {
            let cfg = SolverConfig::default();
            let trace = run_solver(&p, x0, &cfg).unwrap();
            starts += 1;
            let first = trace.records.first().map_or(f64::INFINITY, |r| r.residual);
            if trace.status != SolveStatus::Converged || trace.iterations() != 1 || !(first < cfg.eps) {
                bad.push(format!("{name} at {x0:?}: {} iterations, residual {first:.2e}", trace.iterations()));
            }
        }
    }
    outcome(bad.is_empty(), format!("{starts} weakly Pareto starts; failures {:?}", bad.iter().take(3).collect::<Vec<_>>()))
}

fn front(points: &[[f64; 2]]) -> Front {
    Front::from_entries(points.iter().map(|p| FrontEntry { x: vec![], objectives: p.to_vec() }).collect())
}

fn criterion_10() -> Outcome {
    let a = Front::unfiltered(
        [[0.0, 0.0], [1.0, 1.0]].iter().map(|p| FrontEntry { x: vec![], objectives: p.to_vec() }).collect(),
    );
    let b = front(&[[0.5, 0.5]]);
    let (pa, pb, single) = (purity(&a, &[&a, &b]), purity(&b, &[&a, &b]), purity(&b, &[&b]));
    outcome(pa == 0.5 && pb == 0.0 && single == 1.0, format!("purity(A) {pa}, purity(B) {pb}, single {single}"))
}

fn bench_config(out: &Path, problems: &[&str], runs: usize, solvers: Vec<SolverKind>, jobs: usize) -> BenchConfig {
    BenchConfig {
        problems: problems.iter().map(|s| s.to_string()).collect(),
        runs,
        seed: 2024,
        solvers,
        out: out.to_path_buf(),
        jobs,
        ..Default::default()
    }
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let problems = ["BK1_l1", "JOS1_l1", "SP1_l1"];
    let bc = bench_config(dir.path(), &problems, 50, vec![SolverKind::Backtracking, SolverKind::Fixed], 0);
    assert_eq!((bc.l_init, bc.fixed_l_factor), (1.0, 10.0));
    let report = run_benchmark(&bc).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for name in problems {
        let bt = report.aggregate(name, SolverKind::Backtracking).unwrap().mean_iter;
        let fx = report.aggregate(name, SolverKind::Fixed).unwrap().mean_iter;
        pass &= bt < fx;
        detail.push(format!("{name}: {bt:.1} vs {fx:.1}"));
    }
    outcome(pass, detail.join(", "))
}

/// Every CSV under `dir`, keyed by relative path, with wall-time columns removed.
fn csv_contents(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let name = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            if path.extension().map_or(true, |e| e != "csv") || name == "profiles_time.csv" {
                continue;
            }
            let text = std::fs::read_to_string(&path).unwrap();
            let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
            let drop: Vec<usize> = header
                .iter()
                .enumerate()
                .filter(|(_, h)| **h == "wall_ms" || **h == "mean_ms")
                .map(|(i, _)| i)
                .collect();
            let kept: Vec<String> = text
                .lines()
                .map(|line| {
                    line.split(',')
                        .enumerate()
                        .filter(|(i, _)| !drop.contains(i))
                        .map(|(_, c)| c)
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect();
            out.insert(name, kept.join("\n"));
        }
    }
    out
}

fn criterion_12() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let problems = ["BK1_l1", "SP1", "MHHM2", "VFM1", "FF1", "VU1_l1"];
    run_benchmark(&bench_config(a.path(), &problems, 20, SolverKind::ALL.to_vec(), 1)).unwrap();
    run_benchmark(&bench_config(b.path(), &problems, 20, SolverKind::ALL.to_vec(), 4)).unwrap();
    let (ca, cb) = (csv_contents(a.path()), csv_contents(b.path()));
    let differing: Vec<&String> = ca.keys().filter(|k| ca.get(*k) != cb.get(*k)).collect();
    outcome(
        ca.len() == cb.len() && ca.len() > 3 && differing.is_empty(),
        format!("{} CSV files compared (1 vs 4 worker threads); differing {differing:?}", ca.len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "t-sequence identity", timed(Some(Duration::from_secs(1)), criterion_1)));
    results.push((2, "t-sequence bounds", timed(None, criterion_2)));
    results.push((3, "subproblem vs grid oracle", timed(Some(Duration::from_secs(60)), criterion_3)));
    results.push((4, "single-objective reduction", timed(None, criterion_4)));
    results.push((5, "monotone cap", timed(None, criterion_5)));
    let clock = Instant::now();
    let traces = rate_traces();
    let trace_time = clock.elapsed();
    results.push((
        6,
        "rate bound",
        timed(Some(Duration::from_secs(120).saturating_sub(trace_time)), || criterion_6(&traces)),
    ));
    results.push((7, "Lyapunov and one-step replay", timed(None, || criterion_7(&traces))));
    results.push((8, "backtracking L control", timed(None, criterion_8)));
    results.push((9, "stationarity detection", timed(None, criterion_9)));
    results.push((10, "purity oracle", timed(None, criterion_10)));
    results.push((11, "backtracking beats fixed 10·L", timed(None, criterion_11)));
    results.push((12, "determinism", timed(None, criterion_12)));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} acceptance criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
