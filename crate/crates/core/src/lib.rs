//! Accelerated proximal gradient method with backtracking for composite
//! multiobjective optimization.
//!
//! Problems have the form `min F(x) = (f_1(x) + g(x), ..., f_m(x) + g(x))`
//! with smooth convex `f_i` and a shared, prox-friendly convex `g`. Each
//! iteration solves a small strongly convex min-max subproblem through its
//! dual over the probability simplex, and the curvature estimate `L_k` is
//! adjusted by a backtracking rule that may both grow and shrink it.
//!
//! Module map:
//!
//! * [`problem`]: problem instances, prox oracles, Pareto orders.
//! * [`subproblem`]: the min-max proximal subproblem and its certificates.
//! * [`solver`]: the accelerated solver and its two baselines.
//! * [`diagnostics`]: replays of the convergence inequalities on recorded traces.
//! * [`suite`]: built-in test problems and problem-definition files.
//! * [`metrics`]: nondominated filtering, purity, performance profiles.

pub mod diagnostics;
mod error;
pub mod metrics;
pub mod problem;
pub mod solver;
pub mod subproblem;
pub mod suite;
pub mod vecops;

pub use error::{Error, Result};
pub use problem::{
    evaluate_objectives, pareto_leq, pareto_lt, prox_nonsmooth, FnSmooth, Nonsmooth,
    ObjectiveVector, Problem, ProxFunction, Quadratic, QuadraticObjective, SmoothPart,
};
pub use solver::{
    fista_step, run_solver, sufficient_decrease_check, FistaStep, IterationRecord, SolveResult,
    SolveStatus, SolverConfig, Variant,
};
pub use subproblem::{solve_subproblem, SubproblemConfig, SubproblemSolution};
pub use suite::{builtin_problem, ProblemDescriptor, ProblemRegistry};
