//! Optimal transport from a 1D source density to a 2D target density.
//!
//! The transport potential `u` on `X ⊂ ℝ` solves a non-local Monge-Ampère
//! type ODE in which, for every `x`, the target density is integrated along
//! the level curve `{y : u'(x) + ∂c/∂x(x, y) = 0}`. The crate discretizes
//! that equation with a monotone, proper finite-difference scheme built on a
//! variable-width discrete delta function and solves the resulting
//! piecewise-smooth system with damped semismooth Newton.
//!
//! Module map:
//! - [`problem`]: domains, costs, densities, grids and problem validation.
//! - [`benchmarks`]: the three reference problems with exact solutions.
//! - [`scheme`]: residual and generalized Jacobian assembly.
//! - [`solver`]: Newton iteration and mean-zero normalization.
//! - [`verification`]: oracles, property probes and convergence studies.
//! - [`cli`]: the `otmonge` command-line front end.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod parallel;
pub mod problem;
pub mod scheme;
mod shooting;
pub mod solver;
pub mod verification;

pub use benchmarks::{exact_error, make_problem, BenchmarkId};
pub use error::{Error, Result};
pub use linalg::{tridiagonal_solve, TridiagonalMatrix};
pub use parallel::Execution;
pub use problem::{
    build_grids, support_mask, validate_problem, GridPair, Interval, ProblemSpec, Square,
};
pub use scheme::{build_context, GridFunction, SchemeContext, SchemeOptions};
pub use solver::{
    newton_solve, normalize_mean_zero, InitialGuess, SolutionVector, SolverConfig, StepKind,
};
