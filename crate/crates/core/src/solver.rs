//! Damped semismooth Newton iteration for the discrete system `F(u) = 0`.
//!
//! Rows whose discrete slopes leave the range of `−c_x` have a vanishing
//! delta weight and decouple from their neighbours, and a plain damped
//! Newton iteration can crawl for hundreds of steps before it leaves such a
//! region. When the line search has to cut the step below
//! [`SolverConfig::stall_step`] the iterate is replaced once by a shooting
//! sweep on `u_0` (see [`StepKind::Shooting`]), after which Newton finishes.

use crate::error::{Error, Result};
use crate::linalg::tridiagonal_solve;
use crate::scheme::{
    assemble_state_residual, assemble_state_residual_and_jacobian, GridFunction, SchemeContext,
};
use crate::shooting::shoot;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    /// `½ (x − x_mid)²`
    QuadraticBowl,
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Convergence threshold on `‖F‖_∞`.
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Step-length reduction factor of the backtracking search.
    pub backtrack_factor: f64,
    /// Below this step length the full Newton step is taken instead.
    pub min_step: f64,
    /// Accepted step lengths below this trigger the shooting correction.
    /// Zero disables it.
    pub stall_step: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_iters: 100,
            backtrack_factor: 0.5,
            min_step: 2f64.powi(-20),
            stall_step: 2f64.powi(-4),
            initial_guess: InitialGuess::Zero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidConfig("residual_tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidConfig(
                "backtrack_factor must lie in (0, 1)".into(),
            ));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::InvalidConfig("min_step must lie in (0, 1]".into()));
        }
        if !(self.stall_step >= 0.0 && self.stall_step <= 1.0) {
            return Err(Error::InvalidConfig("stall_step must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Newton step accepted by the backtracking search.
    Damped,
    /// The line search bottomed out and the full step was taken.
    FullStepFallback,
    /// The iterate was replaced by a shooting sweep seeded with its `u_0`.
    Shooting,
}

/// One accepted update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub residual_norm: f64,
    pub step_length: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionVector {
    pub x_nodes: Vec<f64>,
    /// Mean-zero potential.
    pub u: Vec<f64>,
    /// Solution of the discrete system before normalization.
    pub raw_v: Vec<f64>,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl SolutionVector {
    /// Wraps given nodal values as a converged solution without solving.
    pub fn from_values(x_nodes: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            x_nodes,
            u: normalize_mean_zero(&values),
            raw_v: values,
            iterations: 0,
            final_residual_norm: 0.0,
            converged: true,
            history: Vec::new(),
        }
    }
}

/// Subtracts the arithmetic mean over all nodes.
pub fn normalize_mean_zero(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| {
        if x.abs() > m || x.is_nan() {
            x.abs()
        } else {
            m
        }
    })
}

fn initial_values(ctx: &SchemeContext, guess: &InitialGuess) -> Result<Vec<f64>> {
    let x = &ctx.grids.x_nodes;
    match guess {
        InitialGuess::Zero => Ok(vec![0.0; x.len()]),
        InitialGuess::QuadraticBowl => {
            let mid = 0.5 * (x[0] + x[x.len() - 1]);
            Ok(x.iter().map(|t| 0.5 * (t - mid) * (t - mid)).collect())
        }
        InitialGuess::Values(v) if v.len() == x.len() => Ok(v.clone()),
        InitialGuess::Values(v) => Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: v.len(),
        }),
    }
}

/// Solves the scheme with backtracking semismooth Newton and normalizes the
/// result to mean zero. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn newton_solve(ctx: &SchemeContext, cfg: &SolverConfig) -> Result<SolutionVector> {
    cfg.validate()?;
    let mut v = GridFunction::from_values(initial_values(ctx, &cfg.initial_guess)?);
    let (mut residual, mut jac) = assemble_state_residual_and_jacobian(ctx, &v)?;
    let mut norm = norm_inf(&residual);
    let mut history = Vec::new();
    let mut shot = false;

    while !(norm <= cfg.residual_tol) && history.len() < cfg.max_iters {
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let direction = tridiagonal_solve(&jac, &rhs)?;

        let mut alpha = 1.0;
        let mut kind = StepKind::Damped;
        let mut next = loop {
            let trial = v.add_scaled(alpha, &direction);
            let trial_norm = norm_inf(&assemble_state_residual(ctx, &trial)?);
            if trial_norm < norm {
                break trial;
            }
            alpha *= cfg.backtrack_factor;
            if alpha < cfg.min_step {
                kind = StepKind::FullStepFallback;
                alpha = 1.0;
                break v.add_scaled(1.0, &direction);
            }
        };
        if !shot && (alpha < cfg.stall_step || kind == StepKind::FullStepFallback) {
            shot = true;
            if let Some(candidate) = shoot(ctx, v.values()[0]) {
                let candidate_norm = norm_inf(&assemble_state_residual(ctx, &candidate)?);
                if candidate_norm < norm {
                    next = candidate;
                    alpha = 1.0;
                    kind = StepKind::Shooting;
                }
            }
        }
        v = next;
        (residual, jac) = assemble_state_residual_and_jacobian(ctx, &v)?;
        norm = norm_inf(&residual);
        history.push(IterationRecord {
            residual_norm: norm,
            step_length: alpha,
            kind,
        });
    }

    let raw_v = v.into_values();
    Ok(SolutionVector {
        x_nodes: ctx.grids.x_nodes.clone(),
        u: normalize_mean_zero(&raw_v),
        raw_v,
        iterations: history.len(),
        final_residual_norm: norm,
        converged: norm <= cfg.residual_tol,
        history,
    })
}
