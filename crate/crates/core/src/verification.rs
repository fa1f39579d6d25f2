//! Independent oracles, property probes and convergence studies.
//!
//! Nothing here is used by the solver itself. The semi-discrete oracle
//! re-evaluates the target-side sum from the problem definition alone, so
//! it can cross-check [`interior_residual`] without sharing code with it.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::benchmarks::{exact_error, make_problem, BenchmarkId};
use crate::error::{Error, Result};
use crate::problem::{build_grids, build_grids_with, validate_problem, ProblemSpec};
use crate::scheme::{
    assemble_residual, assemble_state_residual, boundary_residual, build_context,
    build_context_with, centered_second_diff, interior_residual, monotone_delta, End, GridFunction,
    SchemeContext, SchemeOptions,
};
use crate::solver::{newton_solve, SolutionVector, SolverConfig};

/// Number of largest-`N` ladder points used by [`consistency_rate`].
pub const DEFAULT_FIT_POINTS: usize = 3;

/// Default mass-balance tolerance at working resolution.
pub const MASS_BALANCE_TOL: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h_x: f64,
    pub m: usize,
    pub h_y: f64,
    pub max_error: f64,
    pub newton_iterations: usize,
    /// Wall-clock time of the Newton solve alone.
    pub runtime_seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub benchmark: BenchmarkId,
    /// Sorted by `n`, strictly increasing.
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// True when any solve failed to converge.
    pub fn tainted(&self) -> bool {
        self.rows.iter().any(|r| !r.converged)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_error).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].max_error < w[0].max_error)
    }
}

/// Least-squares slope of `log(residual)` against `log(h_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub fitted_exponent: f64,
    /// Root-mean-square misfit of the fit in log space.
    pub fit_residual: f64,
    pub sample_count: usize,
    /// `(h_x, max interior residual)` for every ladder entry, fitted or not.
    pub samples: Vec<(f64, f64)>,
}

/// `h² Σ_{jk} δ_ε(du + c_x) (ddu + c_xx)⁺ ψ` on an `m_fine × m_fine` lattice
/// over the computational square, with exact derivatives in place of the
/// one-sided differences of the scheme.
pub fn semi_discrete_oracle(spec: &ProblemSpec, x: f64, du: f64, ddu: f64, m_fine: usize) -> f64 {
    let sq = spec.y_square;
    let h = sq.width() / m_fine as f64;
    let cost = spec.cost.as_ref();
    let mut sum = 0.0;
    for j in 0..=m_fine {
        let y1 = sq.lo[0] + j as f64 * h;
        for k in 0..=m_fine {
            let y = [y1, sq.lo[1] + k as f64 * h];
            if !spec.contains(y) {
                continue;
            }
            let curvature = ddu + cost.dxx(x, y);
            if curvature <= 0.0 {
                continue;
            }
            let [a, b] = cost.dx_dy(x, y);
            let eps = (h * (a.abs() + b.abs()).max(1.0)).min(sq.width());
            let hat = (1.0 - (du + cost.dx(x, y)).abs() / eps).max(0.0) / eps;
            if hat == 0.0 {
                continue;
            }
            let psi = (spec.target)(y) * a.hypot(b) / (a * a + b * b).sqrt();
            sum += hat * curvature * psi;
        }
    }
    h * h * sum
}

/// Which argument of a residual row a probe perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Previous,
    Center,
    Next,
}

/// A perturbation that moved a residual row the wrong way.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityWitness {
    pub row: usize,
    pub perturbed: Neighbor,
    /// `(u_{i−1}, u_i, u_{i+1})` before the perturbation; unused slots are zero.
    pub local: [f64; 3],
    pub delta: f64,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    /// The first violation found.
    pub witness: Option<MonotonicityWitness>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn row_value(ctx: &SchemeContext, u: &[f64], i: usize) -> f64 {
    let n = ctx.grids.n_x;
    if i == 0 {
        boundary_residual(ctx, u, End::Left)
    } else if i == n {
        boundary_residual(ctx, u, End::Right)
    } else {
        interior_residual(ctx, u, i)
    }
}

/// Random local states and positive bumps, checking with zero tolerance that
/// each row is non-increasing in its neighbours and non-decreasing in its
/// centre value.
///
/// Slopes are drawn around the row's active range so that both the delta
/// support and its exterior are exercised.
pub fn monotonicity_probe(ctx: &SchemeContext, trials: usize, seed: u64) -> MonotonicityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.grids.n_x;
    let h = ctx.h_x();
    let mut u = vec![0.0; n + 1];
    let mut violations = 0;
    let mut witness = None;

    for _ in 0..trials {
        let i = rng.gen_range(0..=n);
        let (lo, hi) = if i > 0 && i < n {
            ctx.active_slope_range(i).unwrap_or((-1.0, 1.0))
        } else {
            (ctx.left_slope, ctx.right_slope)
        };
        let pad = 0.5 * (hi - lo).abs().max(1.0);
        let (lo, hi) = (lo - pad, hi + pad);
        let center = rng.gen_range(-2.0..2.0);
        let back = rng.gen_range(lo..hi);
        let forward = rng.gen_range(lo..hi);
        let local = [center - h * back, center, center + h * forward];
        let delta = h * (hi - lo) * 10f64.powf(rng.gen_range(-4.0..0.0));

        let mut neighbors = Vec::with_capacity(3);
        if i > 0 {
            neighbors.push(Neighbor::Previous);
        }
        neighbors.push(Neighbor::Center);
        if i < n {
            neighbors.push(Neighbor::Next);
        }
        for which in neighbors {
            let slot = match which {
                Neighbor::Previous => 0,
                Neighbor::Center => 1,
                Neighbor::Next => 2,
            };
            for (k, v) in local.iter().enumerate() {
                if i + k >= 1 && i + k - 1 <= n {
                    u[i + k - 1] = *v;
                }
            }
            let before = row_value(ctx, &u, i);
            u[i + slot - 1] += delta;
            let after = row_value(ctx, &u, i);
            let wrong = match which {
                Neighbor::Center => after < before,
                _ => after > before,
            };
            if wrong || after.is_nan() {
                violations += 1;
                if witness.is_none() {
                    let mut shown = local;
                    if i == 0 {
                        shown[0] = 0.0;
                    }
                    if i == n {
                        shown[2] = 0.0;
                    }
                    witness = Some(MonotonicityWitness {
                        row: i,
                        perturbed: which,
                        local: shown,
                        delta,
                        before,
                        after,
                    });
                }
            }
        }
    }
    MonotonicityReport {
        trials,
        seed,
        violations,
        witness,
    }
}

/// Largest relative deviation of `residual(u + κ) − residual(u)` from
/// `ρ κ` over random `u` and `κ`. The state is shifted through its first
/// value, so the increments are bit-identical on both sides.
pub fn proper_identity_gap(ctx: &SchemeContext, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ctx.grids.n_x;
    let (lo, hi) = (
        ctx.left_slope.min(ctx.right_slope),
        ctx.left_slope.max(ctx.right_slope),
    );
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut values = Vec::with_capacity(n + 1);
        let mut acc: f64 = rng.gen_range(-1.0..1.0);
        for _ in 0..=n {
            values.push(acc);
            acc += ctx.h_x() * rng.gen_range(lo - 1.0..hi + 1.0);
        }
        let kappa = rng.gen_range(-10.0..10.0);
        let state = GridFunction::from_values(values);
        let r0 = assemble_state_residual(ctx, &state)?;
        let r1 = assemble_state_residual(ctx, &state.shifted(kappa))?;
        for i in 0..=n {
            let rho = if i == 0 || i == n {
                ctx.rho_bdy()
            } else {
                ctx.rho_int()
            };
            let scale = r0[i].abs().max(r1[i].abs()).max((rho * kappa).abs());
            if scale > 0.0 {
                worst = worst.max((r1[i] - r0[i] - rho * kappa).abs() / scale);
            }
        }
    }
    Ok(worst)
}

/// `max |ψ − g| / (1 + |g|)` over every masked node of every interior row.
pub fn psi_identity_gap(spec: &ProblemSpec, ctx: &SchemeContext) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 1..ctx.grids.n_x {
        for e in ctx.entries(i) {
            let g = (spec.target)(ctx.grids.y_node(e.node as usize));
            worst = worst.max((e.psi - g).abs() / (1.0 + g.abs()));
        }
    }
    worst
}

/// `(u′(x_0), u′(x_N))` implied by the boundary rows, read off the
/// residual at `u ≡ 0`.
pub fn extremal_slopes(ctx: &SchemeContext) -> (f64, f64) {
    let zero = vec![0.0; ctx.len()];
    (
        boundary_residual(ctx, &zero, End::Left),
        -boundary_residual(ctx, &zero, End::Right),
    )
}

fn exact_samples(spec: &ProblemSpec, x: &[f64]) -> Result<Vec<f64>> {
    let u = spec
        .exact_u
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("{} has no exact solution", spec.name)))?;
    Ok(x.iter().map(|&t| u(t)).collect())
}

/// Max interior residual of the scheme at the sampled exact solution,
/// optionally restricted to nodes with `x` in a closed window.
pub fn exact_interior_residual(
    spec: &ProblemSpec,
    ctx: &SchemeContext,
    window: Option<(f64, f64)>,
) -> Result<f64> {
    let x = &ctx.grids.x_nodes;
    let u = exact_samples(spec, x)?;
    let r = assemble_residual(ctx, &u)?;
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    Ok((1..ctx.grids.n_x)
        .filter(|&i| x[i] >= lo && x[i] <= hi)
        .fold(0.0, |m, i| m.max(r[i].abs())))
}

/// Least-squares fit of `(log x, log y)` pairs: `(slope, rms misfit)`.
fn log_log_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let misfit = logs
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / k;
    (slope, misfit.sqrt())
}

fn checked_ladder(ladder: &[usize], min_len: usize) -> Result<Vec<usize>> {
    if ladder.len() < min_len {
        return Err(Error::InvalidConfig(format!(
            "ladder needs at least {min_len} entries, got {}",
            ladder.len()
        )));
    }
    let mut sorted = ladder.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(
            "ladder entries must be distinct".into(),
        ));
    }
    Ok(sorted)
}

/// Settings of [`consistency_rate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    pub scheme: SchemeOptions,
    /// Number of largest-`N` ladder entries entering the fit.
    pub fit_points: usize,
    /// Only rows with `x` in this window enter the max; `None` takes every
    /// interior row.
    pub x_window: Option<(f64, f64)>,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            scheme: SchemeOptions::default(),
            fit_points: DEFAULT_FIT_POINTS,
            x_window: None,
        }
    }
}

/// Convergence rate of the max interior residual at the exact solution,
/// fitted over the three largest ladder entries.
pub fn consistency_rate(id: BenchmarkId, ladder: &[usize]) -> Result<RateEstimate> {
    consistency_rate_with(id, ladder, &RateOptions::default())
}

pub fn consistency_rate_with(
    id: BenchmarkId,
    ladder: &[usize],
    opts: &RateOptions,
) -> Result<RateEstimate> {
    let ladder = checked_ladder(ladder, 3)?;
    let fit_points = opts.fit_points;
    if fit_points < 3 || fit_points > ladder.len() {
        return Err(Error::InvalidConfig(format!(
            "fit_points must lie in [3, {}], got {fit_points}",
            ladder.len()
        )));
    }
    let spec = make_problem(id);
    let mut samples = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let grids = build_grids(spec.x_domain, spec.y_square, n)?;
        let ctx = build_context_with(&spec, &grids, opts.scheme)?;
        samples.push((
            grids.h_x,
            exact_interior_residual(&spec, &ctx, opts.x_window)?,
        ));
    }
    let (fitted_exponent, fit_residual) = log_log_fit(&samples[samples.len() - fit_points..]);
    Ok(RateEstimate {
        fitted_exponent,
        fit_residual,
        sample_count: fit_points,
        samples,
    })
}

/// Solves every ladder entry and records the error against the exact
/// solution. Non-converged entries stay in the report, see
/// [`ConvergenceReport::tainted`].
pub fn convergence_study(
    id: BenchmarkId,
    ladder: &[usize],
    cfg: &SolverConfig,
) -> Result<ConvergenceReport> {
    convergence_study_with(id, ladder, cfg, SchemeOptions::default())
}

pub fn convergence_study_with(
    id: BenchmarkId,
    ladder: &[usize],
    cfg: &SolverConfig,
    options: SchemeOptions,
) -> Result<ConvergenceReport> {
    let ladder = checked_ladder(ladder, 1)?;
    let spec = make_problem(id);
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in &ladder {
        let (row, _) = solve_entry_with(&spec, n, cfg, options)?;
        rows.push(row);
    }
    Ok(ConvergenceReport {
        benchmark: id,
        rows,
    })
}

/// One ladder entry of [`convergence_study`], also returning the solution.
pub fn solve_entry(
    spec: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
) -> Result<(ConvergenceRow, SolutionVector)> {
    solve_entry_with(spec, n, cfg, SchemeOptions::default())
}

pub fn solve_entry_with(
    spec: &ProblemSpec,
    n: usize,
    cfg: &SolverConfig,
    options: SchemeOptions,
) -> Result<(ConvergenceRow, SolutionVector)> {
    let grids = build_grids(spec.x_domain, spec.y_square, n)?;
    let ctx = build_context_with(spec, &grids, options)?;
    let start = Instant::now();
    let sol = newton_solve(&ctx, cfg)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let row = ConvergenceRow {
        n,
        h_x: grids.h_x,
        m: grids.m_y,
        h_y: grids.h_y,
        max_error: exact_error(&sol, spec)?,
        newton_iterations: sol.iterations,
        runtime_seconds,
        converged: sol.converged,
    };
    Ok((row, sol))
}

/// A target node carrying delta weight at one `x` node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportNode {
    /// Flat index into the target grid.
    pub node: usize,
    pub y: [f64; 2],
    pub weight: f64,
    pub psi: f64,
    /// Half-width of the delta at this node.
    pub eps: f64,
}

fn check_interior(ctx: &SchemeContext, sol: &SolutionVector, i: usize) -> Result<()> {
    if sol.raw_v.len() != ctx.len() {
        return Err(Error::DimensionMismatch {
            expected: ctx.len(),
            actual: sol.raw_v.len(),
        });
    }
    if i == 0 || i >= ctx.grids.n_x {
        return Err(Error::InvalidConfig(format!("node {i} is not interior")));
    }
    Ok(())
}

/// Masked target nodes with a positive monotone delta at interior node `i`:
/// the discrete trace of the curve `u′(x_i) + c_x(x_i, y) = 0`.
pub fn transport_support(
    ctx: &SchemeContext,
    sol: &SolutionVector,
    i: usize,
) -> Result<Vec<SupportNode>> {
    check_interior(ctx, sol, i)?;
    let v = &sol.raw_v;
    let (du_minus, du_plus) = (v[i] - v[i - 1], v[i] - v[i + 1]);
    let mut nodes: Vec<SupportNode> = ctx
        .entries(i)
        .iter()
        .filter_map(|e| {
            let weight = monotone_delta(du_minus, du_plus, e.c_x, ctx.h_x(), e.eps);
            (weight > 0.0).then(|| SupportNode {
                node: e.node as usize,
                y: ctx.grids.y_node(e.node as usize),
                weight,
                psi: e.psi,
                eps: e.eps,
            })
        })
        .collect();
    nodes.sort_by_key(|s| s.node);
    Ok(nodes)
}

/// `h_y² Σ (D_xx u_i + c_xx)⁺ ψ δ` over the transport support, which at a
/// solution balances `f(x_i) + ρ u_i` up to the residual of row `i`.
pub fn support_mass(ctx: &SchemeContext, sol: &SolutionVector, i: usize) -> Result<f64> {
    let support = transport_support(ctx, sol, i)?;
    let v = &sol.raw_v;
    let dxx = centered_second_diff(v[i - 1], v[i], v[i + 1], ctx.h_x());
    let by_node: std::collections::HashMap<u32, f64> =
        ctx.entries(i).iter().map(|e| (e.node, e.c_xx)).collect();
    let sum: f64 = support
        .iter()
        .map(|s| (dxx + by_node[&(s.node as u32)]).max(0.0) * s.psi * s.weight)
        .sum();
    Ok(ctx.h_y() * ctx.h_y() * sum)
}

/// Scheme-versus-oracle gap at the exact solution, normalized by
/// `h_x/h_y · (1 + max ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGap {
    pub n: usize,
    pub max_gap: f64,
    pub constant: f64,
}

/// Compares every interior row at the sampled exact solution with the
/// oracle evaluated on the working `y` grid with exact derivatives.
pub fn oracle_gap(id: BenchmarkId, n: usize) -> Result<OracleGap> {
    let spec = make_problem(id);
    let grids = build_grids(spec.x_domain, spec.y_square, n)?;
    let ctx = build_context(&spec, &grids)?;
    let (du, ddu) = match (&spec.exact_du, &spec.exact_d2u) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => {
            return Err(Error::Unsupported(format!(
                "{} lacks exact derivatives",
                spec.name
            )))
        }
    };
    let u = exact_samples(&spec, &grids.x_nodes)?;
    let mut max_gap: f64 = 0.0;
    let mut max_psi: f64 = 0.0;
    for i in 1..n {
        let x = grids.x_nodes[i];
        let scheme = interior_residual(&ctx, &u, i);
        let oracle = ctx.source[i] + ctx.rho_int() * u[i]
            - semi_discrete_oracle(&spec, x, du(x), ddu(x), grids.m_y);
        max_gap = max_gap.max((scheme - oracle).abs());
        max_psi = ctx.entries(i).iter().fold(max_psi, |m, e| m.max(e.psi));
    }
    Ok(OracleGap {
        n,
        max_gap,
        constant: max_gap / (grids.h_x / grids.h_y * (1.0 + max_psi)),
    })
}

/// Mass-balance mismatch of `id` at `n`, with quadrature on a 4× refinement.
pub fn mass_mismatch(id: BenchmarkId, n: usize) -> Result<f64> {
    let spec = make_problem(id);
    let grids = build_grids(spec.x_domain, spec.y_square, n)?;
    Ok(validate_problem(&spec, &grids, MASS_BALANCE_TOL)?.mass_mismatch)
}

/// Mass-balance mismatch with an explicit target-grid size.
pub fn mass_mismatch_with(id: BenchmarkId, n: usize, m: usize) -> Result<f64> {
    let spec = make_problem(id);
    let grids = build_grids_with(spec.x_domain, spec.y_square, n, m);
    Ok(validate_problem(&spec, &grids, MASS_BALANCE_TOL)?.mass_mismatch)
}

/// Outcome of one named check of [`run_checks`].
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The property suite behind the `verify` command.
pub fn run_checks(
    id: BenchmarkId,
    n: usize,
    seed: u64,
    options: SchemeOptions,
) -> Result<Vec<CheckResult>> {
    let spec = make_problem(id);
    let grids = build_grids(spec.x_domain, spec.y_square, n)?;
    let ctx = build_context_with(&spec, &grids, options)?;
    let mut checks = Vec::new();

    let probe = monotonicity_probe(&ctx, 10_000, seed);
    checks.push(CheckResult {
        name: "monotonicity",
        passed: probe.passed(),
        detail: match &probe.witness {
            None => format!("{} probes, seed {seed}, no violations", probe.trials),
            Some(w) => format!(
                "{} violations, first at row {} ({:?})",
                probe.violations, w.row, w.perturbed
            ),
        },
    });

    let gap = proper_identity_gap(&ctx, 100, seed)?;
    checks.push(CheckResult {
        name: "proper identity",
        passed: gap <= 1e-13,
        detail: format!("max relative deviation {gap:.3e}"),
    });

    let gap = psi_identity_gap(&spec, &ctx);
    checks.push(CheckResult {
        name: "psi equals g",
        passed: gap <= 1e-12,
        detail: format!("max |psi - g| / (1 + |g|) = {gap:.3e}"),
    });

    let report = validate_problem(&spec, &grids, MASS_BALANCE_TOL)?;
    checks.push(CheckResult {
        name: "mass balance",
        passed: report.passed,
        detail: format!(
            "source {:.10} target {:.10} mismatch {:.3e}",
            report.source_mass, report.target_mass, report.mass_mismatch
        ),
    });

    let rate = consistency_rate_with(
        id,
        &[n, 2 * n, 4 * n],
        &RateOptions {
            scheme: options,
            ..Default::default()
        },
    )?;
    checks.push(CheckResult {
        name: "consistency rate",
        passed: rate.fitted_exponent > 0.0,
        detail: format!(
            "fitted exponent {:.3} over N = {n}, {}, {}",
            rate.fitted_exponent,
            2 * n,
            4 * n
        ),
    });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::DeltaStencil;
    use std::f64::consts::{E, PI};

    fn context(id: BenchmarkId, n: usize) -> (ProblemSpec, SchemeContext) {
        let spec = make_problem(id);
        let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
        let ctx = build_context(&spec, &grids).unwrap();
        (spec, ctx)
    }

    #[test]
    fn log_log_fit_recovers_power_laws() {
        let pts: Vec<(f64, f64)> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&h: &f64| (h, 3.0 * h.powf(0.7)))
            .collect();
        let (slope, misfit) = log_log_fit(&pts);
        assert!((slope - 0.7).abs() < 1e-12);
        assert!(misfit < 1e-12);
    }

    #[test]
    fn oracle_trivial_cases() {
        let spec = make_problem(BenchmarkId::Rectangular);
        // c_xx = 2, so ddu = −3 clamps every summand
        assert_eq!(semi_discrete_oracle(&spec, 0.5, 1.6, -3.0, 64), 0.0);
        // −c_x = y₁ + y₂ − 1 ∈ [0, e + 1] at x = 0.5; a slope of 50 is far outside
        assert_eq!(semi_discrete_oracle(&spec, 0.5, 50.0, 1.0, 64), 0.0);
    }

    #[test]
    fn oracle_approaches_source_at_exact_solution() {
        let spec = make_problem(BenchmarkId::Rectangular);
        let x: f64 = 0.5;
        let f = (x.exp() + 2.0) * (x.exp() + 1.0);
        let gaps: Vec<f64> = [128, 256, 512]
            .iter()
            .map(|&m| (semi_discrete_oracle(&spec, x, x.exp(), x.exp(), m) - f).abs() / f)
            .collect();
        assert!(gaps[2] < 2e-2, "{gaps:?}");
        assert!(gaps[2] < gaps[0], "{gaps:?}");
    }

    #[test]
    fn probe_passes_on_the_scheme_and_catches_the_swapped_stencil() {
        let (_, ctx) = context(BenchmarkId::Rectangular, 64);
        let report = monotonicity_probe(&ctx, 2_000, 7);
        assert!(report.passed(), "{:?}", report.witness);

        let swapped = ctx.with_options(SchemeOptions {
            stencil: DeltaStencil::Swapped,
            ..ctx.options
        });
        let report = monotonicity_probe(&swapped, 2_000, 7);
        let w = report.witness.expect("a violation");
        assert!(w.row > 0 && w.row < 64);
    }

    #[test]
    fn probe_is_reproducible() {
        let (_, ctx) = context(BenchmarkId::Curved, 32);
        assert_eq!(
            monotonicity_probe(&ctx, 500, 3),
            monotonicity_probe(&ctx, 500, 3)
        );
    }

    #[test]
    fn extremal_slopes_of_rectangular() {
        let (_, ctx) = context(BenchmarkId::Rectangular, 64);
        let (left, right) = extremal_slopes(&ctx);
        assert!((left - 1.0).abs() < 2.0 * ctx.h_y());
        assert!((right - E).abs() < 2.0 * ctx.h_y());
    }

    #[test]
    fn extremal_slopes_of_curved() {
        let (_, ctx) = context(BenchmarkId::Curved, 64);
        let (left, right) = extremal_slopes(&ctx);
        assert!(left.abs() < 2.0 * ctx.h_y());
        assert!((right - PI / 2.0).abs() < 2.0 * ctx.h_y());
    }

    #[test]
    fn ladders_are_validated() {
        assert!(consistency_rate(BenchmarkId::Rectangular, &[64, 128]).is_err());
        assert!(consistency_rate(BenchmarkId::Rectangular, &[64, 64, 128]).is_err());
        assert!(
            convergence_study(BenchmarkId::Rectangular, &[], &SolverConfig::default()).is_err()
        );
    }

    #[test]
    fn study_sorts_its_ladder() {
        let report =
            convergence_study(BenchmarkId::Vanishing, &[32, 16], &SolverConfig::default()).unwrap();
        assert_eq!(
            report.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![16, 32]
        );
        assert!(!report.tainted());
    }

    #[test]
    fn support_balances_the_row_at_a_solution() {
        let (_, ctx) = context(BenchmarkId::Rectangular, 128);
        let sol = newton_solve(&ctx, &SolverConfig::default()).unwrap();
        for i in [16, 64, 100] {
            let mass = support_mass(&ctx, &sol, i).unwrap();
            let target = ctx.source[i] + ctx.rho_int() * sol.raw_v[i];
            assert!((mass - target).abs() <= 1e-9, "row {i}: {mass} vs {target}");
        }
        assert!(transport_support(&ctx, &sol, 0).is_err());
    }
}
