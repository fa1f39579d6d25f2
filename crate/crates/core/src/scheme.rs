//! Monotone finite-difference residual for the 1D-to-2D transport equation.
//!
//! For each interior node `x_i` the scheme evaluates
//!
//! ```text
//! F_i = −h_y² Σ_{jk} (D_xx u_i + c_xx)⁺ · ψ · δ(u_i − u_{i−1}, u_i − u_{i+1}) + f(x_i) + ρ u_i
//! ```
//!
//! where the sum runs over target-grid nodes inside `Y`, `ψ = g |∇_y c_x| / |c_xy|`
//! and `δ` is a hat function of the discrete level-set value whose support
//! scales with `|∇_y c_x|₁`. The two boundary rows impose Neumann data given
//! by the extremal slopes of `−c_x` over the target. Every row is
//! non-decreasing in `u_i` and non-increasing in `u_{i±1}`, and adding a
//! constant `κ` to `u` shifts each row by exactly `ρ κ`.

use crate::error::{Error, Result};
use crate::linalg::TridiagonalMatrix;
use crate::parallel::{map_range, Execution};
use crate::problem::{support_mask, GridPair, ProblemSpec};

/// `(1/ε) max{1 − |z|/ε, 0}`
pub fn hat_delta(z: f64, eps: f64) -> f64 {
    (1.0 - z.abs() / eps).max(0.0) / eps
}

/// Three-point second difference `((u₋ − u) + (u₊ − u)) / h²`.
pub fn centered_second_diff(u_prev: f64, u_center: f64, u_next: f64, h_x: f64) -> f64 {
    ((u_prev - u_center) + (u_next - u_center)) / (h_x * h_x)
}

/// Monotone discrete delta evaluated on the one-sided level-set values.
///
/// `du_minus = u_i − u_{i−1}` and `du_plus = u_i − u_{i+1}`. The result is
/// non-increasing in both.
pub fn monotone_delta(du_minus: f64, du_plus: f64, c_x: f64, h_x: f64, eps: f64) -> f64 {
    let (m, _) = level_set_max(DeltaStencil::Monotone, du_minus, du_plus, c_x, h_x);
    hat_from_max(m, eps)
}

fn hat_from_max(m: f64, eps: f64) -> f64 {
    (1.0 - m / eps).max(0.0) / eps
}

/// Which entry of `max{a, b, 0}` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Backward,
    Forward,
    Zero,
}

/// `max{a, b, 0}` and the active branch; ties go to the earlier entry.
fn level_set_max(
    stencil: DeltaStencil,
    du_minus: f64,
    du_plus: f64,
    c_x: f64,
    h_x: f64,
) -> (f64, Branch) {
    let (sa, sb) = stencil.slopes(du_minus, du_plus, h_x);
    let a = sa + c_x;
    let b = sb - c_x;
    if a >= b && a >= 0.0 {
        (a, Branch::Backward)
    } else if b >= 0.0 {
        (b, Branch::Forward)
    } else {
        (0.0, Branch::Zero)
    }
}

/// How the delta support width is chosen at each node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    /// `h_y · max{|∂_{y₁} c_x| + |∂_{y₂} c_x|, 1}`, capped at the square width.
    GradientScaled,
    /// `multiple · h_y` everywhere, ignoring the level-set gradient.
    Fixed(f64),
}

/// Difference stencil feeding the discrete level-set function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaStencil {
    /// Backward difference in the first branch, forward in the second.
    Monotone,
    /// Forward and backward exchanged. Not monotone; kept as a negative control.
    Swapped,
}

impl DeltaStencil {
    /// `(s_a, s_b)` with branches `a = s_a + c_x` and `b = s_b − c_x`.
    fn slopes(self, du_minus: f64, du_plus: f64, h_x: f64) -> (f64, f64) {
        match self {
            DeltaStencil::Monotone => (du_minus / h_x, du_plus / h_x),
            DeltaStencil::Swapped => (-du_plus / h_x, -du_minus / h_x),
        }
    }

    /// Gradient of the active branch w.r.t. `(u_{i−1}, u_i, u_{i+1})`.
    fn branch_gradient(self, branch: Branch, h_x: f64) -> [f64; 3] {
        let r = 1.0 / h_x;
        match (self, branch) {
            (_, Branch::Zero) => [0.0; 3],
            (DeltaStencil::Monotone, Branch::Backward) => [-r, r, 0.0],
            (DeltaStencil::Monotone, Branch::Forward) => [0.0, r, -r],
            (DeltaStencil::Swapped, Branch::Backward) => [0.0, -r, r],
            (DeltaStencil::Swapped, Branch::Forward) => [r, -r, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOptions {
    pub epsilon: EpsilonRule,
    pub stencil: DeltaStencil,
    /// Skip target nodes whose delta weight is certified to be zero.
    pub pruning: bool,
    pub execution: Execution,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            epsilon: EpsilonRule::GradientScaled,
            stencil: DeltaStencil::Monotone,
            pruning: true,
            execution: Execution::default(),
        }
    }
}

/// Precomputed cost data at one masked target node for one `x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEntry {
    /// Flat index into the target grid.
    pub node: u32,
    pub c_x: f64,
    pub c_xx: f64,
    pub psi: f64,
    pub eps: f64,
}

/// Contiguous run of row entries with comparable `ε`, sorted by `c_x`.
#[derive(Debug, Clone)]
struct Group {
    start: usize,
    end: usize,
    eps_max: f64,
}

#[derive(Debug, Clone, Default)]
struct Row {
    /// Masked nodes grouped by `ε` scale, each group sorted by `c_x`, then by node index.
    entries: Vec<NodeEntry>,
    groups: Vec<Group>,
    eps_max: f64,
    c_x_range: (f64, f64),
    c_xx_max: f64,
    /// `max (ε − c_x)` over entries with `ψ > 0`.
    reach: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Everything the residual needs that does not depend on `u`.
#[derive(Debug, Clone)]
pub struct SchemeContext {
    pub grids: GridPair,
    pub options: SchemeOptions,
    pub mask: Vec<bool>,
    /// `f(x_i)`
    pub source: Vec<f64>,
    /// `inf_Y {−c_x(x_0, y)}` over masked nodes.
    pub left_slope: f64,
    /// `sup_Y {−c_x(x_N, y)}` over masked nodes.
    pub right_slope: f64,
    rows: Vec<Row>,
}

pub fn build_context(spec: &ProblemSpec, grids: &GridPair) -> Result<SchemeContext> {
    build_context_with(spec, grids, SchemeOptions::default())
}

pub fn build_context_with(
    spec: &ProblemSpec,
    grids: &GridPair,
    options: SchemeOptions,
) -> Result<SchemeContext> {
    let mask = support_mask(spec, grids);
    let masked: Vec<(u32, [f64; 2], f64)> = grids
        .y_nodes()
        .enumerate()
        .filter(|(idx, _)| mask[*idx])
        .map(|(idx, y)| (idx as u32, y, (spec.target)(y)))
        .collect();
    let n = grids.n_x;
    let h_y = grids.h_y;
    let eps_cap = spec.y_square.width();
    let cost = spec.cost.as_ref();

    let build_row = |i: usize| -> Result<Row> {
        if i == 0 || i == n {
            return Ok(Row::default());
        }
        let x = grids.x_nodes[i];
        let mut entries = Vec::with_capacity(masked.len());
        let mut eps_max: f64 = 0.0;
        for &(node, y, g) in &masked {
            let c_x = cost.dx(x, y);
            let c_xx = cost.dxx(x, y);
            let grad = cost.dx_dy(x, y);
            if ![c_x, c_xx, grad[0], grad[1], g]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::InvalidProblem {
                    x,
                    y1: y[0],
                    y2: y[1],
                    reason: "non-finite cost derivative or density".into(),
                });
            }
            let denom = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
            if denom == 0.0 {
                return Err(Error::DegenerateCost {
                    x,
                    y1: y[0],
                    y2: y[1],
                });
            }
            let psi = g * grad[0].hypot(grad[1]) / denom;
            let eps = match options.epsilon {
                EpsilonRule::GradientScaled => {
                    (h_y * (grad[0].abs() + grad[1].abs()).max(1.0)).min(eps_cap)
                }
                EpsilonRule::Fixed(multiple) => multiple * h_y,
            };
            eps_max = eps_max.max(eps);
            entries.push(NodeEntry {
                node,
                c_x,
                c_xx,
                psi,
                eps,
            });
        }
        // ε ∈ [h_y 2^{k−1}, h_y 2^k) lands in group k
        let scale = |e: &NodeEntry| (e.eps / h_y).log2().ceil().max(0.0) as u32;
        entries.sort_by(|p, q| {
            scale(p)
                .cmp(&scale(q))
                .then(p.c_x.total_cmp(&q.c_x))
                .then(p.node.cmp(&q.node))
        });
        let mut groups: Vec<Group> = Vec::new();
        for (k, e) in entries.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if scale(&entries[g.start]) == scale(e) => {
                    g.end = k + 1;
                    g.eps_max = g.eps_max.max(e.eps);
                }
                _ => groups.push(Group {
                    start: k,
                    end: k + 1,
                    eps_max: e.eps,
                }),
            }
        }
        let c_x_range = entries
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
                (lo.min(e.c_x), hi.max(e.c_x))
            });
        let c_xx_max = entries
            .iter()
            .map(|e| e.c_xx)
            .fold(f64::NEG_INFINITY, f64::max);
        let reach = entries
            .iter()
            .filter(|e| e.psi > 0.0)
            .map(|e| e.eps - e.c_x)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Row {
            entries,
            groups,
            eps_max,
            c_x_range,
            c_xx_max,
            reach,
        })
    };
    let rows = map_range(0..n + 1, options.execution, build_row)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let (x0, xn) = (grids.x_nodes[0], grids.x_nodes[n]);
    let mut left_slope = f64::INFINITY;
    let mut right_slope = f64::NEG_INFINITY;
    for &(_, y, _) in &masked {
        left_slope = left_slope.min(-cost.dx(x0, y));
        right_slope = right_slope.max(-cost.dx(xn, y));
    }
    if masked.is_empty() {
        return Err(Error::InvalidProblem {
            x: x0,
            y1: spec.y_square.lo[0],
            y2: spec.y_square.lo[1],
            reason: "no target grid node lies inside Y".into(),
        });
    }

    Ok(SchemeContext {
        grids: grids.clone(),
        options,
        mask,
        source: grids.x_nodes.iter().map(|&x| (spec.source)(x)).collect(),
        left_slope,
        right_slope,
        rows,
    })
}

impl SchemeContext {
    pub fn len(&self) -> usize {
        self.grids.n_x + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_x(&self) -> f64 {
        self.grids.h_x
    }

    pub fn h_y(&self) -> f64 {
        self.grids.h_y
    }

    /// Interior proper coefficient `h_y² + h_x/h_y`.
    pub fn rho_int(&self) -> f64 {
        self.grids.h_y * self.grids.h_y + self.grids.h_x / self.grids.h_y
    }

    /// Boundary proper coefficient `h_x`.
    pub fn rho_bdy(&self) -> f64 {
        self.grids.h_x
    }

    /// Masked-node data for interior index `i`, sorted by `c_x`.
    pub fn entries(&self, i: usize) -> &[NodeEntry] {
        &self.rows[i].entries
    }

    /// Range `(min, max)` of `−c_x(x_i, y)` over masked nodes, widened by
    /// the largest delta half-width of the row. Interior rows only.
    pub fn active_slope_range(&self, i: usize) -> Option<(f64, f64)> {
        let row = &self.rows[i];
        if row.entries.is_empty() {
            return None;
        }
        let (lo, hi) = row.c_x_range;
        Some((-hi - row.eps_max, -lo + row.eps_max))
    }

    /// Largest `c_xx` over the masked nodes of interior row `i`.
    pub(crate) fn c_xx_max(&self, i: usize) -> f64 {
        self.rows[i].c_xx_max
    }

    /// Backward slopes below this bound leave some weighted node of row `i`
    /// reachable by the delta as the forward slope grows.
    pub(crate) fn reach_bound(&self, i: usize) -> f64 {
        self.rows[i].reach
    }

    /// Copy with new evaluation options. The epsilon rule is baked into the
    /// tables at build time and is not changed.
    pub fn with_options(&self, options: SchemeOptions) -> Self {
        let mut ctx = self.clone();
        ctx.options.pruning = options.pruning;
        ctx.options.execution = options.execution;
        ctx.options.stencil = options.stencil;
        ctx
    }

    /// Entries that can carry a nonzero delta weight for the given
    /// differences, as index ranges into the row in summation order.
    fn candidates(
        &self,
        i: usize,
        du_minus: f64,
        du_plus: f64,
    ) -> impl Iterator<Item = &NodeEntry> + '_ {
        let row = &self.rows[i];
        let pruning = self.options.pruning;
        // a = s_a + c_x < ε and b = s_b − c_x < ε  ⇒  c_x ∈ (s_b − ε, ε − s_a)
        let (sa, sb) = self
            .options
            .stencil
            .slopes(du_minus, du_plus, self.grids.h_x);
        row.groups.iter().flat_map(move |g| {
            let group = &row.entries[g.start..g.end];
            if !pruning {
                return group.iter();
            }
            let lo = sb - g.eps_max;
            let hi = g.eps_max - sa;
            let slack = 1e-9 * (1.0 + lo.abs() + hi.abs());
            let (lo, hi) = (lo - slack, hi + slack);
            if !(lo <= hi) {
                return group[..0].iter();
            }
            let start = group.partition_point(|e| e.c_x < lo);
            let end = group.partition_point(|e| e.c_x <= hi);
            group[start..end.max(start)].iter()
        })
    }

    /// Interior row value from the local data `u_i`, `u_i − u_{i−1}` and
    /// `u_i − u_{i+1}`, and optionally its derivative w.r.t.
    /// `(u_{i−1}, u_i, u_{i+1})`.
    pub(crate) fn interior_local(
        &self,
        i: usize,
        uc: f64,
        du_minus: f64,
        du_plus: f64,
        with_jacobian: bool,
    ) -> (f64, [f64; 3]) {
        let h_x = self.grids.h_x;
        let dxx = (-du_minus - du_plus) / (h_x * h_x);
        let stencil = self.options.stencil;
        let dp = [1.0 / (h_x * h_x), -2.0 / (h_x * h_x), 1.0 / (h_x * h_x)];

        let mut sum = 0.0;
        let mut grad = [0.0; 3];
        for e in self.candidates(i, du_minus, du_plus) {
            let p = dxx + e.c_xx;
            if !(p > 0.0) {
                continue;
            }
            let (m, branch) = level_set_max(stencil, du_minus, du_plus, e.c_x, h_x);
            let delta = hat_from_max(m, e.eps);
            if !(delta > 0.0) {
                continue;
            }
            sum += p * e.psi * delta;
            if with_jacobian {
                let dm = stencil.branch_gradient(branch, h_x);
                let slope = -p / (e.eps * e.eps);
                for k in 0..3 {
                    grad[k] += e.psi * (dp[k] * delta + slope * dm[k]);
                }
            }
        }
        let h2 = self.grids.h_y * self.grids.h_y;
        let rho = self.rho_int();
        let value = -h2 * sum + self.source[i] + rho * uc;
        let row = [-h2 * grad[0], -h2 * grad[1] + rho, -h2 * grad[2]];
        (value, row)
    }

    fn boundary_row(&self, u: &GridFunction, end: End) -> (f64, [f64; 3]) {
        let h = self.grids.h_x;
        let n = self.grids.n_x;
        let (v, s) = (&u.values, &u.steps);
        match end {
            End::Left => (
                -s[1] / h + self.left_slope + h * v[0],
                [0.0, 1.0 / h + h, -1.0 / h],
            ),
            End::Right => (
                s[n] / h - self.right_slope + h * v[n],
                [-1.0 / h, 1.0 / h + h, 0.0],
            ),
        }
    }

    fn row(&self, u: &GridFunction, i: usize, with_jacobian: bool) -> (f64, [f64; 3]) {
        if i == 0 {
            self.boundary_row(u, End::Left)
        } else if i == self.grids.n_x {
            self.boundary_row(u, End::Right)
        } else {
            self.interior_local(i, u.values[i], u.steps[i], -u.steps[i + 1], with_jacobian)
        }
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: u.len(),
            });
        }
        Ok(())
    }
}

/// Nodal values stored together with their successive differences.
///
/// Second differences of a function with `|u| ≫ h²` lose most of their
/// digits when taken from the values; keeping the increments separately and
/// updating them with differenced corrections avoids that.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    /// `steps[i] = u_i − u_{i−1}`, `steps[0] = 0`.
    steps: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut steps = vec![0.0; values.len()];
        for i in 1..values.len() {
            steps[i] = values[i] - values[i - 1];
        }
        Self { values, steps }
    }

    /// Builds `u` from `u_0` and the increments `steps[1..]`.
    pub fn from_steps(u0: f64, mut steps: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(steps.len());
        if !steps.is_empty() {
            steps[0] = 0.0;
            let mut acc = u0;
            values.push(acc);
            for s in &steps[1..] {
                acc += s;
                values.push(acc);
            }
        }
        Self { values, steps }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `u + κ` with the increments left untouched.
    pub fn shifted(&self, kappa: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + kappa).collect(),
            steps: self.steps.clone(),
        }
    }

    /// `u + α d`, with the increments updated by `α (d_i − d_{i−1})`.
    pub fn add_scaled(&self, alpha: f64, d: &[f64]) -> Self {
        let values = self
            .values
            .iter()
            .zip(d)
            .map(|(v, di)| v + alpha * di)
            .collect();
        let mut steps = self.steps.clone();
        for i in 1..steps.len() {
            steps[i] += alpha * (d[i] - d[i - 1]);
        }
        Self { values, steps }
    }
}

/// Residual of interior row `1 ≤ i ≤ N−1`.
pub fn interior_residual(ctx: &SchemeContext, u: &[f64], i: usize) -> f64 {
    assert!(
        i >= 1 && i < ctx.grids.n_x,
        "interior index {i} out of range"
    );
    ctx.interior_local(i, u[i], u[i] - u[i - 1], u[i] - u[i + 1], false)
        .0
}

pub fn boundary_residual(ctx: &SchemeContext, u: &[f64], end: End) -> f64 {
    let n = ctx.grids.n_x;
    let h = ctx.grids.h_x;
    match end {
        End::Left => -(u[1] - u[0]) / h + ctx.left_slope + h * u[0],
        End::Right => (u[n] - u[n - 1]) / h - ctx.right_slope + h * u[n],
    }
}

pub fn assemble_residual(ctx: &SchemeContext, u: &[f64]) -> Result<Vec<f64>> {
    assemble_residual_with(ctx, u, ctx.options.execution)
}

pub fn assemble_residual_with(ctx: &SchemeContext, u: &[f64], exec: Execution) -> Result<Vec<f64>> {
    ctx.check_len(u)?;
    let state = GridFunction::from_values(u.to_vec());
    Ok(map_range(0..ctx.len(), exec, |i| {
        ctx.row(&state, i, false).0
    }))
}

pub fn assemble_state_residual(ctx: &SchemeContext, u: &GridFunction) -> Result<Vec<f64>> {
    ctx.check_len(&u.values)?;
    Ok(map_range(0..ctx.len(), ctx.options.execution, |i| {
        ctx.row(u, i, false).0
    }))
}

/// One element of the generalized Jacobian: each `max` is differentiated
/// along its active branch, with ties resolved toward the earlier branch and
/// the positive part's derivative at zero taken as zero.
pub fn assemble_generalized_jacobian(ctx: &SchemeContext, u: &[f64]) -> Result<TridiagonalMatrix> {
    Ok(assemble_residual_and_jacobian(ctx, u)?.1)
}

pub fn assemble_residual_and_jacobian(
    ctx: &SchemeContext,
    u: &[f64],
) -> Result<(Vec<f64>, TridiagonalMatrix)> {
    assemble_residual_and_jacobian_with(ctx, u, ctx.options.execution)
}

pub fn assemble_residual_and_jacobian_with(
    ctx: &SchemeContext,
    u: &[f64],
    exec: Execution,
) -> Result<(Vec<f64>, TridiagonalMatrix)> {
    ctx.check_len(u)?;
    state_residual_and_jacobian(ctx, &GridFunction::from_values(u.to_vec()), exec)
}

pub fn assemble_state_residual_and_jacobian(
    ctx: &SchemeContext,
    u: &GridFunction,
) -> Result<(Vec<f64>, TridiagonalMatrix)> {
    ctx.check_len(&u.values)?;
    state_residual_and_jacobian(ctx, u, ctx.options.execution)
}

fn state_residual_and_jacobian(
    ctx: &SchemeContext,
    u: &GridFunction,
    exec: Execution,
) -> Result<(Vec<f64>, TridiagonalMatrix)> {
    let rows = map_range(0..ctx.len(), exec, |i| ctx.row(u, i, true));
    let mut jac = TridiagonalMatrix::zeros(ctx.len());
    let mut residual = Vec::with_capacity(ctx.len());
    for (i, (value, row)) in rows.into_iter().enumerate() {
        residual.push(value);
        jac.set_row(i, row);
    }
    Ok((residual, jac))
}
