//! Transport problem data: domains, cost, densities and the coupled grids.
//!
//! A [`ProblemSpec`] bundles everything the scheme needs to know about a
//! 1D-to-2D transport problem. The target set `Y` is described by a
//! membership predicate and embedded in an axis-aligned computational
//! [`Square`]; all cost evaluation is restricted to grid nodes inside `Y`
//! (the support mask).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative slack used when testing membership of grid nodes lying on `∂Y`.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Closed interval `[lo, hi]` holding the source domain `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Axis-aligned computational square enclosing the target set.
///
/// Stored as a lower-left corner and a side length so the square can be
/// centered on a bounding box whose two axes have different ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub lo: [f64; 2],
    pub side: f64,
}

impl Square {
    /// The square `[lo, hi]²`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidDomain { lo, hi });
        }
        Ok(Self {
            lo: [lo, lo],
            side: hi - lo,
        })
    }

    /// Smallest square containing the box `[min, max]`, centered on it.
    pub fn enclosing(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let w = [max[0] - min[0], max[1] - min[1]];
        let side = w[0].max(w[1]);
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidDomain {
                lo: min[0].min(min[1]),
                hi: max[0].max(max[1]),
            });
        }
        let center = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
        Ok(Self {
            lo: [center[0] - 0.5 * side, center[1] - 0.5 * side],
            side,
        })
    }

    pub fn width(&self) -> f64 {
        self.side
    }

    pub fn hi(&self) -> [f64; 2] {
        [self.lo[0] + self.side, self.lo[1] + self.side]
    }
}

/// A transport cost `c(x, y)` with the analytic partial derivatives the
/// scheme consumes.
pub trait CostFunction: Send + Sync {
    fn value(&self, x: f64, y: [f64; 2]) -> f64;
    /// `∂c/∂x`
    fn dx(&self, x: f64, y: [f64; 2]) -> f64;
    /// `∂²c/∂x²`
    fn dxx(&self, x: f64, y: [f64; 2]) -> f64;
    /// `(∂²c/∂x∂y₁, ∂²c/∂x∂y₂)`, the gradient of the level-set function.
    fn dx_dy(&self, x: f64, y: [f64; 2]) -> [f64; 2];
}

/// `c(x, y) = ½(x − y₁)² + ½(x − y₂)²`
#[derive(Debug, Clone, Copy, Default)]
pub struct QuadraticCost;

impl CostFunction for QuadraticCost {
    fn value(&self, x: f64, y: [f64; 2]) -> f64 {
        0.5 * (x - y[0]).powi(2) + 0.5 * (x - y[1]).powi(2)
    }

    fn dx(&self, x: f64, y: [f64; 2]) -> f64 {
        (x - y[0]) + (x - y[1])
    }

    fn dxx(&self, _x: f64, _y: [f64; 2]) -> f64 {
        2.0
    }

    fn dx_dy(&self, _x: f64, _y: [f64; 2]) -> [f64; 2] {
        [-1.0, -1.0]
    }
}

/// `c(x, y) = x (y₂ − √(1 − y₁²))`.
///
/// `1 − y₁²` is floored at [`ArcCost::RADICAND_FLOOR`] so the derivatives
/// stay finite on nodes with `|y₁| = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArcCost;

impl ArcCost {
    pub const RADICAND_FLOOR: f64 = 1e-12;

    fn root(y1: f64) -> f64 {
        (1.0 - y1 * y1).max(Self::RADICAND_FLOOR).sqrt()
    }
}

impl CostFunction for ArcCost {
    fn value(&self, x: f64, y: [f64; 2]) -> f64 {
        x * (y[1] - Self::root(y[0]))
    }

    fn dx(&self, _x: f64, y: [f64; 2]) -> f64 {
        y[1] - Self::root(y[0])
    }

    fn dxx(&self, _x: f64, _y: [f64; 2]) -> f64 {
        0.0
    }

    fn dx_dy(&self, _x: f64, y: [f64; 2]) -> [f64; 2] {
        [y[0] / Self::root(y[0]), 1.0]
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PlanarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type Membership = Arc<dyn Fn([f64; 2]) -> bool + Send + Sync>;

/// A complete transport problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub x_domain: Interval,
    pub y_square: Square,
    /// Membership in the true target `Y`. Should accept points on `∂Y`.
    pub y_membership: Membership,
    pub cost: Arc<dyn CostFunction>,
    /// Source density `f` on `X`.
    pub source: ScalarFn,
    /// Target density `g`; only ever evaluated where `y_membership` holds.
    pub target: PlanarFn,
    /// Exact mean-zero potential, when known.
    pub exact_u: Option<ScalarFn>,
    pub exact_du: Option<ScalarFn>,
    pub exact_d2u: Option<ScalarFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("x_domain", &self.x_domain)
            .field("y_square", &self.y_square)
            .field("has_exact", &self.exact_u.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn contains(&self, y: [f64; 2]) -> bool {
        (self.y_membership)(y)
    }

    /// `g` extended by zero outside `Y`.
    pub fn target_density(&self, y: [f64; 2]) -> f64 {
        if self.contains(y) {
            (self.target)(y)
        } else {
            0.0
        }
    }
}

/// The 1D grid on `X` and the 2D grid on the computational square.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPair {
    pub n_x: usize,
    pub h_x: f64,
    pub x_nodes: Vec<f64>,
    pub m_y: usize,
    pub h_y: f64,
    /// Node coordinates along the first axis of the square (`M + 1` values).
    pub y1_nodes: Vec<f64>,
    /// Node coordinates along the second axis.
    pub y2_nodes: Vec<f64>,
}

impl GridPair {
    /// Number of `y` nodes, `(M + 1)²`.
    pub fn y_len(&self) -> usize {
        (self.m_y + 1) * (self.m_y + 1)
    }

    /// Flat index of node `(j, k)`; `j` runs along `y₁`.
    pub fn y_index(&self, j: usize, k: usize) -> usize {
        j * (self.m_y + 1) + k
    }

    pub fn y_node(&self, idx: usize) -> [f64; 2] {
        let stride = self.m_y + 1;
        [self.y1_nodes[idx / stride], self.y2_nodes[idx % stride]]
    }

    pub fn y_nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.y1_nodes
            .iter()
            .flat_map(move |&a| self.y2_nodes.iter().map(move |&b| [a, b]))
    }
}

fn uniform_nodes(lo: f64, h: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + i as f64 * h).collect()
}

/// Builds the `X` grid with `N` subintervals and a `Y` grid whose spacing
/// is the closest integer subdivision to `h_x^{1/3}`.
pub fn build_grids(x_domain: Interval, y_square: Square, n: usize) -> Result<GridPair> {
    if n < 2 {
        return Err(Error::TooFewIntervals(n));
    }
    let h_x = x_domain.width() / n as f64;
    let target = h_x.cbrt();
    let m = ((y_square.width() / target).round() as usize).max(2);
    Ok(build_grids_with(x_domain, y_square, n, m))
}

/// Builds grids with an explicit `M`.
pub fn build_grids_with(x_domain: Interval, y_square: Square, n: usize, m: usize) -> GridPair {
    let h_x = x_domain.width() / n as f64;
    let h_y = y_square.width() / m as f64;
    GridPair {
        n_x: n,
        h_x,
        x_nodes: uniform_nodes(x_domain.lo, h_x, n),
        m_y: m,
        h_y,
        y1_nodes: uniform_nodes(y_square.lo[0], h_y, m),
        y2_nodes: uniform_nodes(y_square.lo[1], h_y, m),
    }
}

/// True exactly at the `y` nodes inside the target set.
pub fn support_mask(spec: &ProblemSpec, grids: &GridPair) -> Vec<bool> {
    grids.y_nodes().map(|y| spec.contains(y)).collect()
}

/// Result of checking a problem against the solver's hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Minimum of `|∇_y ∂c/∂x|` over masked nodes and all `x` nodes.
    pub min_mixed_norm: f64,
    pub min_source: f64,
    pub min_target: f64,
    pub max_target: f64,
    pub source_mass: f64,
    pub target_mass: f64,
    /// `|∫f − ∫g| / ∫f`
    pub mass_mismatch: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Composite trapezoid masses `(∫f, ∫g)` with `n_x` intervals on `X` and
/// `m_y` intervals per side of the square. `g` is extended by zero.
pub fn trapezoid_masses(spec: &ProblemSpec, n_x: usize, m_y: usize) -> (f64, f64) {
    let xd = spec.x_domain;
    let hx = xd.width() / n_x as f64;
    let weight = |i: usize, n: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
    let source_mass: f64 = (0..=n_x)
        .map(|i| weight(i, n_x) * (spec.source)(xd.lo + i as f64 * hx))
        .sum::<f64>()
        * hx;

    let sq = spec.y_square;
    let hy = sq.width() / m_y as f64;
    let mut target_mass = 0.0;
    for j in 0..=m_y {
        let y1 = sq.lo[0] + j as f64 * hy;
        let wj = weight(j, m_y);
        let mut col = 0.0;
        for k in 0..=m_y {
            let y2 = sq.lo[1] + k as f64 * hy;
            col += weight(k, m_y) * spec.target_density([y1, y2]);
        }
        target_mass += wj * col;
    }
    (source_mass, target_mass * hy * hy)
}

/// Checks the mixed-derivative bound, density ranges and mass balance.
///
/// Mass balance uses composite trapezoid quadrature on a 4× refinement of
/// `grids`.
pub fn validate_problem(
    spec: &ProblemSpec,
    grids: &GridPair,
    tol: f64,
) -> Result<ValidationReport> {
    let mask = support_mask(spec, grids);
    let mut min_mixed = f64::INFINITY;
    let mut min_target = f64::INFINITY;
    let mut max_target = f64::NEG_INFINITY;

    for (idx, y) in grids.y_nodes().enumerate() {
        if !mask[idx] {
            continue;
        }
        let g = (spec.target)(y);
        if !g.is_finite() {
            return Err(Error::InvalidProblem {
                x: f64::NAN,
                y1: y[0],
                y2: y[1],
                reason: "target density is not finite".into(),
            });
        }
        min_target = min_target.min(g);
        max_target = max_target.max(g);
        for &x in &grids.x_nodes {
            let grad = spec.cost.dx_dy(x, y);
            let values = [spec.cost.dx(x, y), spec.cost.dxx(x, y), grad[0], grad[1]];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem {
                    x,
                    y1: y[0],
                    y2: y[1],
                    reason: "cost derivative is not finite".into(),
                });
            }
            min_mixed = min_mixed.min(grad[0].hypot(grad[1]));
        }
    }

    let min_source = grids
        .x_nodes
        .iter()
        .map(|&x| (spec.source)(x))
        .fold(f64::INFINITY, f64::min);

    let (source_mass, target_mass) = trapezoid_masses(spec, 4 * grids.n_x, 4 * grids.m_y);
    let mass_mismatch = (source_mass - target_mass).abs() / source_mass.abs();
    let passed = mass_mismatch <= tol && min_mixed > 0.0;

    Ok(ValidationReport {
        min_mixed_norm: min_mixed,
        min_source,
        min_target,
        max_target,
        source_mass,
        target_mass,
        mass_mismatch,
        tolerance: tol,
        passed,
    })
}
