//! The three benchmark problems: a rotated rectangular target, densities
//! vanishing on the boundary, and a curved target under a non-quadratic cost.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::problem::{ArcCost, Interval, ProblemSpec, QuadraticCost, Square, MEMBERSHIP_SLACK};
use crate::solver::{normalize_mean_zero, SolutionVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Rectangular,
    Vanishing,
    Curved,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 3] = [Self::Rectangular, Self::Vanishing, Self::Curved];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Rectangular => "rectangular",
            Self::Vanishing => "vanishing",
            Self::Curved => "curved",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectangular" => Ok(Self::Rectangular),
            "vanishing" => Ok(Self::Vanishing),
            "curved" => Ok(Self::Curved),
            other => Err(Error::InvalidConfig(format!("unknown example '{other}'"))),
        }
    }
}

/// Membership in the rotated rectangle `s_lo ≤ y₁+y₂ ≤ s_hi`, `|y₂−y₁| ≤ t_max`.
fn rotated_rectangle(s_lo: f64, s_hi: f64, t_max: f64) -> impl Fn([f64; 2]) -> bool {
    move |y: [f64; 2]| {
        let s = y[0] + y[1];
        let t = y[1] - y[0];
        s >= s_lo - MEMBERSHIP_SLACK
            && s <= s_hi + MEMBERSHIP_SLACK
            && t.abs() <= t_max + MEMBERSHIP_SLACK
    }
}

/// Bounding box of the rotated rectangle above.
fn rotated_rectangle_box(s_lo: f64, s_hi: f64, t_max: f64) -> ([f64; 2], [f64; 2]) {
    let lo = 0.5 * (s_lo - t_max);
    let hi = 0.5 * (s_hi + t_max);
    ([lo, lo], [hi, hi])
}

fn arc_root(y1: f64) -> f64 {
    (1.0 - y1 * y1).max(0.0).sqrt()
}

pub fn make_problem(id: BenchmarkId) -> ProblemSpec {
    let x_domain = Interval::new(0.0, 1.0).expect("unit interval");
    match id {
        BenchmarkId::Rectangular => {
            let (lo, hi) = rotated_rectangle_box(1.0, E + 2.0, 1.0);
            ProblemSpec {
                name: id.to_string(),
                x_domain,
                y_square: Square::enclosing(lo, hi).expect("nonempty box"),
                y_membership: Arc::new(rotated_rectangle(1.0, E + 2.0, 1.0)),
                cost: Arc::new(QuadraticCost),
                source: Arc::new(|x: f64| (x.exp() + 2.0) * (x.exp() + 2.0 * x)),
                target: Arc::new(|y: [f64; 2]| y[0] + y[1]),
                exact_u: Some(Arc::new(|x: f64| x.exp() - E + 1.0)),
                exact_du: Some(Arc::new(|x: f64| x.exp())),
                exact_d2u: Some(Arc::new(|x: f64| x.exp())),
            }
        }
        BenchmarkId::Vanishing => {
            let (lo, hi) = rotated_rectangle_box(0.0, 2.0, 2.0);
            ProblemSpec {
                name: id.to_string(),
                x_domain,
                y_square: Square::enclosing(lo, hi).expect("nonempty box"),
                y_membership: Arc::new(rotated_rectangle(0.0, 2.0, 2.0)),
                cost: Arc::new(QuadraticCost),
                source: Arc::new(|x: f64| 128.0 / 3.0 * x * (1.0 - x)),
                target: Arc::new(|y: [f64; 2]| {
                    let s = y[0] + y[1];
                    let t = y[1] - y[0];
                    (s * (2.0 - s) * (4.0 - t * t)).max(0.0)
                }),
                exact_u: Some(Arc::new(|_| 0.0)),
                exact_du: Some(Arc::new(|_| 0.0)),
                exact_d2u: Some(Arc::new(|_| 0.0)),
            }
        }
        BenchmarkId::Curved => ProblemSpec {
            name: id.to_string(),
            x_domain,
            y_square: Square::enclosing([-1.0, -PI / 2.0], [1.0, 1.0]).expect("nonempty box"),
            y_membership: Arc::new(|y: [f64; 2]| {
                let w = arc_root(y[0]) - y[1];
                y[0].abs() <= 1.0 + MEMBERSHIP_SLACK
                    && (-MEMBERSHIP_SLACK..=PI / 2.0 + MEMBERSHIP_SLACK).contains(&w)
            }),
            cost: Arc::new(ArcCost),
            source: Arc::new(|x: f64| PI.powi(3) / 8.0 * (PI * x).sin()),
            target: Arc::new(|y: [f64; 2]| (arc_root(y[0]) - y[1]).max(0.0)),
            exact_u: Some(Arc::new(|x: f64| -(PI * x / 2.0).cos() + 2.0 / PI)),
            exact_du: Some(Arc::new(|x: f64| PI / 2.0 * (PI * x / 2.0).sin())),
            exact_d2u: Some(Arc::new(|x: f64| PI * PI / 4.0 * (PI * x / 2.0).cos())),
        },
    }
}

/// Max-norm distance between the computed potential and the exact one,
/// after both are shifted to discrete mean zero.
pub fn exact_error(sol: &SolutionVector, spec: &ProblemSpec) -> Result<f64> {
    let exact = spec
        .exact_u
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("{} has no exact solution", spec.name)))?;
    let samples: Vec<f64> = sol.x_nodes.iter().map(|&x| exact(x)).collect();
    let exact = normalize_mean_zero(&samples);
    let computed = normalize_mean_zero(&sol.u);
    Ok(computed
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_solutions() {
        let u = |id| make_problem(id).exact_u.unwrap();
        assert_relative_eq!(u(BenchmarkId::Rectangular)(1.0), 1.0, epsilon = 1e-15);
        assert_eq!(u(BenchmarkId::Vanishing)(0.37), 0.0);
        assert_relative_eq!(u(BenchmarkId::Curved)(1.0), 2.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn membership_examples() {
        let rect = make_problem(BenchmarkId::Rectangular);
        assert!(rect.contains([1.0, 0.0]));
        assert!(!rect.contains([0.0, 0.0]));
        let curved = make_problem(BenchmarkId::Curved);
        assert!(curved.contains([0.0, 0.0]));
        assert!(!curved.contains([0.0, -0.6]));
        assert!(!curved.contains([0.0, 1.2]));
        assert!(!curved.contains([1.1, 0.0]));
    }

    #[test]
    fn enclosing_squares() {
        let rect = make_problem(BenchmarkId::Rectangular).y_square;
        assert_relative_eq!(rect.lo[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(rect.side, (E + 3.0) / 2.0, epsilon = 1e-15);
        let van = make_problem(BenchmarkId::Vanishing).y_square;
        assert_eq!(van.lo, [-1.0, -1.0]);
        assert_eq!(van.side, 3.0);
        let curved = make_problem(BenchmarkId::Curved).y_square;
        assert_relative_eq!(curved.side, 1.0 + PI / 2.0);
        assert_relative_eq!(curved.lo[1], -PI / 2.0);
    }

    #[test]
    fn ids_round_trip() {
        for id in BenchmarkId::ALL {
            assert_eq!(id.as_str().parse::<BenchmarkId>().unwrap(), id);
        }
        assert!("ellipse".parse::<BenchmarkId>().is_err());
    }

    #[test]
    fn exact_error_ignores_constants() {
        let spec = make_problem(BenchmarkId::Curved);
        let x_nodes: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let exact = spec.exact_u.clone().unwrap();
        let u: Vec<f64> = x_nodes.iter().map(|&x| exact(x) + 3.5).collect();
        let sol = SolutionVector::from_values(x_nodes.clone(), u);
        assert!(exact_error(&sol, &spec).unwrap() < 1e-14);

        let mut no_exact = spec.clone();
        no_exact.exact_u = None;
        assert!(matches!(
            exact_error(&sol, &no_exact),
            Err(Error::Unsupported(_))
        ));
    }
}
