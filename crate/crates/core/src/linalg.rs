//! Tridiagonal storage and a banded LU solve with partial pivoting.

use crate::error::{Error, Result};

/// Square tridiagonal matrix stored as three bands aligned to rows.
///
/// Row `i` reads `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1]`; `sub[0]`
/// and `sup[n−1]` are unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn from_bands(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        for band in [&sub, &sup] {
            if band.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: band.len(),
                });
            }
        }
        let mut m = Self { sub, diag, sup };
        if n > 0 {
            m.sub[0] = 0.0;
            m.sup[n - 1] = 0.0;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        [self.sub[i], self.diag[i], self.sup[i]]
    }

    pub fn set_row(&mut self, i: usize, row: [f64; 3]) {
        let n = self.len();
        self.sub[i] = if i > 0 { row[0] } else { 0.0 };
        self.diag[i] = row[1];
        self.sup[i] = if i + 1 < n { row[2] } else { 0.0 };
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|i| self.sub[i].abs() + self.diag[i].abs() + self.sup[i].abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting between
/// adjacent rows, which fills in one extra superdiagonal.
pub fn tridiagonal_solve(a: &TridiagonalMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let small = f64::EPSILON * a.norm_inf();
    let singular = |p: f64| !p.is_finite() || p.abs() <= small || p == 0.0;

    // Row i of U holds (d[i], u1[i], u2[i]) on columns i, i+1, i+2.
    let mut d = a.diag.clone();
    let mut u1 = a.sup.clone();
    let mut u2 = vec![0.0; n];
    let mut l = a.sub.clone();
    let mut x = b.to_vec();

    for i in 0..n - 1 {
        let below = l[i + 1];
        if d[i].abs() >= below.abs() {
            if singular(d[i]) {
                return Err(Error::SingularPivot(i));
            }
            let factor = below / d[i];
            d[i + 1] -= factor * u1[i];
            x[i + 1] -= factor * x[i];
        } else {
            let factor = d[i] / below;
            // swap rows i and i+1
            d[i] = below;
            let old_d_next = d[i + 1];
            let old_u1_next = if i + 1 < n - 1 { u1[i + 1] } else { 0.0 };
            d[i + 1] = u1[i] - factor * old_d_next;
            u1[i] = old_d_next;
            u2[i] = old_u1_next;
            if i + 1 < n - 1 {
                u1[i + 1] = -factor * old_u1_next;
            }
            let xi = x[i];
            x[i] = x[i + 1];
            x[i + 1] = xi - factor * x[i + 1];
        }
        l[i + 1] = 0.0;
    }
    if singular(d[n - 1]) {
        return Err(Error::SingularPivot(n - 1));
    }

    for i in (0..n).rev() {
        let mut acc = x[i];
        if i + 1 < n {
            acc -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * x[i + 2];
        }
        x[i] = acc / d[i];
    }
    Ok(x)
}
