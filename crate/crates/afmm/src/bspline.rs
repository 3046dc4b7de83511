//! Cubic B-spline bases on [0, 1] with evenly spaced interior knots, and the
//! second-order random-walk penalty used for P-spline smoothing.
//!
//! The full clamped basis of degree d with q interior knots has q + d + 1
//! functions summing to one everywhere. The first column is dropped because
//! the model carries a separate per-subject intercept; with d = 3 and q = 7
//! that leaves p = 10 coefficients.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A B-spline basis specification; build design matrices for any grid with
/// [`BsplineBasis::design_matrix`].
#[derive(Debug, Clone)]
pub struct BsplineBasis {
    pub degree: usize,
    pub interior_knots: usize,
    /// Retained basis functions after dropping the first column.
    pub p: usize,
    knots: Vec<f64>,
}

impl BsplineBasis {
    pub fn new(degree: usize, interior_knots: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::invalid("spline degree must be at least 1".to_string()));
        }
        // clamped knot vector: degree+1 copies of each endpoint
        let mut knots = vec![0.0; degree + 1];
        for i in 1..=interior_knots {
            knots.push(i as f64 / (interior_knots + 1) as f64);
        }
        knots.extend(vec![1.0; degree + 1]);
        Ok(Self {
            degree,
            interior_knots,
            p: interior_knots + degree,
            knots,
        })
    }

    /// Number of basis functions before the intercept column is dropped.
    pub fn full_size(&self) -> usize {
        self.interior_knots + self.degree + 1
    }

    /// Evaluate every basis function (pre-drop) at t in [0, 1].
    pub fn eval_full(&self, t: f64) -> Vec<f64> {
        let nb = self.full_size();
        let d = self.degree;
        let knots = &self.knots;
        // Cox-de Boor triangle over all functions
        let mut b = vec![0.0; knots.len() - 1];
        for j in 0..knots.len() - 1 {
            let right_closed = (t - 1.0).abs() < 1e-14 && knots[j] < knots[j + 1];
            if (t >= knots[j] && t < knots[j + 1]) || (right_closed && knots[j + 1] >= 1.0) {
                b[j] = 1.0;
                break;
            }
        }
        for k in 1..=d {
            let mut next = vec![0.0; knots.len() - 1 - k];
            for j in 0..next.len() {
                let d1 = knots[j + k] - knots[j];
                let d2 = knots[j + k + 1] - knots[j + 1];
                let left = if d1 > 0.0 { (t - knots[j]) / d1 * b[j] } else { 0.0 };
                let right = if d2 > 0.0 {
                    (knots[j + k + 1] - t) / d2 * b[j + 1]
                } else {
                    0.0
                };
                next[j] = left + right;
            }
            b = next;
        }
        b.truncate(nb);
        b
    }

    /// m x p design matrix for a sorted grid in [0, 1], first column dropped.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let m = grid.len();
        if m < self.p {
            return Err(Error::domain(format!(
                "need at least p={} grid points for a rank-{} design, got {m}",
                self.p, self.p
            )));
        }
        if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::domain("grid points must lie in [0, 1]".to_string()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("grid must be sorted".to_string()));
        }
        let mut x = DMatrix::zeros(m, self.p);
        for (i, &t) in grid.iter().enumerate() {
            let row = self.eval_full(t);
            for j in 1..self.full_size() {
                x[(i, j - 1)] = row[j];
            }
        }
        Ok(x)
    }
}

/// Convenience constructor: basis plus its design matrix on `grid`.
pub fn build_basis(
    grid: &[f64],
    degree: usize,
    interior_knots: usize,
) -> Result<(BsplineBasis, DMatrix<f64>)> {
    let basis = BsplineBasis::new(degree, interior_knots)?;
    let design = basis.design_matrix(grid)?;
    Ok((basis, design))
}

/// Second-order random-walk penalty S = D'D with D the (p-2) x p
/// second-difference operator. S is positive semidefinite with a
/// two-dimensional null space (constants and linear ramps).
pub fn rw2_penalty(p: usize) -> Result<DMatrix<f64>> {
    if p < 3 {
        return Err(Error::invalid("RW2 penalty needs p >= 3".to_string()));
    }
    let mut d = DMatrix::zeros(p - 2, p);
    for r in 0..p - 2 {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    Ok(d.transpose() * d)
}
