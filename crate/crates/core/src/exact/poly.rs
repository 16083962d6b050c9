//! Permanental polynomial `per(xI - A)` by interpolation at roots of unity.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::hybrid::per_hybrid;
use crate::io::AdjacencyList;
use crate::matrix::ComplexMatrix;

/// Largest tolerated distance from a recovered coefficient to its integer.
pub const POLY_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PermanentalPolynomial {
    /// Constant term first; length `n + 1`.
    pub coefficients: Vec<i128>,
    /// Worst rounding residual over all coefficients (real and imaginary parts).
    pub max_residual: f64,
}

/// The `k`-th of the `m`-th roots of unity, reduced mod `m` before the trig call.
pub fn root_of_unity(k: usize, m: usize) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (k % m) as f64 / m as f64)
}

pub fn permanental_polynomial(adj: &AdjacencyList) -> Result<PermanentalPolynomial> {
    permanental_polynomial_with(adj, POLY_TOLERANCE, per_hybrid)
}

/// Same as [`permanental_polynomial`] with a caller-supplied evaluator, so
/// the evaluations can be spread over a worker pool.
pub fn permanental_polynomial_with(
    adj: &AdjacencyList,
    tolerance: f64,
    mut eval: impl FnMut(&ComplexMatrix) -> Result<Complex64>,
) -> Result<PermanentalPolynomial> {
    let values = evaluation_matrices(adj)?
        .iter()
        .map(&mut eval)
        .collect::<Result<Vec<_>>>()?;
    interpolate(&values, tolerance)
}

/// `xI - A` at each of the `n + 1` roots of unity, in root order.
pub fn evaluation_matrices(adj: &AdjacencyList) -> Result<Vec<ComplexMatrix>> {
    let n = adj.vertex_count();
    if n == 0 {
        return Err(Error::Invalid("graph has no vertices".into()));
    }
    let a = adj.to_matrix();
    let points = n + 1;
    Ok((0..points)
        .map(|k| ComplexMatrix::shifted_negation(&a, root_of_unity(k, points)))
        .collect())
}

/// Integer coefficients from values at consecutive roots of unity
/// (inverse discrete Fourier transform, then rounding).
pub fn interpolate(values: &[Complex64], tolerance: f64) -> Result<PermanentalPolynomial> {
    let points = values.len();
    let mut coefficients = Vec::with_capacity(points);
    let mut max_residual = 0.0f64;
    for m in 0..points {
        let sum: Complex64 = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * root_of_unity(points - (k * m) % points, points))
            .sum();
        let c = sum / points as f64;
        let rounded = c.re.round();
        max_residual = max_residual.max((c.re - rounded).abs()).max(c.im.abs());
        coefficients.push(rounded as i128);
    }
    if max_residual > tolerance {
        return Err(Error::PrecisionLoss {
            residual: max_residual,
            tolerance,
        });
    }
    Ok(PermanentalPolynomial {
        coefficients,
        max_residual,
    })
}
