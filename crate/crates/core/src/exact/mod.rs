//! Exact permanents.

mod expand;
mod engine;
mod hybrid;
mod poly;
mod ryser;

pub use expand::{pre_expand, pre_expand_to_count, ExpansionNode};
pub use hybrid::{expand_once, per_hybrid, select_pivot, Axis, PivotChoice, EXPANSION_THRESHOLD};
pub use poly::{
    evaluation_matrices, interpolate, permanental_polynomial, permanental_polynomial_with,
    root_of_unity, PermanentalPolynomial,
    POLY_TOLERANCE,
};
pub use ryser::{per_ryser, RyserScalar, RYSER_MAX_ORDER};

use crate::error::{Error, Result};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

pub const BRUTEFORCE_MAX_ORDER: usize = 12;

/// Sum over permutations of products of entries, straight from the definition.
///
/// Permutations are enumerated row by row; a branch is abandoned as soon as it
/// picks a zero entry, since every completion of it contributes zero.
pub fn per_bruteforce<T: Scalar>(a: &SparseMatrix<T>) -> Result<T> {
    let n = a.order();
    if n > BRUTEFORCE_MAX_ORDER {
        return Err(Error::TooLarge {
            what: "brute-force enumeration",
            n,
            max: BRUTEFORCE_MAX_ORDER,
        });
    }
    fn walk<T: Scalar>(a: &SparseMatrix<T>, row: usize, used: u32, prefix: T) -> Result<T> {
        let n = a.order();
        if row == n {
            return Ok(prefix);
        }
        let mut acc = T::zero();
        for j in 0..n {
            if used & (1 << j) != 0 {
                continue;
            }
            let v = a.get(row, j);
            if v.is_zero() {
                continue;
            }
            acc = acc.add(walk(a, row + 1, used | (1 << j), prefix.mul(v)?)?)?;
        }
        Ok(acc)
    }
    walk(a, 0, 0, T::one())
}
