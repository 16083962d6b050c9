//! Column-merging expansion and the hybrid recursion built on it.
//!
//! For a pivot row whose nonzeros `a, b, c, d` sit in columns `y1..y4`
//! (ascending), with the rest of the row zero,
//!
//! ```text
//! per(A) = per([a*y2 + b*y1, y3, y4, Z]) + per([y1, y2, c*y4 + d*y3, Z])
//! ```
//!
//! where both right-hand matrices have the pivot row removed and the merged
//! column takes the lower of the two slots. When the row has one or three
//! nonzeros, the lone nonzero `v` at column `j` has a zero partner and its
//! child reduces to the cofactor: row and column `j` removed, with `v`
//! multiplying the padding column (the lowest-index column not among the
//! nonzeros) in place. A result with an all-zero column has permanent zero and
//! is dropped.

use crate::error::Result;
use crate::exact::ryser::RyserScalar;
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

/// Lines with fewer nonzeros than this are expanded; denser matrices go to Ryser.
pub const EXPANSION_THRESHOLD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotChoice {
    pub axis: Axis,
    pub line: usize,
    positions: [usize; 4],
    /// Minimal nonzero count over all rows and columns.
    pub s: usize,
}

impl PivotChoice {
    /// Nonzero positions along the pivot line, ascending.
    pub fn positions(&self) -> &[usize] {
        &self.positions[..self.s]
    }
}

/// Picks the sparsest line if it has fewer than five nonzeros.
///
/// Counts are taken on the support, so weighted and complex matrices pivot
/// exactly like their 0-1 pattern. Ties go to rows before columns, then to
/// the lowest index.
pub fn select_pivot<T: Scalar>(a: &SparseMatrix<T>) -> Option<PivotChoice> {
    let rows = a.row_counts();
    let cols = a.col_counts();
    let row_min = rows.iter().copied().min()? as usize;
    let col_min = cols.iter().copied().min()? as usize;
    let s = row_min.min(col_min);
    if s >= EXPANSION_THRESHOLD {
        return None;
    }
    let n = a.order();
    let mut positions = [0usize; 4];
    let (axis, line) = if row_min == s {
        let i = rows.iter().position(|&c| c as usize == s).unwrap();
        let nz = (0..n).filter(|&j| !a.get(i, j).is_zero());
        for (slot, j) in positions.iter_mut().zip(nz) {
            *slot = j;
        }
        (Axis::Row, i)
    } else {
        let j = cols.iter().position(|&c| c as usize == s).unwrap();
        let nz = (0..n).filter(|&i| !a.get(i, j).is_zero());
        for (slot, i) in positions.iter_mut().zip(nz) {
            *slot = i;
        }
        (Axis::Column, j)
    };
    Some(PivotChoice {
        axis,
        line,
        positions,
        s,
    })
}

/// One step of the expansion. Returns the surviving children (at most two),
/// each tagged with its branch number (1 or 2).
///
/// A column pivot is handled on the transpose, which has the same permanent.
pub fn expand_once<T: Scalar>(
    a: &SparseMatrix<T>,
    pivot: &PivotChoice,
) -> Result<Vec<(u8, SparseMatrix<T>)>> {
    match pivot.axis {
        Axis::Row => expand_row(a, pivot.line, pivot.positions()),
        Axis::Column => expand_row(&a.transpose(), pivot.line, pivot.positions()),
    }
}

fn expand_row<T: Scalar>(
    a: &SparseMatrix<T>,
    r: usize,
    pos: &[usize],
) -> Result<Vec<(u8, SparseMatrix<T>)>> {
    debug_assert!((1..=4).contains(&pos.len()));
    let v: Vec<T> = pos.iter().map(|&j| a.get(r, j)).collect();
    let pad = (0..a.order()).find(|j| !pos.contains(j));
    let mut out = Vec::with_capacity(2);

    // A1: slot y1 <- a*y2 + b*y1, y2 removed
    let first = match pos.len() {
        1 => cofactor_child(a, r, pos[0], v[0], pad)?,
        _ => merge_minor(a, r, pos[0], pos[1], v[0], v[1])?,
    };
    if let Some(m) = first {
        out.push((1, m));
    }

    // A2: slot y3 <- c*y4 + d*y3, y4 removed
    let second = match pos.len() {
        3 => cofactor_child(a, r, pos[2], v[2], pad)?,
        4 => merge_minor(a, r, pos[2], pos[3], v[2], v[3])?,
        _ => None,
    };
    if let Some(m) = second {
        out.push((2, m));
    }
    Ok(out)
}

/// Deletes row `r` and column `drop`; column `keep` becomes
/// `c_drop * col(drop) + c_keep * col(keep)`.
fn merge_minor<T: Scalar>(
    a: &SparseMatrix<T>,
    r: usize,
    keep: usize,
    drop: usize,
    c_drop: T,
    c_keep: T,
) -> Result<Option<SparseMatrix<T>>> {
    let n = a.order();
    let mut data = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != r) {
        let row = a.row(i);
        for (j, &x) in row.iter().enumerate() {
            if j == drop {
                continue;
            }
            if j == keep {
                let merged = c_drop.mul(row[drop])?.add(c_keep.mul(row[keep])?)?;
                data.push(merged);
            } else {
                data.push(x);
            }
        }
    }
    let m = SparseMatrix::from_vec(n - 1, data)?;
    Ok((!m.col_counts().contains(&0)).then_some(m))
}

/// `v` times the cofactor of `(r, j)`, with `v` folded into the padding
/// column. A fully dense 3x3 pivot row leaves no padding column; the first row
/// takes the factor then.
fn cofactor_child<T: Scalar>(
    a: &SparseMatrix<T>,
    r: usize,
    j: usize,
    v: T,
    pad: Option<usize>,
) -> Result<Option<SparseMatrix<T>>> {
    let mut m = minor(a, r, j);
    if m.col_counts().contains(&0) {
        return Ok(None);
    }
    if v != T::one() {
        match pad {
            Some(p) => m.scale_col(if p > j { p - 1 } else { p }, v)?,
            None => m.scale_row(0, v)?,
        }
    }
    Ok(Some(m))
}

fn minor<T: Scalar>(a: &SparseMatrix<T>, r: usize, c: usize) -> SparseMatrix<T> {
    let n = a.order();
    let data = (0..n)
        .filter(|&i| i != r)
        .flat_map(|i| {
            a.row(i)
                .iter()
                .enumerate()
                .filter(move |&(j, _)| j != c)
                .map(|(_, &x)| x)
        })
        .collect();
    SparseMatrix::from_vec(n - 1, data).expect("minor has (n-1)^2 entries")
}

/// Exact permanent: expand while some line has fewer than five nonzeros,
/// then finish with Ryser.
pub fn per_hybrid<T: RyserScalar>(a: &SparseMatrix<T>) -> Result<T> {
    T::hybrid_kernel(a)
}
