//! In-place evaluation of the hybrid recursion.
//!
//! Walks the same tree as the matrix-level `select_pivot`/`expand_once`
//! pair: same pivot rule, same child layout, and the same orientation flip
//! after a column pivot. Instead of copying each child, the engine keeps one
//! dense buffer plus ordered lists of the live rows and columns. A child is
//! formed by unlinking a row and a column and rewriting one column; every
//! write goes to an undo log that is unwound once the subtree is evaluated,
//! so a node costs `O(n)` rather than `O(n^2)`.

use crate::error::Result;
use crate::exact::hybrid::EXPANSION_THRESHOLD;
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

const ROW: usize = 0;
const COL: usize = 1;

pub(crate) struct Engine<T> {
    stride: usize,
    data: Vec<T>,
    /// Live physical indices, in order, of physical rows and columns.
    live: [Vec<usize>; 2],
    /// Nonzero counts by physical index, over live lines only.
    counts: [Vec<u32>; 2],
    /// When set, logical rows are physical columns.
    flipped: bool,
    /// Strides of logical rows and logical columns in `data`.
    steps: (usize, usize),
    entry_log: Vec<(usize, T)>,
    count_log: Vec<(usize, usize, u32)>,
    leaf: fn(&SparseMatrix<T>) -> Result<T>,
}

#[derive(Clone, Copy)]
enum Child<T> {
    /// column `keep` <- `c_drop * col(drop) + c_keep * col(keep)`, `drop` removed
    Merge {
        keep: usize,
        drop: usize,
        c_drop: T,
        c_keep: T,
    },
    /// column `col` removed, then `pad` (or the first row if none) scaled by `v`
    Cofactor { col: usize, v: T, pad: Option<usize> },
}

impl<T: Scalar> Engine<T> {
    pub(crate) fn new(leaf: fn(&SparseMatrix<T>) -> Result<T>) -> Self {
        Self {
            stride: 0,
            data: Vec::new(),
            live: [Vec::new(), Vec::new()],
            counts: [Vec::new(), Vec::new()],
            flipped: false,
            steps: (0, 1),
            entry_log: Vec::new(),
            count_log: Vec::new(),
            leaf,
        }
    }

    pub(crate) fn permanent(&mut self, a: &SparseMatrix<T>) -> Result<T> {
        let n = a.order();
        self.stride = n;
        self.data = a.as_slice().to_vec();
        self.live = [(0..n).collect(), (0..n).collect()];
        self.counts = [a.row_counts().to_vec(), a.col_counts().to_vec()];
        self.set_flipped(false);
        self.entry_log.clear();
        self.count_log.clear();
        self.solve()
    }

    /// (logical row axis, logical column axis)
    #[inline]
    fn axes(&self) -> (usize, usize) {
        if self.flipped {
            (COL, ROW)
        } else {
            (ROW, COL)
        }
    }

    fn set_flipped(&mut self, flipped: bool) {
        self.flipped = flipped;
        self.steps = if flipped {
            (1, self.stride)
        } else {
            (self.stride, 1)
        };
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.steps.0 + j * self.steps.1
    }

    /// Entry at logical row `i`, logical column `j` (both physical indices).
    #[inline]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[self.index(i, j)]
    }

    #[inline]
    fn bump(&mut self, axis: usize, k: usize, up: bool) {
        let c = self.counts[axis][k];
        self.count_log.push((axis, k, c));
        self.counts[axis][k] = if up { c + 1 } else { c - 1 };
    }

    fn write(&mut self, i: usize, j: usize, v: T) {
        let idx = self.index(i, j);
        let old = self.data[idx];
        self.entry_log.push((idx, old));
        self.data[idx] = v;
        if old.is_zero() != v.is_zero() {
            let (r_axis, c_axis) = self.axes();
            let up = old.is_zero();
            self.bump(r_axis, i, up);
            self.bump(c_axis, j, up);
        }
    }

    fn unwind(&mut self, entries: usize, counts: usize) {
        while self.entry_log.len() > entries {
            let (idx, old) = self.entry_log.pop().unwrap();
            self.data[idx] = old;
        }
        while self.count_log.len() > counts {
            let (axis, k, old) = self.count_log.pop().unwrap();
            self.counts[axis][k] = old;
        }
    }

    fn logical_matrix(&self) -> Result<SparseMatrix<T>> {
        let (r, c) = self.axes();
        let n = self.live[r].len();
        let mut data = Vec::with_capacity(n * n);
        for &i in &self.live[r] {
            for &j in &self.live[c] {
                data.push(self.at(i, j));
            }
        }
        SparseMatrix::from_vec(n, data)
    }

    fn min_count(&self, axis: usize) -> usize {
        self.live[axis]
            .iter()
            .map(|&k| self.counts[axis][k])
            .min()
            .unwrap_or(0) as usize
    }

    fn solve(&mut self) -> Result<T> {
        let n = self.live[ROW].len();
        let (r_axis, c_axis) = self.axes();
        if n <= 2 {
            let rows = &self.live[r_axis];
            let cols = &self.live[c_axis];
            return match n {
                0 => Ok(T::one()),
                1 => Ok(self.at(rows[0], cols[0])),
                _ => self
                    .at(rows[0], cols[0])
                    .mul(self.at(rows[1], cols[1]))?
                    .add(self.at(rows[0], cols[1]).mul(self.at(rows[1], cols[0]))?),
            };
        }

        let row_min = self.min_count(r_axis);
        let col_min = self.min_count(c_axis);
        let s = row_min.min(col_min);
        if s >= EXPANSION_THRESHOLD {
            return (self.leaf)(&self.logical_matrix()?);
        }
        if s == 0 {
            return Ok(T::zero());
        }

        let was_flipped = self.flipped;
        if row_min != s {
            self.set_flipped(!was_flipped);
        }
        let (r_axis, c_axis) = self.axes();
        let r_pos = self.live[r_axis]
            .iter()
            .position(|&i| self.counts[r_axis][i] as usize == s)
            .unwrap();
        let r = self.live[r_axis][r_pos];

        let mut pos = [0usize; 4];
        let mut vals = [T::zero(); 4];
        let mut pad = None;
        let mut k = 0;
        for &j in &self.live[c_axis] {
            let v = self.at(r, j);
            if v.is_zero() {
                pad.get_or_insert(j);
            } else {
                pos[k] = j;
                vals[k] = v;
                k += 1;
            }
            if k == s && pad.is_some() {
                break;
            }
        }

        let first = match s {
            1 => Child::Cofactor {
                col: pos[0],
                v: vals[0],
                pad,
            },
            _ => Child::Merge {
                keep: pos[0],
                drop: pos[1],
                c_drop: vals[0],
                c_keep: vals[1],
            },
        };
        let second = match s {
            3 => Some(Child::Cofactor {
                col: pos[2],
                v: vals[2],
                pad,
            }),
            4 => Some(Child::Merge {
                keep: pos[2],
                drop: pos[3],
                c_drop: vals[2],
                c_keep: vals[3],
            }),
            _ => None,
        };

        let mut acc = T::zero();
        for child in std::iter::once(first).chain(second) {
            acc = acc.add(self.visit(r_pos, &pos[..s], child)?)?;
        }
        self.set_flipped(was_flipped);
        Ok(acc)
    }

    /// Applies `child` in place, evaluates it and restores the parent.
    fn visit(&mut self, r_pos: usize, pos: &[usize], child: Child<T>) -> Result<T> {
        let (r_axis, c_axis) = self.axes();
        let removed = match child {
            Child::Merge { drop, .. } => drop,
            Child::Cofactor { col, .. } => col,
        };
        let marks = (self.entry_log.len(), self.count_log.len());

        let r = self.live[r_axis].remove(r_pos);
        let c_pos = self.live[c_axis].iter().position(|&j| j == removed).unwrap();
        self.live[c_axis].remove(c_pos);
        for &j in pos {
            self.bump(c_axis, j, false);
        }
        for t in 0..self.live[r_axis].len() {
            let i = self.live[r_axis][t];
            if !self.at(i, removed).is_zero() {
                self.bump(r_axis, i, false);
            }
        }

        let result = self.fill_child(child, pos);

        self.unwind(marks.0, marks.1);
        self.live[c_axis].insert(c_pos, removed);
        self.live[r_axis].insert(r_pos, r);
        result
    }

    fn fill_child(&mut self, child: Child<T>, pos: &[usize]) -> Result<T> {
        let (r_axis, c_axis) = self.axes();
        let n = self.live[r_axis].len();
        match child {
            Child::Merge {
                keep,
                drop,
                c_drop,
                c_keep,
            } => {
                for t in 0..n {
                    let i = self.live[r_axis][t];
                    let merged = c_drop.mul(self.at(i, drop))?.add(c_keep.mul(self.at(i, keep))?)?;
                    self.write(i, keep, merged);
                }
                if self.has_zero_column(pos, drop) {
                    return Ok(T::zero());
                }
            }
            Child::Cofactor { col, v, pad } => {
                if self.has_zero_column(pos, col) {
                    return Ok(T::zero());
                }
                if v != T::one() {
                    match pad {
                        Some(p) => {
                            for t in 0..n {
                                let i = self.live[r_axis][t];
                                let x = self.at(i, p).mul(v)?;
                                self.write(i, p, x);
                            }
                        }
                        None => {
                            let i = self.live[r_axis][0];
                            for t in 0..n {
                                let j = self.live[c_axis][t];
                                let x = self.at(i, j).mul(v)?;
                                self.write(i, j, x);
                            }
                        }
                    }
                }
            }
        }
        self.solve()
    }

    /// Only columns that lost an entry can have emptied.
    fn has_zero_column(&self, pos: &[usize], removed: usize) -> bool {
        let (_, c_axis) = self.axes();
        pos.iter()
            .any(|&j| j != removed && self.counts[c_axis][j] == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{expand_once, per_ryser, select_pivot};
    use crate::matrix::IntMatrix;
    use num_complex::Complex64;

    /// The matrix-level recursion, kept here as the reference the engine must match.
    fn reference(a: &IntMatrix) -> i128 {
        if a.order() <= 2 {
            return per_ryser(a).unwrap();
        }
        match select_pivot(a) {
            None => per_ryser(a).unwrap(),
            Some(p) if p.s == 0 => 0,
            Some(p) => expand_once(a, &p)
                .unwrap()
                .iter()
                .map(|(_, c)| reference(c))
                .sum(),
        }
    }

    #[test]
    fn engine_matches_matrix_recursion() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..300 {
            let n = 3 + (next() % 10) as usize;
            let a = IntMatrix::from_fn(n, |_, _| {
                let r = next() % 10;
                if r < 3 {
                    (r as i128) - 1 + (next() % 3) as i128
                } else {
                    0
                }
            });
            let mut e = Engine::<i128>::new(per_ryser);
            assert_eq!(e.permanent(&a).unwrap(), reference(&a));
        }
    }

    #[test]
    fn complex_engine() {
        let a = IntMatrix::from_rows(&[
            vec![0, 1, 1, 0, 1],
            vec![1, 0, 1, 1, 0],
            vec![1, 1, 0, 1, 0],
            vec![0, 1, 1, 0, 1],
            vec![1, 0, 0, 1, 0],
        ])
        .unwrap();
        let x = Complex64::new(0.3, 0.7);
        let b = crate::matrix::ComplexMatrix::shifted_negation(&a, x);
        let mut e = Engine::<Complex64>::new(per_ryser);
        let got = e.permanent(&b).unwrap();
        let want = crate::exact::per_bruteforce(&b).unwrap();
        assert!((got - want).norm() < 1e-12 * want.norm().max(1.0));
    }
}
