//! Text formats for graphs and matrices.
//!
//! Adjacency files hold one vertex per nonempty line with whitespace-separated
//! 1-based neighbour indices; lines starting with `#` are comments. Matrix
//! Market support covers the `coordinate` layout with `pattern` or `integer`
//! fields and `general` or `symmetric` storage.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyList {
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyList {
    /// Validates 1-based indices and rejects self-loops.
    pub fn new(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        for (k, list) in neighbors.iter().enumerate() {
            for &v in list {
                if v == 0 || v > n {
                    return Err(Error::IndexOutOfRange {
                        line: k + 1,
                        index: v,
                        n,
                    });
                }
                if v == k + 1 {
                    return Err(Error::Invalid(format!("vertex {v} lists itself")));
                }
            }
        }
        Ok(Self { neighbors })
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    /// 1-based neighbour indices of the 1-based vertex `k`.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k - 1]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Number of undirected edges, counting each symmetric pair once.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn to_matrix(&self) -> IntMatrix {
        let n = self.vertex_count();
        let mut m = IntMatrix::zeros(n);
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                m.set(i, j - 1, 1);
            }
        }
        m
    }

    /// Reads a 0-1 matrix with zero diagonal as a directed adjacency list.
    pub fn from_matrix(m: &IntMatrix) -> Result<Self> {
        let n = m.order();
        let mut neighbors = vec![Vec::new(); n];
        for (i, list) in neighbors.iter_mut().enumerate() {
            for j in 0..n {
                match m.get(i, j) {
                    0 => {}
                    1 if i != j => list.push(j + 1),
                    v => {
                        return Err(Error::Invalid(format!(
                            "entry ({}, {}) = {v} is not a graph edge",
                            i + 1,
                            j + 1
                        )))
                    }
                }
            }
        }
        Self::new(neighbors)
    }

    /// One line per vertex. A vertex without neighbours becomes a blank line,
    /// which the parser skips, so only graphs without isolated vertices
    /// survive a round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for list in &self.neighbors {
            let line: Vec<String> = list.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

pub fn parse_adjacency(text: &str) -> Result<AdjacencyList> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected a vertex index, found {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    AdjacencyList::new(rows)
}

pub fn parse_matrix_market(text: &str) -> Result<IntMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse {
            line: 1,
            msg: "missing %%MatrixMarket matrix header".into(),
        });
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported layout {}", fields[2]),
        });
    }
    let pattern = match fields[3].as_str() {
        "pattern" => true,
        "integer" => false,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported field {other}"),
            })
        }
    };
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unsupported symmetry {other}"),
            })
        }
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing size line".into(),
    })?;
    let dims = parse_numbers(size, size_line + 1)?;
    if dims.len() != 3 {
        return Err(Error::Parse {
            line: size_line + 1,
            msg: "size line must hold rows, cols, entries".into(),
        });
    }
    let (rows, cols, entries) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }

    let n = rows;
    let mut m = IntMatrix::zeros(n);
    let mut seen = HashSet::new();
    let mut count = 0;
    for (lineno, line) in body {
        let vals = parse_numbers(line, lineno + 1)?;
        let expected = if pattern { 2 } else { 3 };
        if vals.len() != expected {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected {expected} fields"),
            });
        }
        let (i, j) = (vals[0], vals[1]);
        for idx in [i, j] {
            if idx < 1 || idx as usize > n {
                return Err(Error::IndexOutOfRange {
                    line: lineno + 1,
                    index: idx.max(0) as usize,
                    n,
                });
            }
        }
        let (i, j) = (i as usize - 1, j as usize - 1);
        if symmetric && j > i {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: "symmetric storage must list the lower triangle".into(),
            });
        }
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateEntry {
                row: i + 1,
                col: j + 1,
            });
        }
        let v = if pattern { 1 } else { vals[2] };
        m.set(i, j, v);
        if symmetric && i != j {
            m.set(j, i, v);
        }
        count += 1;
    }
    if count != entries {
        return Err(Error::Parse {
            line: 2,
            msg: format!("header declares {entries} entries, found {count}"),
        });
    }
    Ok(m)
}

fn parse_numbers(line: &str, lineno: usize) -> Result<Vec<i128>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<i128>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected an integer, found {tok:?}"),
            })
        })
        .collect()
}

/// Writes a matrix in general coordinate format; a 0-1 matrix is written as
/// `pattern`, anything else as `integer`.
pub fn write_matrix_market(m: &IntMatrix) -> String {
    let n = m.order();
    let binary = m.as_slice().iter().all(|&v| v == 0 || v == 1);
    let mut out = format!(
        "%%MatrixMarket matrix coordinate {} general\n{n} {n} {}\n",
        if binary { "pattern" } else { "integer" },
        m.nnz()
    );
    // column-major entry order, as the Matrix Market convention prefers
    for j in 0..n {
        for i in 0..n {
            let v = m.get(i, j);
            if v != 0 {
                if binary {
                    let _ = writeln!(out, "{} {}", i + 1, j + 1);
                } else {
                    let _ = writeln!(out, "{} {} {v}", i + 1, j + 1);
                }
            }
        }
    }
    out
}
