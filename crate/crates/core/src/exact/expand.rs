use crate::error::Result;
use crate::exact::hybrid::{expand_once, select_pivot};
use crate::matrix::SparseMatrix;
use crate::scalar::Scalar;

/// A sub-matrix produced by pre-expansion, with the branch path that led to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionNode<T> {
    pub matrix: SparseMatrix<T>,
    pub depth: usize,
    /// Branch numbers (1 or 2) from the root; length equals `depth`.
    pub lineage: Vec<u8>,
}

impl<T: Scalar> ExpansionNode<T> {
    pub fn root(matrix: SparseMatrix<T>) -> Self {
        Self {
            matrix,
            depth: 0,
            lineage: Vec::new(),
        }
    }
}

enum Step<T> {
    Expanded(Vec<ExpansionNode<T>>),
    Stopped(ExpansionNode<T>),
}

fn step<T: Scalar>(node: ExpansionNode<T>) -> Result<Step<T>> {
    if node.matrix.order() <= 2 {
        return Ok(Step::Stopped(node));
    }
    let Some(pivot) = select_pivot(&node.matrix) else {
        return Ok(Step::Stopped(node));
    };
    if pivot.s == 0 {
        // zero line: permanent is zero, nothing to emit
        return Ok(Step::Expanded(Vec::new()));
    }
    let children = expand_once(&node.matrix, &pivot)?
        .into_iter()
        .map(|(branch, matrix)| {
            let mut lineage = node.lineage.clone();
            lineage.push(branch);
            ExpansionNode {
                matrix,
                depth: node.depth + 1,
                lineage,
            }
        })
        .collect();
    Ok(Step::Expanded(children))
}

/// Expands one whole level. Returns the new level and whether any node moved.
fn expand_level<T: Scalar>(level: Vec<ExpansionNode<T>>) -> Result<(Vec<ExpansionNode<T>>, bool)> {
    let mut next = Vec::with_capacity(level.len() * 2);
    let mut moved = false;
    for node in level {
        match step(node)? {
            Step::Expanded(children) => {
                moved = true;
                next.extend(children);
            }
            Step::Stopped(node) => next.push(node),
        }
    }
    Ok((next, moved))
}

/// Applies `depth` levels of the expansion. Nodes that admit no pivot stop
/// early and are emitted unexpanded; output follows natural left-to-right order.
pub fn pre_expand<T: Scalar>(a: &SparseMatrix<T>, depth: usize) -> Result<Vec<ExpansionNode<T>>> {
    let mut level = vec![ExpansionNode::root(a.clone())];
    for _ in 0..depth {
        let (next, moved) = expand_level(level)?;
        level = next;
        if !moved {
            break;
        }
    }
    Ok(level)
}

/// Expands level by level until at least `target` nodes exist or no node can
/// be expanded further.
pub fn pre_expand_to_count<T: Scalar>(
    a: &SparseMatrix<T>,
    target: usize,
) -> Result<Vec<ExpansionNode<T>>> {
    let mut level = vec![ExpansionNode::root(a.clone())];
    while level.len() < target {
        let (next, moved) = expand_level(level)?;
        level = next;
        if !moved {
            break;
        }
    }
    Ok(level)
}
