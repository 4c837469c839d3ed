//! Changes in structure.
//!
//! On an equation system a change replaces the rows of the mechanisms it
//! modifies (or adds a new variable with its own equation). On a belief
//! network the counterpart cuts every arc into the target node and gives it
//! a parentless distribution; through [`crate::bbn_to_sem`] that is the
//! same as replacing the node's threshold equation with a parent-free one.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bbn::{Bbn, BbnError, ROW_SUM_TOLERANCE};
use crate::ordering::{causal_ordering, CausalOrdering};
use crate::system::{EquationId, StructureMatrix, SystemError, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterventionError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Bbn(#[from] BbnError),
    #[error("unknown equation {0}")]
    UnknownEquation(EquationId),
    #[error("replacement row for equation `{0}` is empty")]
    EmptyRow(String),
    #[error("variable `{0}` is determined jointly with others; no single mechanism to replace")]
    AmbiguousMechanism(String),
    #[error("change of kind `{0}` does not apply to this model")]
    WrongTarget(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StructuralChange {
    /// Replace the variable set of one equation.
    ReplaceEquation { equation: EquationId, variables: BTreeSet<VariableId> },
    /// Append a new variable and its defining equation. The equation holds
    /// the new variable plus `inputs` (empty for a purely exogenous one).
    AddExogenousVariable { name: String, label: String, inputs: BTreeSet<VariableId> },
    /// Cut the arcs into `node` and give it the parentless distribution `dist`.
    SetBbnNode { node: VariableId, dist: Vec<f64> },
}

impl StructuralChange {
    pub fn kind(&self) -> &'static str {
        match self {
            StructuralChange::ReplaceEquation { .. } => "replace_equation",
            StructuralChange::AddExogenousVariable { .. } => "add_exogenous_variable",
            StructuralChange::SetBbnNode { .. } => "set_bbn_node",
        }
    }
}

/// Applies a change to a structure matrix and re-checks self-containment.
///
/// `SetBbnNode` replaces the equation that determines `node` with the row
/// `{node}`; this needs `node` to sit in a degree-one cluster.
pub fn apply_change(matrix: &StructureMatrix, change: &StructuralChange) -> Result<StructureMatrix, InterventionError> {
    let n = matrix.n();
    let mut rows: Vec<Vec<bool>> = matrix.equations().map(|e| matrix.row(e).to_vec()).collect();
    let mut names = matrix.variable_names().to_vec();
    let mut labels = matrix.equation_labels().to_vec();
    match change {
        StructuralChange::ReplaceEquation { equation, variables } => {
            if equation.0 >= n {
                return Err(InterventionError::UnknownEquation(*equation));
            }
            if variables.is_empty() {
                return Err(InterventionError::EmptyRow(labels[equation.0].clone()));
            }
            let mut row = vec![false; n];
            for v in variables {
                *row.get_mut(v.0).ok_or(SystemError::VariableOutOfRange(v.0))? = true;
            }
            rows[equation.0] = row;
        }
        StructuralChange::AddExogenousVariable { name, label, inputs } => {
            for row in &mut rows {
                row.push(false);
            }
            let mut row = vec![false; n + 1];
            for v in inputs {
                if v.0 >= n {
                    return Err(SystemError::VariableOutOfRange(v.0).into());
                }
                row[v.0] = true;
            }
            row[n] = true;
            rows.push(row);
            names.push(name.clone());
            labels.push(label.clone());
        }
        StructuralChange::SetBbnNode { node, .. } => {
            if node.0 >= n {
                return Err(SystemError::VariableOutOfRange(node.0).into());
            }
            let ordering = causal_ordering(matrix)?;
            let cluster = &ordering.clusters[ordering.cluster_of_variable(*node).expect("partition")];
            if cluster.degree != 1 {
                return Err(InterventionError::AmbiguousMechanism(names[node.0].clone()));
            }
            let e = *cluster.equations.iter().next().expect("degree one");
            rows[e.0] = (0..n).map(|j| j == node.0).collect();
        }
    }
    let changed = StructureMatrix::new(names, labels, rows)?;
    changed.require_self_contained()?;
    Ok(changed)
}

/// Variables whose values may change when `changed_equation` is altered: the
/// variables of its cluster and of every cluster downstream of it.
pub fn affected_variables(
    ordering: &CausalOrdering,
    changed_equation: EquationId,
) -> Result<BTreeSet<VariableId>, InterventionError> {
    let start =
        ordering.cluster_of_equation(changed_equation).ok_or(InterventionError::UnknownEquation(changed_equation))?;
    Ok(ordering
        .downstream_clusters(start)
        .into_iter()
        .flat_map(|c| ordering.clusters[c].variables.iter().copied())
        .collect())
}

/// Cuts every arc into `node` and replaces its CPT with the single row `dist`.
pub fn intervene_bbn(bbn: &Bbn, node: VariableId, dist: &[f64]) -> Result<Bbn, BbnError> {
    let target = bbn.nodes().get(node.0).ok_or_else(|| BbnError::UnknownNode(format!("#{}", node.0)))?;
    if dist.len() != target.cardinality() {
        return Err(BbnError::DimensionMismatch {
            node: target.name.clone(),
            expected: target.cardinality(),
            found: dist.len(),
        });
    }
    let sum: f64 = dist.iter().sum();
    if dist.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(BbnError::NotNormalized(sum));
    }
    let mut nodes = bbn.nodes().to_vec();
    nodes[node.0].parents.clear();
    nodes[node.0].cpt = vec![dist.to_vec()];
    Bbn::new(nodes)
}

/// Applies a `SetBbnNode` change to a network.
pub fn apply_bbn_change(bbn: &Bbn, change: &StructuralChange) -> Result<Bbn, InterventionError> {
    match change {
        StructuralChange::SetBbnNode { node, dist } => Ok(intervene_bbn(bbn, *node, dist)?),
        other => Err(InterventionError::WrongTarget(other.kind())),
    }
}

/// Per variable, the largest absolute change in any outcome's marginal
/// probability, by exact enumeration of both networks.
pub fn compare_marginals(before: &Bbn, after: &Bbn) -> Result<BTreeMap<VariableId, f64>, BbnError> {
    if before.len() != after.len() {
        return Err(BbnError::Mismatch(format!("{} vs {} nodes", before.len(), after.len())));
    }
    for (a, b) in before.nodes().iter().zip(after.nodes()) {
        if a.name != b.name || a.cardinality() != b.cardinality() {
            return Err(BbnError::Mismatch(format!("node `{}` vs `{}`", a.name, b.name)));
        }
    }
    let m0 = before.marginals()?;
    let m1 = after.marginals()?;
    Ok(m0
        .iter()
        .zip(&m1)
        .enumerate()
        .map(|(i, (p, q))| {
            let dev = p.iter().zip(q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            (VariableId(i), dev)
        })
        .collect())
}
