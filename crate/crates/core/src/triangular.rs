//! Lower-triangular form by row and column interchanges.
//!
//! At pivot k, a remaining row with exactly one set entry among the remaining
//! columns is swapped into position k, and its column into position k. When
//! there is no such row the remaining equations form a feedback structure and
//! the procedure stops.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::system::{EquationId, StructureMatrix, SystemError, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriangularError {
    #[error(transparent)]
    System(#[from] SystemError),
    /// No remaining row had a single remaining variable. Carries every
    /// equation not yet pivoted.
    #[error("cyclic structure among {} equations", .0.len())]
    CyclicStructure(BTreeSet<EquationId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangularization {
    /// `row_perm[k]` is the original equation placed at row k.
    pub row_perm: Vec<EquationId>,
    /// `col_perm[k]` is the original variable placed at column k.
    pub col_perm: Vec<VariableId>,
    /// The variable each equation determines (its diagonal entry).
    pub determined_by: BTreeMap<EquationId, VariableId>,
}

impl Triangularization {
    /// Applies both permutations to `matrix`.
    pub fn apply(&self, matrix: &StructureMatrix) -> StructureMatrix {
        let rows: Vec<usize> = self.row_perm.iter().map(|e| e.0).collect();
        let cols: Vec<usize> = self.col_perm.iter().map(|v| v.0).collect();
        matrix.permuted(&rows, &cols).expect("triangularization holds valid permutations")
    }
}

pub fn triangularize(matrix: &StructureMatrix) -> Result<Triangularization, TriangularError> {
    matrix.require_self_contained()?;
    let n = matrix.n();
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; n];
    let mut row_perm = Vec::with_capacity(n);
    let mut col_perm = Vec::with_capacity(n);
    let mut determined_by = BTreeMap::new();

    for _pivot in 0..n {
        // lowest original equation index wins ties
        let found = (0..n).filter(|&i| !row_done[i]).find_map(|i| {
            let mut remaining = matrix.row_variables(EquationId(i)).filter(|v| !col_done[v.0]);
            match (remaining.next(), remaining.next()) {
                (Some(v), None) => Some((i, v)),
                _ => None,
            }
        });
        let Some((i, v)) = found else {
            let rest = (0..n).filter(|&i| !row_done[i]).map(EquationId).collect();
            return Err(TriangularError::CyclicStructure(rest));
        };
        row_done[i] = true;
        col_done[v.0] = true;
        row_perm.push(EquationId(i));
        col_perm.push(v);
        determined_by.insert(EquationId(i), v);
    }
    Ok(Triangularization { row_perm, col_perm, determined_by })
}

pub fn is_triangularizable(matrix: &StructureMatrix) -> Result<bool, SystemError> {
    match triangularize(matrix) {
        Ok(_) => Ok(true),
        Err(TriangularError::CyclicStructure(_)) => Ok(false),
        Err(TriangularError::System(e)) => Err(e),
    }
}
