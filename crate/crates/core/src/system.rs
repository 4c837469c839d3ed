//! Structure matrices: which variables participate in which equations.
//!
//! Only the incidence pattern is stored. Coefficients, algebraic form and the
//! per-equation error terms are deliberately absent; every equation carries
//! its own implicit latent. Each equation is also assumed to be solvable for
//! whatever variables the ordering assigns to it, which a boolean pattern
//! cannot check.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::matching::Matching;

/// Index of a variable (a column of the structure matrix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub usize);

/// Index of an equation (a row of the structure matrix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EquationId(pub usize);

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("system has {equations} equations but {variables} variables")]
    NotSquare { equations: usize, variables: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RowWidth { row: usize, expected: usize, found: usize },
    #[error("equation `{0}` contains no variables")]
    EmptyEquation(String),
    #[error("empty variable name")]
    EmptyName,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate equation label `{0}`")]
    DuplicateLabel(String),
    #[error("equation `{equation}` references unknown variable `{name}`")]
    UnknownVariable { equation: String, name: String },
    #[error("unknown equation `{0}`")]
    UnknownEquation(String),
    #[error("equation index {0} out of range")]
    EquationOutOfRange(usize),
    #[error("variable index {0} out of range")]
    VariableOutOfRange(usize),
    #[error("empty equation subset")]
    EmptySubset,
    #[error("system is not self-contained{}", .0.witness.as_ref().map(|w| format!(": {} equations share {} variables", w.equations.len(), w.variables.len())).unwrap_or_default())]
    NotSelfContained(Box<SystemReport>),
}

/// A set of equations together with the variables they jointly contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSubset {
    pub equations: BTreeSet<EquationId>,
    pub variables: BTreeSet<VariableId>,
}

/// Outcome of [`StructureMatrix::check_system`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemReport {
    pub self_contained: bool,
    /// Variables that occur in no equation at all.
    pub unused_variables: Vec<VariableId>,
    /// An equation subset with fewer variables than equations.
    pub witness: Option<EquationSubset>,
}

/// Square boolean incidence matrix: entry (i, j) is set iff variable j
/// participates in equation i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMatrix {
    n: usize,
    entries: Vec<bool>,
    variable_names: Vec<String>,
    equation_labels: Vec<String>,
}

impl StructureMatrix {
    /// Builds a matrix from a dense boolean table, one row per equation.
    pub fn new(
        variable_names: Vec<String>,
        equation_labels: Vec<String>,
        rows: Vec<Vec<bool>>,
    ) -> Result<Self, SystemError> {
        let n = variable_names.len();
        if equation_labels.len() != n || rows.len() != n {
            return Err(SystemError::NotSquare { equations: rows.len().max(equation_labels.len()), variables: n });
        }
        check_names(&variable_names, SystemError::DuplicateVariable)?;
        check_names(&equation_labels, SystemError::DuplicateLabel)?;
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(SystemError::RowWidth { row: i, expected: n, found: row.len() });
            }
            if !row.iter().any(|&b| b) {
                return Err(SystemError::EmptyEquation(equation_labels[i].clone()));
            }
            entries.extend_from_slice(row);
        }
        Ok(StructureMatrix { n, entries, variable_names, equation_labels })
    }

    /// Builds a matrix from per-equation lists of variable indices.
    pub fn from_incidence(
        variable_names: Vec<String>,
        equation_labels: Vec<String>,
        rows: &[Vec<usize>],
    ) -> Result<Self, SystemError> {
        let n = variable_names.len();
        let mut dense = Vec::with_capacity(rows.len());
        for row in rows {
            let mut r = vec![false; n];
            for &j in row {
                *r.get_mut(j).ok_or(SystemError::VariableOutOfRange(j))? = true;
            }
            dense.push(r);
        }
        Self::new(variable_names, equation_labels, dense)
    }

    /// Builds a matrix from variable names and `(label, participating names)` pairs.
    pub fn from_named(variables: &[&str], equations: &[(&str, &[&str])]) -> Result<Self, SystemError> {
        let names: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::with_capacity(equations.len());
        for (label, vars) in equations {
            let mut row = Vec::with_capacity(vars.len());
            for v in *vars {
                let j = names
                    .iter()
                    .position(|n| n == v)
                    .ok_or_else(|| SystemError::UnknownVariable { equation: label.to_string(), name: v.to_string() })?;
                row.push(j);
            }
            rows.push(row);
        }
        let labels = equations.iter().map(|(l, _)| l.to_string()).collect();
        Self::from_incidence(names, labels, &rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, equation: EquationId, variable: VariableId) -> bool {
        self.entries[equation.0 * self.n + variable.0]
    }

    pub fn row(&self, equation: EquationId) -> &[bool] {
        &self.entries[equation.0 * self.n..(equation.0 + 1) * self.n]
    }

    /// Variables participating in one equation, ascending.
    pub fn row_variables(&self, equation: EquationId) -> impl Iterator<Item = VariableId> + '_ {
        self.row(equation).iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| VariableId(j))
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn equation_labels(&self) -> &[String] {
        &self.equation_labels
    }

    pub fn variable_name(&self, v: VariableId) -> &str {
        &self.variable_names[v.0]
    }

    pub fn equation_label(&self, e: EquationId) -> &str {
        &self.equation_labels[e.0]
    }

    pub fn variable_by_name(&self, name: &str) -> Option<VariableId> {
        self.variable_names.iter().position(|n| n == name).map(VariableId)
    }

    pub fn equation_by_label(&self, label: &str) -> Option<EquationId> {
        self.equation_labels.iter().position(|n| n == label).map(EquationId)
    }

    pub fn equations(&self) -> impl Iterator<Item = EquationId> {
        (0..self.n).map(EquationId)
    }

    /// Row adjacency lists, used for matching.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        self.equations().map(|e| self.row_variables(e).map(|v| v.0).collect()).collect()
    }

    /// The matrix with row k taken from `row_perm[k]` and column k from
    /// `col_perm[k]`; names and labels travel with their rows and columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self, SystemError> {
        is_permutation(row_perm, self.n)?;
        is_permutation(col_perm, self.n)?;
        let rows = row_perm.iter().map(|&i| col_perm.iter().map(|&j| self.entries[i * self.n + j]).collect()).collect();
        Self::new(
            col_perm.iter().map(|&j| self.variable_names[j].clone()).collect(),
            row_perm.iter().map(|&i| self.equation_labels[i].clone()).collect(),
            rows,
        )
    }

    /// Union of the variables of every equation in `subset`.
    pub fn variables_of(&self, subset: &BTreeSet<EquationId>) -> Result<BTreeSet<VariableId>, SystemError> {
        let mut vars = BTreeSet::new();
        for &e in subset {
            if e.0 >= self.n {
                return Err(SystemError::EquationOutOfRange(e.0));
            }
            vars.extend(self.row_variables(e));
        }
        Ok(vars)
    }

    /// Whether `subset` has as many variables as equations and no part of it
    /// has fewer variables than equations.
    ///
    /// The second clause is Hall's condition, checked as "a matching of the
    /// subset's equations into its variables saturates every equation".
    pub fn is_self_contained(&self, subset: &BTreeSet<EquationId>) -> Result<bool, SystemError> {
        if subset.is_empty() {
            return Err(SystemError::EmptySubset);
        }
        let vars: Vec<VariableId> = self.variables_of(subset)?.into_iter().collect();
        if vars.len() != subset.len() {
            return Ok(false);
        }
        let mut local = vec![usize::MAX; self.n];
        for (k, v) in vars.iter().enumerate() {
            local[v.0] = k;
        }
        let adj: Vec<Vec<usize>> =
            subset.iter().map(|&e| self.row_variables(e).map(|v| local[v.0]).collect()).collect();
        Ok(Matching::maximum(&adj, vars.len()).saturates_left())
    }

    /// Decides whether the whole system is self-contained, with a witness
    /// subset when it is not.
    pub fn check_system(&self) -> SystemReport {
        let unused_variables: Vec<VariableId> =
            (0..self.n).map(VariableId).filter(|&v| self.equations().all(|e| !self.get(e, v))).collect();
        let adj = self.adjacency();
        let matching = Matching::maximum(&adj, self.n);
        let witness = matching.hall_violator(&adj).map(|eqs| {
            let equations: BTreeSet<EquationId> = eqs.into_iter().map(EquationId).collect();
            let variables = self.variables_of(&equations).expect("indices come from the matrix");
            EquationSubset { equations, variables }
        });
        SystemReport { self_contained: witness.is_none(), unused_variables, witness }
    }

    /// `Ok(())` if self-contained, otherwise the report wrapped in an error.
    pub fn require_self_contained(&self) -> Result<(), SystemError> {
        let report = self.check_system();
        if report.self_contained {
            Ok(())
        } else {
            Err(SystemError::NotSelfContained(Box::new(report)))
        }
    }
}

fn check_names(names: &[String], dup: fn(String) -> SystemError) -> Result<(), SystemError> {
    let mut seen = HashSet::new();
    for name in names {
        if name.is_empty() {
            return Err(SystemError::EmptyName);
        }
        if !seen.insert(name.as_str()) {
            return Err(dup(name.clone()));
        }
    }
    Ok(())
}

fn is_permutation(p: &[usize], n: usize) -> Result<(), SystemError> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(SystemError::NotSquare { equations: p.len(), variables: n });
    }
    for &i in p {
        match seen.get_mut(i) {
            Some(s) if !*s => *s = true,
            _ => return Err(SystemError::VariableOutOfRange(i)),
        }
    }
    Ok(())
}
