//! Threshold-equation systems: a belief network rewritten as one
//! deterministic equation per variable, each driven by its own independent
//! latent uniform on (0, 1].
//!
//! For a node with outcomes `0..k` and a CPT row `p`, the equation stores the
//! cumulative sums `c_j = p_0 + … + p_j` (with `c_{k-1}` clamped to exactly 1)
//! and selects outcome `j` iff the latent lies in `(c_{j-1}, c_j]`, `c_{-1} = 0`.
//! The latent measure of that interval is `p_j`, so the joint distribution of
//! the system is the network's product of CPT entries.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bbn::{
    configuration_count, cpt_row_index, Assignment, Bbn, Configurations, ENUMERATION_LIMIT, ROW_SUM_TOLERANCE,
};
use crate::ordering::causal_ordering;
use crate::system::{StructureMatrix, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemError {
    #[error("{equations} equations for {variables} variables")]
    EquationCount { equations: usize, variables: usize },
    #[error("equation {equation}: target index {target} out of range")]
    TargetOutOfRange { equation: usize, target: usize },
    #[error("variable `{0}` has more than one equation")]
    DuplicateTarget(String),
    #[error("equation for `{target}`: parent index {parent} out of range")]
    ParentOutOfRange { target: String, parent: usize },
    #[error("equation for `{target}`: parent `{parent}` repeated or equal to the target")]
    BadParent { target: String, parent: String },
    #[error("equation for `{target}`: {found} threshold rows, expected {expected}")]
    RowCount { target: String, expected: usize, found: usize },
    #[error("equation for `{target}` row {row}: {found} thresholds, expected {expected}")]
    RowWidth { target: String, row: usize, expected: usize, found: usize },
    #[error("equation for `{target}` needs at least two outcomes")]
    TooFewOutcomes { target: String },
    #[error("equation for `{target}` row {row}: thresholds {detail}")]
    BadThresholds { target: String, row: usize, detail: String },
    #[error("equations are cyclic through `{0}`")]
    Cyclic(String),
    #[error("empty variable name")]
    EmptyName,
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("expected {expected} latents, got {found}")]
    LatentCount { expected: usize, found: usize },
    #[error("latent for `{variable}` is {value}, outside (0, 1]")]
    LatentOutOfRange { variable: String, value: f64 },
    #[error("assignment covers {found} variables, system has {expected}")]
    PartialAssignment { expected: usize, found: usize },
    #[error("outcome {outcome} out of range for `{variable}`")]
    OutcomeOutOfRange { variable: String, outcome: usize },
    #[error("{configurations} joint configurations exceed the enumeration limit of {limit}")]
    TooLarge { configurations: u128, limit: usize },
    #[error("network and system disagree: {0}")]
    Mismatch(String),
}

/// One variable's mechanism: parents plus one cumulative threshold row per
/// parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEquation {
    pub target: VariableId,
    pub parents: Vec<VariableId>,
    pub thresholds: Vec<Vec<f64>>,
}

impl ThresholdEquation {
    pub fn cardinality(&self) -> usize {
        self.thresholds.first().map_or(0, Vec::len)
    }

    /// First outcome whose interval `(c_{j-1}, c_j]` holds `latent`.
    fn select(row: &[f64], latent: f64) -> usize {
        row.iter().position(|&c| latent <= c).unwrap_or(row.len() - 1)
    }

    /// Latent measure of the interval of outcome `j`.
    pub fn interval_length(row: &[f64], j: usize) -> f64 {
        let lower = if j == 0 { 0.0 } else { row[j - 1] };
        row[j] - lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdEquationSystem {
    variable_names: Vec<String>,
    outcome_labels: Vec<Vec<String>>,
    equations: Vec<ThresholdEquation>,
    /// `equation_of[v]` is the index of the equation targeting `v`.
    equation_of: Vec<usize>,
    /// Variables such that every target follows its parents.
    eval_order: Vec<VariableId>,
}

impl ThresholdEquationSystem {
    /// Validates and builds a system. Threshold rows must be non-decreasing
    /// in [0, 1] and end within 1e-9 of 1. Entries a rounding error above 1
    /// are pulled down to 1 and the final entry is set to exactly 1.
    pub fn new(variable_names: Vec<String>, mut equations: Vec<ThresholdEquation>) -> Result<Self, SemError> {
        let n = variable_names.len();
        if equations.len() != n {
            return Err(SemError::EquationCount { equations: equations.len(), variables: n });
        }
        let mut seen_names = BTreeSet::new();
        for name in &variable_names {
            if name.is_empty() {
                return Err(SemError::EmptyName);
            }
            if !seen_names.insert(name.as_str()) {
                return Err(SemError::DuplicateName(name.clone()));
            }
        }
        let mut equation_of = vec![usize::MAX; n];
        for (k, eq) in equations.iter().enumerate() {
            let t = eq.target.0;
            if t >= n {
                return Err(SemError::TargetOutOfRange { equation: k, target: t });
            }
            if equation_of[t] != usize::MAX {
                return Err(SemError::DuplicateTarget(variable_names[t].clone()));
            }
            equation_of[t] = k;
        }
        let name = |v: VariableId| variable_names[v.0].clone();
        for eq in &equations {
            if eq.cardinality() < 2 {
                return Err(SemError::TooFewOutcomes { target: name(eq.target) });
            }
            let mut seen = BTreeSet::new();
            for &p in &eq.parents {
                if p.0 >= n {
                    return Err(SemError::ParentOutOfRange { target: name(eq.target), parent: p.0 });
                }
                if p == eq.target || !seen.insert(p) {
                    return Err(SemError::BadParent { target: name(eq.target), parent: name(p) });
                }
            }
        }
        let cards: Vec<usize> = equation_of.iter().map(|&k| equations[k].cardinality()).collect();
        for eq in &mut equations {
            let target = variable_names[eq.target.0].clone();
            let expected = configuration_count(eq.parents.iter().map(|p| cards[p.0]));
            if expected != eq.thresholds.len() as u128 {
                return Err(SemError::RowCount {
                    target,
                    expected: expected.min(usize::MAX as u128) as usize,
                    found: eq.thresholds.len(),
                });
            }
            let width = cards[eq.target.0];
            for (r, row) in eq.thresholds.iter_mut().enumerate() {
                if row.len() != width {
                    return Err(SemError::RowWidth { target, row: r, expected: width, found: row.len() });
                }
                let bad = |detail: String| SemError::BadThresholds { target: target.clone(), row: r, detail };
                let mut prev = 0.0;
                for &c in row.iter() {
                    if !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&c) {
                        return Err(bad(format!("contain {c} outside [0, 1]")));
                    }
                    if c < prev {
                        return Err(bad("decrease".to_string()));
                    }
                    prev = c;
                }
                let last = row[width - 1];
                if (last - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(bad(format!("end at {last}, not 1")));
                }
                row.iter_mut().for_each(|c| *c = c.min(1.0));
                row[width - 1] = 1.0;
            }
        }
        let eval_order =
            evaluation_order(&equations, &equation_of).map_err(|v| SemError::Cyclic(variable_names[v.0].clone()))?;
        let outcome_labels = cards.iter().map(|&k| (0..k).map(|j| j.to_string()).collect()).collect();
        Ok(ThresholdEquationSystem { variable_names, outcome_labels, equations, equation_of, eval_order })
    }

    /// Replaces the default outcome labels ("0", "1", …).
    pub fn with_outcome_labels(mut self, labels: Vec<Vec<String>>) -> Self {
        assert_eq!(labels.len(), self.variable_names.len());
        for (v, l) in labels.iter().enumerate() {
            assert_eq!(l.len(), self.cardinality(VariableId(v)));
        }
        self.outcome_labels = labels;
        self
    }

    pub fn len(&self) -> usize {
        self.variable_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variable_names.is_empty()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn outcome_labels(&self, v: VariableId) -> &[String] {
        &self.outcome_labels[v.0]
    }

    pub fn equations(&self) -> &[ThresholdEquation] {
        &self.equations
    }

    pub fn equation_for(&self, v: VariableId) -> &ThresholdEquation {
        &self.equations[self.equation_of[v.0]]
    }

    pub fn cardinality(&self, v: VariableId) -> usize {
        self.equation_for(v).cardinality()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        (0..self.len()).map(|v| self.cardinality(VariableId(v))).collect()
    }

    pub fn configuration_count(&self) -> u128 {
        configuration_count(self.cardinalities())
    }

    fn row_for<'a>(&self, eq: &'a ThresholdEquation, values: &[usize]) -> &'a [f64] {
        let idx = cpt_row_index(eq.parents.iter().map(|&p| (self.cardinality(p), values[p.0])));
        &eq.thresholds[idx]
    }

    /// Runs every equation on the given latents (indexed by variable).
    pub fn evaluate(&self, latents: &[f64]) -> Result<Assignment, SemError> {
        if latents.len() != self.len() {
            return Err(SemError::LatentCount { expected: self.len(), found: latents.len() });
        }
        for (v, &e) in latents.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                return Err(SemError::LatentOutOfRange { variable: self.variable_names[v].clone(), value: e });
            }
        }
        Ok(self.evaluate_unchecked(latents))
    }

    fn evaluate_unchecked(&self, latents: &[f64]) -> Assignment {
        let mut values = vec![0; self.len()];
        for &v in &self.eval_order {
            let eq = self.equation_for(v);
            values[v.0] = ThresholdEquation::select(self.row_for(eq, &values), latents[v.0]);
        }
        Assignment(values)
    }

    /// Probability of `a` with every latent integrated out: the product of
    /// the selected interval lengths.
    pub fn sem_joint(&self, a: &Assignment) -> Result<f64, SemError> {
        if a.len() != self.len() {
            return Err(SemError::PartialAssignment { expected: self.len(), found: a.len() });
        }
        for (v, &value) in a.0.iter().enumerate() {
            if value >= self.cardinality(VariableId(v)) {
                return Err(SemError::OutcomeOutOfRange { variable: self.variable_names[v].clone(), outcome: value });
            }
        }
        Ok(self.joint_unchecked(a))
    }

    fn joint_unchecked(&self, a: &Assignment) -> f64 {
        self.equations
            .iter()
            .map(|eq| ThresholdEquation::interval_length(self.row_for(eq, &a.0), a.get(eq.target)))
            .product()
    }

    pub fn assignments(&self) -> Result<impl Iterator<Item = Assignment>, SemError> {
        let count = self.configuration_count();
        if count > ENUMERATION_LIMIT as u128 {
            return Err(SemError::TooLarge { configurations: count, limit: ENUMERATION_LIMIT });
        }
        Ok(Configurations::new(self.cardinalities()).map(Assignment))
    }
}

/// Kahn's algorithm over targets; on a cycle returns one variable on it.
fn evaluation_order(equations: &[ThresholdEquation], equation_of: &[usize]) -> Result<Vec<VariableId>, VariableId> {
    let n = equation_of.len();
    let mut indegree: Vec<usize> = (0..n).map(|v| equations[equation_of[v]].parents.len()).collect();
    let mut children = vec![Vec::new(); n];
    for eq in equations {
        for &p in &eq.parents {
            children[p.0].push(eq.target.0);
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(VariableId(v));
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(VariableId((0..n).find(|&v| indegree[v] > 0).expect("unplaced variable")))
    }
}

/// Builds the threshold-equation system of a network: same variables, one
/// equation per node over its parents, cumulative CPT rows as thresholds.
pub fn bbn_to_sem(bbn: &Bbn) -> ThresholdEquationSystem {
    let equations = bbn
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| ThresholdEquation {
            target: VariableId(i),
            parents: node.parents.clone(),
            thresholds: node
                .cpt
                .iter()
                .map(|row| {
                    row.iter()
                        .scan(0.0, |acc, &p| {
                            *acc += p;
                            Some(*acc)
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();
    let names = bbn.nodes().iter().map(|n| n.name.clone()).collect();
    let labels = bbn.nodes().iter().map(|n| n.outcomes.clone()).collect();
    ThresholdEquationSystem::new(names, equations)
        .expect("a valid network yields a valid threshold system")
        .with_outcome_labels(labels)
}

/// Largest absolute difference between the two joint distributions over all
/// assignments.
pub fn check_equivalence(bbn: &Bbn, sem: &ThresholdEquationSystem) -> Result<f64, SemError> {
    if bbn.len() != sem.len() {
        return Err(SemError::Mismatch(format!("{} nodes vs {} equations", bbn.len(), sem.len())));
    }
    for (i, node) in bbn.nodes().iter().enumerate() {
        if node.name != sem.variable_names()[i] {
            return Err(SemError::Mismatch(format!(
                "variable {i} is `{}` vs `{}`",
                node.name,
                sem.variable_names()[i]
            )));
        }
        if node.cardinality() != sem.cardinality(VariableId(i)) {
            return Err(SemError::Mismatch(format!("outcome count of `{}`", node.name)));
        }
    }
    let mut worst = 0.0f64;
    for a in sem.assignments()? {
        let p = bbn.joint_probability(&a).expect("assignment comes from matching cardinalities");
        worst = worst.max((p - sem.joint_unchecked(&a)).abs());
    }
    Ok(worst)
}

/// Tallies of sampled assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    pub counts: BTreeMap<Assignment, u64>,
    pub total: u64,
}

impl EmpiricalDistribution {
    pub fn frequency(&self, a: &Assignment) -> f64 {
        self.counts.get(a).copied().unwrap_or(0) as f64 / self.total as f64
    }

    /// Total-variation distance to the exact joint of `sem`.
    pub fn total_variation(&self, sem: &ThresholdEquationSystem) -> Result<f64, SemError> {
        let mut sum = 0.0;
        for a in sem.assignments()? {
            sum += (self.frequency(&a) - sem.joint_unchecked(&a)).abs();
        }
        Ok(sum / 2.0)
    }
}

/// Draws `count` latent vectors from ChaCha8 seeded with `seed`, evaluates
/// the system on each and tallies the outcomes. Latents are `1 - u` for `u`
/// uniform on [0, 1), giving (0, 1].
pub fn sample(sem: &ThresholdEquationSystem, seed: u64, count: u64) -> EmpiricalDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    let mut latents = vec![0.0; sem.len()];
    for _ in 0..count {
        for e in latents.iter_mut() {
            *e = 1.0 - rng.gen::<f64>();
        }
        *counts.entry(sem.evaluate_unchecked(&latents)).or_insert(0) += 1;
    }
    EmpiricalDistribution { counts, total: count }
}

/// Structure matrix of a threshold system: row for target `y` marks `y` and
/// its parents. Latents are not columns.
pub fn sem_structure(sem: &ThresholdEquationSystem) -> StructureMatrix {
    let rows: Vec<Vec<usize>> = sem
        .equations()
        .iter()
        .map(|eq| std::iter::once(eq.target.0).chain(eq.parents.iter().map(|p| p.0)).collect())
        .collect();
    let labels = sem.equations().iter().map(|eq| format!("e_{}", sem.variable_names()[eq.target.0])).collect();
    StructureMatrix::from_incidence(sem.variable_names().to_vec(), labels, &rows)
        .expect("targets are distinct and every row contains its target")
}

/// Whether the causal ordering of the network's threshold system has only
/// degree-one clusters and exactly the network's arcs as causal edges.
pub fn roundtrip_check(bbn: &Bbn) -> bool {
    let structure = sem_structure(&bbn_to_sem(bbn));
    match causal_ordering(&structure) {
        Ok(ordering) => ordering.is_acyclic() && ordering.variable_edges == bbn.edges(),
        Err(_) => false,
    }
}
