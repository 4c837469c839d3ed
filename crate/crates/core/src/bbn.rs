//! Discrete Bayesian belief networks: a DAG with one conditional probability
//! table per node.
//!
//! CPT rows are indexed by parent configuration in mixed radix with the
//! first parent as the most significant digit. For parents `(p, q)` with 2
//! and 3 outcomes, row `r` corresponds to `p = r / 3, q = r % 3`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::system::VariableId;

/// Allowed deviation of a probability row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Largest joint configuration space that exact enumeration will visit.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BbnNode {
    pub name: String,
    /// Outcome labels; the position of a label is its outcome index.
    pub outcomes: Vec<String>,
    pub parents: Vec<VariableId>,
    /// One probability row per parent configuration.
    pub cpt: Vec<Vec<f64>>,
}

impl BbnNode {
    pub fn new(name: &str, outcomes: &[&str], parents: &[usize], cpt: Vec<Vec<f64>>) -> Self {
        BbnNode {
            name: name.to_string(),
            outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|&p| VariableId(p)).collect(),
            cpt,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.outcomes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    EmptyName {
        node: usize,
    },
    DuplicateName {
        name: String,
    },
    TooFewOutcomes {
        node: usize,
        found: usize,
    },
    DuplicateOutcome {
        node: usize,
        label: String,
    },
    UnknownParent {
        node: usize,
        parent: usize,
    },
    DuplicateParent {
        node: usize,
        parent: VariableId,
    },
    /// Nodes along a directed cycle, each a parent of the next.
    Cycle(Vec<VariableId>),
    RowCount {
        node: usize,
        expected: usize,
        found: usize,
    },
    RowWidth {
        node: usize,
        row: usize,
        expected: usize,
        found: usize,
    },
    EntryOutOfRange {
        node: usize,
        row: usize,
        column: usize,
        value: f64,
    },
    RowSum {
        node: usize,
        row: usize,
        sum: f64,
        deviation: f64,
    },
}

impl ValidationIssue {
    /// Like `Display`, but naming nodes instead of numbering them.
    pub fn describe(&self, nodes: &[BbnNode]) -> String {
        let name = |i: usize| match nodes.get(i) {
            Some(n) if !n.name.is_empty() => format!("`{}`", n.name),
            _ => format!("#{i}"),
        };
        use ValidationIssue::*;
        let (node, rest) = match self {
            Cycle(cycle) => {
                let names: Vec<String> = cycle.iter().map(|v| name(v.0)).collect();
                return format!("cycle through {}", names.join(" -> "));
            }
            DuplicateName { .. } => return self.to_string(),
            EmptyName { node } | TooFewOutcomes { node, .. } | DuplicateOutcome { node, .. } => {
                (*node, self.to_string())
            }
            UnknownParent { node, .. } | DuplicateParent { node, .. } | RowCount { node, .. } => {
                (*node, self.to_string())
            }
            RowWidth { node, .. } | EntryOutOfRange { node, .. } | RowSum { node, .. } => (*node, self.to_string()),
        };
        let prefix = format!("node #{node}");
        format!("node {}{}", name(node), rest.strip_prefix(&prefix).unwrap_or(&rest))
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            EmptyName { node } => write!(f, "node #{node}: empty name"),
            DuplicateName { name } => write!(f, "duplicate node name `{name}`"),
            TooFewOutcomes { node, found } => write!(f, "node #{node}: {found} outcomes, need at least 2"),
            DuplicateOutcome { node, label } => write!(f, "node #{node}: duplicate outcome `{label}`"),
            UnknownParent { node, parent } => write!(f, "node #{node}: parent index {parent} does not exist"),
            DuplicateParent { node, parent } => write!(f, "node #{node}: parent {} listed twice", parent.0),
            Cycle(nodes) => {
                let ids: Vec<String> = nodes.iter().map(|v| format!("#{}", v.0)).collect();
                write!(f, "cycle through {}", ids.join(" -> "))
            }
            RowCount { node, expected, found } => {
                write!(f, "node #{node}: {found} CPT rows, expected {expected}")
            }
            RowWidth { node, row, expected, found } => {
                write!(f, "node #{node} row {row}: {found} entries, expected {expected}")
            }
            EntryOutOfRange { node, row, column, value } => {
                write!(f, "node #{node} row {row} column {column}: {value} outside [0, 1]")
            }
            RowSum { node, row, sum, deviation } => {
                write!(f, "node #{node} row {row}: sums to {sum} (off by {deviation:.3e})")
            }
        }
    }
}

/// Every invariant violation found in a list of nodes. Empty means valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn cycle(&self) -> Option<&[VariableId]> {
        self.issues.iter().find_map(|i| match i {
            ValidationIssue::Cycle(c) => Some(c.as_slice()),
            _ => None,
        })
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BbnError {
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
    #[error("cycle detected through {} nodes", .0.len())]
    Cycle(Vec<VariableId>),
    #[error("assignment covers {found} variables, network has {expected}")]
    PartialAssignment { expected: usize, found: usize },
    #[error("outcome {outcome} out of range for node `{node}`")]
    OutcomeOutOfRange { node: String, outcome: usize },
    #[error("{configurations} joint configurations exceed the enumeration limit of {limit}")]
    TooLarge { configurations: u128, limit: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` has {expected} outcomes, distribution has {found} entries")]
    DimensionMismatch { node: String, expected: usize, found: usize },
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("networks differ: {0}")]
    Mismatch(String),
}

/// One outcome index per variable, indexed by variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn get(&self, v: VariableId) -> usize {
        self.0[v.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Row of a CPT selected by the parents' outcomes (first parent most significant).
pub fn cpt_row_index(cardinalities: impl IntoIterator<Item = (usize, usize)>) -> usize {
    cardinalities.into_iter().fold(0, |acc, (card, value)| acc * card + value)
}

/// Mixed-radix odometer over all joint outcomes, last variable fastest.
#[derive(Debug, Clone)]
pub struct Configurations {
    radices: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Configurations {
    pub fn new(radices: Vec<usize>) -> Self {
        let current = if radices.iter().all(|&r| r > 0) { Some(vec![0; radices.len()]) } else { None };
        Configurations { radices, current }
    }
}

impl Iterator for Configurations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut k = cur.len();
        loop {
            if k == 0 {
                self.current = None;
                break;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < self.radices[k] {
                break;
            }
            cur[k] = 0;
        }
        Some(out)
    }
}

/// Number of joint configurations, saturating at `u128::MAX`.
pub fn configuration_count(radices: impl IntoIterator<Item = usize>) -> u128 {
    radices.into_iter().fold(1u128, |acc, r| acc.saturating_mul(r as u128))
}

/// Topological order of `nodes`, ties broken by ascending index. On failure
/// returns a directed cycle.
pub fn topological_order(nodes: &[BbnNode]) -> Result<Vec<VariableId>, BbnError> {
    topo_sort(nodes).map_err(BbnError::Cycle)
}

fn topo_sort(nodes: &[BbnNode]) -> Result<Vec<VariableId>, Vec<VariableId>> {
    let n = nodes.len();
    let mut children = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for (i, node) in nodes.iter().enumerate() {
        let distinct: BTreeSet<usize> = node.parents.iter().map(|p| p.0).filter(|&p| p < n).collect();
        for p in distinct {
            children[p].push(i);
            indegree[i] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(VariableId(i));
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every unplaced node still has an unplaced parent: walk parents until a repeat.
    let placed: HashSet<usize> = order.iter().map(|v| v.0).collect();
    let start = (0..n).find(|i| !placed.contains(i)).expect("some node is unplaced");
    let mut path = vec![start];
    let mut pos = vec![usize::MAX; n];
    pos[start] = 0;
    loop {
        let cur = *path.last().unwrap();
        let parent = nodes[cur]
            .parents
            .iter()
            .map(|p| p.0)
            .filter(|&p| p < n && !placed.contains(&p))
            .min()
            .expect("unplaced node has an unplaced parent");
        if pos[parent] != usize::MAX {
            let mut cycle: Vec<VariableId> = path[pos[parent]..].iter().map(|&i| VariableId(i)).collect();
            cycle.reverse();
            let min_at = cycle.iter().enumerate().min_by_key(|(_, v)| **v).map(|(k, _)| k).unwrap();
            cycle.rotate_left(min_at);
            return Err(cycle);
        }
        pos[parent] = path.len();
        path.push(parent);
    }
}

/// Checks every structural and numerical invariant of a node list.
pub fn validate(nodes: &[BbnNode]) -> ValidationReport {
    let n = nodes.len();
    let mut issues = Vec::new();
    let mut names = HashSet::new();
    for (i, node) in nodes.iter().enumerate() {
        if node.name.is_empty() {
            issues.push(ValidationIssue::EmptyName { node: i });
        } else if !names.insert(node.name.as_str()) {
            issues.push(ValidationIssue::DuplicateName { name: node.name.clone() });
        }
        if node.outcomes.len() < 2 {
            issues.push(ValidationIssue::TooFewOutcomes { node: i, found: node.outcomes.len() });
        }
        let mut labels = HashSet::new();
        for label in &node.outcomes {
            if !labels.insert(label.as_str()) {
                issues.push(ValidationIssue::DuplicateOutcome { node: i, label: label.clone() });
            }
        }
        let mut seen = HashSet::new();
        for &p in &node.parents {
            if p.0 >= n {
                issues.push(ValidationIssue::UnknownParent { node: i, parent: p.0 });
            } else if !seen.insert(p) {
                issues.push(ValidationIssue::DuplicateParent { node: i, parent: p });
            }
        }
    }
    if let Err(cycle) = topo_sort(nodes) {
        issues.push(ValidationIssue::Cycle(cycle));
    }
    for (i, node) in nodes.iter().enumerate() {
        if node.parents.iter().any(|p| p.0 >= n) {
            continue;
        }
        let expected_rows = configuration_count(node.parents.iter().map(|p| nodes[p.0].cardinality()));
        if expected_rows != node.cpt.len() as u128 {
            issues.push(ValidationIssue::RowCount {
                node: i,
                expected: expected_rows.min(usize::MAX as u128) as usize,
                found: node.cpt.len(),
            });
        }
        for (r, row) in node.cpt.iter().enumerate() {
            if row.len() != node.cardinality() {
                issues.push(ValidationIssue::RowWidth {
                    node: i,
                    row: r,
                    expected: node.cardinality(),
                    found: row.len(),
                });
            }
            for (c, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    issues.push(ValidationIssue::EntryOutOfRange { node: i, row: r, column: c, value });
                }
            }
            let sum: f64 = row.iter().sum();
            let deviation = (sum - 1.0).abs();
            if deviation > ROW_SUM_TOLERANCE || sum.is_nan() {
                issues.push(ValidationIssue::RowSum { node: i, row: r, sum, deviation });
            }
        }
    }
    ValidationReport { issues }
}

/// A validated network.
#[derive(Debug, Clone, PartialEq)]
pub struct Bbn {
    nodes: Vec<BbnNode>,
    order: Vec<VariableId>,
}

impl Bbn {
    pub fn new(nodes: Vec<BbnNode>) -> Result<Self, BbnError> {
        let report = validate(&nodes);
        if !report.is_valid() {
            return Err(BbnError::Invalid(report));
        }
        let order = topological_order(&nodes)?;
        Ok(Bbn { nodes, order })
    }

    pub fn nodes(&self) -> &[BbnNode] {
        &self.nodes
    }

    pub fn node(&self, v: VariableId) -> &BbnNode {
        &self.nodes[v.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<BbnNode> {
        self.nodes
    }

    /// Always empty for a constructed network.
    pub fn validate(&self) -> ValidationReport {
        validate(&self.nodes)
    }

    pub fn topological_order(&self) -> &[VariableId] {
        &self.order
    }

    pub fn node_by_name(&self, name: &str) -> Option<VariableId> {
        self.nodes.iter().position(|n| n.name == name).map(VariableId)
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.nodes.iter().map(BbnNode::cardinality).collect()
    }

    /// Parent → child arcs.
    pub fn edges(&self) -> BTreeSet<(VariableId, VariableId)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, node)| node.parents.iter().map(move |&p| (p, VariableId(i))))
            .collect()
    }

    pub fn children(&self, v: VariableId) -> impl Iterator<Item = VariableId> + '_ {
        self.nodes.iter().enumerate().filter(move |(_, node)| node.parents.contains(&v)).map(|(i, _)| VariableId(i))
    }

    /// Strict descendants of `v`.
    pub fn descendants(&self, v: VariableId) -> BTreeSet<VariableId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for c in self.children(u) {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }

    pub fn configuration_count(&self) -> u128 {
        configuration_count(self.nodes.iter().map(BbnNode::cardinality))
    }

    /// Every joint assignment, or an error above [`ENUMERATION_LIMIT`].
    pub fn assignments(&self) -> Result<impl Iterator<Item = Assignment>, BbnError> {
        let count = self.configuration_count();
        if count > ENUMERATION_LIMIT as u128 {
            return Err(BbnError::TooLarge { configurations: count, limit: ENUMERATION_LIMIT });
        }
        Ok(Configurations::new(self.cardinalities()).map(Assignment))
    }

    pub fn check_assignment(&self, a: &Assignment) -> Result<(), BbnError> {
        if a.len() != self.nodes.len() {
            return Err(BbnError::PartialAssignment { expected: self.nodes.len(), found: a.len() });
        }
        for (node, &value) in self.nodes.iter().zip(&a.0) {
            if value >= node.cardinality() {
                return Err(BbnError::OutcomeOutOfRange { node: node.name.clone(), outcome: value });
            }
        }
        Ok(())
    }

    /// The CPT row of `v` selected by the parent outcomes in `a`.
    pub fn cpt_row(&self, v: VariableId, a: &Assignment) -> &[f64] {
        let node = &self.nodes[v.0];
        let row = cpt_row_index(node.parents.iter().map(|&p| (self.nodes[p.0].cardinality(), a.get(p))));
        &node.cpt[row]
    }

    /// Product over nodes of the CPT entry picked out by `a`.
    pub fn joint_probability(&self, a: &Assignment) -> Result<f64, BbnError> {
        self.check_assignment(a)?;
        Ok(self.joint_unchecked(a))
    }

    fn joint_unchecked(&self, a: &Assignment) -> f64 {
        (0..self.nodes.len()).map(|i| self.cpt_row(VariableId(i), a)[a.0[i]]).product()
    }

    /// Exact marginal of every node by full enumeration.
    pub fn marginals(&self) -> Result<Vec<Vec<f64>>, BbnError> {
        let mut out: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.cardinality()]).collect();
        for a in self.assignments()? {
            let p = self.joint_unchecked(&a);
            for (i, &value) in a.0.iter().enumerate() {
                out[i][value] += p;
            }
        }
        Ok(out)
    }
}
