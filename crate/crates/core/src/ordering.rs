//! Causal ordering of a self-contained structure matrix.
//!
//! The recursive procedure (find every minimal self-contained subset, solve
//! it, delete its variables, repeat) is computed in one pass:
//!
//! 1. match every equation to a distinct variable it contains;
//! 2. draw an arc from equation `f` to equation `e` whenever `e` contains the
//!    variable matched to `f`;
//! 3. the strongly connected components of that graph are the minimal
//!    self-contained subsets met along the way, and the longest-path depth of
//!    a component in the condensation is the step at which it is solved.
//!
//! Components do not depend on which perfect matching is picked, so the
//! matching itself is not exposed.

use std::collections::{BTreeMap, BTreeSet};

use crate::matching::Matching;
use crate::system::{EquationId, EquationSubset, StructureMatrix, SystemError, VariableId};

/// A minimal self-contained subset together with the step that solves it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub equations: BTreeSet<EquationId>,
    /// Variables solved by this cluster (previously solved ones excluded).
    pub variables: BTreeSet<VariableId>,
    pub degree: usize,
    pub order: usize,
}

impl Cluster {
    fn min_variable(&self) -> VariableId {
        *self.variables.iter().next().expect("clusters are non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalOrdering {
    /// Sorted by `(order, smallest variable index)`.
    pub clusters: Vec<Cluster>,
    /// Arcs between positions in `clusters`.
    pub cluster_edges: BTreeSet<(usize, usize)>,
    /// `(u, v)`: `u` is a direct causal predecessor of `v`.
    pub variable_edges: BTreeSet<(VariableId, VariableId)>,
    pub variable_names: Vec<String>,
    pub equation_labels: Vec<String>,
}

impl CausalOrdering {
    pub fn cluster_of_variable(&self, v: VariableId) -> Option<usize> {
        self.clusters.iter().position(|c| c.variables.contains(&v))
    }

    pub fn cluster_of_equation(&self, e: EquationId) -> Option<usize> {
        self.clusters.iter().position(|c| c.equations.contains(&e))
    }

    /// True when every cluster has degree one, i.e. there is no feedback.
    pub fn is_acyclic(&self) -> bool {
        self.clusters.iter().all(|c| c.degree == 1)
    }

    pub fn variable_name(&self, v: VariableId) -> &str {
        &self.variable_names[v.0]
    }

    /// Clusters reachable from `start` along cluster edges, `start` included.
    pub fn downstream_clusters(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            for &(_, to) in self.cluster_edges.range((c, 0)..(c + 1, 0)) {
                if seen.insert(to) {
                    stack.push(to);
                }
            }
        }
        seen
    }
}

/// Computes clusters, orders and the causal graph of a self-contained system.
pub fn causal_ordering(matrix: &StructureMatrix) -> Result<CausalOrdering, SystemError> {
    matrix.require_self_contained()?;
    let n = matrix.n();
    let adj = matrix.adjacency();
    let matching = Matching::maximum(&adj, n);

    // arc f -> e when e uses the variable f is matched to
    let mut succ = vec![Vec::new(); n];
    for (e, row) in adj.iter().enumerate() {
        for &v in row {
            let f = matching.left_of(v).expect("perfect matching");
            if f != e {
                succ[f].push(e);
            }
        }
    }

    // Tarjan emits components sinks-first.
    let components = strongly_connected_components(&succ);
    let mut comp_of = vec![0; n];
    for (c, members) in components.iter().enumerate() {
        for &e in members {
            comp_of[e] = c;
        }
    }
    let mut comp_edges = BTreeSet::new();
    for (f, targets) in succ.iter().enumerate() {
        for &e in targets {
            if comp_of[f] != comp_of[e] {
                comp_edges.insert((comp_of[f], comp_of[e]));
            }
        }
    }
    let mut level = vec![0usize; components.len()];
    for c in (0..components.len()).rev() {
        for &(_, to) in comp_edges.range((c, 0)..(c + 1, 0)) {
            level[to] = level[to].max(level[c] + 1);
        }
    }

    let mut clusters: Vec<(usize, Cluster)> = components
        .iter()
        .enumerate()
        .map(|(c, members)| {
            let equations: BTreeSet<EquationId> = members.iter().map(|&e| EquationId(e)).collect();
            let variables =
                members.iter().map(|&e| VariableId(matching.right_of(e).expect("perfect matching"))).collect();
            (c, Cluster { degree: equations.len(), equations, variables, order: level[c] })
        })
        .collect();
    clusters.sort_by_key(|(_, cl)| (cl.order, cl.min_variable()));

    let mut position = vec![0; components.len()];
    for (pos, (c, _)) in clusters.iter().enumerate() {
        position[*c] = pos;
    }
    let cluster_edges = comp_edges.iter().map(|&(a, b)| (position[a], position[b])).collect();
    let clusters: Vec<Cluster> = clusters.into_iter().map(|(_, cl)| cl).collect();

    let mut variable_edges = BTreeSet::new();
    for cluster in &clusters {
        for &e in &cluster.equations {
            for u in matrix.row_variables(e) {
                if !cluster.variables.contains(&u) {
                    for &v in &cluster.variables {
                        variable_edges.insert((u, v));
                    }
                }
            }
        }
    }

    Ok(CausalOrdering {
        clusters,
        cluster_edges,
        variable_edges,
        variable_names: matrix.variable_names().to_vec(),
        equation_labels: matrix.equation_labels().to_vec(),
    })
}

/// Self-contained subsets that contain no smaller self-contained subset.
/// These are exactly the order-zero clusters.
pub fn minimal_self_contained_subsets(matrix: &StructureMatrix) -> Result<Vec<EquationSubset>, SystemError> {
    let ordering = causal_ordering(matrix)?;
    Ok(ordering
        .clusters
        .into_iter()
        .filter(|c| c.order == 0)
        .map(|c| EquationSubset { equations: c.equations, variables: c.variables })
        .collect())
}

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order of the condensation.
pub(crate) fn strongly_connected_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut counter = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // (vertex, next successor position)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if let Some(&w) = succ[v].get(*next) {
                *next += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components
}

/// Variable-level predecessor map derived from an ordering, keyed by target.
pub fn predecessors(ordering: &CausalOrdering) -> BTreeMap<VariableId, BTreeSet<VariableId>> {
    let mut map: BTreeMap<VariableId, BTreeSet<VariableId>> = BTreeMap::new();
    for &(u, v) in &ordering.variable_edges {
        map.entry(v).or_default().insert(u);
    }
    map
}
