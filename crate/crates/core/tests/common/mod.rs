//! Shared generators and brute-force oracles for the integration tests.
//!
//! The oracles work on bitmasks and never call into the library's matching,
//! SCC or triangularization code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mechord::{Bbn, BbnNode, CausalOrdering, StructureMatrix, VariableId};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn matrix_from_rows(rows: &[Vec<usize>]) -> StructureMatrix {
    let n = rows.len();
    StructureMatrix::from_incidence(names("v", n), names("e", n), rows).unwrap()
}

/// Any square matrix with non-empty rows; usually not self-contained.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> StructureMatrix {
    let density = rng.gen_range(0.05..0.6);
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut row: Vec<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
            if row.is_empty() {
                row.push(rng.gen_range(0..n));
            }
            row
        })
        .collect();
    matrix_from_rows(&rows)
}

/// A self-contained matrix: a hidden perfect matching plus random extra
/// entries, optionally with a planted feedback loop over a few equations.
pub fn random_self_contained<R: Rng>(rng: &mut R, n: usize, plant_cycle: bool) -> StructureMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let density = rng.gen_range(0.0..0.35);
    let mut rows: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| {
            let mut row: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(density)).collect();
            row.insert(perm[i]);
            row
        })
        .collect();
    if plant_cycle && n >= 2 {
        let len = rng.gen_range(2..=n.min(4));
        let mut members: Vec<usize> = (0..n).collect();
        members.shuffle(rng);
        members.truncate(len);
        for k in 0..len {
            let next = members[(k + 1) % len];
            rows[members[k]].insert(perm[next]);
        }
    }
    let rows: Vec<Vec<usize>> = rows.into_iter().map(|r| r.into_iter().collect()).collect();
    matrix_from_rows(&rows)
}

/// A self-contained matrix with no feedback: strictly lower-triangular extras
/// under a hidden permutation of rows and columns.
pub fn random_acyclic<R: Rng>(rng: &mut R, n: usize) -> StructureMatrix {
    let density = rng.gen_range(0.0..0.6);
    let mut rows_perm: Vec<usize> = (0..n).collect();
    let mut cols_perm: Vec<usize> = (0..n).collect();
    rows_perm.shuffle(rng);
    cols_perm.shuffle(rng);
    let mut rows = vec![Vec::new(); n];
    for k in 0..n {
        let mut row = vec![cols_perm[k]];
        for &c in &cols_perm[..k] {
            if rng.gen_bool(density) {
                row.push(c);
            }
        }
        rows[rows_perm[k]] = row;
    }
    matrix_from_rows(&rows)
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Random valid network with `n` nodes, up to `max_outcomes` outcomes per
/// node and up to three parents. Node indices are shuffled relative to the
/// topological order.
pub fn random_bbn<R: Rng>(rng: &mut R, n: usize, max_outcomes: usize) -> Bbn {
    let topo = random_permutation(rng, n);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_outcomes)).collect();
    let edge_p = rng.gen_range(0.0..0.7);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n {
        let child = topo[k];
        let mut candidates: Vec<usize> = topo[..k].to_vec();
        candidates.shuffle(rng);
        for p in candidates {
            if parents[child].len() < 3 && rng.gen_bool(edge_p) {
                parents[child].push(p);
            }
        }
    }
    let nodes = (0..n)
        .map(|i| {
            let rows: usize = parents[i].iter().map(|&p| cards[p]).product();
            let cpt = (0..rows).map(|_| random_distribution(rng, cards[i])).collect();
            BbnNode {
                name: format!("n{i}"),
                outcomes: (0..cards[i]).map(|k| format!("o{k}")).collect(),
                parents: parents[i].iter().map(|&p| VariableId(p)).collect(),
                cpt,
            }
        })
        .collect();
    Bbn::new(nodes).expect("generator builds valid networks")
}

/// Random probability vector; sometimes degenerate or with zero entries.
pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    if rng.gen_bool(0.1) {
        let mut d = vec![0.0; k];
        d[rng.gen_range(0..k)] = 1.0;
        return d;
    }
    let mut w: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..k)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

pub fn row_masks(m: &StructureMatrix) -> Vec<u32> {
    m.equations().map(|e| m.row_variables(e).fold(0u32, |acc, v| acc | (1 << v.0))).collect()
}

fn vars_of_mask(rows: &[u32], mask: u32) -> u32 {
    let mut acc = 0;
    for (i, r) in rows.iter().enumerate() {
        if mask & (1 << i) != 0 {
            acc |= r;
        }
    }
    acc
}

/// Literal definition: as many variables as equations, and every non-empty
/// sub-subset has at least as many variables as equations.
pub fn brute_force_self_contained(m: &StructureMatrix, mask: u32) -> bool {
    let rows = row_masks(m);
    if vars_of_mask(&rows, mask).count_ones() != mask.count_ones() {
        return false;
    }
    let mut sub = mask;
    while sub != 0 {
        if vars_of_mask(&rows, sub).count_ones() < sub.count_ones() {
            return false;
        }
        sub = (sub - 1) & mask;
    }
    true
}

pub fn mask_of(set: impl IntoIterator<Item = usize>) -> u32 {
    set.into_iter().fold(0, |acc, i| acc | (1 << i))
}

pub fn bits(mask: u32) -> BTreeSet<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OracleCluster {
    pub order: usize,
    pub equations: BTreeSet<usize>,
    pub variables: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOrdering {
    pub clusters: BTreeSet<OracleCluster>,
    pub edges: BTreeSet<(usize, usize)>,
}

/// The recursive procedure, by exhaustive search: at each step find every
/// minimal self-contained subset of the remaining equations (with solved
/// variables deleted), give it the current order, solve, repeat. `None` if
/// some step finds no self-contained subset.
pub fn naive_ordering(m: &StructureMatrix) -> Option<OracleOrdering> {
    let n = m.n();
    let rows = row_masks(m);
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut remaining = full;
    let mut solved = 0u32;
    let mut clusters = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut step = 0;
    while remaining != 0 {
        // hall[t]: every non-empty t' within t has |V(t') \ solved| >= |t'|;
        // built by peeling one equation at a time, which visits every subset.
        let size = 1usize << n;
        let mut vars = vec![0u32; size];
        let mut hall = vec![false; size];
        hall[0] = true;
        for t in 1..size {
            let low = t.trailing_zeros() as usize;
            vars[t] = vars[t & (t - 1)] | (rows[low] & !solved);
            hall[t] = vars[t].count_ones() >= t.count_ones()
                && (0..n).filter(|i| t & (1 << i) != 0).all(|i| hall[t & !(1 << i)]);
        }
        let is_sc = |t: usize| t != 0 && hall[t] && vars[t].count_ones() == t.count_ones();
        let mut found = Vec::new();
        let mut t = remaining as usize;
        while t != 0 {
            if is_sc(t) {
                let mut minimal = true;
                let mut sub = (t - 1) & t;
                while sub != 0 {
                    if is_sc(sub) {
                        minimal = false;
                        break;
                    }
                    sub = (sub - 1) & t;
                }
                if minimal {
                    found.push(t);
                }
            }
            t = (t - 1) & remaining as usize;
        }
        if found.is_empty() {
            return None;
        }
        for &t in &found {
            let own = vars[t];
            for e in bits(t as u32) {
                for u in bits(rows[e] & solved) {
                    for v in bits(own) {
                        edges.insert((u, v));
                    }
                }
            }
            clusters.insert(OracleCluster { order: step, equations: bits(t as u32), variables: bits(own) });
        }
        for &t in &found {
            solved |= vars[t];
            remaining &= !(t as u32);
        }
        step += 1;
    }
    Some(OracleOrdering { clusters, edges })
}

/// The library's ordering in the oracle's shape.
pub fn as_oracle(o: &CausalOrdering) -> OracleOrdering {
    OracleOrdering {
        clusters: o
            .clusters
            .iter()
            .map(|c| OracleCluster {
                order: c.order,
                equations: c.equations.iter().map(|e| e.0).collect(),
                variables: c.variables.iter().map(|v| v.0).collect(),
            })
            .collect(),
        edges: o.variable_edges.iter().map(|&(u, v)| (u.0, v.0)).collect(),
    }
}

/// Longest path (in edges) reaching each cluster, by repeated relaxation.
pub fn longest_path_depths(o: &CausalOrdering) -> Vec<usize> {
    let mut depth = vec![0usize; o.clusters.len()];
    for _ in 0..o.clusters.len() {
        for &(a, b) in &o.cluster_edges {
            depth[b] = depth[b].max(depth[a] + 1);
        }
    }
    depth
}

/// Directed-graph cycle check by depth-first colouring.
pub fn has_cycle(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> bool {
    let mut succ = vec![Vec::new(); n];
    for (a, b) in edges {
        succ[a].push(b);
    }
    fn visit(v: usize, succ: &[Vec<usize>], colour: &mut [u8]) -> bool {
        colour[v] = 1;
        for &w in &succ[v] {
            if colour[w] == 1 || (colour[w] == 0 && visit(w, succ, colour)) {
                return true;
            }
        }
        colour[v] = 2;
        false
    }
    let mut colour = vec![0u8; n];
    (0..n).any(|v| colour[v] == 0 && visit(v, &succ, &mut colour))
}

/// Enumerates every perfect matching (equation -> variable) by backtracking.
pub fn perfect_matchings(m: &StructureMatrix) -> Vec<Vec<usize>> {
    let rows = row_masks(m);
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn go(i: usize, used: u32, rows: &[u32], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == rows.len() {
            out.push(current.clone());
            return;
        }
        for v in bits(rows[i] & !used) {
            current.push(v);
            go(i + 1, used | (1 << v), rows, current, out);
            current.pop();
        }
    }
    go(0, 0, &rows, &mut current, &mut out);
    out
}

/// Marginals of a network by summing the product of CPT entries directly.
pub fn brute_force_marginals(bbn: &Bbn) -> Vec<Vec<f64>> {
    let cards = bbn.cardinalities();
    let mut out: Vec<Vec<f64>> = cards.iter().map(|&k| vec![0.0; k]).collect();
    let total: usize = cards.iter().product();
    for mut code in 0..total {
        let mut values = vec![0; cards.len()];
        for i in (0..cards.len()).rev() {
            values[i] = code % cards[i];
            code /= cards[i];
        }
        let mut p = 1.0;
        for (i, node) in bbn.nodes().iter().enumerate() {
            let mut row = 0;
            for par in &node.parents {
                row = row * cards[par.0] + values[par.0];
            }
            p *= node.cpt[row][values[i]];
        }
        for (i, &v) in values.iter().enumerate() {
            out[i][v] += p;
        }
    }
    out
}
