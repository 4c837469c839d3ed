//! Graphviz DOT output for causal orderings and belief networks.

use std::fmt::Write;

use crate::bbn::Bbn;
use crate::ordering::CausalOrdering;

const KEYWORDS: [&str; 6] = ["node", "edge", "graph", "digraph", "subgraph", "strict"];

/// A DOT identifier for `name`: bare when it is a plain identifier or a
/// numeral, otherwise double-quoted with `"` and `\` escaped.
pub fn dot_id(name: &str) -> String {
    let plain = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(name));
    let numeral = !name.is_empty() && name.chars().all(|c| c.is_ascii_digit());
    if plain || numeral {
        return name.to_string();
    }
    let mut out = String::with_capacity(name.len() + 2);
    out.push('"');
    for c in name.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One node per variable; clusters of degree above one become same-rank
/// subgraphs labelled `degree=k`; edges are the variable-level causal edges.
pub fn ordering_to_dot(ordering: &CausalOrdering) -> String {
    let mut out = String::from("digraph causal_ordering {\n");
    for (k, cluster) in ordering.clusters.iter().enumerate() {
        if cluster.degree > 1 {
            writeln!(out, "  subgraph cluster_{k} {{").unwrap();
            writeln!(out, "    rank=same;").unwrap();
            writeln!(out, "    label=\"degree={} order={}\";", cluster.degree, cluster.order).unwrap();
            for &v in &cluster.variables {
                writeln!(out, "    {};", dot_id(ordering.variable_name(v))).unwrap();
            }
            out.push_str("  }\n");
        } else {
            for &v in &cluster.variables {
                writeln!(out, "  {};", dot_id(ordering.variable_name(v))).unwrap();
            }
        }
    }
    for &(u, v) in &ordering.variable_edges {
        writeln!(out, "  {} -> {};", dot_id(ordering.variable_name(u)), dot_id(ordering.variable_name(v))).unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn bbn_to_dot(bbn: &Bbn) -> String {
    let mut out = String::from("digraph bbn {\n");
    for node in bbn.nodes() {
        writeln!(out, "  {};", dot_id(&node.name)).unwrap();
    }
    for (p, c) in bbn.edges() {
        writeln!(out, "  {} -> {};", dot_id(&bbn.node(p).name), dot_id(&bbn.node(c).name)).unwrap();
    }
    out.push_str("}\n");
    out
}
