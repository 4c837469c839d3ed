//! JSON file formats.
//!
//! System:  `{"variables": [..], "equations": [{"label": .., "vars": [..]}]}`
//! Network: `{"nodes": [{"name": .., "outcomes": [..], "parents": [..], "cpt": [[..]]}]}`
//! SEM:     `{"equations": [{"target": .., "parents": [..], "thresholds": [[..]], "outcomes": [..]}]}`
//!          (`outcomes` optional)
//! Change:  `{"kind": .., "target": .., "vars": [..] | "dist": [..], "label": ..}`
//!
//! List order fixes indices. Unknown keys are rejected everywhere.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbn::{validate, Bbn, BbnNode};
use crate::intervention::StructuralChange;
use crate::sem::{SemError, ThresholdEquation, ThresholdEquationSystem};
use crate::system::{StructureMatrix, SystemError, VariableId};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("node `{node}`: {message}")]
    Node { node: String, message: String },
    #[error("{}", .0.join("; "))]
    InvalidBbn(Vec<String>),
    #[error("{0}")]
    Change(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub variables: Vec<String>,
    pub equations: Vec<EquationEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationEntry {
    pub label: String,
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BbnFile {
    pub nodes: Vec<NodeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub name: String,
    pub outcomes: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemFile {
    pub equations: Vec<SemEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemEntry {
    pub target: String,
    pub parents: Vec<String>,
    pub thresholds: Vec<Vec<f64>>,
    /// Optional outcome labels; "0", "1", … when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeFile {
    pub kind: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vars: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    /// Label of the new equation for `add_exogenous_variable`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// Which of the model formats a JSON document holds, judged by its top-level keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    System,
    Bbn,
    Sem,
}

pub fn detect_kind(text: &str) -> Result<ModelKind, FormatError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or_else(|| FormatError::Change("top-level value is not an object".into()))?;
    if obj.contains_key("nodes") {
        Ok(ModelKind::Bbn)
    } else if obj.contains_key("variables") {
        Ok(ModelKind::System)
    } else if obj.contains_key("equations") {
        Ok(ModelKind::Sem)
    } else {
        Err(FormatError::Change("document has none of `nodes`, `variables`, `equations`".into()))
    }
}

impl SystemFile {
    pub fn to_matrix(&self) -> Result<StructureMatrix, FormatError> {
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        let eqs: Vec<(&str, Vec<&str>)> =
            self.equations.iter().map(|e| (e.label.as_str(), e.vars.iter().map(String::as_str).collect())).collect();
        let eq_refs: Vec<(&str, &[&str])> = eqs.iter().map(|(l, v)| (*l, v.as_slice())).collect();
        Ok(StructureMatrix::from_named(&vars, &eq_refs)?)
    }

    pub fn from_matrix(m: &StructureMatrix) -> Self {
        SystemFile {
            variables: m.variable_names().to_vec(),
            equations: m
                .equations()
                .map(|e| EquationEntry {
                    label: m.equation_label(e).to_string(),
                    vars: m.row_variables(e).map(|v| m.variable_name(v).to_string()).collect(),
                })
                .collect(),
        }
    }
}

impl BbnFile {
    /// Resolves parent names; does not check CPT invariants.
    pub fn to_nodes(&self) -> Result<Vec<BbnNode>, FormatError> {
        let index = |name: &str| self.nodes.iter().position(|n| n.name == name);
        self.nodes
            .iter()
            .map(|entry| {
                let parents = entry
                    .parents
                    .iter()
                    .map(|p| {
                        index(p).map(VariableId).ok_or_else(|| FormatError::Node {
                            node: entry.name.clone(),
                            message: format!("unknown parent `{p}`"),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(BbnNode {
                    name: entry.name.clone(),
                    outcomes: entry.outcomes.clone(),
                    parents,
                    cpt: entry.cpt.clone(),
                })
            })
            .collect()
    }

    pub fn to_bbn(&self) -> Result<Bbn, FormatError> {
        let nodes = self.to_nodes()?;
        let report = validate(&nodes);
        if !report.is_valid() {
            return Err(FormatError::InvalidBbn(report.issues.iter().map(|i| i.describe(&nodes)).collect()));
        }
        Ok(Bbn::new(nodes).expect("validated above"))
    }

    pub fn from_bbn(bbn: &Bbn) -> Self {
        BbnFile {
            nodes: bbn
                .nodes()
                .iter()
                .map(|n| NodeEntry {
                    name: n.name.clone(),
                    outcomes: n.outcomes.clone(),
                    parents: n.parents.iter().map(|&p| bbn.node(p).name.clone()).collect(),
                    cpt: n.cpt.clone(),
                })
                .collect(),
        }
    }
}

impl SemFile {
    pub fn to_system(&self) -> Result<ThresholdEquationSystem, FormatError> {
        let names: Vec<String> = self.equations.iter().map(|e| e.target.clone()).collect();
        let equations = self
            .equations
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let parents = e
                    .parents
                    .iter()
                    .map(|p| {
                        names.iter().position(|n| n == p).map(VariableId).ok_or_else(|| FormatError::Node {
                            node: e.target.clone(),
                            message: format!("unknown parent `{p}`"),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(ThresholdEquation { target: VariableId(i), parents, thresholds: e.thresholds.clone() })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        let sem = ThresholdEquationSystem::new(names, equations)?;
        if self.equations.iter().all(|e| e.outcomes.is_none()) {
            return Ok(sem);
        }
        let mut labels = Vec::with_capacity(sem.len());
        for (v, e) in self.equations.iter().enumerate() {
            let k = sem.cardinality(VariableId(v));
            let l = match &e.outcomes {
                Some(l) => l.clone(),
                None => (0..k).map(|j| j.to_string()).collect(),
            };
            let message = if l.len() != k {
                Some(format!("{} outcome labels for {k} outcomes", l.len()))
            } else if l.iter().collect::<BTreeSet<_>>().len() != k {
                Some("duplicate outcome label".to_string())
            } else {
                None
            };
            if let Some(message) = message {
                return Err(FormatError::Node { node: e.target.clone(), message });
            }
            labels.push(l);
        }
        Ok(sem.with_outcome_labels(labels))
    }

    /// Equations listed in variable order.
    pub fn from_system(sem: &ThresholdEquationSystem) -> Self {
        let names = sem.variable_names();
        SemFile {
            equations: (0..sem.len())
                .map(|v| {
                    let eq = sem.equation_for(VariableId(v));
                    SemEntry {
                        target: names[v].clone(),
                        parents: eq.parents.iter().map(|p| names[p.0].clone()).collect(),
                        thresholds: eq.thresholds.clone(),
                        outcomes: Some(sem.outcome_labels(VariableId(v)).to_vec()),
                    }
                })
                .collect(),
        }
    }
}

impl ChangeFile {
    /// Resolves names against an equation system. `target` is an equation
    /// label for `replace_equation`, the new variable's name for
    /// `add_exogenous_variable`, and a variable name for `set_bbn_node`.
    pub fn resolve_for_system(&self, m: &StructureMatrix) -> Result<StructuralChange, FormatError> {
        let var = |name: &str| {
            m.variable_by_name(name).ok_or_else(|| FormatError::Change(format!("unknown variable `{name}`")))
        };
        match self.kind.as_str() {
            "replace_equation" => {
                let equation = m
                    .equation_by_label(&self.target)
                    .ok_or_else(|| FormatError::Change(format!("unknown equation `{}`", self.target)))?;
                let names = self.vars.as_ref().ok_or_else(|| missing("vars", &self.kind))?;
                let variables = names.iter().map(|n| var(n)).collect::<Result<BTreeSet<_>, _>>()?;
                Ok(StructuralChange::ReplaceEquation { equation, variables })
            }
            "add_exogenous_variable" => {
                let inputs = self
                    .vars
                    .iter()
                    .flatten()
                    .filter(|n| **n != self.target)
                    .map(|n| var(n))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                let label = self.label.clone().unwrap_or_else(|| format!("e{}", m.n() + 1));
                Ok(StructuralChange::AddExogenousVariable { name: self.target.clone(), label, inputs })
            }
            "set_bbn_node" => Ok(StructuralChange::SetBbnNode {
                node: var(&self.target)?,
                dist: self.dist.clone().unwrap_or_default(),
            }),
            other => Err(FormatError::Change(format!("unknown change kind `{other}`"))),
        }
    }

    pub fn resolve_for_bbn(&self, bbn: &Bbn) -> Result<StructuralChange, FormatError> {
        if self.kind != "set_bbn_node" {
            return Err(FormatError::Change(format!("change kind `{}` does not apply to a network", self.kind)));
        }
        let node = bbn
            .node_by_name(&self.target)
            .ok_or_else(|| FormatError::Change(format!("unknown node `{}`", self.target)))?;
        let dist = self.dist.clone().ok_or_else(|| missing("dist", &self.kind))?;
        Ok(StructuralChange::SetBbnNode { node, dist })
    }
}

fn missing(field: &str, kind: &str) -> FormatError {
    FormatError::Change(format!("`{field}` is required for `{kind}`"))
}

pub fn parse_system(text: &str) -> Result<StructureMatrix, FormatError> {
    serde_json::from_str::<SystemFile>(text)?.to_matrix()
}

pub fn parse_bbn(text: &str) -> Result<Bbn, FormatError> {
    serde_json::from_str::<BbnFile>(text)?.to_bbn()
}

pub fn parse_sem(text: &str) -> Result<ThresholdEquationSystem, FormatError> {
    serde_json::from_str::<SemFile>(text)?.to_system()
}

pub fn parse_change(text: &str) -> Result<ChangeFile, FormatError> {
    Ok(serde_json::from_str(text)?)
}

pub fn system_to_json(m: &StructureMatrix) -> String {
    to_pretty(&SystemFile::from_matrix(m))
}

pub fn bbn_to_json(bbn: &Bbn) -> String {
    to_pretty(&BbnFile::from_bbn(bbn))
}

pub fn sem_to_json(sem: &ThresholdEquationSystem) -> String {
    to_pretty(&SemFile::from_system(sem))
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}
