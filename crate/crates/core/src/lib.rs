//! Causal ordering of simultaneous structural equation systems, and the
//! bridge from discrete Bayesian belief networks to threshold-equation
//! systems driven by independent uniform latents.
//!
//! The crate is organised bottom-up:
//!
//! - [`system`]: structure matrices and self-containment.
//! - [`matching`]: bipartite matching of equations to variables.
//! - [`ordering`]: clusters, orders and the causal graph of a system.
//! - [`triangular`]: row/column pivoting to lower-triangular form.
//! - [`bbn`]: discrete belief networks and exact joint probabilities.
//! - [`sem`]: threshold equations built from a network's CPTs.
//! - [`intervention`]: changes in structure on either side.
//! - [`dot`]: Graphviz output.
//! - [`io`]: JSON file formats.

pub mod bbn;
pub mod dot;
pub mod intervention;
pub mod io;
pub mod matching;
pub mod ordering;
pub mod sem;
pub mod system;
pub mod triangular;

pub use bbn::{Assignment, Bbn, BbnError, BbnNode, ValidationIssue, ValidationReport};
pub use intervention::{
    affected_variables, apply_change, compare_marginals, intervene_bbn, InterventionError, StructuralChange,
};
pub use ordering::{causal_ordering, minimal_self_contained_subsets, CausalOrdering, Cluster};
pub use sem::{
    bbn_to_sem, check_equivalence, roundtrip_check, sample, sem_structure, EmpiricalDistribution, SemError,
    ThresholdEquation, ThresholdEquationSystem,
};
pub use system::{EquationId, EquationSubset, StructureMatrix, SystemError, SystemReport, VariableId};
pub use triangular::{is_triangularizable, triangularize, TriangularError, Triangularization};
