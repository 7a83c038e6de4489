//! Value taxonomy model.
//!
//! Value concepts form a DAG from abstract labels (`fairness`) down to
//! property leaves whose satisfaction can be computed from observed
//! behaviour. Nodes carry importance measures in `[-1, 1]` that are kept
//! coherent: every parent equals the mean of its children.
//!
//! The usual pipeline is
//! [`build_context_taxonomy`] → [`prune`] → [`align`]:
//! assign property importances for a context, propagate them through the
//! taxonomy, drop branches that do not matter in that context, then score
//! how well a world state aligns with what is left.

pub mod alignment;
pub mod context;
pub mod dot;
pub mod grounding;
pub mod holders;
pub mod io;
pub mod propagation;
pub mod taxonomy;

pub use alignment::{
    align, sd_of, AlignmentError, AlignmentReport, AlignmentVariant, PropertyScore,
};
pub use context::{
    build_context_taxonomy, context_holds, kmeans2_relevant, prune, ContextError, ContextParams,
    ContextSpec, RelevanceStrategy,
};
pub use dot::export_dot;
pub use grounding::{
    distribution_distance, eval_predicate, satisfaction_degree, Distance, GroundingError,
    MetricExpr, SatisfactionSpec, WorldState,
};
pub use holders::{
    aggregate_collective, structural_difference, structural_equal, BeliefView, CollectiveOp,
    Holder, HolderError, HolderKind, HolderRegistry, ValueSystem,
};
pub use io::{
    parse_belief_view, parse_context, parse_report, parse_taxonomy, parse_value_system,
    parse_world, serialize_belief_view, serialize_context, serialize_report, serialize_taxonomy,
    serialize_value_system, serialize_world, IoError,
};
pub use propagation::{is_fixpoint, propagate, propagated, PropagationError, PropagationOutcome};
pub use taxonomy::{
    aggregate, check_coherence, AggregateError, CoherenceReport, ImportanceMap, Incoherence, Node,
    NodeId, NodeKind, Taxonomy, TaxonomyError, ValidationReport, Violation, DEFAULT_TOL,
};
