//! Context-based taxonomies.
//!
//! A context is defined by a set of property nodes; it holds when all of them
//! are satisfied. Each context carries its own importance for the property
//! leaves, from which the rest of the taxonomy is propagated independently of
//! whatever importances the general taxonomy had.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{eval_predicate, GroundingError, SatisfactionSpec, WorldState};
use crate::propagation::{propagate, PropagationError};
use crate::taxonomy::{ImportanceMap, NodeId, Taxonomy, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContextError {
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("`{0}` is a label node; context importances apply to property nodes only")]
    NotAProperty(NodeId),
    #[error("property node `{0}` has no grounding")]
    MissingGrounding(NodeId),
    #[error("property node `{0}` has no importance")]
    MissingImportance(NodeId),
    #[error("importance {value} for `{node}` outside [-1, 1]")]
    ImportanceOutOfRange { node: NodeId, value: f64 },
    #[error("invalid context parameters: {0}")]
    InvalidParams(String),
    #[error("threshold {0} outside [-1, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

/// Per-context grounding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextParams {
    /// Saturation point of request/offer style ratios; `> 1`.
    pub max_ratio: f64,
    /// Distance below which a distribution counts as uniform; `> 0`.
    pub epsilon: f64,
    /// Saturation point of distribution distances; `> epsilon`.
    pub max_delta: f64,
}

impl ContextParams {
    pub fn check(&self) -> Result<(), ContextError> {
        if !(self.max_ratio.is_finite() && self.max_ratio > 1.0) {
            return Err(ContextError::InvalidParams(format!(
                "max_ratio must be > 1, got {}",
                self.max_ratio
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ContextError::InvalidParams(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.max_delta.is_finite() && self.max_delta > self.epsilon) {
            return Err(ContextError::InvalidParams(format!(
                "max_delta must exceed epsilon, got {}",
                self.max_delta
            )));
        }
        Ok(())
    }

    /// Overwrites the saturation and threshold parameters of `spec`.
    pub fn apply(&self, spec: &mut SatisfactionSpec) {
        match spec {
            SatisfactionSpec::RatioThreshold { max_ratio, .. } => *max_ratio = self.max_ratio,
            SatisfactionSpec::DistributionUniformity {
                epsilon, max_delta, ..
            } => {
                *epsilon = self.epsilon;
                *max_delta = self.max_delta;
            }
            SatisfactionSpec::BooleanExpr { .. } => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextSpec {
    pub id: String,
    /// Properties that must all hold for the context to hold.
    pub defining_properties: BTreeSet<NodeId>,
    pub params: ContextParams,
    /// Importance of property leaves within this context.
    pub leaf_importance: ImportanceMap,
}

impl ContextSpec {
    /// Checks parameters and that every referenced id is a property node of `t`.
    pub fn check_against(&self, t: &Taxonomy) -> Result<(), ContextError> {
        self.params.check()?;
        for id in self
            .defining_properties
            .iter()
            .chain(self.leaf_importance.keys())
        {
            let node = t
                .node(id.as_str())
                .ok_or_else(|| ContextError::UnknownNode(id.clone()))?;
            if !node.is_property() {
                return Err(ContextError::NotAProperty(id.clone()));
            }
        }
        for (node, value) in &self.leaf_importance {
            if !(-1.0..=1.0).contains(value) {
                return Err(ContextError::ImportanceOutOfRange {
                    node: node.clone(),
                    value: *value,
                });
            }
        }
        Ok(())
    }
}

/// Builds the context taxonomy: same nodes and edges as `general`, groundings
/// re-parameterised for the context, and importances propagated from the
/// context's leaf importances alone.
pub fn build_context_taxonomy(
    general: &Taxonomy,
    ctx: &ContextSpec,
    tol: f64,
) -> Result<Taxonomy, ContextError> {
    ctx.check_against(general)?;
    let mut t = general.with_importance(ctx.leaf_importance.clone());
    let property_ids: Vec<NodeId> = t.property_nodes().cloned().collect();
    for id in property_ids {
        if let Some(spec) = t.node_mut(id.as_str()).and_then(|n| n.grounding.as_mut()) {
            ctx.params.apply(spec);
        }
    }
    let importance = propagate(&t, tol)?;
    t.set_importance_map(importance);
    Ok(t)
}

/// Which property nodes count as relevant when pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelevanceStrategy {
    /// Importance different from zero.
    NonZero,
    /// Importance strictly above the threshold.
    Threshold(f64),
    /// The higher cluster of a two-means split of the importances.
    KMeans2,
}

impl fmt::Display for RelevanceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelevanceStrategy::NonZero => f.write_str("nonzero"),
            RelevanceStrategy::Threshold(t) => write!(f, "threshold:{t}"),
            RelevanceStrategy::KMeans2 => f.write_str("kmeans2"),
        }
    }
}

impl FromStr for RelevanceStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonzero" => Ok(RelevanceStrategy::NonZero),
            "kmeans2" => Ok(RelevanceStrategy::KMeans2),
            _ => {
                let theta = s.strip_prefix("threshold:").ok_or_else(|| {
                    format!("unknown strategy `{s}`: expected nonzero, threshold:<t> or kmeans2")
                })?;
                let theta: f64 = theta
                    .parse()
                    .map_err(|_| format!("bad threshold `{theta}`"))?;
                if !(-1.0..=1.0).contains(&theta) {
                    return Err(format!("threshold {theta} outside [-1, 1]"));
                }
                Ok(RelevanceStrategy::Threshold(theta))
            }
        }
    }
}

/// Keeps the relevant property nodes and every node on a path from a root to
/// one of them, with all edges between kept nodes. Importances on the result
/// are re-propagated from the kept property nodes so the pruned structure is
/// coherent on its own.
pub fn prune(t: &Taxonomy, strategy: RelevanceStrategy) -> Result<Taxonomy, ContextError> {
    if let RelevanceStrategy::Threshold(theta) = strategy {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(ContextError::InvalidThreshold(theta));
        }
    }
    let mut leaves: ImportanceMap = BTreeMap::new();
    for id in t.property_nodes() {
        let v = t
            .importance(id.as_str())
            .ok_or_else(|| ContextError::MissingImportance(id.clone()))?;
        leaves.insert(id.clone(), v);
    }
    let relevant: BTreeSet<NodeId> = match strategy {
        RelevanceStrategy::NonZero => leaves
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|(id, _)| id.clone())
            .collect(),
        RelevanceStrategy::Threshold(theta) => leaves
            .iter()
            .filter(|(_, v)| **v > theta)
            .map(|(id, _)| id.clone())
            .collect(),
        RelevanceStrategy::KMeans2 if leaves.is_empty() => BTreeSet::new(),
        RelevanceStrategy::KMeans2 => kmeans2_relevant(&leaves),
    };

    let kept = t.ancestor_closure(&relevant);
    let mut pruned = t.induced(&kept);
    let leaf_values: ImportanceMap = relevant.iter().map(|id| (id.clone(), leaves[id])).collect();
    pruned.set_importance_map(leaf_values);
    let importance = propagate(&pruned, DEFAULT_TOL)?;
    pruned.set_importance_map(importance);
    Ok(pruned)
}

/// Splits importances into two clusters with Lloyd's algorithm seeded at the
/// minimum and maximum, returning the ids in the higher cluster. With fewer
/// than two distinct values every id is returned. Points equidistant from
/// both centroids join the higher one.
pub fn kmeans2_relevant(importances: &ImportanceMap) -> BTreeSet<NodeId> {
    let values: Vec<f64> = importances.values().copied().collect();
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() || min == max {
        return importances.keys().cloned().collect();
    }

    let assign = |lo: f64, hi: f64| -> Vec<bool> {
        values
            .iter()
            .map(|v| (v - hi).abs() <= (v - lo).abs())
            .collect()
    };
    let (mut lo, mut hi) = (min, max);
    let mut upper = assign(lo, hi);
    for _ in 0..1_000 {
        let (mut sum_lo, mut n_lo, mut sum_hi, mut n_hi) = (0.0, 0usize, 0.0, 0usize);
        for (v, up) in values.iter().zip(&upper) {
            if *up {
                sum_hi += v;
                n_hi += 1;
            } else {
                sum_lo += v;
                n_lo += 1;
            }
        }
        let new_lo = if n_lo > 0 { sum_lo / n_lo as f64 } else { lo };
        let new_hi = if n_hi > 0 { sum_hi / n_hi as f64 } else { hi };
        let shift = (new_lo - lo).abs().max((new_hi - hi).abs());
        lo = new_lo;
        hi = new_hi;
        upper = assign(lo, hi);
        if shift < 1e-12 {
            break;
        }
    }
    importances
        .keys()
        .zip(upper)
        .filter(|(_, up)| *up)
        .map(|(id, _)| id.clone())
        .collect()
}

/// True iff every defining property of `ctx` holds in `world`.
pub fn context_holds(
    ctx: &ContextSpec,
    world: &WorldState,
    t: &Taxonomy,
) -> Result<bool, ContextError> {
    for id in &ctx.defining_properties {
        let node = t
            .node(id.as_str())
            .ok_or_else(|| ContextError::UnknownNode(id.clone()))?;
        let spec = node
            .grounding
            .as_ref()
            .ok_or_else(|| ContextError::MissingGrounding(id.clone()))?;
        if !eval_predicate(spec, world)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::fixtures::*;
    use crate::taxonomy::{check_coherence, Node};

    fn params() -> ContextParams {
        ContextParams {
            max_ratio: 5.0,
            epsilon: 0.2,
            max_delta: 1.0,
        }
    }

    fn ctx(leaves: &[(&str, f64)]) -> ContextSpec {
        ContextSpec {
            id: "test".into(),
            defining_properties: BTreeSet::new(),
            params: params(),
            leaf_importance: leaves.iter().map(|(n, v)| (id(n), *v)).collect(),
        }
    }

    fn ids(v: &[&str]) -> BTreeSet<NodeId> {
        v.iter().map(|s| id(s)).collect()
    }

    #[test]
    fn elderly_context_and_pruning() {
        let c = ctx(&[("p1", 0.0), ("p2", 0.0), ("p3", 0.9)]);
        let full = build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap();
        assert_eq!(full.len(), 9);
        assert_eq!(full.importance("balanced_division"), Some(0.9));
        let pruned = prune(&full, RelevanceStrategy::NonZero).unwrap();
        let kept: BTreeSet<NodeId> = pruned.node_ids().cloned().collect();
        assert_eq!(
            kept,
            ids(&["fairness", "fair_treatment", "balanced_division", "p3"])
        );
        assert_eq!(pruned.edge_count(), 3);
        for n in &kept {
            assert!((pruned.importance(n.as_str()).unwrap() - 0.9).abs() < 1e-9);
        }
    }

    #[test]
    fn single_parent_context_and_pruning() {
        let c = ctx(&[("p1", 0.8), ("p2", 0.0), ("p3", 0.7)]);
        let full = build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap();
        assert!((full.importance("fairness").unwrap() - 0.55).abs() < 1e-12);
        let pruned = prune(&full, RelevanceStrategy::NonZero).unwrap();
        let kept: BTreeSet<NodeId> = pruned.node_ids().cloned().collect();
        assert_eq!(
            kept,
            ids(&[
                "fairness",
                "reciprocity",
                "balanced_give_take",
                "p1",
                "fair_treatment",
                "balanced_division",
                "p3"
            ])
        );
        // mean(0.8, 0.7)
        assert!((pruned.importance("fairness").unwrap() - 0.75).abs() < 1e-12);
        assert!(pruned.validate().is_ok());
        assert!(check_coherence(&pruned, DEFAULT_TOL).is_coherent());
    }

    #[test]
    fn general_importances_are_ignored() {
        let mut general = fairness();
        general.set_importance(id("fairness"), -1.0);
        general.set_importance(id("p3"), 0.1);
        let c = ctx(&[("p1", 0.8), ("p2", 0.0), ("p3", 0.7)]);
        assert_eq!(
            build_context_taxonomy(&general, &c, DEFAULT_TOL).unwrap(),
            build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap()
        );
    }

    #[test]
    fn empty_context_assigns_nothing() {
        let out = build_context_taxonomy(&fairness(), &ctx(&[]), DEFAULT_TOL).unwrap();
        assert!(out.importance_map().is_empty());
    }

    #[test]
    fn params_overwrite_groundings() {
        let c = ctx(&[]);
        let out = build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap();
        match out.node("p1").unwrap().grounding.as_ref().unwrap() {
            SatisfactionSpec::RatioThreshold { max_ratio, .. } => assert_eq!(*max_ratio, 5.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn label_importance_rejected() {
        let c = ctx(&[("fairness", 0.5)]);
        assert!(matches!(
            build_context_taxonomy(&fairness(), &c, DEFAULT_TOL),
            Err(ContextError::NotAProperty(n)) if n.as_str() == "fairness"
        ));
        let c = ctx(&[("ghost", 0.5)]);
        assert!(matches!(
            build_context_taxonomy(&fairness(), &c, DEFAULT_TOL),
            Err(ContextError::UnknownNode(_))
        ));
        let mut c = ctx(&[]);
        c.params.max_delta = 0.1;
        assert!(matches!(
            build_context_taxonomy(&fairness(), &c, DEFAULT_TOL),
            Err(ContextError::InvalidParams(_))
        ));
    }

    #[test]
    fn all_zero_prunes_to_empty() {
        let c = ctx(&[("p1", 0.0), ("p2", 0.0), ("p3", 0.0)]);
        let full = build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap();
        let pruned = prune(&full, RelevanceStrategy::NonZero).unwrap();
        assert!(pruned.is_empty());
        assert!(pruned.validate().is_ok());
    }

    #[test]
    fn prune_requires_property_importances() {
        let err = prune(&fairness(), RelevanceStrategy::NonZero).unwrap_err();
        assert!(matches!(err, ContextError::MissingImportance(n) if n.as_str() == "p1"));
    }

    #[test]
    fn threshold_strategy() {
        let c = ctx(&[("p1", 0.8), ("p2", 0.1), ("p3", 0.7)]);
        let full = build_context_taxonomy(&fairness(), &c, DEFAULT_TOL).unwrap();
        let high = prune(&full, RelevanceStrategy::Threshold(0.75)).unwrap();
        assert!(high.contains("p1") && !high.contains("p3"));
        let low = prune(&full, RelevanceStrategy::Threshold(0.05)).unwrap();
        assert!(low.contains("p1") && low.contains("p2") && low.contains("p3"));
        assert!(prune(&full, RelevanceStrategy::Threshold(2.0)).is_err());
    }

    #[test]
    fn kmeans_examples() {
        let imp = |pairs: &[(&str, f64)]| -> ImportanceMap {
            pairs.iter().map(|(n, v)| (id(n), *v)).collect()
        };
        assert_eq!(
            kmeans2_relevant(&imp(&[("p1", 0.8), ("p2", 0.0), ("p3", 0.7)])),
            ids(&["p1", "p3"])
        );
        assert_eq!(
            kmeans2_relevant(&imp(&[("a", 0.3), ("b", 0.3)])),
            ids(&["a", "b"])
        );
        assert_eq!(
            kmeans2_relevant(&imp(&[("a", 1.0), ("b", -1.0)])),
            ids(&["a"])
        );
        // 0 is equidistant from -1 and 1 and joins the upper cluster on the
        // first assignment; it then stays closer to the upper centroid 0.5.
        assert_eq!(
            kmeans2_relevant(&imp(&[("a", 1.0), ("b", -1.0), ("c", 0.0)])),
            ids(&["a", "c"])
        );
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("nonzero".parse(), Ok(RelevanceStrategy::NonZero));
        assert_eq!("kmeans2".parse(), Ok(RelevanceStrategy::KMeans2));
        assert_eq!(
            "threshold:0.25".parse(),
            Ok(RelevanceStrategy::Threshold(0.25))
        );
        assert!("threshold:3".parse::<RelevanceStrategy>().is_err());
        assert!("threshold:x".parse::<RelevanceStrategy>().is_err());
        assert!("median".parse::<RelevanceStrategy>().is_err());
    }

    #[test]
    fn holds_predicate() {
        let t = fairness();
        let mut c = ctx(&[]);
        let world = |r, o| {
            WorldState::new()
                .with_counter("requests", r)
                .with_counter("offers", o)
        };
        assert!(context_holds(&c, &world(1, 1), &t).unwrap());
        c.defining_properties = ids(&["p1"]);
        assert!(context_holds(&c, &world(2, 1), &t).unwrap());
        assert!(!context_holds(&c, &world(1, 2), &t).unwrap());
        c.defining_properties = ids(&["fairness"]);
        assert!(matches!(
            context_holds(&c, &world(1, 1), &t),
            Err(ContextError::MissingGrounding(_))
        ));
        let mut t2 = t.clone();
        t2.add_node(Node::label(id("extra"), "extra")).unwrap();
        c.defining_properties = ids(&["nope"]);
        assert!(matches!(
            context_holds(&c, &world(1, 1), &t2),
            Err(ContextError::UnknownNode(_))
        ));
    }
}
