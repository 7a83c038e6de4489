//! Value alignment of observed behaviour with a taxonomy: the
//! importance-weighted average of the property nodes' satisfaction degrees.
//! Negative scores indicate misalignment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{satisfaction_degree, GroundingError, WorldState};
use crate::taxonomy::{NodeId, Taxonomy, TaxonomyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("`{0}` is a label node, not a property node")]
    NotAProperty(NodeId),
    #[error("property node `{0}` has no grounding")]
    MissingGrounding(NodeId),
    #[error("property node `{0}` has no importance")]
    MissingImportance(NodeId),
    #[error("taxonomy has no property nodes to align against")]
    NoPropertyNodes,
    #[error("property `{node}`: {source}")]
    Grounding {
        node: NodeId,
        #[source]
        source: GroundingError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentVariant {
    /// `Σ I(p)·sd(p) / |P|`
    #[default]
    Simple,
    /// `Σ paths(p)·I(p)·sd(p) / |P|`
    PathWeighted,
}

impl fmt::Display for AlignmentVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignmentVariant::Simple => f.write_str("simple"),
            AlignmentVariant::PathWeighted => f.write_str("path-weighted"),
        }
    }
}

impl FromStr for AlignmentVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(AlignmentVariant::Simple),
            "path-weighted" => Ok(AlignmentVariant::PathWeighted),
            other => Err(format!(
                "unknown variant `{other}`: expected simple or path-weighted"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyScore {
    pub importance: f64,
    pub degree: f64,
    /// Root-to-node path count; always reported, only used by
    /// [`AlignmentVariant::PathWeighted`].
    pub paths: u64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub score: f64,
    pub variant: AlignmentVariant,
    pub per_property: BTreeMap<NodeId, PropertyScore>,
}

/// Satisfaction degree of property node `p` in `world`.
pub fn sd_of(t: &Taxonomy, p: &str, world: &WorldState) -> Result<f64, AlignmentError> {
    let node = t.require(p)?;
    if !node.is_property() {
        return Err(AlignmentError::NotAProperty(node.id.clone()));
    }
    let spec = node
        .grounding
        .as_ref()
        .ok_or_else(|| AlignmentError::MissingGrounding(node.id.clone()))?;
    satisfaction_degree(spec, world).map_err(|source| AlignmentError::Grounding {
        node: node.id.clone(),
        source,
    })
}

/// Scores `world` against every property node of `t`. Label leaves without
/// grounding contribute nothing and are not counted.
pub fn align(
    t: &Taxonomy,
    world: &WorldState,
    variant: AlignmentVariant,
) -> Result<AlignmentReport, AlignmentError> {
    let paths = t.path_counts();
    let mut per_property = BTreeMap::new();
    for id in t.property_nodes() {
        let importance = t
            .importance(id.as_str())
            .ok_or_else(|| AlignmentError::MissingImportance(id.clone()))?;
        let degree = sd_of(t, id.as_str(), world)?;
        let path_count = paths.get(id).copied().unwrap_or(0);
        let weight = match variant {
            AlignmentVariant::Simple => 1.0,
            AlignmentVariant::PathWeighted => path_count as f64,
        };
        per_property.insert(
            id.clone(),
            PropertyScore {
                importance,
                degree,
                paths: path_count,
                contribution: weight * importance * degree,
            },
        );
    }
    if per_property.is_empty() {
        return Err(AlignmentError::NoPropertyNodes);
    }
    let total: f64 = per_property.values().map(|s| s.contribution).sum();
    Ok(AlignmentReport {
        score: total / per_property.len() as f64,
        variant,
        per_property,
    })
}
