//! Value holders: individuals and collectives, their value systems, beliefs
//! about each other's values, and aggregation of member taxonomies into a
//! collective one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::propagation::{propagate, PropagationError};
use crate::taxonomy::{aggregate, NodeId, Taxonomy, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolderError {
    #[error("no taxonomies to aggregate")]
    NoIndividuals,
    #[error("taxonomy {index} differs structurally from the first: {detail}")]
    StructuralMismatch { index: usize, detail: String },
    #[error("taxonomy {index}: property node `{node}` has no importance")]
    MissingLeafImportance { index: usize, node: NodeId },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("collective `{0}` has no members")]
    EmptyCollective(String),
    #[error("collective `{collective}` names unknown member `{member}`")]
    UnknownMember { collective: String, member: String },
    #[error("collective membership cycle through `{0}`")]
    MembershipCycle(String),
    #[error("duplicate holder `{0}`")]
    DuplicateHolder(String),
    #[error("taxonomy `{name}` is invalid:\n{report}")]
    InvalidTaxonomy {
        name: String,
        report: ValidationReport,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HolderKind {
    Individual,
    Collective { members: BTreeSet<String> },
}

/// An entity to which values are attributed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Holder {
    pub id: String,
    #[serde(flatten)]
    pub kind: HolderKind,
}

impl Holder {
    pub fn individual(id: impl Into<String>) -> Self {
        Holder {
            id: id.into(),
            kind: HolderKind::Individual,
        }
    }

    pub fn collective<I, S>(id: impl Into<String>, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Holder {
            id: id.into(),
            kind: HolderKind::Collective {
                members: members.into_iter().map(Into::into).collect(),
            },
        }
    }
}

/// A set of holders with checked collective membership: every collective is
/// non-empty, names only known holders, and never contains itself
/// transitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HolderRegistry {
    holders: BTreeMap<String, Holder>,
}

impl HolderRegistry {
    pub fn new(holders: impl IntoIterator<Item = Holder>) -> Result<Self, HolderError> {
        let mut map = BTreeMap::new();
        for h in holders {
            if map.contains_key(&h.id) {
                return Err(HolderError::DuplicateHolder(h.id));
            }
            map.insert(h.id.clone(), h);
        }
        let registry = HolderRegistry { holders: map };
        registry.check()?;
        Ok(registry)
    }

    pub fn get(&self, id: &str) -> Option<&Holder> {
        self.holders.get(id)
    }

    /// Individuals reachable through (possibly nested) membership.
    pub fn individuals_of(&self, id: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![id.to_owned()];
        let mut seen = BTreeSet::new();
        while let Some(h) = stack.pop() {
            if !seen.insert(h.clone()) {
                continue;
            }
            match self.holders.get(&h).map(|x| &x.kind) {
                Some(HolderKind::Collective { members }) => stack.extend(members.iter().cloned()),
                Some(HolderKind::Individual) => {
                    out.insert(h);
                }
                None => {}
            }
        }
        out
    }

    fn check(&self) -> Result<(), HolderError> {
        for h in self.holders.values() {
            if let HolderKind::Collective { members } = &h.kind {
                if members.is_empty() {
                    return Err(HolderError::EmptyCollective(h.id.clone()));
                }
                if let Some(m) = members.iter().find(|m| !self.holders.contains_key(*m)) {
                    return Err(HolderError::UnknownMember {
                        collective: h.id.clone(),
                        member: m.clone(),
                    });
                }
            }
        }
        // DFS over membership edges looking for a back edge.
        let mut done: BTreeSet<&str> = BTreeSet::new();
        for start in self.holders.keys() {
            let mut on_path: BTreeSet<&str> = BTreeSet::new();
            let mut stack: Vec<(&str, bool)> = vec![(start.as_str(), false)];
            while let Some((h, leaving)) = stack.pop() {
                if leaving {
                    on_path.remove(h);
                    done.insert(h);
                    continue;
                }
                if done.contains(h) {
                    continue;
                }
                if !on_path.insert(h) {
                    return Err(HolderError::MembershipCycle(h.to_owned()));
                }
                stack.push((h, true));
                if let Some(HolderKind::Collective { members }) =
                    self.holders.get(h).map(|x| &x.kind)
                {
                    for m in members {
                        if on_path.contains(m.as_str()) {
                            return Err(HolderError::MembershipCycle(m.clone()));
                        }
                        stack.push((m.as_str(), false));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The taxonomies held by one holder, keyed by the value they describe.
/// Root values need not be related to each other.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSystem {
    pub holder: Holder,
    pub taxonomies: BTreeMap<String, Taxonomy>,
}

impl ValueSystem {
    pub fn new(holder: Holder) -> Self {
        ValueSystem {
            holder,
            taxonomies: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), HolderError> {
        for (name, t) in &self.taxonomies {
            let report = t.validate();
            if !report.is_ok() {
                return Err(HolderError::InvalidTaxonomy {
                    name: name.clone(),
                    report,
                });
            }
        }
        Ok(())
    }
}

/// What `observer` believes the values of `subject` to be.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefView {
    pub observer: Holder,
    pub subject: Holder,
    pub system: ValueSystem,
}

impl BeliefView {
    pub fn is_self_view(&self) -> bool {
        self.observer.id == self.subject.id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollectiveOp {
    /// Arithmetic mean.
    Mean,
    /// Lower median for even counts.
    Median,
    /// Egalitarian floor.
    Min,
}

impl CollectiveOp {
    fn apply(self, values: &mut [f64]) -> f64 {
        match self {
            CollectiveOp::Mean => aggregate(values).expect("non-empty"),
            CollectiveOp::Median => {
                values.sort_by(f64::total_cmp);
                values[(values.len() - 1) / 2]
            }
            CollectiveOp::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

impl fmt::Display for CollectiveOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CollectiveOp::Mean => "mean",
            CollectiveOp::Median => "median",
            CollectiveOp::Min => "min",
        })
    }
}

impl FromStr for CollectiveOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(CollectiveOp::Mean),
            "median" => Ok(CollectiveOp::Median),
            "min" => Ok(CollectiveOp::Min),
            other => Err(format!(
                "unknown operator `{other}`: expected mean, median or min"
            )),
        }
    }
}

/// First structural difference between `a` and `b` (node ids, kinds, edges),
/// ignoring importances, labels and groundings.
pub fn structural_difference(a: &Taxonomy, b: &Taxonomy) -> Option<String> {
    let a_nodes: BTreeMap<_, _> = a.nodes().map(|n| (&n.id, n.kind)).collect();
    let b_nodes: BTreeMap<_, _> = b.nodes().map(|n| (&n.id, n.kind)).collect();
    for (id, kind) in &a_nodes {
        match b_nodes.get(id) {
            None => return Some(format!("node `{id}` missing")),
            Some(k) if k != kind => return Some(format!("node `{id}` is {kind} vs {k}")),
            _ => {}
        }
    }
    if let Some(id) = b_nodes.keys().find(|id| !a_nodes.contains_key(*id)) {
        return Some(format!("extra node `{id}`"));
    }
    let a_edges: BTreeSet<_> = a.edges().collect();
    let b_edges: BTreeSet<_> = b.edges().collect();
    if let Some((p, c)) = a_edges.difference(&b_edges).next() {
        return Some(format!("edge ({p}, {c}) missing"));
    }
    if let Some((p, c)) = b_edges.difference(&a_edges).next() {
        return Some(format!("extra edge ({p}, {c})"));
    }
    None
}

pub fn structural_equal(a: &Taxonomy, b: &Taxonomy) -> bool {
    structural_difference(a, b).is_none()
}

/// Combines property-node importances across structurally identical
/// taxonomies with `op`, then propagates to the rest of the structure. The
/// result carries the first input's labels and groundings.
pub fn aggregate_collective(
    individuals: &[Taxonomy],
    op: CollectiveOp,
    tol: f64,
) -> Result<Taxonomy, HolderError> {
    let first = individuals.first().ok_or(HolderError::NoIndividuals)?;
    for (index, t) in individuals.iter().enumerate().skip(1) {
        if let Some(detail) = structural_difference(first, t) {
            return Err(HolderError::StructuralMismatch { index, detail });
        }
    }
    let mut leaves = BTreeMap::new();
    for id in first.property_nodes() {
        let mut values = individuals
            .iter()
            .enumerate()
            .map(|(index, t)| {
                t.importance(id.as_str())
                    .ok_or_else(|| HolderError::MissingLeafImportance {
                        index,
                        node: id.clone(),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        leaves.insert(id.clone(), op.apply(&mut values));
    }
    let collective = first.with_importance(leaves);
    let importance = propagate(&collective, tol)?;
    Ok(collective.with_importance(importance))
}
