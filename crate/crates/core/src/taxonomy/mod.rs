//! Value taxonomies: a DAG of label and property nodes with a partial
//! importance map over `[-1, 1]`.
//!
//! Edges run from the more general concept (parent) to the more specific one
//! (child). Property nodes carry computable grounding semantics and may only
//! appear as leaves. A node absent from the importance map has undefined
//! importance.

mod aggregate;
mod coherence;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::SatisfactionSpec;

pub use aggregate::{aggregate, exact_sum, AggregateError};
pub use coherence::{check_coherence, CoherenceReport, Incoherence};
pub use validate::{ValidationReport, Violation};

/// Default tolerance for comparing importance measures.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Importance assignments; a missing key means "undefined".
pub type ImportanceMap = BTreeMap<NodeId, f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("invalid node id {0:?}: ids must be non-empty and match [A-Za-z0-9_-]+")]
    InvalidNodeId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
    #[error("duplicate node `{0}`")]
    DuplicateNode(NodeId),
}

/// Identifier of a node, unique within a taxonomy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, TaxonomyError> {
        let id = id.into();
        let ok = !id.is_empty()
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
        if ok {
            Ok(NodeId(id))
        } else {
            Err(TaxonomyError::InvalidNodeId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = TaxonomyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> Self {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for NodeId {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// An abstract value concept named by text only.
    Label,
    /// A leaf whose satisfaction is computable against a world state.
    Property,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Label => f.write_str("label"),
            NodeKind::Property => f.write_str("property"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    /// Present iff `kind` is [`NodeKind::Property`] on a valid taxonomy.
    pub grounding: Option<SatisfactionSpec>,
}

impl Node {
    pub fn label(id: NodeId, label: impl Into<String>) -> Self {
        Node {
            id,
            kind: NodeKind::Label,
            label: label.into(),
            grounding: None,
        }
    }

    pub fn property(id: NodeId, label: impl Into<String>, grounding: SatisfactionSpec) -> Self {
        Node {
            id,
            kind: NodeKind::Property,
            label: label.into(),
            grounding: Some(grounding),
        }
    }

    pub fn is_property(&self) -> bool {
        self.kind == NodeKind::Property
    }
}

/// A value taxonomy `(N, E, I)`.
///
/// Construction never rejects structurally bad input: edges may name missing
/// nodes, cycles may be introduced and importances may be out of range.
/// [`Taxonomy::validate`] reports all of that as data. Operations documented
/// as requiring a valid taxonomy assume `validate` passed.
///
/// All iteration is in lexicographic [`NodeId`] order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    nodes: BTreeMap<NodeId, Node>,
    children: BTreeMap<NodeId, BTreeSet<NodeId>>,
    parents: BTreeMap<NodeId, BTreeSet<NodeId>>,
    importance: ImportanceMap,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a node, rejecting duplicate ids.
    pub fn add_node(&mut self, node: Node) -> Result<(), TaxonomyError> {
        if self.nodes.contains_key(&node.id) {
            return Err(TaxonomyError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Adds the edge `parent -> child`. Returns false if it was already present.
    pub fn add_edge(&mut self, parent: NodeId, child: NodeId) -> bool {
        self.parents
            .entry(child.clone())
            .or_default()
            .insert(parent.clone());
        self.children.entry(parent).or_default().insert(child)
    }

    pub fn remove_edge(&mut self, parent: &NodeId, child: &NodeId) -> bool {
        let removed = self
            .children
            .get_mut(parent)
            .map(|c| c.remove(child))
            .unwrap_or(false);
        if let Some(p) = self.parents.get_mut(child) {
            p.remove(parent);
        }
        removed
    }

    pub fn set_importance(&mut self, id: NodeId, value: f64) -> Option<f64> {
        self.importance.insert(id, value)
    }

    pub fn clear_importance(&mut self, id: &NodeId) -> Option<f64> {
        self.importance.remove(id)
    }

    /// Replaces the whole importance map.
    pub fn set_importance_map(&mut self, importance: ImportanceMap) {
        self.importance = importance;
    }

    /// Returns a copy with the importance map replaced.
    pub fn with_importance(&self, importance: ImportanceMap) -> Self {
        Taxonomy {
            importance,
            ..self.clone()
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub(crate) fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges as `(parent, child)` pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.children
            .iter()
            .flat_map(|(p, cs)| cs.iter().map(move |c| (p, c)))
    }

    pub fn edge_count(&self) -> usize {
        self.children.values().map(BTreeSet::len).sum()
    }

    pub fn has_edge(&self, parent: &str, child: &str) -> bool {
        self.children
            .get(parent)
            .is_some_and(|cs| cs.contains(child))
    }

    pub fn importance(&self, id: &str) -> Option<f64> {
        self.importance.get(id).copied()
    }

    pub fn importance_map(&self) -> &ImportanceMap {
        &self.importance
    }

    /// Property node ids, sorted.
    pub fn property_nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes
            .values()
            .filter(|n| n.is_property())
            .map(|n| &n.id)
    }

    /// Nodes with no incoming edge, in lexicographic order.
    pub fn roots(&self) -> Vec<NodeId> {
        self.nodes
            .keys()
            .filter(|id| self.parents.get(*id).is_none_or(BTreeSet::is_empty))
            .cloned()
            .collect()
    }

    pub fn children(&self, id: &str) -> Result<Vec<NodeId>, TaxonomyError> {
        self.require(id)?;
        Ok(self.child_ids(id).cloned().collect())
    }

    pub fn parents(&self, id: &str) -> Result<Vec<NodeId>, TaxonomyError> {
        self.require(id)?;
        Ok(self.parent_ids(id).cloned().collect())
    }

    pub(crate) fn child_ids<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.children.get(id).into_iter().flatten()
    }

    pub(crate) fn parent_ids<'a>(&'a self, id: &str) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.parents.get(id).into_iter().flatten()
    }

    pub(crate) fn require(&self, id: &str) -> Result<&Node, TaxonomyError> {
        self.nodes.get(id).ok_or_else(|| {
            TaxonomyError::UnknownNode(NodeId::new(id).unwrap_or_else(|_| NodeId(id.to_owned())))
        })
    }

    /// True iff some strict descendant of a node in `ids` has a defined
    /// importance.
    pub fn has_descendant_with_value<'a, I>(&self, ids: I) -> Result<bool, TaxonomyError>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let ids: Vec<&NodeId> = ids.into_iter().collect();
        for id in &ids {
            self.require(id.as_str())?;
        }
        Ok(self.any_descendant_valued(ids.into_iter(), &self.importance))
    }

    pub(crate) fn any_descendant_valued<'a>(
        &'a self,
        starts: impl Iterator<Item = &'a NodeId>,
        importance: &ImportanceMap,
    ) -> bool {
        let mut seen: BTreeSet<&NodeId> = BTreeSet::new();
        let mut queue: VecDeque<&NodeId> =
            starts.flat_map(|s| self.child_ids(s.as_str())).collect();
        while let Some(n) = queue.pop_front() {
            if !seen.insert(n) {
                continue;
            }
            if importance.contains_key(n) {
                return true;
            }
            queue.extend(self.child_ids(n.as_str()));
        }
        false
    }

    /// Number of distinct directed root-to-`id` paths. A root has one.
    ///
    /// Saturates at `u64::MAX`.
    pub fn count_paths(&self, id: &str) -> Result<u64, TaxonomyError> {
        self.require(id)?;
        Ok(self.path_counts().get(id).copied().unwrap_or(0))
    }

    /// Root-to-node path counts for every node reachable from a root.
    pub fn path_counts(&self) -> BTreeMap<NodeId, u64> {
        let order = self.topological_order();
        let mut counts: BTreeMap<NodeId, u64> = BTreeMap::new();
        for id in order {
            let from_parents = self
                .parent_ids(id.as_str())
                .filter_map(|p| counts.get(p))
                .fold(0u64, |acc, c| acc.saturating_add(*c));
            let has_parents = self.parent_ids(id.as_str()).next().is_some();
            counts.insert(id, if has_parents { from_parents } else { 1 });
        }
        counts
    }

    /// Kahn ordering over existing nodes; nodes on cycles are omitted.
    pub(crate) fn topological_order(&self) -> Vec<NodeId> {
        let mut indegree: BTreeMap<&NodeId, usize> = self
            .nodes
            .keys()
            .map(|id| {
                let d = self
                    .parent_ids(id.as_str())
                    .filter(|p| self.nodes.contains_key(p.as_str()))
                    .count();
                (id, d)
            })
            .collect();
        let mut ready: VecDeque<&NodeId> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_front() {
            order.push(id.clone());
            for c in self.child_ids(id.as_str()) {
                if let Some(d) = indegree.get_mut(c) {
                    *d -= 1;
                    if *d == 0 {
                        ready.push_back(c);
                    }
                }
            }
        }
        order
    }

    /// Every node with a directed path to a node in `targets`, plus the
    /// targets themselves.
    pub fn ancestor_closure<'a>(
        &self,
        targets: impl IntoIterator<Item = &'a NodeId>,
    ) -> BTreeSet<NodeId> {
        let mut kept: BTreeSet<NodeId> = BTreeSet::new();
        let mut frontier: Vec<NodeId> = targets.into_iter().cloned().collect();
        while let Some(n) = frontier.pop() {
            if kept.insert(n.clone()) {
                frontier.extend(self.parent_ids(n.as_str()).cloned());
            }
        }
        kept
    }

    /// The sub-taxonomy induced by `keep`: those nodes, every edge between
    /// them, and their importances.
    pub fn induced(&self, keep: &BTreeSet<NodeId>) -> Taxonomy {
        let mut out = Taxonomy::new();
        for id in keep {
            if let Some(node) = self.nodes.get(id) {
                out.nodes.insert(id.clone(), node.clone());
            }
        }
        for (p, c) in self.edges() {
            if out.nodes.contains_key(p) && out.nodes.contains_key(c) {
                out.add_edge(p.clone(), c.clone());
            }
        }
        out.importance = self
            .importance
            .iter()
            .filter(|(id, _)| out.nodes.contains_key(*id))
            .map(|(id, v)| (id.clone(), *v))
            .collect();
        out
    }
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in self.nodes() {
            match self.importance(node.id.as_str()) {
                Some(v) => writeln!(f, "{} ({}) = {v}", node.id, node.kind)?,
                None => writeln!(f, "{} ({}) = undefined", node.id, node.kind)?,
            }
        }
        Ok(())
    }
}
