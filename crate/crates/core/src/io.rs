//! JSON documents for taxonomies, world states, contexts, value systems and
//! alignment reports.
//!
//! Output is canonical: object keys sorted, floats rounded to 12 significant
//! digits, two-space indentation, trailing newline. Parsing a canonical
//! document and serialising it again reproduces it byte for byte.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::alignment::AlignmentReport;
use crate::context::{ContextParams, ContextSpec};
use crate::grounding::{SatisfactionSpec, WorldState};
use crate::holders::{BeliefView, Holder, ValueSystem};
use crate::taxonomy::{ImportanceMap, Node, NodeId, NodeKind, Taxonomy, ValidationReport};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message} at line {line}, column {column}")]
    Parse {
        /// Field path to the offending value, `.` for the document root.
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version {0}, expected {FORMAT_VERSION}")]
    UnsupportedVersion(u32),
    #[error("{0}")]
    Schema(String),
    #[error("invalid taxonomy:\n{0}")]
    Validation(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grounding: Option<SatisfactionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyDocument {
    pub format_version: u32,
    pub values: Vec<NodeDocument>,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    pub importance: ImportanceMap,
}

impl From<&Taxonomy> for TaxonomyDocument {
    fn from(t: &Taxonomy) -> Self {
        TaxonomyDocument {
            format_version: FORMAT_VERSION,
            values: t
                .nodes()
                .map(|n| NodeDocument {
                    id: n.id.clone(),
                    kind: n.kind,
                    label: n.label.clone(),
                    grounding: n.grounding.clone(),
                })
                .collect(),
            edges: t.edges().map(|(p, c)| (p.clone(), c.clone())).collect(),
            importance: t.importance_map().clone(),
        }
    }
}

impl TaxonomyDocument {
    /// Builds the taxonomy and checks it with [`Taxonomy::validate`].
    pub fn into_taxonomy(self) -> Result<Taxonomy, IoError> {
        check_version(self.format_version)?;
        let mut t = Taxonomy::new();
        for n in self.values {
            t.add_node(Node {
                id: n.id,
                kind: n.kind,
                label: n.label,
                grounding: n.grounding,
            })
            .map_err(|e| IoError::Schema(e.to_string()))?;
        }
        for (p, c) in self.edges {
            t.add_edge(p, c);
        }
        t.set_importance_map(self.importance);
        let report = t.validate();
        if !report.is_ok() {
            return Err(IoError::Validation(report));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldStateDocument {
    pub format_version: u32,
    #[serde(default)]
    pub counters: BTreeMap<String, u64>,
    #[serde(default)]
    pub distributions: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDocument {
    pub format_version: u32,
    pub id: String,
    #[serde(default)]
    pub defining_properties: BTreeSet<NodeId>,
    pub params: ContextParams,
    pub leaf_importance: ImportanceMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueSystemDocument {
    pub format_version: u32,
    pub holder: Holder,
    pub taxonomies: BTreeMap<String, TaxonomyDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefViewDocument {
    pub format_version: u32,
    pub observer: Holder,
    pub subject: Holder,
    pub system: ValueSystemDocument,
}

fn check_version(v: u32) -> Result<(), IoError> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(IoError::UnsupportedVersion(v))
    }
}

/// Rounds to 12 significant digits and folds `-0.0` into `0.0`.
pub fn canonical_f64(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse::<f64>().unwrap_or(x) + 0.0
}

fn canonicalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(canonical_f64(x)))
            {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

/// Canonical JSON text for any serialisable value.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's default map is a BTreeMap, so keys come out sorted.
    let mut v = serde_json::to_value(value).expect("document types serialise to JSON");
    canonicalize(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("JSON values serialise");
    out.push('\n');
    out
}

/// Deserialises `text`, reporting failures with a field path and position.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        IoError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;
    // Trailing content after the document.
    de.end().map_err(|e| IoError::Parse {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_owned(),
        None => msg.to_owned(),
    }
}

pub fn parse_taxonomy(text: &str) -> Result<Taxonomy, IoError> {
    from_json::<TaxonomyDocument>(text)?.into_taxonomy()
}

pub fn serialize_taxonomy(t: &Taxonomy) -> String {
    to_canonical_json(&TaxonomyDocument::from(t))
}

pub fn parse_world(text: &str) -> Result<WorldState, IoError> {
    let doc: WorldStateDocument = from_json(text)?;
    check_version(doc.format_version)?;
    let world = WorldState {
        counters: doc.counters,
        distributions: doc.distributions,
    };
    world
        .validate()
        .map_err(|e| IoError::Schema(e.to_string()))?;
    Ok(world)
}

pub fn serialize_world(w: &WorldState) -> String {
    to_canonical_json(&WorldStateDocument {
        format_version: FORMAT_VERSION,
        counters: w.counters.clone(),
        distributions: w.distributions.clone(),
    })
}

/// Parses a context. References to taxonomy nodes are checked later, when
/// the context is applied to a taxonomy.
pub fn parse_context(text: &str) -> Result<ContextSpec, IoError> {
    let doc: ContextDocument = from_json(text)?;
    check_version(doc.format_version)?;
    doc.params
        .check()
        .map_err(|e| IoError::Schema(e.to_string()))?;
    Ok(ContextSpec {
        id: doc.id,
        defining_properties: doc.defining_properties,
        params: doc.params,
        leaf_importance: doc.leaf_importance,
    })
}

pub fn serialize_context(c: &ContextSpec) -> String {
    to_canonical_json(&ContextDocument {
        format_version: FORMAT_VERSION,
        id: c.id.clone(),
        defining_properties: c.defining_properties.clone(),
        params: c.params,
        leaf_importance: c.leaf_importance.clone(),
    })
}

fn system_from_doc(doc: ValueSystemDocument) -> Result<ValueSystem, IoError> {
    check_version(doc.format_version)?;
    let mut system = ValueSystem::new(doc.holder);
    for (name, t) in doc.taxonomies {
        system.taxonomies.insert(name, t.into_taxonomy()?);
    }
    Ok(system)
}

fn system_to_doc(s: &ValueSystem) -> ValueSystemDocument {
    ValueSystemDocument {
        format_version: FORMAT_VERSION,
        holder: s.holder.clone(),
        taxonomies: s
            .taxonomies
            .iter()
            .map(|(k, t)| (k.clone(), TaxonomyDocument::from(t)))
            .collect(),
    }
}

pub fn parse_value_system(text: &str) -> Result<ValueSystem, IoError> {
    system_from_doc(from_json(text)?)
}

pub fn serialize_value_system(s: &ValueSystem) -> String {
    to_canonical_json(&system_to_doc(s))
}

pub fn parse_belief_view(text: &str) -> Result<BeliefView, IoError> {
    let doc: BeliefViewDocument = from_json(text)?;
    check_version(doc.format_version)?;
    Ok(BeliefView {
        observer: doc.observer,
        subject: doc.subject,
        system: system_from_doc(doc.system)?,
    })
}

pub fn serialize_belief_view(b: &BeliefView) -> String {
    to_canonical_json(&BeliefViewDocument {
        format_version: FORMAT_VERSION,
        observer: b.observer.clone(),
        subject: b.subject.clone(),
        system: system_to_doc(&b.system),
    })
}

pub fn parse_report(text: &str) -> Result<AlignmentReport, IoError> {
    from_json(text)
}

pub fn serialize_report(r: &AlignmentReport) -> String {
    to_canonical_json(r)
}
