//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string, so
//! the page needs no generated TypeScript types and the same functions run
//! natively in tests.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::json;
use vtm_core::grounding::{ratio_degree, uniformity_degree};
use vtm_core::io::parse_taxonomy;
use vtm_core::{
    align, build_context_taxonomy, prune, AlignmentVariant, ContextParams, ContextSpec, NodeId,
    RelevanceStrategy, Taxonomy, WorldState, DEFAULT_TOL,
};
use wasm_bindgen::prelude::*;

const GENERAL: &str = include_str!("../../core/fixtures/uhelp_fairness.json");
const SINGLE_PARENT: &str = include_str!("../../core/fixtures/single_parent_pruned.json");

#[derive(Serialize)]
struct ViewNode {
    id: String,
    label: String,
    property: bool,
    importance: Option<f64>,
    /// Horizontal slot: leaves are numbered left to right, parents sit over
    /// the mean of their children.
    x: f64,
    depth: usize,
}

#[derive(Serialize)]
struct View {
    nodes: Vec<ViewNode>,
    edges: Vec<(String, String)>,
    width: usize,
    height: usize,
}

fn layout(t: &Taxonomy) -> View {
    let mut x: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut next_leaf = 0.0;

    fn place(
        t: &Taxonomy,
        id: &NodeId,
        d: usize,
        x: &mut BTreeMap<NodeId, f64>,
        depth: &mut BTreeMap<NodeId, usize>,
        next_leaf: &mut f64,
    ) -> f64 {
        let e = depth.entry(id.clone()).or_insert(d);
        *e = (*e).max(d);
        if let Some(v) = x.get(id) {
            return *v;
        }
        let children = t.children(id.as_str()).unwrap_or_default();
        let v = if children.is_empty() {
            *next_leaf += 1.0;
            *next_leaf - 1.0
        } else {
            let xs: Vec<f64> = children
                .iter()
                .map(|c| place(t, c, d + 1, x, depth, next_leaf))
                .collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        x.insert(id.clone(), v);
        v
    }

    for root in t.roots() {
        place(t, &root, 0, &mut x, &mut depth, &mut next_leaf);
    }
    let nodes = t
        .nodes()
        .map(|n| ViewNode {
            id: n.id.to_string(),
            label: n.label.clone(),
            property: n.is_property(),
            importance: t.importance(n.id.as_str()),
            x: x.get(&n.id).copied().unwrap_or(0.0),
            depth: depth.get(&n.id).copied().unwrap_or(0),
        })
        .collect::<Vec<_>>();
    View {
        height: nodes.iter().map(|n| n.depth + 1).max().unwrap_or(0),
        nodes,
        edges: t
            .edges()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect(),
        width: next_leaf as usize,
    }
}

fn structure(text: &str) -> Taxonomy {
    parse_taxonomy(text).expect("bundled fixture parses")
}

fn context(leaves: &[(&str, f64)], epsilon: f64) -> ContextSpec {
    ContextSpec {
        id: "demo".into(),
        defining_properties: BTreeSet::new(),
        params: ContextParams {
            max_ratio: 5.0,
            epsilon,
            max_delta: 1.0,
        },
        leaf_importance: leaves
            .iter()
            .map(|(id, v)| (NodeId::new(*id).expect("static id"), *v))
            .collect(),
    }
}

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// The fairness taxonomy for a context with the given property importances,
/// before and after pruning with `strategy` (`nonzero`, `threshold:<t>` or
/// `kmeans2`).
#[wasm_bindgen]
pub fn context_view(p1: f64, p2: f64, p3: f64, strategy: &str) -> String {
    let strategy: RelevanceStrategy = match strategy.parse() {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let ctx = context(&[("p1", p1), ("p2", p2), ("p3", p3)], 0.2);
    let full = match build_context_taxonomy(&structure(GENERAL), &ctx, DEFAULT_TOL) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    match prune(&full, strategy) {
        Ok(pruned) => json!({ "full": layout(&full), "pruned": layout(&pruned) }).to_string(),
        Err(e) => error(e),
    }
}

/// Sampled satisfaction-degree curve. `kind` is `ratio` (x is the
/// requests/offers ratio, `limit` its saturation point) or `uniformity` (x is
/// the distance from uniform, `limit` its saturation point).
#[wasm_bindgen]
pub fn degree_curve(kind: &str, limit: f64, epsilon: f64, samples: u32) -> String {
    let samples = samples.clamp(2, 10_000);
    let (span, knee): (f64, f64) = match kind {
        "ratio" if limit > 1.0 => (limit * 1.2, 1.0),
        "uniformity" if epsilon > 0.0 && limit > epsilon => (limit * 1.1, epsilon),
        _ => {
            return error(format!(
                "bad curve parameters: {kind}, limit {limit}, epsilon {epsilon}"
            ))
        }
    };
    let points: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let x = span * i as f64 / (samples - 1) as f64;
            let y = if kind == "ratio" {
                ratio_degree(x, limit)
            } else {
                uniformity_degree(x, epsilon, limit)
            };
            [x, y]
        })
        .collect();
    json!({ "points": points, "knee": knee, "span": span }).to_string()
}

/// Alignment of a community with the single-parent fairness taxonomy.
/// `share` is the fraction of tasks done by the first of two volunteers.
#[wasm_bindgen]
pub fn alignment(
    i_p1: f64,
    i_p3: f64,
    requests: u32,
    offers: u32,
    share: f64,
    epsilon: f64,
) -> String {
    if !(0.0..=1.0).contains(&share) {
        return error(format!("share {share} outside [0, 1]"));
    }
    let ctx = context(&[("p1", i_p1), ("p3", i_p3)], epsilon);
    let t = match build_context_taxonomy(&structure(SINGLE_PARENT), &ctx, DEFAULT_TOL) {
        Ok(t) => t,
        Err(e) => return error(e),
    };
    let world = WorldState::new()
        .with_counter("requests", requests.into())
        .with_counter("offers", offers.into())
        .with_distribution("tasks", vec![share, 1.0 - share]);
    match align(&t, &world, AlignmentVariant::Simple) {
        Ok(r) => json!({
            "score": r.score,
            "properties": r.per_property,
            "view": layout(&t),
        })
        .to_string(),
        Err(e) => error(e),
    }
}
