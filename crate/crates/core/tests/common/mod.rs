#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vtm_core::{Distance, Node, NodeId, SatisfactionSpec, Taxonomy};

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

pub fn name(i: usize) -> NodeId {
    id(&format!("n{i:02}"))
}

/// A random DAG over `n` nodes: edges only go from lower to higher index, so
/// no cycles. Leaves become property nodes with probability `p_prop`.
#[derive(Debug, Clone)]
pub struct Shape {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub property: Vec<bool>,
}

impl Shape {
    pub fn random(rng: &mut ChaCha8Rng, max_nodes: usize, tree: bool) -> Shape {
        let n = rng.gen_range(1..=max_nodes);
        let mut edges = Vec::new();
        for j in 1..n {
            if tree {
                // Either a new root or one parent.
                if rng.gen_bool(0.85) {
                    edges.push((rng.gen_range(0..j), j));
                }
            } else {
                for i in 0..j {
                    if rng.gen_bool(0.3) {
                        edges.push((i, j));
                    }
                }
            }
        }
        let mut has_child = vec![false; n];
        for &(p, _) in &edges {
            has_child[p] = true;
        }
        let property = (0..n).map(|i| !has_child[i] && rng.gen_bool(0.7)).collect();
        Shape { n, edges, property }
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|e| e.0 == i)
            .map(|e| e.1)
            .collect()
    }

    pub fn build(&self, importance: &BTreeMap<usize, f64>) -> Taxonomy {
        let order: Vec<usize> = (0..self.n).collect();
        self.build_in_order(&order, &self.edges, importance)
    }

    /// Builds with nodes and edges inserted in the given order.
    pub fn build_in_order(
        &self,
        node_order: &[usize],
        edges: &[(usize, usize)],
        importance: &BTreeMap<usize, f64>,
    ) -> Taxonomy {
        let mut t = Taxonomy::new();
        for &i in node_order {
            let node = if self.property[i] {
                Node::property(name(i), format!("node {i}"), grounding(i))
            } else {
                Node::label(name(i), format!("node {i}"))
            };
            t.add_node(node).unwrap();
        }
        for &(p, c) in edges {
            t.add_edge(name(p), name(c));
        }
        for (&i, &v) in importance {
            t.set_importance(name(i), v);
        }
        t
    }

    pub fn shuffled(&self, rng: &mut ChaCha8Rng, importance: &BTreeMap<usize, f64>) -> Taxonomy {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(rng);
        let mut edges = self.edges.clone();
        edges.shuffle(rng);
        self.build_in_order(&order, &edges, importance)
    }

    /// A coherent importance for every node: random leaves, parents as the
    /// mean of their children, computed from the highest index down.
    pub fn coherent_completion(&self, rng: &mut ChaCha8Rng) -> BTreeMap<usize, f64> {
        let mut v = BTreeMap::new();
        for i in (0..self.n).rev() {
            let ch = self.children(i);
            let x = if ch.is_empty() {
                rng.gen_range(-1.0..=1.0)
            } else {
                ch.iter().map(|c| v[c]).sum::<f64>() / ch.len() as f64
            };
            v.insert(i, x);
        }
        v
    }
}

pub fn grounding(i: usize) -> SatisfactionSpec {
    if i % 2 == 0 {
        SatisfactionSpec::RatioThreshold {
            numerator: format!("req{i}"),
            denominator: format!("off{i}"),
            max_ratio: 2.0 + (i % 5) as f64,
        }
    } else {
        SatisfactionSpec::DistributionUniformity {
            distribution: format!("d{i}"),
            epsilon: 0.1 + 0.05 * (i % 4) as f64,
            max_delta: 1.0,
            distance: Distance::Emd,
        }
    }
}

/// A random probability vector of length `n`.
pub fn distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    let mut d: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Put rounding residue on the last entry so the mass is 1 to within ulps.
    let head: f64 = d[..n - 1].iter().sum();
    d[n - 1] = (1.0 - head).max(0.0);
    d
}
