use std::fmt;

use super::{aggregate, NodeId, Taxonomy};

/// A parent whose importance differs from the mean of its children.
#[derive(Debug, Clone, PartialEq)]
pub struct Incoherence {
    pub node: NodeId,
    /// Mean of the children's importances.
    pub expected: f64,
    /// The parent's own importance.
    pub found: f64,
}

impl fmt::Display for Incoherence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node `{}`: importance {} but children average {}",
            self.node, self.found, self.expected
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoherenceReport {
    pub incoherent: Vec<Incoherence>,
}

impl CoherenceReport {
    pub fn is_coherent(&self) -> bool {
        self.incoherent.is_empty()
    }
}

/// Checks every fully defined family (parent and all children valued).
/// Families with any undefined participant are skipped.
pub fn check_coherence(t: &Taxonomy, tol: f64) -> CoherenceReport {
    let mut incoherent = Vec::new();
    for id in t.node_ids() {
        let Some(found) = t.importance(id.as_str()) else {
            continue;
        };
        let values: Option<Vec<f64>> = t
            .child_ids(id.as_str())
            .map(|c| t.importance(c.as_str()))
            .collect();
        let Some(values) = values else { continue };
        let Ok(expected) = aggregate(&values) else {
            continue; // leaf
        };
        if (found - expected).abs() > tol {
            incoherent.push(Incoherence {
                node: id.clone(),
                expected,
                found,
            });
        }
    }
    CoherenceReport { incoherent }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn family(parent: Option<f64>, children: &[Option<f64>]) -> Taxonomy {
        let names: Vec<String> = (0..children.len()).map(|i| format!("c{i}")).collect();
        let mut nodes: Vec<&str> = names.iter().map(String::as_str).collect();
        nodes.push("parent");
        let edges: Vec<(&str, &str)> = names.iter().map(|c| ("parent", c.as_str())).collect();
        let mut t = labels(&nodes, &edges);
        if let Some(p) = parent {
            t.set_importance(id("parent"), p);
        }
        for (name, v) in names.iter().zip(children) {
            if let Some(v) = v {
                t.set_importance(id(name), *v);
            }
        }
        t
    }

    #[test]
    fn coherent_family() {
        // (0.8 + 0.6) / 2 = 0.7
        let t = family(Some(0.7), &[Some(0.8), Some(0.6)]);
        assert!(check_coherence(&t, 1e-9).is_coherent());
    }

    #[test]
    fn incoherent_family_names_parent() {
        let t = family(Some(0.5), &[Some(0.8), Some(0.6)]);
        let report = check_coherence(&t, 1e-9);
        assert_eq!(report.incoherent.len(), 1);
        let inc = &report.incoherent[0];
        assert_eq!(inc.node.as_str(), "parent");
        assert!((inc.expected - 0.7).abs() < 1e-12);
        assert_eq!(inc.found, 0.5);
    }

    #[test]
    fn undefined_participants_are_skipped() {
        assert!(check_coherence(&family(None, &[Some(0.8), Some(0.6)]), 1e-9).is_coherent());
        assert!(check_coherence(&family(Some(0.1), &[Some(0.8), None]), 1e-9).is_coherent());
    }

    #[test]
    fn tolerance_is_respected() {
        let t = family(Some(0.7 + 1e-6), &[Some(0.8), Some(0.6)]);
        assert!(!check_coherence(&t, 1e-9).is_coherent());
        assert!(check_coherence(&t, 1e-5).is_coherent());
    }
}
