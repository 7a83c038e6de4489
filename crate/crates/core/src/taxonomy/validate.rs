use std::collections::BTreeMap;
use std::fmt;

use super::{NodeId, NodeKind, Taxonomy};

/// One broken structural rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// An edge names a node that does not exist.
    DanglingEdge {
        parent: NodeId,
        child: NodeId,
        missing: NodeId,
    },
    /// The nodes listed form a directed cycle (first node repeated implicitly).
    Cycle { path: Vec<NodeId> },
    /// A property node has a child.
    PropertyParent { parent: NodeId, child: NodeId },
    /// Importance is outside `[-1, 1]` or not a number.
    ImportanceOutOfRange { node: NodeId, value: f64 },
    /// Importance is assigned to a node that does not exist.
    ImportanceOnUnknownNode { node: NodeId },
    /// Property without grounding, or label with one.
    GroundingMismatch { node: NodeId, kind: NodeKind },
    /// Grounding parameters outside their bounds.
    InvalidGrounding { node: NodeId, reason: String },
    /// Non-empty taxonomy where every node has a parent.
    NoRoot,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEdge {
                parent,
                child,
                missing,
            } => write!(f, "edge ({parent}, {child}): unknown node `{missing}`"),
            Violation::Cycle { path } => {
                let names: Vec<&str> = path.iter().map(NodeId::as_str).collect();
                write!(f, "cycle: {} -> {}", names.join(" -> "), names[0])
            }
            Violation::PropertyParent { parent, child } => {
                write!(f, "edge ({parent}, {child}): property node is a parent")
            }
            Violation::ImportanceOutOfRange { node, value } => {
                write!(f, "node `{node}`: importance {value} outside [-1, 1]")
            }
            Violation::ImportanceOnUnknownNode { node } => {
                write!(f, "importance given for unknown node `{node}`")
            }
            Violation::GroundingMismatch { node, kind } => match kind {
                NodeKind::Property => write!(f, "node `{node}`: property node without grounding"),
                NodeKind::Label => write!(f, "node `{node}`: label node with grounding"),
            },
            Violation::InvalidGrounding { node, reason } => {
                write!(f, "node `{node}`: invalid grounding: {reason}")
            }
            Violation::NoRoot => f.write_str("no root: every node has an incoming edge"),
        }
    }
}

/// Result of [`Taxonomy::validate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Taxonomy {
    /// Checks every structural invariant and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        for node in self.nodes.values() {
            match (node.kind, &node.grounding) {
                (NodeKind::Property, None) | (NodeKind::Label, Some(_)) => {
                    violations.push(Violation::GroundingMismatch {
                        node: node.id.clone(),
                        kind: node.kind,
                    })
                }
                (NodeKind::Property, Some(spec)) => {
                    if let Err(reason) = spec.check_params() {
                        violations.push(Violation::InvalidGrounding {
                            node: node.id.clone(),
                            reason,
                        });
                    }
                }
                (NodeKind::Label, None) => {}
            }
        }

        for (parent, child) in self.edges() {
            for end in [parent, child] {
                if !self.nodes.contains_key(end) {
                    violations.push(Violation::DanglingEdge {
                        parent: parent.clone(),
                        child: child.clone(),
                        missing: end.clone(),
                    });
                }
            }
            if self.nodes.get(parent).is_some_and(|n| n.is_property()) {
                violations.push(Violation::PropertyParent {
                    parent: parent.clone(),
                    child: child.clone(),
                });
            }
        }

        if let Some(path) = self.find_cycle() {
            violations.push(Violation::Cycle { path });
        }

        for (node, value) in &self.importance {
            if !self.nodes.contains_key(node) {
                violations.push(Violation::ImportanceOnUnknownNode { node: node.clone() });
            }
            if !(-1.0..=1.0).contains(value) {
                violations.push(Violation::ImportanceOutOfRange {
                    node: node.clone(),
                    value: *value,
                });
            }
        }

        if !self.nodes.is_empty() && self.roots().is_empty() {
            violations.push(Violation::NoRoot);
        }

        ValidationReport { violations }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Iterative three-colour DFS over all edges (including dangling ones).
    fn find_cycle(&self) -> Option<Vec<NodeId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Colour {
            Grey,
            Black,
        }
        let mut colour: BTreeMap<&NodeId, Colour> = BTreeMap::new();
        let starts = self.children.keys();
        for start in starts {
            if colour.contains_key(start) {
                continue;
            }
            // (node, iterator over its children)
            let mut stack: Vec<(&NodeId, Box<dyn Iterator<Item = &NodeId> + '_>)> = Vec::new();
            colour.insert(start, Colour::Grey);
            stack.push((start, Box::new(self.child_ids(start.as_str()))));
            while let Some((node, iter)) = stack.last_mut() {
                match iter.next() {
                    Some(next) => match colour.get(next) {
                        Some(Colour::Grey) => {
                            let pos = stack.iter().position(|(n, _)| *n == next).unwrap_or(0);
                            return Some(stack[pos..].iter().map(|(n, _)| (*n).clone()).collect());
                        }
                        Some(Colour::Black) => {}
                        None => {
                            colour.insert(next, Colour::Grey);
                            stack.push((next, Box::new(self.child_ids(next.as_str()))));
                        }
                    },
                    None => {
                        colour.insert(node, Colour::Black);
                        stack.pop();
                    }
                }
            }
        }
        None
    }
}
