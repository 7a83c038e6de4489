//! GraphViz export. Label nodes are drawn as ellipses and property nodes as
//! boxes; each node shows its label and, when defined, its importance.

use std::fmt::Write;

use crate::io::canonical_f64;
use crate::taxonomy::{NodeKind, Taxonomy};

pub fn export_dot(t: &Taxonomy) -> String {
    let mut out = String::from("digraph taxonomy {\n");
    for node in t.nodes() {
        let shape = match node.kind {
            NodeKind::Label => "ellipse",
            NodeKind::Property => "box",
        };
        let name = if node.label.is_empty() {
            node.id.as_str()
        } else {
            node.label.as_str()
        };
        let mut label = escape(name);
        if let Some(v) = t.importance(node.id.as_str()) {
            write!(label, "\\n({})", canonical_f64(v)).unwrap();
        }
        writeln!(
            out,
            "  {} [shape={shape}, label=\"{label}\"];",
            dot_id(node.id.as_str())
        )
        .unwrap();
    }
    for (p, c) in t.edges() {
        writeln!(out, "  {} -> {};", dot_id(p.as_str()), dot_id(c.as_str())).unwrap();
    }
    out.push_str("}\n");
    out
}

const KEYWORDS: [&str; 6] = ["node", "edge", "graph", "digraph", "subgraph", "strict"];

/// Node ids are `[A-Za-z0-9_-]+`; only those that are not plain DOT
/// identifiers, or that collide with a keyword, need quoting.
fn dot_id(id: &str) -> String {
    let plain = id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !id.starts_with(|c: char| c.is_ascii_digit())
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(id));
    let numeral = id.chars().all(|c| c.is_ascii_digit());
    if plain || numeral {
        id.to_owned()
    } else {
        format!("\"{id}\"")
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::fixtures::*;
    use crate::taxonomy::Node;

    #[test]
    fn label_node_with_importance() {
        let mut t = labels(&["fairness"], &[]);
        t.set_importance(id("fairness"), 0.55);
        assert!(export_dot(&t).contains(r#"fairness [shape=ellipse, label="fairness\n(0.55)"]"#));
    }

    #[test]
    fn property_without_importance() {
        let mut t = Taxonomy::new();
        t.add_node(Node::property(id("p1"), "p1", ratio("a", "b", 5.0)))
            .unwrap();
        assert!(export_dot(&t).contains(r#"p1 [shape=box, label="p1"];"#));
    }

    #[test]
    fn empty_and_edges() {
        assert_eq!(export_dot(&Taxonomy::new()), "digraph taxonomy {\n}\n");
        let dot = export_dot(&fairness());
        assert!(dot.contains("fairness -> reciprocity;"));
        assert_eq!(dot.matches(" -> ").count(), 8);
    }

    #[test]
    fn quoting() {
        assert_eq!(dot_id("fair_treatment"), "fair_treatment");
        assert_eq!(dot_id("42"), "42");
        assert_eq!(dot_id("2nd"), "\"2nd\"");
        assert_eq!(dot_id("a-b"), "\"a-b\"");
        assert_eq!(dot_id("Node"), "\"Node\"");
        assert_eq!(escape("say \"hi\""), "say \\\"hi\\\"");
    }
}
