//! Fixpoint propagation of importance measures through a taxonomy.
//!
//! Each pass walks the taxonomy depth-first from the roots (lexicographic
//! order, every node visited once per pass) and applies one case per node:
//!
//! * valued node, all children valued: the node must equal the children's
//!   mean, otherwise propagation halts with [`PropagationError::Incoherent`];
//! * valued node, exactly one unvalued child: that child is solved so the
//!   node becomes the mean of its children;
//! * valued node, several unvalued children none of which has a valued
//!   descendant: the residual is split equally between them;
//! * unvalued node, all children valued: it takes their mean;
//! * unvalued node, some children valued and the unvalued ones without valued
//!   descendants: it takes the mean of the valued children, which is also
//!   pushed down to the unvalued ones;
//! * anything else is left for a later pass.
//!
//! Passes repeat until one makes no assignment. Existing values are never
//! overwritten. Nodes the fixpoint cannot determine stay undefined.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::taxonomy::{aggregate, exact_sum, ImportanceMap, NodeId, Taxonomy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    /// A valued parent disagrees with the mean of its fully valued children.
    #[error("incoherent importance at `{node}`: expected {expected}, found {found}")]
    Incoherent {
        node: NodeId,
        expected: f64,
        found: f64,
    },
    /// Keeping a parent coherent would need a child value outside `[-1, 1]`.
    #[error("infeasible importance at `{node}`: would require {required}")]
    Infeasible { node: NodeId, required: f64 },
}

impl PropagationError {
    pub fn node(&self) -> &NodeId {
        match self {
            PropagationError::Incoherent { node, .. }
            | PropagationError::Infeasible { node, .. } => node,
        }
    }
}

/// `Ok` carries the completed (possibly partial) importance map.
pub type PropagationOutcome = Result<ImportanceMap, PropagationError>;

/// Completes the importance map of `t`. `t` must be valid.
pub fn propagate(t: &Taxonomy, tol: f64) -> PropagationOutcome {
    let mut importance = t.importance_map().clone();
    let roots = t.roots();
    loop {
        let assigned = run_pass(t, &roots, &mut importance, tol)?;
        if assigned == 0 {
            return Ok(importance);
        }
    }
}

/// Propagates and returns a copy of `t` carrying the completed map.
pub fn propagated(t: &Taxonomy, tol: f64) -> Result<Taxonomy, PropagationError> {
    propagate(t, tol).map(|imp| t.with_importance(imp))
}

/// True iff propagation succeeds without assigning anything new.
pub fn is_fixpoint(t: &Taxonomy, tol: f64) -> bool {
    match propagate(t, tol) {
        Ok(imp) => imp.len() == t.importance_map().len(),
        Err(_) => false,
    }
}

fn run_pass(
    t: &Taxonomy,
    roots: &[NodeId],
    importance: &mut ImportanceMap,
    tol: f64,
) -> Result<usize, PropagationError> {
    let mut assigned = 0;
    let mut visited: BTreeSet<&NodeId> = BTreeSet::new();
    let mut stack: Vec<&NodeId> = roots.iter().rev().collect();
    while let Some(n) = stack.pop() {
        if !visited.insert(n) {
            continue;
        }
        assigned += visit(t, n, importance, tol)?;
        let children: Vec<&NodeId> = t.child_ids(n.as_str()).collect();
        stack.extend(children.into_iter().rev());
    }
    Ok(assigned)
}

fn visit(
    t: &Taxonomy,
    n: &NodeId,
    importance: &mut ImportanceMap,
    tol: f64,
) -> Result<usize, PropagationError> {
    let children: Vec<&NodeId> = t.child_ids(n.as_str()).collect();
    if children.is_empty() {
        return Ok(0);
    }
    let (valued, unvalued): (Vec<&NodeId>, Vec<&NodeId>) =
        children.iter().partition(|c| importance.contains_key(**c));
    let valued_values: Vec<f64> = valued.iter().map(|c| importance[*c]).collect();

    match importance.get(n).copied() {
        Some(own) => {
            if unvalued.is_empty() {
                let expected = mean(&valued_values);
                if (own - expected).abs() > tol {
                    return Err(PropagationError::Incoherent {
                        node: n.clone(),
                        expected,
                        found: own,
                    });
                }
                Ok(0)
            } else if unvalued.len() == 1
                || !t.any_descendant_valued(unvalued.iter().copied(), importance)
            {
                let residual =
                    own * children.len() as f64 - exact_sum(valued_values.iter().copied());
                let share = residual / unvalued.len() as f64;
                let share = feasible(unvalued[0], share, tol)?;
                for c in &unvalued {
                    importance.insert((*c).clone(), share);
                }
                Ok(unvalued.len())
            } else {
                Ok(0)
            }
        }
        None => {
            if valued.is_empty() {
                return Ok(0);
            }
            let avg = mean(&valued_values);
            if unvalued.is_empty() {
                importance.insert(n.clone(), avg);
                Ok(1)
            } else if !t.any_descendant_valued(unvalued.iter().copied(), importance) {
                importance.insert(n.clone(), avg);
                for c in &unvalued {
                    importance.insert((*c).clone(), avg);
                }
                Ok(1 + unvalued.len())
            } else {
                Ok(0)
            }
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    aggregate(values).expect("caller passes a non-empty family")
}

/// Accepts values within `tol` of `[-1, 1]`, snapping them onto the range.
fn feasible(node: &NodeId, value: f64, tol: f64) -> Result<f64, PropagationError> {
    if value.is_finite() && value >= -1.0 - tol && value <= 1.0 + tol {
        Ok(value.clamp(-1.0, 1.0))
    } else {
        Err(PropagationError::Infeasible {
            node: node.clone(),
            required: value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::fixtures::*;
    use crate::taxonomy::{check_coherence, Node, DEFAULT_TOL};

    fn with(t: &Taxonomy, values: &[(&str, f64)]) -> Taxonomy {
        let mut t = t.clone();
        for (n, v) in values {
            t.set_importance(id(n), *v);
        }
        t
    }

    fn close(map: &ImportanceMap, node: &str, want: f64) {
        let got = map.get(node).copied();
        assert!(
            got.is_some_and(|g| (g - want).abs() < 1e-12),
            "{node}: got {got:?}, want {want}"
        );
    }

    #[test]
    fn full_fairness_structure() {
        let t = with(&fairness(), &[("p1", 0.8), ("p2", 0.0), ("p3", 0.7)]);
        let out = propagate(&t, DEFAULT_TOL).unwrap();
        assert_eq!(out.len(), 9);
        close(&out, "balanced_give_take", 0.4);
        close(&out, "reciprocity", 0.4);
        close(&out, "balanced_division", 0.7);
        close(&out, "fair_treatment", 0.7);
        close(&out, "fitting_reward", 0.7);
        close(&out, "fairness", 0.55);
        assert!(check_coherence(&t.with_importance(out), DEFAULT_TOL).is_coherent());
    }

    #[test]
    fn single_branch_inherits_leaf_value() {
        let t = fairness();
        let keep = t.ancestor_closure(&[id("p3")]);
        let chain = with(&t.induced(&keep), &[("p3", 0.9)]);
        let out = propagate(&chain, DEFAULT_TOL).unwrap();
        for n in ["fairness", "fair_treatment", "balanced_division", "p3"] {
            close(&out, n, 0.9);
        }
    }

    #[test]
    fn incoherent_parent_halts() {
        let t = labels(&["p", "a", "b"], &[("p", "a"), ("p", "b")]);
        let t = with(&t, &[("p", 0.5), ("a", 0.8), ("b", 0.6)]);
        match propagate(&t, DEFAULT_TOL) {
            Err(PropagationError::Incoherent {
                node,
                expected,
                found,
            }) => {
                assert_eq!(node.as_str(), "p");
                assert!((expected - 0.7).abs() < 1e-12);
                assert_eq!(found, 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_solve() {
        // 2 * 1.0 - 0.0 = 2.0
        let t = labels(&["r", "a", "b"], &[("r", "a"), ("r", "b")]);
        let t = with(&t, &[("r", 1.0), ("a", 0.0)]);
        match propagate(&t, DEFAULT_TOL) {
            Err(PropagationError::Infeasible { node, required }) => {
                assert_eq!(node.as_str(), "b");
                assert!((required - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn residual_split_equally() {
        // 3 * 0.5 - 0.9 = 0.6, split over two children
        let t = labels(&["r", "a", "b", "c"], &[("r", "a"), ("r", "b"), ("r", "c")]);
        let t = with(&t, &[("r", 0.5), ("a", 0.9)]);
        let out = propagate(&t, DEFAULT_TOL).unwrap();
        close(&out, "b", 0.3);
        close(&out, "c", 0.3);
    }

    #[test]
    fn unvalued_children_with_valued_descendants_wait() {
        // r valued; a and b unvalued; b has a valued child. r cannot split
        // its residual, but b picks up its child's value, then a is solved.
        let t = labels(&["r", "a", "b", "x"], &[("r", "a"), ("r", "b"), ("b", "x")]);
        let t = with(&t, &[("r", 0.5), ("x", 0.2)]);
        let out = propagate(&t, DEFAULT_TOL).unwrap();
        close(&out, "b", 0.2);
        close(&out, "a", 0.8);
    }

    #[test]
    fn top_down_fills_tree() {
        let t = labels(&["r", "a", "b"], &[("r", "a"), ("r", "b")]);
        let out = propagate(&with(&t, &[("r", -0.4)]), DEFAULT_TOL).unwrap();
        close(&out, "a", -0.4);
        close(&out, "b", -0.4);
    }

    #[test]
    fn mixed_children_pull_up_then_push_down() {
        let t = labels(&["r", "a", "b"], &[("r", "a"), ("r", "b")]);
        let out = propagate(&with(&t, &[("a", 0.3)]), DEFAULT_TOL).unwrap();
        close(&out, "r", 0.3);
        close(&out, "b", 0.3);
    }

    #[test]
    fn undetermined_nodes_stay_undefined() {
        // a separate component with no values at all gets nothing
        let t = labels(&["r", "a", "s", "b"], &[("r", "a"), ("s", "b")]);
        let out = propagate(&with(&t, &[("a", 0.6)]), DEFAULT_TOL).unwrap();
        close(&out, "r", 0.6);
        assert!(!out.contains_key("s") && !out.contains_key("b"));
        assert!(is_fixpoint(&t.with_importance(out), DEFAULT_TOL));
    }

    #[test]
    fn fixpoint_checks() {
        let t = with(&fairness(), &[("p1", 0.8), ("p2", 0.0), ("p3", 0.7)]);
        assert!(!is_fixpoint(&t, DEFAULT_TOL));
        let done = propagated(&t, DEFAULT_TOL).unwrap();
        assert!(is_fixpoint(&done, DEFAULT_TOL));
        assert!(is_fixpoint(&Taxonomy::new(), DEFAULT_TOL));
    }

    #[test]
    fn dag_conflict_reports_incoherence() {
        // x sits under a and b. a = 0.2 forces x = 0.2; b = 0.9 with
        // children {x, y = 0.9} would need x = 0.9.
        let t = labels(
            &["r", "a", "b", "x", "y"],
            &[("r", "a"), ("r", "b"), ("a", "x"), ("b", "x"), ("b", "y")],
        );
        let t = with(&t, &[("a", 0.2), ("b", 0.9), ("y", 0.9)]);
        let err = propagate(&t, DEFAULT_TOL).unwrap_err();
        assert!(
            matches!(err, PropagationError::Incoherent { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 12_000;
        let names: Vec<String> = (0..n).map(|i| format!("n{i:05}")).collect();
        let mut t = Taxonomy::new();
        for name in &names {
            t.add_node(Node::label(id(name), name.clone())).unwrap();
        }
        for w in names.windows(2) {
            t.add_edge(id(&w[0]), id(&w[1]));
        }
        t.set_importance(id(&names[0]), 0.25);
        let out = propagate(&t, DEFAULT_TOL).unwrap();
        assert_eq!(out.len(), n);
        close(&out, &names[n - 1], 0.25);
    }
}
