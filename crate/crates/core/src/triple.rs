//! Decomposition of a graph into the triples Smatch counts.

use std::fmt;

use crate::graph::{AmrGraph, Concept, Constant, Target, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TripleKind {
    Instance,
    Relation,
    Attribute,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TripleValue {
    Var(Variable),
    Concept(Concept),
    Const(Constant),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub kind: TripleKind,
    /// `instance`, `TOP`, or a role label such as `:ARG0`.
    pub role: String,
    pub first: Variable,
    pub second: TripleValue,
}

pub const TOP: &str = "TOP";
pub const INSTANCE: &str = "instance";

impl Triple {
    pub fn is_top(&self) -> bool {
        self.kind == TripleKind::Attribute && self.role == TOP
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let second = match &self.second {
            TripleValue::Var(v) => v.to_string(),
            TripleValue::Concept(c) => c.to_string(),
            TripleValue::Const(c) => c.to_string(),
        };
        write!(f, "{}({}, {})", self.role.trim_start_matches(':'), self.first, second)
    }
}

/// One instance triple per variable, one triple per relation, and a final
/// `TOP(root, root-concept)` triple. With `normalize_inverse`, `-of` edges
/// are rewritten to their base role with endpoints swapped.
pub fn triples(graph: &AmrGraph, normalize_inverse: bool) -> Vec<Triple> {
    let mut out = Vec::with_capacity(graph.instances.len() + graph.relations.len() + 1);
    for (var, concept) in &graph.instances {
        out.push(Triple {
            kind: TripleKind::Instance,
            role: INSTANCE.to_string(),
            first: var.clone(),
            second: TripleValue::Concept(concept.clone()),
        });
    }
    for rel in &graph.relations {
        match &rel.target {
            Target::Node(target) => {
                let (role, first, second) = if normalize_inverse && rel.role.is_inverse() {
                    (rel.role.normalized(), target.clone(), rel.source.clone())
                } else {
                    (rel.role.clone(), rel.source.clone(), target.clone())
                };
                out.push(Triple {
                    kind: TripleKind::Relation,
                    role: role.to_string(),
                    first,
                    second: TripleValue::Var(second),
                });
            }
            Target::Const(c) => out.push(Triple {
                kind: TripleKind::Attribute,
                role: rel.role.to_string(),
                first: rel.source.clone(),
                second: TripleValue::Const(c.clone()),
            }),
        }
    }
    if let Some(concept) = graph.root_concept() {
        out.push(Triple {
            kind: TripleKind::Attribute,
            role: TOP.to_string(),
            first: graph.root.clone(),
            second: TripleValue::Concept(concept.clone()),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse;

    fn rendered(text: &str, normalize: bool) -> Vec<String> {
        let mut t: Vec<String> = triples(&parse(text).unwrap(), normalize).iter().map(|t| t.to_string()).collect();
        t.sort();
        t
    }

    #[test]
    fn break_window_has_six_triples() {
        let t = rendered("(b / break-01 :ARG0 (m / man) :ARG1 (w / window))", true);
        let mut expected = vec![
            "instance(b, break-01)",
            "instance(m, man)",
            "instance(w, window)",
            "ARG0(b, m)",
            "ARG1(b, w)",
            "TOP(b, break-01)",
        ];
        expected.sort();
        assert_eq!(t, expected);
    }

    #[test]
    fn inverse_edges_normalize() {
        assert!(rendered("(p / possible-01 :ARG1-of (r / request-confirmation-91))", true).contains(&"ARG1(r, p)".to_string()));
        assert!(rendered("(p / possible-01 :ARG1-of (r / request-confirmation-91))", false)
            .contains(&"ARG1-of(p, r)".to_string()));
        assert!(rendered("(a / army :consist-of (s / soldier))", true).contains(&"consist-of(a, s)".to_string()));
    }

    #[test]
    fn single_instance() {
        assert_eq!(rendered("(x / thing)", true), ["TOP(x, thing)", "instance(x, thing)"]);
    }
}
