//! Linearization for sequence models and the way back.

mod adapter;
mod repair;

use std::collections::HashMap;

pub use adapter::{ExternalModel, ModelError};
pub use repair::{repair, repair_batch, RepairAction, RepairError, RepairLog, Repaired};

use crate::graph::{AmrGraph, Target, Variable};
use crate::penman::lexer::tokenize;
use crate::penman::{layout, parse, serialize, ParseError, SerializationStyle, SerializeError};

/// Canonical name stem for a concept: its first letter, lowercased.
fn stem(concept: &str) -> String {
    concept
        .chars()
        .find(|c| c.is_alphabetic())
        .map(|c| c.to_lowercase().collect())
        .unwrap_or_else(|| "x".to_string())
}

/// Renames every variable after its concept's first letter. The first node
/// with a given letter in depth-first order keeps the bare letter, the next
/// ones get `2`, `3`, and so on. Instances the layout cannot reach follow in
/// stored order.
pub fn rename_variables(graph: &AmrGraph) -> AmrGraph {
    let mut order: Vec<Variable> = match layout(graph) {
        Ok(tree) => tree.preorder().into_iter().cloned().collect(),
        Err(_) => Vec::new(),
    };
    for v in graph.instances.keys() {
        if !order.contains(v) {
            order.push(v.clone());
        }
    }
    let mut used: HashMap<String, usize> = HashMap::new();
    let mut renamed: HashMap<Variable, Variable> = HashMap::new();
    for v in order {
        let base = stem(graph.instances[&v].as_str());
        let n = used.entry(base.clone()).or_insert(0);
        *n += 1;
        let name = if *n == 1 { base } else { format!("{base}{n}") };
        renamed.insert(v, Variable::new(name).expect("letter followed by digits"));
    }
    let map = |v: &Variable| renamed.get(v).cloned().unwrap_or_else(|| v.clone());
    let mut out = graph.clone();
    out.root = map(&graph.root);
    out.instances = graph.instances.iter().map(|(v, c)| (map(v), c.clone())).collect();
    for r in &mut out.relations {
        r.source = map(&r.source);
        if let Target::Node(t) = &mut r.target {
            *t = map(t);
        }
    }
    out
}

/// The renamed graph as one spaced line, split into tokens. A quoted string
/// stays a single token even when it contains spaces.
pub fn linearize(graph: &AmrGraph) -> Result<Vec<String>, SerializeError> {
    Ok(tokenize(&linearize_line(graph)?).iter().map(|t| t.text()).collect())
}

pub fn linearize_line(graph: &AmrGraph) -> Result<String, SerializeError> {
    serialize(&rename_variables(graph), SerializationStyle::seq2seq())
}

/// Strict parse of a token stream; callers fall back to [`repair`].
pub fn delinearize<S: AsRef<str>>(tokens: &[S]) -> Result<AmrGraph, ParseError> {
    let line: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    parse(&line.join(" "))
}
