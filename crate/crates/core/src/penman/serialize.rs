use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::graph::{AmrGraph, Concept, Constant, Role, Target, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SerializationStyle {
    /// Emit `( m / multi-sentence ... )` instead of `(m / multi-sentence ...)`.
    pub spaced_parens: bool,
    pub indent_width: usize,
    pub single_line: bool,
}

impl Default for SerializationStyle {
    fn default() -> Self {
        SerializationStyle { spaced_parens: false, indent_width: 4, single_line: false }
    }
}

impl SerializationStyle {
    /// Single line, spaced parentheses: the form fed to sequence models.
    pub fn seq2seq() -> Self {
        SerializationStyle { spaced_parens: true, indent_width: 0, single_line: true }
    }

    pub fn single_line() -> Self {
        SerializationStyle { spaced_parens: false, indent_width: 0, single_line: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("instance `{0}` is not reachable from the root")]
    DisconnectedGraph(String),
    #[error("variable `{0}` is referenced but has no instance")]
    UndefinedVariable(String),
}

/// Tree view of a graph as it is written out: every instance appears once
/// as a `Node`, later mentions become `Reentrant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutNode {
    pub var: Variable,
    pub concept: Concept,
    pub children: Vec<(Role, LayoutChild)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayoutChild {
    Node(LayoutNode),
    Reentrant(Variable),
    Const(Constant),
}

impl LayoutNode {
    /// Variables in depth-first pre-order.
    pub fn preorder(&self) -> Vec<&Variable> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a LayoutNode, out: &mut Vec<&'a Variable>) {
            out.push(&n.var);
            for (_, c) in &n.children {
                if let LayoutChild::Node(child) = c {
                    walk(child, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }
}

/// Depth-first layout from the root. A node first emits its own relations
/// in stored order. An edge stored on a node that no stored-direction path
/// from the root reaches is then emitted from its target with the inverted
/// role.
pub fn layout(graph: &AmrGraph) -> Result<LayoutNode, SerializeError> {
    if let Some(v) = graph.undefined_variables().into_iter().next() {
        return Err(SerializeError::UndefinedVariable(v.to_string()));
    }
    let mut outgoing: HashMap<&Variable, Vec<usize>> = HashMap::new();
    let mut incoming: HashMap<&Variable, Vec<usize>> = HashMap::new();
    for (i, r) in graph.relations.iter().enumerate() {
        outgoing.entry(&r.source).or_default().push(i);
        if let Target::Node(t) = &r.target {
            if t != &r.source {
                incoming.entry(t).or_default().push(i);
            }
        }
    }
    let mut forward: HashSet<&Variable> = HashSet::from([&graph.root]);
    let mut stack = vec![&graph.root];
    while let Some(v) = stack.pop() {
        for &i in outgoing.get(v).into_iter().flatten() {
            if let Target::Node(t) = &graph.relations[i].target {
                if forward.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    let mut walker = Walker { graph, outgoing, incoming, forward, visited: HashSet::new(), emitted: vec![false; graph.relations.len()] };
    let root = walker.visit(&graph.root);
    if let Some(missing) = graph.instances.keys().find(|v| !walker.visited.contains(v)) {
        return Err(SerializeError::DisconnectedGraph(missing.to_string()));
    }
    Ok(root)
}

struct Walker<'g> {
    graph: &'g AmrGraph,
    outgoing: HashMap<&'g Variable, Vec<usize>>,
    incoming: HashMap<&'g Variable, Vec<usize>>,
    /// Nodes reachable from the root along stored edge directions.
    forward: HashSet<&'g Variable>,
    visited: HashSet<&'g Variable>,
    emitted: Vec<bool>,
}

impl<'g> Walker<'g> {
    fn visit(&mut self, var: &'g Variable) -> LayoutNode {
        self.visited.insert(var);
        let mut children = Vec::new();
        for i in self.outgoing.get(var).cloned().unwrap_or_default() {
            if self.emitted[i] {
                continue;
            }
            let rel = &self.graph.relations[i];
            self.emitted[i] = true;
            let child = match &rel.target {
                Target::Const(c) => LayoutChild::Const(c.clone()),
                Target::Node(t) if self.visited.contains(t) => LayoutChild::Reentrant(t.clone()),
                Target::Node(t) => LayoutChild::Node(self.visit(t)),
            };
            children.push((rel.role.clone(), child));
        }
        for i in self.incoming.get(var).cloned().unwrap_or_default() {
            let rel = &self.graph.relations[i];
            if self.emitted[i] || self.visited.contains(&rel.source) || self.forward.contains(&rel.source) {
                continue;
            }
            self.emitted[i] = true;
            let child = LayoutChild::Node(self.visit(&rel.source));
            children.push((rel.role.inverted(), child));
        }
        LayoutNode { var: var.clone(), concept: self.graph.instances[var].clone(), children }
    }
}

pub fn serialize(graph: &AmrGraph, style: SerializationStyle) -> Result<String, SerializeError> {
    let tree = layout(graph)?;
    let mut out = String::new();
    render(&tree, 0, style, &mut out);
    Ok(out)
}

fn render(node: &LayoutNode, depth: usize, style: SerializationStyle, out: &mut String) {
    out.push_str(if style.spaced_parens { "( " } else { "(" });
    out.push_str(node.var.as_str());
    out.push_str(" / ");
    out.push_str(node.concept.as_str());
    for (role, child) in &node.children {
        if style.single_line {
            out.push(' ');
        } else {
            out.push('\n');
            out.extend(std::iter::repeat_n(' ', style.indent_width * (depth + 1)));
        }
        out.push_str(role.as_str());
        out.push(' ');
        match child {
            LayoutChild::Node(n) => render(n, depth + 1, style, out),
            LayoutChild::Reentrant(v) => out.push_str(v.as_str()),
            LayoutChild::Const(c) => out.push_str(&c.to_string()),
        }
    }
    out.push_str(if style.spaced_parens { " )" } else { ")" });
}
