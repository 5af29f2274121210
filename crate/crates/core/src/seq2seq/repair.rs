//! Best-effort recovery of graphs from malformed generated text.
//!
//! The steps run in a fixed order: tokenize, balance parentheses, build a
//! lenient tree, name variable-less nodes, rename duplicate definitions,
//! turn undefined variables into strings, wrap multiple top-level
//! expressions, and finally cut reentrant edges that close a cycle.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::compat::MULTI_SENTENCE;
use crate::graph::{looks_like_variable, AmrGraph, Concept, Constant, Relation, Role, Target, Variable};
use crate::penman::lexer::{tokenize, Token, TokenKind};

const UNKNOWN_CONCEPT: &str = "amr-unknown";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairAction {
    PrependedOpener,
    DroppedCloser { offset: usize },
    AppendedClosers { count: usize },
    DroppedToken { offset: usize, text: String },
    DroppedOrphan { offset: usize },
    DroppedEmptyRole { role: String },
    InvalidVariable { name: String, replacement: String },
    FreshVariable { name: String },
    MissingConcept { variable: String },
    RenamedDuplicate { from: String, to: String },
    UndefinedToString { name: String },
    WrappedTopLevel { count: usize },
    DroppedCycleEdge { source: String, role: String, target: String },
}

impl RepairAction {
    pub fn kind(&self) -> &'static str {
        match self {
            RepairAction::PrependedOpener => "prepended-opener",
            RepairAction::DroppedCloser { .. } => "dropped-closer",
            RepairAction::AppendedClosers { .. } => "appended-closers",
            RepairAction::DroppedToken { .. } => "dropped-token",
            RepairAction::DroppedOrphan { .. } => "dropped-orphan",
            RepairAction::DroppedEmptyRole { .. } => "dropped-empty-role",
            RepairAction::InvalidVariable { .. } => "invalid-variable",
            RepairAction::FreshVariable { .. } => "fresh-variable",
            RepairAction::MissingConcept { .. } => "missing-concept",
            RepairAction::RenamedDuplicate { .. } => "renamed-duplicate",
            RepairAction::UndefinedToString { .. } => "undefined-to-string",
            RepairAction::WrappedTopLevel { .. } => "wrapped-top-level",
            RepairAction::DroppedCycleEdge { .. } => "dropped-cycle-edge",
        }
    }
}

impl fmt::Display for RepairAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())?;
        match self {
            RepairAction::PrependedOpener => Ok(()),
            RepairAction::DroppedCloser { offset } | RepairAction::DroppedOrphan { offset } => {
                write!(f, "\toffset={offset}")
            }
            RepairAction::AppendedClosers { count } | RepairAction::WrappedTopLevel { count } => {
                write!(f, "\tcount={count}")
            }
            RepairAction::DroppedToken { offset, text } => write!(f, "\toffset={offset}\ttoken={text}"),
            RepairAction::DroppedEmptyRole { role } => write!(f, "\trole={role}"),
            RepairAction::InvalidVariable { name, replacement } => write!(f, "\tname={name}\treplacement={replacement}"),
            RepairAction::FreshVariable { name } => write!(f, "\tname={name}"),
            RepairAction::MissingConcept { variable } => write!(f, "\tvariable={variable}"),
            RepairAction::RenamedDuplicate { from, to } => write!(f, "\tfrom={from}\tto={to}"),
            RepairAction::UndefinedToString { name } => write!(f, "\tname={name}"),
            RepairAction::DroppedCycleEdge { source, role, target } => {
                write!(f, "\tsource={source}\trole={role}\ttarget={target}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepairLog {
    pub actions: Vec<RepairAction>,
}

impl RepairLog {
    pub fn is_clean(&self) -> bool {
        self.actions.is_empty()
    }

    fn push(&mut self, action: RepairAction) {
        self.actions.push(action);
    }

    /// One tab-separated record per action, each prefixed with `line`.
    pub fn to_records(&self, line: usize) -> String {
        let mut out = String::new();
        for a in &self.actions {
            let _ = writeln!(out, "{line}\t{a}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repaired {
    pub graph: AmrGraph,
    pub log: RepairLog,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("no instance could be recovered")]
    Unrepairable { log: RepairLog },
}

#[derive(Debug)]
struct RawNode {
    var: Option<String>,
    concept: Option<String>,
    children: Vec<(Role, RawChild)>,
}

#[derive(Debug)]
enum RawChild {
    Node(RawNode),
    Atom(String),
    Str(String),
}

/// Step 2: every `(` closed, no `)` without its opener.
fn balance(tokens: Vec<Token>, log: &mut RepairLog) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len() + 2);
    if tokens.first().is_some_and(|t| t.kind != TokenKind::LParen) {
        out.push(Token { kind: TokenKind::LParen, offset: 0 });
        log.push(RepairAction::PrependedOpener);
    }
    let mut depth = out.len();
    for t in tokens {
        match t.kind {
            TokenKind::LParen => depth += 1,
            TokenKind::RParen if depth == 0 => {
                log.push(RepairAction::DroppedCloser { offset: t.offset });
                continue;
            }
            TokenKind::RParen => depth -= 1,
            _ => {}
        }
        out.push(t);
    }
    if depth > 0 {
        let end = out.last().map_or(0, |t| t.offset + 1);
        out.extend((0..depth).map(|_| Token { kind: TokenKind::RParen, offset: end }));
        log.push(RepairAction::AppendedClosers { count: depth });
    }
    out
}

/// Step 3 over balanced tokens.
struct TreeBuilder<'a> {
    tokens: &'a [Token],
    pos: usize,
    log: &'a mut RepairLog,
}

impl TreeBuilder<'_> {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn drop_current(&mut self) {
        let t = &self.tokens[self.pos];
        self.log.push(RepairAction::DroppedToken { offset: t.offset, text: t.text() });
        self.pos += 1;
    }

    fn top_level(&mut self) -> Vec<RawNode> {
        let mut roots = Vec::new();
        while let Some(kind) = self.peek() {
            if *kind == TokenKind::LParen {
                self.pos += 1;
                if let Some(n) = self.node() {
                    roots.push(n);
                }
            } else {
                self.drop_current();
            }
        }
        roots
    }

    /// Called after `(`; consumes through the matching `)`. Returns `None`
    /// for an empty `()`.
    fn node(&mut self) -> Option<RawNode> {
        let start = self.tokens[self.pos.saturating_sub(1)].offset;
        let mut head: Vec<&Token> = Vec::new();
        while let Some(kind) = self.peek() {
            match kind {
                TokenKind::LParen | TokenKind::RParen | TokenKind::Role(_) => break,
                _ => {
                    head.push(&self.tokens[self.pos]);
                    self.pos += 1;
                }
            }
        }
        let (var, concept) = self.head(&head);
        let mut children = Vec::new();
        loop {
            match self.peek() {
                None => break,
                Some(TokenKind::RParen) => {
                    self.pos += 1;
                    break;
                }
                Some(TokenKind::LParen) => {
                    let offset = self.tokens[self.pos].offset;
                    self.pos += 1;
                    self.node();
                    self.log.push(RepairAction::DroppedOrphan { offset });
                }
                Some(TokenKind::Role(label)) => {
                    let label = label.clone();
                    self.pos += 1;
                    let value = match self.peek() {
                        Some(TokenKind::LParen) => {
                            self.pos += 1;
                            self.node().map(RawChild::Node)
                        }
                        Some(TokenKind::Symbol(s)) => {
                            let s = s.clone();
                            self.pos += 1;
                            Some(RawChild::Atom(s))
                        }
                        Some(TokenKind::Str { value, .. }) => {
                            let v = value.clone();
                            self.pos += 1;
                            Some(RawChild::Str(v))
                        }
                        Some(TokenKind::Slash) => {
                            self.drop_current();
                            None
                        }
                        _ => None,
                    };
                    match (Role::new(label.clone()), value) {
                        (Some(role), Some(v)) => children.push((role, v)),
                        (_, _) => self.log.push(RepairAction::DroppedEmptyRole { role: label }),
                    }
                }
                Some(_) => self.drop_current(),
            }
        }
        if var.is_none() && concept.is_none() && children.is_empty() {
            self.log.push(RepairAction::DroppedOrphan { offset: start });
            return None;
        }
        Some(RawNode { var, concept, children })
    }

    fn head(&mut self, head: &[&Token]) -> (Option<String>, Option<String>) {
        let text = |t: &Token| match &t.kind {
            TokenKind::Str { value, .. } => value.clone(),
            _ => t.text(),
        };
        let slash = head.iter().position(|t| t.kind == TokenKind::Slash);
        let (var, concept, used) = match (slash, head.len()) {
            (_, 0) => (None, None, 0),
            (Some(0), n) if n >= 2 => (None, Some(text(head[1])), 2),
            (Some(0), _) => (None, None, 1),
            (Some(1), 2) => (Some(text(head[0])), None, 2),
            (Some(1), _) => (Some(text(head[0])), Some(text(head[2])), 3),
            (None, 1) => (None, Some(text(head[0])), 1),
            _ => (Some(text(head[0])), Some(text(head[1])), 2),
        };
        for t in &head[used.min(head.len())..] {
            self.log.push(RepairAction::DroppedToken { offset: t.offset, text: t.text() });
        }
        (var, concept)
    }
}

/// Hands out `z`, `z2`, `z3`, ... skipping names already in use.
struct FreshNames {
    taken: HashSet<String>,
    next: usize,
}

impl FreshNames {
    fn next(&mut self) -> Variable {
        loop {
            self.next += 1;
            let name = if self.next == 1 { "z".to_string() } else { format!("z{}", self.next) };
            if self.taken.insert(name.clone()) {
                return Variable::new(name).expect("valid");
            }
        }
    }
}

fn collect_names(node: &RawNode, out: &mut HashSet<String>) {
    if let Some(v) = &node.var {
        out.insert(v.clone());
    }
    for (_, c) in &node.children {
        match c {
            RawChild::Node(n) => collect_names(n, out),
            RawChild::Atom(a) => {
                out.insert(a.clone());
            }
            RawChild::Str(_) => {}
        }
    }
}

/// Steps 3b and 4: settle every node's variable, in document order.
/// Returns the first-definition map used to resolve forward references.
fn assign_variables(
    node: &mut RawNode,
    fresh: &mut FreshNames,
    first: &mut HashMap<String, Variable>,
    log: &mut RepairLog,
) -> Vec<Variable> {
    let mut defined = Vec::new();
    fn walk(
        node: &mut RawNode,
        fresh: &mut FreshNames,
        first: &mut HashMap<String, Variable>,
        log: &mut RepairLog,
        defined: &mut Vec<Variable>,
    ) {
        let var = match node.var.take() {
            None => {
                let v = fresh.next();
                log.push(RepairAction::FreshVariable { name: v.to_string() });
                v
            }
            Some(name) => match Variable::new(name.clone()) {
                None => {
                    let v = fresh.next();
                    log.push(RepairAction::InvalidVariable { name, replacement: v.to_string() });
                    v
                }
                Some(v) if first.contains_key(&name) => {
                    let renamed = fresh.next();
                    log.push(RepairAction::RenamedDuplicate { from: v.to_string(), to: renamed.to_string() });
                    renamed
                }
                Some(v) => {
                    first.insert(name, v.clone());
                    v
                }
            },
        };
        node.var = Some(var.as_str().to_string());
        defined.push(var);
        for (_, c) in &mut node.children {
            if let RawChild::Node(n) = c {
                walk(n, fresh, first, log, defined);
            }
        }
    }
    walk(node, fresh, first, log, &mut defined);
    defined
}

struct GraphBuilder<'a> {
    graph: Option<AmrGraph>,
    /// Name as written to the variable it currently denotes.
    current: HashMap<String, Variable>,
    /// Original names, in document order, of renamed duplicate definitions.
    renames: HashMap<Variable, String>,
    defined: &'a HashSet<Variable>,
    /// Indices of relations that introduce a node rather than reuse one.
    tree_edges: HashSet<usize>,
    log: &'a mut RepairLog,
}

impl GraphBuilder<'_> {
    fn add(&mut self, node: &RawNode) -> Variable {
        let var = Variable::new(node.var.clone().expect("assigned")).expect("valid");
        if let Some(original) = self.renames.get(&var) {
            self.current.insert(original.clone(), var.clone());
        }
        let concept = node.concept.as_deref().map(|c| c.split_whitespace().collect::<Vec<_>>().join("-"));
        let concept = match concept.and_then(Concept::new) {
            Some(c) => c,
            None => {
                self.log.push(RepairAction::MissingConcept { variable: var.to_string() });
                Concept::new(UNKNOWN_CONCEPT).expect("valid")
            }
        };
        let g = self.graph.get_or_insert_with(|| AmrGraph::new(var.clone(), concept.clone()));
        g.add_instance(var.clone(), concept);
        for (role, child) in &node.children {
            let target = match child {
                RawChild::Node(n) => {
                    let target = Variable::new(n.var.clone().expect("assigned")).expect("valid");
                    self.add(n);
                    self.push(&var, role, Target::Node(target), true);
                    continue;
                }
                RawChild::Str(s) => Target::Const(Constant::Str(s.clone())),
                RawChild::Atom(a) => match self.current.get(a) {
                    Some(v) if self.defined.contains(v) => Target::Node(v.clone()),
                    _ if looks_like_variable(a) => {
                        self.log.push(RepairAction::UndefinedToString { name: a.clone() });
                        Target::Const(Constant::Str(a.clone()))
                    }
                    _ => Target::Const(Constant::from_bare(a)),
                },
            };
            self.push(&var, role, target, false);
        }
        var
    }

    fn push(&mut self, source: &Variable, role: &Role, target: Target, tree: bool) {
        let g = self.graph.as_mut().expect("root created first");
        if tree {
            self.tree_edges.insert(g.relations.len());
        }
        g.relations.push(Relation { source: source.clone(), role: role.clone(), target });
    }
}

/// Step 8: remove reentrant edges until no directed cycle remains. Edges
/// that build the tree never close a cycle on their own.
fn break_cycles(g: &mut AmrGraph, mut tree_edges: Vec<bool>, log: &mut RepairLog) {
    loop {
        let cyclic: HashSet<(Variable, Role, Variable)> = g
            .cyclic_edges()
            .into_iter()
            .map(|e| (e.source.clone(), e.role.clone(), e.target.clone()))
            .collect();
        let victim = g.relations.iter().enumerate().rev().find(|(i, r)| {
            !tree_edges[*i]
                && matches!(&r.target, Target::Node(t) if cyclic.contains(&(r.source.clone(), r.role.clone(), t.clone())))
        });
        let Some((i, _)) = victim else { return };
        let r = g.relations.remove(i);
        tree_edges.remove(i);
        if let Target::Node(t) = &r.target {
            log.push(RepairAction::DroppedCycleEdge {
                source: r.source.to_string(),
                role: r.role.to_string(),
                target: t.to_string(),
            });
        }
    }
}

/// Recovers a graph from arbitrary text. Well-formed input comes back
/// unchanged with an empty log.
pub fn repair(text: &str) -> Result<Repaired, RepairError> {
    let mut log = RepairLog::default();
    let tokens = balance(tokenize(text), &mut log);
    let mut roots = TreeBuilder { tokens: &tokens, pos: 0, log: &mut log }.top_level();
    if roots.is_empty() {
        return Err(RepairError::Unrepairable { log });
    }

    let mut taken = HashSet::new();
    for r in &roots {
        collect_names(r, &mut taken);
    }
    let mut fresh = FreshNames { taken, next: 0 };
    let mut first = HashMap::new();
    let mut defined = HashSet::new();
    let mut renames = HashMap::new();
    for r in &mut roots {
        let before = log.actions.len();
        defined.extend(assign_variables(r, &mut fresh, &mut first, &mut log));
        for a in &log.actions[before..] {
            if let RepairAction::RenamedDuplicate { from, to } = a {
                renames.insert(Variable::new(to.clone()).expect("fresh"), from.clone());
            }
        }
    }

    let mut builder = GraphBuilder {
        graph: None,
        current: first,
        renames,
        defined: &defined,
        tree_edges: HashSet::new(),
        log: &mut log,
    };
    if roots.len() > 1 {
        let m = ["m".to_string()]
            .into_iter()
            .chain((2..).map(|n| format!("m{n}")))
            .find(|n| !fresh.taken.contains(n))
            .expect("unbounded");
        let m = Variable::new(m).expect("valid");
        builder.graph = Some(AmrGraph::new(m.clone(), Concept::new(MULTI_SENTENCE).expect("valid")));
        for (i, r) in roots.iter().enumerate() {
            let top = Variable::new(r.var.clone().expect("assigned")).expect("valid");
            let role = Role::new(format!(":snt{}", i + 1)).expect("valid");
            builder.add(r);
            builder.push(&m, &role, Target::Node(top), true);
        }
        builder.log.push(RepairAction::WrappedTopLevel { count: roots.len() });
    } else {
        builder.add(&roots[0]);
    }
    let mut graph = builder.graph.take().expect("at least one root");
    let mut tree_edges = vec![false; graph.relations.len()];
    for &i in &builder.tree_edges {
        tree_edges[i] = true;
    }
    break_cycles(&mut graph, tree_edges, &mut log);
    Ok(Repaired { graph, log })
}

/// Repairs each line independently, preserving order.
pub fn repair_batch<S: AsRef<str> + Sync>(lines: &[S]) -> Vec<Result<Repaired, RepairError>> {
    lines.par_iter().map(|l| repair(l.as_ref())).collect()
}
