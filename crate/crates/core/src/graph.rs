//! In-memory model of a rooted AMR graph.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use indexmap::IndexMap;

/// Roles ending in `-of` that are not inverses of another role.
pub const NON_INVERTIBLE_ROLES: &[&str] = &[":consist-of", ":prep-out-of", ":prep-on-behalf-of"];

/// A node identifier such as `b`, `m2` or `s_0082B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Option<Self> {
        let name = name.into();
        is_variable_token(&name).then_some(Variable(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// True when `token` can name a variable: a letter followed by letters,
/// digits or underscores.
pub fn is_variable_token(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

/// True for tokens shaped like the short generated variable names annotators
/// and parsers emit (`b`, `b2`, `p1`, `I`). A bare token of this shape that is
/// never defined is treated as a broken reentrancy rather than a constant.
pub fn looks_like_variable(token: &str) -> bool {
    let mut chars = token.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Concept(String);

impl Concept {
    pub fn new(label: impl Into<String>) -> Option<Self> {
        let label = label.into();
        let ok = !label.is_empty()
            && !label.chars().any(|c| c.is_whitespace() || c == '(' || c == ')' || c == '"')
            && !label.starts_with(':')
            && label != "/";
        ok.then_some(Concept(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Lowercased form used for case-insensitive comparison.
    pub fn folded(&self) -> String {
        self.0.to_lowercase()
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An edge label such as `:ARG0` or `:ARG1-of`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Role(String);

impl Role {
    pub fn new(label: impl Into<String>) -> Option<Self> {
        let label = label.into();
        is_role_token(&label).then_some(Role(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_inverse(&self) -> bool {
        self.0.ends_with("-of") && !NON_INVERTIBLE_ROLES.contains(&self.0.as_str())
    }

    /// The role read in the opposite direction: `:ARG0` becomes `:ARG0-of`
    /// and `:ARG0-of` becomes `:ARG0`.
    pub fn inverted(&self) -> Role {
        if self.is_inverse() {
            Role(self.0[..self.0.len() - 3].to_string())
        } else {
            Role(format!("{}-of", self.0))
        }
    }

    /// The non-inverse base role; identity for roles that are not inverse.
    pub fn normalized(&self) -> Role {
        if self.is_inverse() {
            self.inverted()
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn is_role_token(token: &str) -> bool {
    let Some(rest) = token.strip_prefix(':') else {
        return false;
    };
    let mut chars = rest.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric() || c == '-'),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    /// Quoted string; holds the unquoted content.
    Str(String),
    Number(String),
    /// Unquoted non-numeric token such as `-`, `+` or `imperative`.
    Symbol(String),
}

impl Constant {
    /// Classifies an unquoted token.
    pub fn from_bare(token: &str) -> Constant {
        if is_number(token) {
            Constant::Number(token.to_string())
        } else {
            Constant::Symbol(token.to_string())
        }
    }

    pub fn text(&self) -> &str {
        match self {
            Constant::Str(s) | Constant::Number(s) | Constant::Symbol(s) => s,
        }
    }

    pub fn is_string(&self) -> bool {
        matches!(self, Constant::Str(_))
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            Constant::Number(s) | Constant::Symbol(s) => f.write_str(s),
        }
    }
}

fn is_number(token: &str) -> bool {
    let digits = token.strip_prefix(['-', '+']).unwrap_or(token);
    !digits.is_empty()
        && digits.chars().any(|c| c.is_ascii_digit())
        && digits.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '/')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Node(Variable),
    Const(Constant),
}

/// One outgoing role of a node, either to another node (an edge) or to a
/// constant (an attribute). Edges and attributes share one list so the
/// source order of a node's children survives a round trip.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub source: Variable,
    pub role: Role,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge<'a> {
    pub source: &'a Variable,
    pub role: &'a Role,
    pub target: &'a Variable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute<'a> {
    pub source: &'a Variable,
    pub role: &'a Role,
    pub value: &'a Constant,
}

/// Equality ignores storage order: two graphs are equal when they have the
/// same root, the same instances and the same multiset of relations.
#[derive(Debug, Clone)]
pub struct AmrGraph {
    pub root: Variable,
    pub instances: IndexMap<Variable, Concept>,
    pub relations: Vec<Relation>,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.root != other.root || self.instances != other.instances || self.relations.len() != other.relations.len() {
            return false;
        }
        let mut a: Vec<&Relation> = self.relations.iter().collect();
        let mut b: Vec<&Relation> = other.relations.iter().collect();
        a.sort();
        b.sort();
        a == b
    }
}

impl Eq for AmrGraph {}

impl AmrGraph {
    pub fn new(root: Variable, concept: Concept) -> Self {
        let mut instances = IndexMap::new();
        instances.insert(root.clone(), concept);
        AmrGraph { root, instances, relations: Vec::new() }
    }

    pub fn concept(&self, var: &Variable) -> Option<&Concept> {
        self.instances.get(var)
    }

    pub fn root_concept(&self) -> Option<&Concept> {
        self.instances.get(&self.root)
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge<'_>> {
        self.relations.iter().filter_map(|r| match &r.target {
            Target::Node(t) => Some(Edge { source: &r.source, role: &r.role, target: t }),
            Target::Const(_) => None,
        })
    }

    pub fn attributes(&self) -> impl Iterator<Item = Attribute<'_>> {
        self.relations.iter().filter_map(|r| match &r.target {
            Target::Const(c) => Some(Attribute { source: &r.source, role: &r.role, value: c }),
            Target::Node(_) => None,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes().count()
    }

    pub fn add_instance(&mut self, var: Variable, concept: Concept) -> Option<Concept> {
        self.instances.insert(var, concept)
    }

    pub fn add_edge(&mut self, source: Variable, role: Role, target: Variable) {
        self.relations.push(Relation { source, role, target: Target::Node(target) });
    }

    pub fn add_attribute(&mut self, source: Variable, role: Role, value: Constant) {
        self.relations.push(Relation { source, role, target: Target::Const(value) });
    }

    /// Variables referenced by a relation or the root without an instance.
    pub fn undefined_variables(&self) -> BTreeSet<&Variable> {
        let mut out = BTreeSet::new();
        if !self.instances.contains_key(&self.root) {
            out.insert(&self.root);
        }
        for r in &self.relations {
            if !self.instances.contains_key(&r.source) {
                out.insert(&r.source);
            }
            if let Target::Node(t) = &r.target {
                if !self.instances.contains_key(t) {
                    out.insert(t);
                }
            }
        }
        out
    }

    /// Instances not reachable from the root when edges are followed in
    /// either direction, in instance order.
    pub fn unreachable(&self) -> Vec<&Variable> {
        let mut adjacency: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
        for e in self.edges() {
            adjacency.entry(e.source).or_default().push(e.target);
            adjacency.entry(e.target).or_default().push(e.source);
        }
        let mut seen: BTreeSet<&Variable> = BTreeSet::new();
        let mut queue = VecDeque::new();
        if self.instances.contains_key(&self.root) {
            seen.insert(&self.root);
            queue.push_back(&self.root);
        }
        while let Some(v) = queue.pop_front() {
            for n in adjacency.get(v).into_iter().flatten() {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        self.instances.keys().filter(|v| !seen.contains(v)).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.unreachable().is_empty()
    }

    /// Edges lying on a directed cycle once inverse roles are normalized,
    /// as (source, role, target) with the role as stored.
    pub fn cyclic_edges(&self) -> Vec<Edge<'_>> {
        let index: HashMap<&Variable, usize> =
            self.instances.keys().enumerate().map(|(i, v)| (v, i)).collect();
        let n = self.instances.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut normalized = Vec::new();
        for e in self.edges() {
            let (Some(&s), Some(&t)) = (index.get(e.source), index.get(e.target)) else {
                continue;
            };
            let (from, to) = if e.role.is_inverse() { (t, s) } else { (s, t) };
            succ[from].push(to);
            normalized.push((from, to, e));
        }
        let scc = strongly_connected(&succ);
        normalized
            .into_iter()
            .filter(|(from, to, _)| scc[*from] == scc[*to])
            .map(|(_, _, e)| e)
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.cyclic_edges().is_empty()
    }
}

/// Tarjan's algorithm; returns a component id per node.
fn strongly_connected(succ: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        succ: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for i in 0..s.succ[v].len() {
            let w = s.succ[v][i];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(wi) if s.on_stack[w] => s.low[v] = s.low[v].min(wi),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }

    let n = succ.len();
    let mut s = State {
        succ,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![usize::MAX; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}
