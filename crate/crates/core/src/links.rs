//! Cross-utterance reference nodes (`s0080B_s_stone`): detection,
//! resolution against a corpus, and merging a dialogue into one graph.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::corpus::{CorpusEntry, UtteranceId};
use crate::graph::{AmrGraph, Concept, Relation, Role, Target, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReferenceShape<'a> {
    NotReference,
    /// Starts like `s<digits>` and contains `_`, but is not
    /// `s<digits><letter>_<var>_<concept>`.
    Malformed,
    Reference { utterance: UtteranceId, variable: &'a str, concept: &'a str },
}

pub fn classify_reference(token: &str) -> ReferenceShape<'_> {
    let Some(rest) = token.strip_prefix(['s', 'S']) else {
        return ReferenceShape::NotReference;
    };
    let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 || !rest.contains('_') {
        return ReferenceShape::NotReference;
    }
    let after_digits = &rest[digits..];
    let mut chars = after_digits.chars();
    let (Some(letter), Some('_')) = (chars.next(), chars.next()) else {
        return ReferenceShape::Malformed;
    };
    if !letter.is_ascii_alphabetic() {
        return ReferenceShape::Malformed;
    }
    let tail = &after_digits[2..];
    let Some((variable, concept)) = tail.split_once('_') else {
        return ReferenceShape::Malformed;
    };
    let var_ok = variable.chars().next().is_some_and(|c| c.is_alphabetic())
        && variable.chars().all(|c| c.is_alphanumeric());
    if !var_ok || Concept::new(concept).is_none() {
        return ReferenceShape::Malformed;
    }
    match UtteranceId::new(&rest[..digits], letter) {
        Ok(utterance) => ReferenceShape::Reference { utterance, variable, concept },
        Err(_) => ReferenceShape::Malformed,
    }
}

/// An instance pointing at a node of another utterance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReferenceNode {
    pub source_utterance: UtteranceId,
    pub antecedent_variable: Variable,
    pub antecedent_concept: Concept,
    /// The variable carrying the reference in the referring graph.
    pub host_variable: Variable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedReference {
    pub host_variable: Variable,
    pub concept: Concept,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectedReferences {
    pub references: Vec<ReferenceNode>,
    pub malformed: Vec<MalformedReference>,
}

pub fn detect_references(graph: &AmrGraph) -> DetectedReferences {
    let mut out = DetectedReferences::default();
    for (var, concept) in &graph.instances {
        match classify_reference(concept.as_str()) {
            ReferenceShape::NotReference => {}
            ReferenceShape::Malformed => {
                out.malformed.push(MalformedReference { host_variable: var.clone(), concept: concept.clone() })
            }
            ReferenceShape::Reference { utterance, variable, concept: embedded } => {
                out.references.push(ReferenceNode {
                    source_utterance: utterance,
                    antecedent_variable: Variable::new(variable).expect("checked by classify_reference"),
                    antecedent_concept: Concept::new(embedded).expect("checked by classify_reference"),
                    host_variable: var.clone(),
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DanglingReason {
    MissingUtterance,
    MissingVariable,
    ConceptMismatch,
}

impl fmt::Display for DanglingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DanglingReason::MissingUtterance => "missing-utterance",
            DanglingReason::MissingVariable => "missing-variable",
            DanglingReason::ConceptMismatch => "concept-mismatch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedLink {
    pub referring: UtteranceId,
    pub reference: ReferenceNode,
    /// Position of the antecedent entry in the resolved corpus.
    pub antecedent_entry: usize,
    /// The antecedent utterance comes after the referring one.
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingLink {
    pub referring: UtteranceId,
    pub reference: ReferenceNode,
    pub reason: DanglingReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkTable {
    pub resolved: Vec<ResolvedLink>,
    pub dangling: Vec<DanglingLink>,
}

impl LinkTable {
    pub fn forward_references(&self) -> impl Iterator<Item = &ResolvedLink> {
        self.resolved.iter().filter(|l| l.forward)
    }

    /// Tab-separated rows: referring-id, host-var, cited-id, cited-var,
    /// concept, status, reason.
    pub fn to_records(&self) -> String {
        let mut rows: Vec<(&UtteranceId, &ReferenceNode, &str, String)> = Vec::new();
        for l in &self.resolved {
            let reason = if l.forward { "forward".to_string() } else { "-".to_string() };
            rows.push((&l.referring, &l.reference, "resolved", reason));
        }
        for d in &self.dangling {
            rows.push((&d.referring, &d.reference, "dangling", d.reason.to_string()));
        }
        let mut out = String::new();
        for (referring, r, status, reason) in rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                referring,
                r.host_variable,
                r.source_utterance,
                r.antecedent_variable,
                r.antecedent_concept,
                status,
                reason
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("utterance id {0} appears more than once")]
    DuplicateUtteranceId(UtteranceId),
    #[error("reference {host} in {referring} to {cited} is not resolved within the merged span")]
    UnresolvedReference { referring: UtteranceId, host: Variable, cited: UtteranceId },
    #[error("no entry in the span has a graph")]
    EmptySpan,
    #[error("reference chain starting at {host} in {referring} never reaches a concrete instance")]
    CyclicReference { referring: UtteranceId, host: Variable },
}

pub fn resolve(entries: &[CorpusEntry]) -> Result<LinkTable, LinkError> {
    let mut position = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        if position.insert(e.id.clone(), i).is_some() {
            return Err(LinkError::DuplicateUtteranceId(e.id.clone()));
        }
    }
    let mut table = LinkTable::default();
    for (i, entry) in entries.iter().enumerate() {
        let Some(graph) = &entry.graph else { continue };
        for reference in detect_references(graph).references {
            let referring = entry.id.clone();
            let outcome = match position.get(&reference.source_utterance) {
                None => Err(DanglingReason::MissingUtterance),
                Some(&j) => match entries[j].graph.as_ref().and_then(|g| g.concept(&reference.antecedent_variable)) {
                    None => Err(DanglingReason::MissingVariable),
                    Some(c) if c.folded() != reference.antecedent_concept.folded() => {
                        Err(DanglingReason::ConceptMismatch)
                    }
                    Some(_) => Ok(j),
                },
            };
            match outcome {
                Ok(j) => table.resolved.push(ResolvedLink { referring, reference, antecedent_entry: j, forward: j > i }),
                Err(reason) => table.dangling.push(DanglingLink { referring, reference, reason }),
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeOptions {
    /// Wrap a one-entry span under `multi-sentence` too.
    pub wrap_single: bool,
}

impl Default for MergeOptions {
    fn default() -> Self {
        MergeOptions { wrap_single: true }
    }
}

/// Union-find over (entry, variable) nodes.
struct Classes {
    parent: Vec<usize>,
}

impl Classes {
    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Merges the entries with graphs into one `multi-sentence` graph with
/// `:snt1..:sntN` edges in entry order. Every reference host is unified
/// with its antecedent; later variables that clash with an earlier name get
/// the utterance id as suffix (`s` becomes `s_0082B`).
pub fn merge_dialogue(entries: &[CorpusEntry], table: &LinkTable, options: MergeOptions) -> Result<AmrGraph, LinkError> {
    let graphs: Vec<(usize, &CorpusEntry, &AmrGraph)> =
        entries.iter().enumerate().filter_map(|(i, e)| e.graph.as_ref().map(|g| (i, e, g))).collect();
    if graphs.is_empty() {
        return Err(LinkError::EmptySpan);
    }

    let mut node_of: HashMap<(usize, &Variable), usize> = HashMap::new();
    let mut nodes: Vec<(usize, &Variable)> = Vec::new();
    for &(i, _, g) in &graphs {
        for v in g.instances.keys() {
            node_of.insert((i, v), nodes.len());
            nodes.push((i, v));
        }
    }
    let mut classes = Classes { parent: (0..nodes.len()).collect() };

    let resolved: HashSet<(&UtteranceId, &Variable)> =
        table.resolved.iter().map(|l| (&l.referring, &l.reference.host_variable)).collect();
    let span_position: HashMap<&UtteranceId, usize> = entries.iter().enumerate().map(|(i, e)| (&e.id, i)).collect();
    let mut hosts: HashSet<usize> = HashSet::new();
    for &(i, entry, g) in &graphs {
        for reference in detect_references(g).references {
            let unresolved = || LinkError::UnresolvedReference {
                referring: entry.id.clone(),
                host: reference.host_variable.clone(),
                cited: reference.source_utterance.clone(),
            };
            if !resolved.contains(&(&entry.id, &reference.host_variable)) {
                return Err(unresolved());
            }
            let cited = *span_position.get(&reference.source_utterance).ok_or_else(unresolved)?;
            let antecedent = node_of
                .get(&(cited, &reference.antecedent_variable))
                .copied()
                .ok_or_else(unresolved)?;
            let host = node_of[&(i, &reference.host_variable)];
            hosts.insert(host);
            classes.union(host, antecedent);
        }
    }

    // The concrete (non-host) member names each class.
    let mut concrete: HashMap<usize, usize> = HashMap::new();
    for n in 0..nodes.len() {
        if !hosts.contains(&n) {
            let root = classes.find(n);
            concrete.insert(root, n);
        }
    }

    let mut used: HashSet<String> = HashSet::new();
    let mut name_of: HashMap<usize, Variable> = HashMap::new();
    let mut merged_instances: Vec<(Variable, Concept)> = Vec::new();
    for (n, &(i, v)) in nodes.iter().enumerate() {
        if hosts.contains(&n) {
            continue;
        }
        let mut name = v.to_string();
        if used.contains(&name) {
            let base = format!("{}_{}", v, entries[i].id);
            name = base.clone();
            let mut k = 2;
            while used.contains(&name) {
                name = format!("{base}_{k}");
                k += 1;
            }
        }
        used.insert(name.clone());
        let var = Variable::new(name).expect("suffixing keeps variable syntax");
        let concept = graphs.iter().find(|(gi, _, _)| *gi == i).unwrap().2.instances[v].clone();
        merged_instances.push((var.clone(), concept));
        name_of.insert(n, var);
    }
    let mut rename = |n: usize| -> Result<Variable, LinkError> {
        let root = classes.find(n);
        match concrete.get(&root) {
            Some(c) => Ok(name_of[c].clone()),
            None => {
                let (i, v) = nodes[n];
                Err(LinkError::CyclicReference { referring: entries[i].id.clone(), host: v.clone() })
            }
        }
    };

    let mut relations: Vec<Relation> = Vec::new();
    let mut roots = Vec::new();
    for &(i, _, g) in &graphs {
        roots.push(rename(node_of[&(i, &g.root)])?);
        for r in &g.relations {
            let source = rename(node_of[&(i, &r.source)])?;
            let target = match &r.target {
                Target::Node(t) => Target::Node(rename(node_of[&(i, t)])?),
                Target::Const(c) => Target::Const(c.clone()),
            };
            relations.push(Relation { source, role: r.role.clone(), target });
        }
    }

    let wrap = graphs.len() > 1 || options.wrap_single;
    let merged = if wrap {
        let mut k = 1;
        let mut name = "m".to_string();
        while used.contains(&name) {
            k += 1;
            name = format!("m{k}");
        }
        let top = Variable::new(name).unwrap();
        let mut instances = vec![(top.clone(), Concept::new("multi-sentence").unwrap())];
        instances.extend(merged_instances);
        let mut all = Vec::with_capacity(relations.len() + roots.len());
        for (k, root) in roots.into_iter().enumerate() {
            all.push(Relation {
                source: top.clone(),
                role: Role::new(format!(":snt{}", k + 1)).unwrap(),
                target: Target::Node(root),
            });
        }
        all.extend(relations);
        AmrGraph { root: top, instances: instances.into_iter().collect(), relations: all }
    } else {
        AmrGraph { root: roots.remove(0), instances: merged_instances.into_iter().collect(), relations }
    };
    Ok(merged)
}
