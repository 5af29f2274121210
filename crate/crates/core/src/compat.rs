//! Removal of the dialogue extensions, leaving standard AMR.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::corpus::{CorpusEntry, UtteranceId};
use crate::graph::{AmrGraph, Concept, Relation, Role, Target, Variable};
use crate::links::detect_references;
use crate::schema::{count_extensions, ExtensionCounts, BACK_CHANNEL, BE_BACK_CHANNEL, BE_DISCOURSE_MARKER, DISCOURSE_MARKER, REPARANDUM};

pub const MULTI_SENTENCE: &str = "multi-sentence";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StripOutcome {
    Graph(AmrGraph),
    /// Nothing but extension material was present.
    Empty,
}

impl StripOutcome {
    pub fn graph(&self) -> Option<&AmrGraph> {
        match self {
            StripOutcome::Graph(g) => Some(g),
            StripOutcome::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, StripOutcome::Empty)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StripReport {
    pub extensions: ExtensionCounts,
    pub references_rewritten: usize,
    /// Instances deleted, including reifications and cut-off subtrees.
    pub nodes_removed: usize,
}

impl std::ops::Add for StripReport {
    type Output = StripReport;

    fn add(self, o: StripReport) -> StripReport {
        StripReport {
            extensions: self.extensions + o.extensions,
            references_rewritten: self.references_rewritten + o.references_rewritten,
            nodes_removed: self.nodes_removed + o.nodes_removed,
        }
    }
}

impl fmt::Display for StripReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "discourse-markers={} back-channels={} reparanda={} references-rewritten={} nodes-removed={}",
            self.extensions.discourse_markers,
            self.extensions.backchannels,
            self.extensions.reparanda,
            self.references_rewritten,
            self.nodes_removed
        )
    }
}

fn is_extension_role(role: &Role) -> bool {
    matches!(role.as_str(), DISCOURSE_MARKER | BACK_CHANNEL | REPARANDUM)
}

fn is_reification(concept: &Concept) -> bool {
    matches!(concept.as_str(), BE_DISCOURSE_MARKER | BE_BACK_CHANNEL)
}

/// Returns a variable not yet used in `graph`, preferring `base`.
pub(crate) fn fresh_variable(graph: &AmrGraph, base: &str) -> Variable {
    let taken = |name: &str| {
        let v = Variable::new(name).expect("generated names are valid");
        graph.instances.contains_key(&v) || graph.relations.iter().any(|r| r.target == Target::Node(v.clone()))
    };
    if !taken(base) {
        return Variable::new(base).expect("valid base");
    }
    (2..)
        .map(|n| format!("{base}{n}"))
        .find(|name| !taken(name))
        .and_then(Variable::new)
        .expect("unbounded search")
}

/// Undirected component label for every instance.
fn components(graph: &AmrGraph) -> HashMap<Variable, usize> {
    let mut adjacency: HashMap<&Variable, Vec<&Variable>> = HashMap::new();
    for e in graph.edges() {
        adjacency.entry(e.source).or_default().push(e.target);
        adjacency.entry(e.target).or_default().push(e.source);
    }
    let mut label = HashMap::new();
    for (n, start) in graph.instances.keys().enumerate() {
        if label.contains_key(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        label.insert(start.clone(), n);
        while let Some(v) = queue.pop_front() {
            for &w in adjacency.get(v).into_iter().flatten() {
                if graph.instances.contains_key(w) && !label.contains_key(w) {
                    label.insert(w.clone(), n);
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

/// Strips every dialogue extension from `graph`.
///
/// Reference nodes keep their variable and take the embedded concept.
/// Extension relations are deleted, as are reification instances with all
/// their relations. Whatever is no longer connected to the root afterwards
/// (a `:reparandum` subtree, say) is deleted too. When the root itself was
/// a reification, its single remaining neighbour becomes the root; several
/// disconnected neighbours are gathered under a `multi-sentence` root.
pub fn strip_extensions(graph: &AmrGraph) -> (StripOutcome, StripReport) {
    let mut report = StripReport { extensions: count_extensions(graph), ..StripReport::default() };
    let mut g = graph.clone();

    for reference in detect_references(graph).references {
        g.instances.insert(reference.host_variable, reference.antecedent_concept);
        report.references_rewritten += 1;
    }

    let reified: HashSet<Variable> =
        g.instances.iter().filter(|(_, c)| is_reification(c)).map(|(v, _)| v.clone()).collect();
    let root_removed = reified.contains(&g.root);
    let mut neighbours: Vec<Variable> = Vec::new();
    if root_removed {
        for e in g.edges() {
            let other = if *e.source == g.root {
                e.target
            } else if *e.target == g.root {
                e.source
            } else {
                continue;
            };
            if !reified.contains(other) && !is_extension_role(e.role) && !neighbours.contains(other) {
                neighbours.push(other.clone());
            }
        }
    }

    g.relations.retain(|r| {
        !is_extension_role(&r.role)
            && !reified.contains(&r.source)
            && !matches!(&r.target, Target::Node(t) if reified.contains(t))
    });
    g.instances.retain(|v, _| !reified.contains(v));
    let mut wrapped = false;

    if root_removed {
        let label = components(&g);
        let mut heads: Vec<Variable> = Vec::new();
        let mut seen = HashSet::new();
        for v in neighbours {
            if let Some(&c) = label.get(&v) {
                if seen.insert(c) {
                    heads.push(v);
                }
            }
        }
        match heads.len() {
            0 => {
                report.nodes_removed = graph.instances.len();
                return (StripOutcome::Empty, report);
            }
            1 => g.root = heads.pop().expect("one head"),
            _ => {
                let m = fresh_variable(&g, "m");
                g.add_instance(m.clone(), Concept::new(MULTI_SENTENCE).expect("valid concept"));
                let wrappers: Vec<Relation> = heads
                    .into_iter()
                    .enumerate()
                    .map(|(i, head)| Relation {
                        source: m.clone(),
                        role: Role::new(format!(":snt{}", i + 1)).expect("valid role"),
                        target: Target::Node(head),
                    })
                    .collect();
                g.relations.splice(0..0, wrappers);
                g.root = m;
                wrapped = true;
            }
        }
    }

    let label = components(&g);
    let root_component = label.get(&g.root).copied();
    let kept: HashSet<Variable> =
        g.instances.keys().filter(|v| label.get(*v).copied() == root_component).cloned().collect();
    g.instances.retain(|v, _| kept.contains(v));
    g.relations.retain(|r| kept.contains(&r.source) && !matches!(&r.target, Target::Node(t) if !kept.contains(t)));

    report.nodes_removed = graph.instances.len() + usize::from(wrapped) - g.instances.len();
    (StripOutcome::Graph(g), report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStripReport {
    pub entries: Vec<(UtteranceId, StripReport)>,
    pub dropped: Vec<UtteranceId>,
    pub totals: StripReport,
}

impl CorpusStripReport {
    /// One `entry` line per stripped entry with removals, one `dropped`
    /// line per dropped entry, then a `total` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, r) in &self.entries {
            if *r != StripReport::default() {
                let _ = writeln!(out, "entry\t{id}\t{r}");
            }
        }
        for id in &self.dropped {
            let _ = writeln!(out, "dropped\t{id}");
        }
        let _ = writeln!(out, "total\t{}\tdropped={}", self.totals, self.dropped.len());
        out
    }
}

/// Strips every entry. Entries without a graph pass through untouched;
/// entries reduced to nothing are dropped and listed in the report.
pub fn strip_corpus(entries: &[CorpusEntry]) -> (Vec<CorpusEntry>, CorpusStripReport) {
    let results: Vec<Option<(StripOutcome, StripReport)>> =
        entries.par_iter().map(|e| e.graph.as_ref().map(strip_extensions)).collect();
    let mut kept = Vec::with_capacity(entries.len());
    let mut report = CorpusStripReport::default();
    for (entry, result) in entries.iter().zip(results) {
        let Some((outcome, r)) = result else {
            kept.push(entry.clone());
            continue;
        };
        report.totals = report.totals + r;
        report.entries.push((entry.id.clone(), r));
        match outcome {
            StripOutcome::Graph(g) => {
                let mut e = entry.clone();
                e.graph = Some(g);
                kept.push(e);
            }
            StripOutcome::Empty => report.dropped.push(entry.id.clone()),
        }
    }
    (kept, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::parse;

    fn stripped(text: &str) -> (StripOutcome, StripReport) {
        strip_extensions(&parse(text).unwrap())
    }

    #[test]
    fn discourse_marker_attribute_goes() {
        let (out, r) = stripped("(p / put-01 :ARG0 (y / you) :polarity - :discourse-marker \"donc\")");
        assert_eq!(out.graph(), Some(&parse("(p / put-01 :ARG0 (y / you) :polarity -)").unwrap()));
        assert_eq!(r.extensions.discourse_markers, 1);
        assert_eq!(r.nodes_removed, 0);
    }

    #[test]
    fn lone_backchannel_is_empty() {
        let (out, r) = stripped("(b / be-back-channel-91 :ARG2 \"hum\")");
        assert!(out.is_empty());
        assert_eq!(r.extensions.backchannels, 1);
        assert_eq!(r.nodes_removed, 1);
    }

    #[test]
    fn reference_concept_rewritten() {
        let (out, r) = stripped("(e / exchange-01 :ARG0 (I / I) :ARG3 (s1 / s0080B_s_stone))");
        assert_eq!(out.graph(), Some(&parse("(e / exchange-01 :ARG0 (I / I) :ARG3 (s1 / stone))").unwrap()));
        assert_eq!(r.references_rewritten, 1);
    }

    #[test]
    fn reparandum_subtree_removed_unless_shared() {
        let (out, r) = stripped("(c / common :reparandum (p / possible-01 :ARG1 (x / thing)) :mod (m / most))");
        assert_eq!(out.graph(), Some(&parse("(c / common :mod (m / most))").unwrap()));
        assert_eq!(r.nodes_removed, 2);
        let (out, _) = stripped("(c / common :reparandum (p / possible-01) :mod (m / most :ARG1 p))");
        assert_eq!(out.graph(), Some(&parse("(c / common :mod (m / most :ARG1 (p / possible-01)))").unwrap()));
    }

    #[test]
    fn reified_root_reroots() {
        let (out, _) = stripped("(b / be-discourse-marker-91 :ARG1 \"bon\" :ARG2 (g / go-02 :ARG0 (w / we)))");
        assert_eq!(out.graph(), Some(&parse("(g / go-02 :ARG0 (w / we))").unwrap()));
        let (out, _) = stripped("(b / be-discourse-marker-91 :ARG1 (x / yes) :ARG2 (g / go-02))");
        assert_eq!(out.graph(), Some(&parse("(m / multi-sentence :snt1 (x / yes) :snt2 (g / go-02))").unwrap()));
    }

    #[test]
    fn nested_reification_is_removed() {
        let (out, r) = stripped("(g / go-02 :ARG0 (w / we) :ARG1-of (b / be-back-channel-91 :ARG2 \"mh\"))");
        assert_eq!(out.graph(), Some(&parse("(g / go-02 :ARG0 (w / we))").unwrap()));
        assert_eq!(r.nodes_removed, 1);
    }

    #[test]
    fn idempotent_on_examples() {
        for text in [
            "(p / put-01 :discourse-marker \"donc\" :ARG1 (r / road))",
            "(c / common :reparandum (p / possible-01) :mod (m / most))",
            "(b / be-discourse-marker-91 :ARG1 (x / yes) :ARG2 (g / go-02))",
        ] {
            let once = stripped(text).0;
            let twice = strip_extensions(once.graph().unwrap()).0;
            assert_eq!(once, twice);
        }
    }
}
