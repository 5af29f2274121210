#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use dialamr::corpus::{load_path, CorpusEntry};
use dialamr::{AmrGraph, Concept, Constant, Relation, Role, Target, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every figure fixture, by file stem.
pub const FIGURES: &[&str] = &[
    "break_window",
    "discourse_marker",
    "backchannel_context",
    "backchannel",
    "coref_antecedent",
    "coref_reference",
    "ellipsis_antecedent",
    "ellipsis_reference",
    "cleft_focus",
    "reparandum",
    "before_preprocessing",
    "after_preprocessing",
    "gold_reference",
    "predicted_output",
];

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

pub fn figure_text(name: &str) -> String {
    std::fs::read_to_string(data_path(&format!("figures/{name}.amr"))).unwrap()
}

pub fn figure(name: &str) -> AmrGraph {
    dialamr::parse(&figure_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn mini_corpus() -> Vec<CorpusEntry> {
    let loaded = load_path(&data_path("mini_corpus.amr")).unwrap();
    assert!(loaded.problems.is_empty(), "{:?}", loaded.problems);
    loaded.entries
}

const CONCEPTS: &[&str] = &["want-01", "boy", "girl", "go-02", "thing", "and", "possible-01", "city", "put-01", "road"];
const ROLES: &[&str] = &[":ARG0", ":ARG1", ":ARG2", ":mod", ":op1", ":op2", ":time", ":location"];
const LETTERS: &[&str] = &["a", "b", "c", "g", "k", "p", "q", "t", "w", "x"];

/// A connected, acyclic graph with `1..=max_vars` instances, random
/// variable names, inverse edges, reentrancies and attributes.
pub fn random_graph<R: Rng>(rng: &mut R, max_vars: usize) -> AmrGraph {
    let n = rng.gen_range(1..=max_vars);
    let mut names: Vec<String> = Vec::new();
    while names.len() < n {
        let name = format!("{}{}", LETTERS.choose(rng).unwrap(), rng.gen_range(0..20));
        if !names.contains(&name) {
            names.push(name);
        }
    }
    let vars: Vec<Variable> = names.into_iter().map(|n| Variable::new(n).unwrap()).collect();
    let concept = |rng: &mut R| Concept::new(*CONCEPTS.choose(rng).unwrap()).unwrap();
    let role = |rng: &mut R| Role::new(*ROLES.choose(rng).unwrap()).unwrap();
    let mut g = AmrGraph::new(vars[0].clone(), concept(rng));
    // every edge runs from a lower to a higher index once normalized
    let edge = |rng: &mut R, g: &mut AmrGraph, from: usize, to: usize| {
        let r = role(rng);
        if rng.gen_bool(0.2) {
            // `(to :R-of from)` reads as `from :R to`
            g.relations.push(Relation { source: vars[to].clone(), role: r.inverted(), target: Target::Node(vars[from].clone()) });
        } else {
            g.relations.push(Relation { source: vars[from].clone(), role: r, target: Target::Node(vars[to].clone()) });
        }
    };
    for (i, var) in vars.iter().enumerate().skip(1) {
        g.add_instance(var.clone(), concept(rng));
        let parent = rng.gen_range(0..i);
        edge(rng, &mut g, parent, i);
    }
    for _ in 0..rng.gen_range(0..=n / 2) {
        if n >= 3 {
            let a = rng.gen_range(0..n - 1);
            let b = rng.gen_range(a + 1..n);
            edge(rng, &mut g, a, b);
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let v = vars[rng.gen_range(0..n)].clone();
        let (r, c) = match rng.gen_range(0..4) {
            0 => (":polarity", Constant::Symbol("-".into())),
            1 => (":quant", Constant::Number(rng.gen_range(1..10).to_string())),
            2 => (":mode", Constant::Symbol("imperative".into())),
            _ => (":value", Constant::Str("du coup".into())),
        };
        g.add_attribute(v, Role::new(r).unwrap(), c);
    }
    g
}

/// Applies a consistent random renaming to every variable.
pub fn alpha_rename<R: Rng>(rng: &mut R, g: &AmrGraph) -> AmrGraph {
    let mut fresh: Vec<String> = (0..g.instances.len()).map(|i| format!("v{i}")).collect();
    fresh.shuffle(rng);
    let map: HashMap<&Variable, Variable> =
        g.instances.keys().zip(fresh).map(|(v, f)| (v, Variable::new(f).unwrap())).collect();
    let m = |v: &Variable| map[v].clone();
    let mut out = AmrGraph::new(m(&g.root), g.instances[&g.root].clone());
    for (v, c) in &g.instances {
        out.add_instance(m(v), c.clone());
    }
    for r in &g.relations {
        let target = match &r.target {
            Target::Node(t) => Target::Node(m(t)),
            c => c.clone(),
        };
        out.relations.push(Relation { source: m(&r.source), role: r.role.clone(), target });
    }
    out
}

/// A graph close to `g`: some concepts swapped and some roles relabelled,
/// then alpha-renamed.
pub fn perturb<R: Rng>(rng: &mut R, g: &AmrGraph) -> AmrGraph {
    let mut out = g.clone();
    for c in out.instances.values_mut() {
        if rng.gen_bool(0.25) {
            *c = Concept::new(*CONCEPTS.choose(rng).unwrap()).unwrap();
        }
    }
    for r in &mut out.relations {
        if rng.gen_bool(0.2) {
            r.role = Role::new(*ROLES.choose(rng).unwrap()).unwrap();
        }
    }
    alpha_rename(rng, &out)
}

/// Deletes `k` random tokens from a token sequence.
pub fn delete_tokens<R: Rng>(rng: &mut R, tokens: &[String], k: usize) -> Vec<String> {
    let mut t = tokens.to_vec();
    for _ in 0..k.min(t.len()) {
        let i = rng.gen_range(0..t.len());
        t.remove(i);
    }
    t
}
