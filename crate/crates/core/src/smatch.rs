//! Smatch: triple overlap under the best injective variable alignment.
//!
//! [`score_pair`] searches alignments by hill climbing with restarts;
//! [`oracle_score`] enumerates them exhaustively for small graphs and serves
//! as the reference the search is tested against.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{AmrGraph, Variable};
use crate::triple::{triples, Triple, TripleKind, TripleValue, TOP};

/// Largest smaller-side variable count the oracle accepts.
pub const ORACLE_VAR_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmatchConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Rewrite `:X-of` edges to `:X` with swapped endpoints before matching.
    pub normalize_inverse: bool,
    /// Count the `TOP(root, concept)` triple.
    pub include_top: bool,
}

impl Default for SmatchConfig {
    fn default() -> Self {
        SmatchConfig { restarts: 4, seed: 0, normalize_inverse: true, include_top: true }
    }
}

impl SmatchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SmatchConfig { seed, ..Self::default() }
    }
}

/// Matched / predicted / gold triple counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SmatchCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SmatchCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.gold)
    }

    /// 2PR/(P+R), which equals 2m/(|pred|+|gold|); 0 when nothing matches.
    pub fn f1(&self) -> f64 {
        if self.matched == 0 {
            0.0
        } else {
            2.0 * self.matched as f64 / (self.predicted + self.gold) as f64
        }
    }
}

impl std::ops::Add for SmatchCounts {
    type Output = SmatchCounts;

    fn add(self, o: SmatchCounts) -> SmatchCounts {
        SmatchCounts {
            matched: self.matched + o.matched,
            predicted: self.predicted + o.predicted,
            gold: self.gold + o.gold,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Injective partial map from predicted-graph variables to gold variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    pub mapping: Vec<(Variable, Variable)>,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmatchScore {
    pub counts: SmatchCounts,
    pub alignment: Alignment,
    pub restarts_used: usize,
}

impl SmatchScore {
    pub fn precision(&self) -> f64 {
        self.counts.precision()
    }

    pub fn recall(&self) -> f64 {
        self.counts.recall()
    }

    pub fn f1(&self) -> f64 {
        self.counts.f1()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmatchError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("oracle limited to {limit} variables on the smaller side, got {size}")]
    TooLarge { size: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Second {
    Var(u32),
    Value(u32),
}

/// A triple with variables replaced by indices and labels/values interned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    label: u32,
    first: u32,
    second: Second,
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: String) -> u32 {
        let next = self.ids.len() as u32;
        *self.ids.entry(s).or_insert(next)
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }
}

fn label_and_value(t: &Triple) -> (String, Option<String>) {
    let label = match t.kind {
        TripleKind::Instance => "\u{0}instance".to_string(),
        _ if t.is_top() => format!("\u{0}{TOP}"),
        _ => t.role.clone(),
    };
    let value = match &t.second {
        TripleValue::Var(_) => None,
        // concepts compare case-insensitively, constants exactly
        TripleValue::Concept(c) => Some(format!("c:{}", c.folded())),
        TripleValue::Const(c) => Some(format!("k:{c}")),
    };
    (label, value)
}

/// The scoring problem for one ordered pair, with everything pre-indexed.
struct Problem {
    a_vars: Vec<Variable>,
    b_vars: Vec<Variable>,
    /// Predicted triples; `None` for triples whose label or value never
    /// occurs in gold and so can never match.
    a_triples: Vec<Option<ATriple>>,
    /// For each predicted variable, indices of its triples.
    a_incident: Vec<Vec<usize>>,
    b_counts: HashMap<Key, u32>,
    /// Gold keys in triple order, for deterministic scans.
    b_keys: Vec<Key>,
    a_total: usize,
    b_total: usize,
}

#[derive(Debug, Clone, Copy)]
struct ATriple {
    label: u32,
    first: u32,
    second: Second,
}

impl ATriple {
    fn key(&self, mapping: &[Option<u32>]) -> Option<Key> {
        let first = mapping[self.first as usize]?;
        let second = match self.second {
            Second::Var(v) => Second::Var(mapping[v as usize]?),
            s => s,
        };
        Some(Key { label: self.label, first, second })
    }
}

fn graph_triples(g: &AmrGraph, config: &SmatchConfig) -> Vec<Triple> {
    let mut t = triples(g, config.normalize_inverse);
    if !config.include_top {
        t.retain(|t| !t.is_top());
    }
    t
}

impl Problem {
    fn new(a: &AmrGraph, b: &AmrGraph, config: &SmatchConfig) -> Problem {
        let a_vars: Vec<Variable> = a.instances.keys().cloned().collect();
        let b_vars: Vec<Variable> = b.instances.keys().cloned().collect();
        let a_index: HashMap<&Variable, u32> = a_vars.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let b_index: HashMap<&Variable, u32> = b_vars.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();

        let mut interner = Interner::default();
        let tb = graph_triples(b, config);
        let mut b_counts = HashMap::new();
        let mut b_keys = Vec::new();
        for t in &tb {
            let (label, value) = label_and_value(t);
            let label = interner.intern(label);
            let (Some(&first), second) = (b_index.get(&t.first), &t.second) else { continue };
            let second = match (second, value) {
                (TripleValue::Var(v), _) => match b_index.get(v) {
                    Some(&i) => Second::Var(i),
                    None => continue,
                },
                (_, Some(value)) => Second::Value(interner.intern(value)),
                (_, None) => unreachable!("non-variable triples carry a value"),
            };
            let key = Key { label, first, second };
            *b_counts.entry(key).or_insert(0) += 1;
            b_keys.push(key);
        }

        let ta = graph_triples(a, config);
        let mut a_incident = vec![Vec::new(); a_vars.len()];
        let mut a_triples = Vec::with_capacity(ta.len());
        for t in &ta {
            let (label, value) = label_and_value(t);
            let encoded = (|| {
                let label = interner.get(&label)?;
                let first = *a_index.get(&t.first)?;
                let second = match (&t.second, value) {
                    (TripleValue::Var(v), _) => Second::Var(*a_index.get(v)?),
                    (_, Some(value)) => Second::Value(interner.get(&value)?),
                    (_, None) => return None,
                };
                Some(ATriple { label, first, second })
            })();
            if let Some(at) = encoded {
                let idx = a_triples.len();
                a_incident[at.first as usize].push(idx);
                if let Second::Var(v) = at.second {
                    if v != at.first {
                        a_incident[v as usize].push(idx);
                    }
                }
            }
            a_triples.push(encoded);
        }
        Problem { a_vars, b_vars, a_triples, a_incident, b_counts, b_keys, a_total: ta.len(), b_total: tb.len() }
    }

    fn counts_of(&self, mapping: &[Option<u32>]) -> HashMap<Key, u32> {
        let mut counts = HashMap::new();
        for t in self.a_triples.iter().flatten() {
            if let Some(k) = t.key(mapping) {
                *counts.entry(k).or_insert(0) += 1;
            }
        }
        counts
    }

    fn matched_from_counts(&self, counts: &HashMap<Key, u32>) -> usize {
        counts.iter().map(|(k, &n)| n.min(self.b_counts.get(k).copied().unwrap_or(0)) as usize).sum()
    }

    fn matched(&self, mapping: &[Option<u32>]) -> usize {
        self.matched_from_counts(&self.counts_of(mapping))
    }

    /// Change in matched count if the variables in `changed` took their
    /// values from `proposed` instead of `current`.
    fn gain(
        &self,
        current: &[Option<u32>],
        proposed: &[Option<u32>],
        changed: &[usize],
        counts: &HashMap<Key, u32>,
    ) -> i64 {
        let mut touched: Vec<usize> = changed.iter().flat_map(|&v| self.a_incident[v].iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut delta: HashMap<Key, i64> = HashMap::new();
        for idx in touched {
            let t = self.a_triples[idx].expect("incident lists only hold encodable triples");
            if let Some(k) = t.key(current) {
                *delta.entry(k).or_insert(0) -= 1;
            }
            if let Some(k) = t.key(proposed) {
                *delta.entry(k).or_insert(0) += 1;
            }
        }
        let mut gain = 0i64;
        for (k, d) in delta {
            if d == 0 {
                continue;
            }
            let b = self.b_counts.get(&k).copied().unwrap_or(0) as i64;
            let before = counts.get(&k).copied().unwrap_or(0) as i64;
            gain += (before + d).min(b) - before.min(b);
        }
        gain
    }

    fn upper_bound(&self) -> usize {
        self.a_total.min(self.b_total)
    }

    fn alignment(&self, mapping: &[Option<u32>], matched: usize) -> Alignment {
        Alignment {
            mapping: mapping
                .iter()
                .enumerate()
                .filter_map(|(a, b)| b.map(|b| (self.a_vars[a].clone(), self.b_vars[b as usize].clone())))
                .collect(),
            matched,
        }
    }

    fn score(&self, mapping: &[Option<u32>], matched: usize, restarts_used: usize) -> SmatchScore {
        SmatchScore {
            counts: SmatchCounts { matched, predicted: self.a_total, gold: self.b_total },
            alignment: self.alignment(mapping, matched),
            restarts_used,
        }
    }
}

/// Greedy starting alignment. Variables are first paired by concept, in
/// instance order. Then each predicted edge, in order, claims the first
/// gold edge with the same label whose endpoints are still free or already
/// agree, and each attribute its first free gold counterpart.
fn smart_init(p: &Problem, a: &AmrGraph, b: &AmrGraph) -> Vec<Option<u32>> {
    let b_concepts: Vec<String> = b.instances.values().map(|c| c.folded()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; b_concepts.len()];
    let mut mapping: Vec<Option<u32>> = vec![None; a.instances.len()];
    for (i, c) in a.instances.values().enumerate() {
        let folded = c.folded();
        if let Some(j) = (0..b_concepts.len()).find(|&j| owner[j].is_none() && b_concepts[j] == folded) {
            owner[j] = Some(i);
            mapping[i] = Some(j as u32);
        }
    }
    let fits = |mapping: &[Option<u32>], owner: &[Option<usize>], x: usize, u: u32| {
        mapping[x].map_or(owner[u as usize].is_none(), |m| m == u)
    };
    for t in p.a_triples.iter().flatten() {
        let (x, y) = match t.second {
            Second::Var(y) => (t.first as usize, y as usize),
            Second::Value(_) => continue,
        };
        if mapping[x].is_some() && mapping[y].is_some() {
            continue;
        }
        let hit = p.b_keys.iter().find_map(|k| match k.second {
            Second::Var(v) if k.label == t.label && (x == y) == (k.first == v) => {
                (fits(&mapping, &owner, x, k.first) && fits(&mapping, &owner, y, v)).then_some((k.first, v))
            }
            _ => None,
        });
        if let Some((u, v)) = hit {
            mapping[x] = Some(u);
            owner[u as usize] = Some(x);
            mapping[y] = Some(v);
            owner[v as usize] = Some(y);
        }
    }
    for t in p.a_triples.iter().flatten() {
        let x = t.first as usize;
        if mapping[x].is_some() || matches!(t.second, Second::Var(_)) {
            continue;
        }
        if let Some(k) = p.b_keys.iter().find(|k| k.label == t.label && k.second == t.second && owner[k.first as usize].is_none()) {
            mapping[x] = Some(k.first);
            owner[k.first as usize] = Some(x);
        }
    }
    mapping
}

fn random_init(na: usize, nb: usize, rng: &mut ChaCha8Rng) -> Vec<Option<u32>> {
    let mut a_order: Vec<usize> = (0..na).collect();
    let mut b_order: Vec<u32> = (0..nb as u32).collect();
    a_order.shuffle(rng);
    b_order.shuffle(rng);
    let mut mapping = vec![None; na];
    for (a, b) in a_order.into_iter().zip(b_order) {
        mapping[a] = Some(b);
    }
    mapping
}

/// Best-improvement hill climbing. Candidate moves are visited as
/// reassignments `(a, b)` for each predicted variable `a` in order and each
/// free gold variable `b` in order, then swaps `(a, a2)` with `a2 > a`; on
/// equal gain the first move visited wins.
fn climb(p: &Problem, mut mapping: Vec<Option<u32>>) -> (Vec<Option<u32>>, usize) {
    let nb = p.b_vars.len();
    let mut counts = p.counts_of(&mapping);
    let mut matched = p.matched_from_counts(&counts);
    loop {
        if matched == p.upper_bound() {
            break;
        }
        let mut used = vec![false; nb];
        for b in mapping.iter().flatten() {
            used[*b as usize] = true;
        }
        let mut best: Option<(i64, Vec<Option<u32>>)> = None;
        let mut proposed = mapping.clone();
        for a in 0..mapping.len() {
            for (b, _) in used.iter().enumerate().filter(|(_, u)| !**u) {
                proposed[a] = Some(b as u32);
                let g = p.gain(&mapping, &proposed, &[a], &counts);
                if g > 0 && best.as_ref().is_none_or(|(bg, _)| g > *bg) {
                    best = Some((g, proposed.clone()));
                }
                proposed[a] = mapping[a];
            }
            for a2 in a + 1..mapping.len() {
                if mapping[a] == mapping[a2] {
                    continue;
                }
                proposed.swap(a, a2);
                let g = p.gain(&mapping, &proposed, &[a, a2], &counts);
                if g > 0 && best.as_ref().is_none_or(|(bg, _)| g > *bg) {
                    best = Some((g, proposed.clone()));
                }
                proposed.swap(a, a2);
            }
        }
        match best {
            Some((g, next)) => {
                mapping = next;
                counts = p.counts_of(&mapping);
                matched = p.matched_from_counts(&counts);
                debug_assert_eq!(matched as i64 - g, p.matched(&proposed) as i64);
            }
            None => break,
        }
    }
    (mapping, matched)
}

/// Smatch by hill climbing: restart 0 starts from a concept-matching
/// alignment, later restarts from seeded random injections. Deterministic
/// for a fixed configuration.
pub fn score_pair(predicted: &AmrGraph, gold: &AmrGraph, config: &SmatchConfig) -> SmatchScore {
    let forward = Problem::new(predicted, gold, config);
    let (mapping, matched, used) = climb_restarts(&forward, predicted, gold, config);
    if matched == forward.upper_bound() {
        return forward.score(&mapping, matched, used);
    }
    // searching from the other side too makes the score symmetric
    let backward = Problem::new(gold, predicted, config);
    let (back_mapping, back_matched, back_used) = climb_restarts(&backward, gold, predicted, config);
    if back_matched > matched {
        let inverse = invert(&back_mapping, forward.a_vars.len());
        forward.score(&inverse, back_matched, used + back_used)
    } else {
        forward.score(&mapping, matched, used + back_used)
    }
}

fn climb_restarts(p: &Problem, a: &AmrGraph, b: &AmrGraph, config: &SmatchConfig) -> (Vec<Option<u32>>, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<(Vec<Option<u32>>, usize)> = None;
    let mut used = 0;
    for restart in 0..config.restarts.max(1) {
        let init = if restart == 0 { smart_init(p, a, b) } else { random_init(p.a_vars.len(), p.b_vars.len(), &mut rng) };
        let (mapping, matched) = climb(p, init);
        used = restart + 1;
        if best.as_ref().is_none_or(|(_, m)| matched > *m) {
            best = Some((mapping, matched));
        }
        if best.as_ref().is_some_and(|(_, m)| *m == p.upper_bound()) {
            break;
        }
    }
    let (mapping, matched) = best.expect("at least one restart runs");
    (mapping, matched, used)
}

fn invert(mapping: &[Option<u32>], len: usize) -> Vec<Option<u32>> {
    let mut inverse = vec![None; len];
    for (from, to) in mapping.iter().enumerate() {
        if let Some(to) = to {
            inverse[*to as usize] = Some(from as u32);
        }
    }
    inverse
}

/// Matched count of `predicted` against `gold` under a given alignment.
/// Pairs naming unknown variables are ignored.
pub fn matched_under(predicted: &AmrGraph, gold: &AmrGraph, mapping: &[(Variable, Variable)], config: &SmatchConfig) -> usize {
    let p = Problem::new(predicted, gold, config);
    let b_index: HashMap<&Variable, u32> = p.b_vars.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
    let mut m = vec![None; p.a_vars.len()];
    for (a, b) in mapping {
        if let (Some(ai), Some(&bi)) = (p.a_vars.iter().position(|v| v == a), b_index.get(b)) {
            m[ai] = Some(bi);
        }
    }
    p.matched(&m)
}

/// Exhaustive search over injective alignments from the smaller variable
/// set. Branches are cut only when they provably cannot beat the best found.
pub fn oracle_score(predicted: &AmrGraph, gold: &AmrGraph, config: &SmatchConfig) -> Result<SmatchScore, SmatchError> {
    let size = predicted.instances.len().min(gold.instances.len());
    if size > ORACLE_VAR_LIMIT {
        return Err(SmatchError::TooLarge { size, limit: ORACLE_VAR_LIMIT });
    }
    if predicted.instances.len() <= gold.instances.len() {
        let p = Problem::new(predicted, gold, config);
        let (mapping, matched) = exhaustive(&p);
        Ok(p.score(&mapping, matched, 0))
    } else {
        // matched(A, B, f) = matched(B, A, f⁻¹)
        let p = Problem::new(gold, predicted, config);
        let (mapping, matched) = exhaustive(&p);
        let inverse = invert(&mapping, p.b_vars.len());
        let forward = Problem::new(predicted, gold, config);
        debug_assert_eq!(forward.matched(&inverse), matched);
        Ok(forward.score(&inverse, matched, 0))
    }
}

/// Maps every variable of the problem's first graph (the smaller side).
fn exhaustive(p: &Problem) -> (Vec<Option<u32>>, usize) {
    struct Search<'p> {
        p: &'p Problem,
        mapping: Vec<Option<u32>>,
        used: Vec<bool>,
        best: (Vec<Option<u32>>, usize),
        /// triples_closed_at[k]: triples whose variables are all among the
        /// first k+1 assigned.
        closed_at: Vec<Vec<usize>>,
    }

    impl Search<'_> {
        fn run(&mut self, depth: usize, counts: &mut HashMap<Key, u32>, matched: usize) {
            if self.best.1 == self.p.upper_bound() {
                return;
            }
            let n = self.mapping.len();
            if depth == n {
                if matched > self.best.1 || self.best.0.is_empty() {
                    self.best = (self.mapping.clone(), matched);
                }
                return;
            }
            let remaining: usize = self.closed_at[depth..].iter().map(Vec::len).sum();
            if matched + remaining <= self.best.1 && !self.best.0.is_empty() {
                return;
            }
            for b in 0..self.used.len() {
                if self.used[b] {
                    continue;
                }
                self.used[b] = true;
                self.mapping[depth] = Some(b as u32);
                let mut added = Vec::new();
                let mut gained = 0;
                for &idx in &self.closed_at[depth] {
                    let t = self.p.a_triples[idx].expect("closed triples are encodable");
                    let k = t.key(&self.mapping).expect("all variables assigned");
                    let c = counts.entry(k).or_insert(0);
                    *c += 1;
                    if *c <= self.p.b_counts.get(&k).copied().unwrap_or(0) {
                        gained += 1;
                    }
                    added.push(k);
                }
                self.run(depth + 1, counts, matched + gained);
                for k in added {
                    *counts.get_mut(&k).unwrap() -= 1;
                }
                self.mapping[depth] = None;
                self.used[b] = false;
            }
        }
    }

    let n = p.a_vars.len();
    let mut closed_at = vec![Vec::new(); n];
    for (idx, t) in p.a_triples.iter().enumerate() {
        if let Some(t) = t {
            let last = match t.second {
                Second::Var(v) => t.first.max(v),
                Second::Value(_) => t.first,
            };
            closed_at[last as usize].push(idx);
        }
    }
    let mut s = Search {
        p,
        mapping: vec![None; n],
        used: vec![false; p.b_vars.len()],
        best: (Vec::new(), 0),
        closed_at,
    };
    s.run(0, &mut HashMap::new(), 0);
    if s.best.0.is_empty() {
        s.best.0 = vec![None; n];
    }
    s.best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScore {
    pub pairs: Vec<SmatchScore>,
    /// Micro-average: counts summed over pairs.
    pub total: SmatchCounts,
}

/// Seed for pair `index`, independent of evaluation order.
pub fn pair_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Scores every pair (possibly in parallel) and micro-averages.
pub fn score_corpus(pairs: &[(&AmrGraph, &AmrGraph)], config: &SmatchConfig) -> Result<CorpusScore, SmatchError> {
    if pairs.is_empty() {
        return Err(SmatchError::EmptyCorpus);
    }
    let scores: Vec<SmatchScore> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (pred, gold))| {
            let cfg = SmatchConfig { seed: pair_seed(config.seed, i), ..*config };
            score_pair(pred, gold, &cfg)
        })
        .collect();
    let total = scores.iter().fold(SmatchCounts::default(), |acc, s| acc + s.counts);
    Ok(CorpusScore { pairs: scores, total })
}
