//! Corpus files: reading, writing, filtering, statistics and splits.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{self, Read, Write};
use std::ops::Add;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::AmrGraph;
use crate::penman::{self, ParseError, SerializationStyle};
use crate::schema::{count_extensions, ExtensionCounts};

/// Turn identifier: a zero-padded number followed by the speaker letter,
/// e.g. `0780B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UtteranceId {
    number: String,
    speaker: char,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{0}` is not an utterance id (digits followed by one speaker letter)")]
pub struct InvalidUtteranceId(pub String);

impl UtteranceId {
    pub fn new(number: &str, speaker: char) -> Result<Self, InvalidUtteranceId> {
        format!("{number}{speaker}").parse()
    }

    pub fn number(&self) -> &str {
        &self.number
    }

    /// Always uppercase.
    pub fn speaker(&self) -> char {
        self.speaker
    }
}

impl FromStr for UtteranceId {
    type Err = InvalidUtteranceId;

    /// The speaker letter is accepted in either case and stored uppercase.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidUtteranceId(s.to_string());
        let speaker = s.chars().last().ok_or_else(bad)?;
        let number = &s[..s.len() - speaker.len_utf8()];
        if !speaker.is_ascii_alphabetic() || number.is_empty() || !number.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        Ok(UtteranceId { number: number.to_string(), speaker: speaker.to_ascii_uppercase() })
    }
}

impl fmt::Display for UtteranceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.number, self.speaker)
    }
}

/// One speech turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: UtteranceId,
    /// The `::snt` text, byte-exact.
    pub sentence: String,
    pub graph: Option<AmrGraph>,
    pub comments: Vec<String>,
    /// Other `# ::key value` lines, kept in order.
    pub metadata: Vec<(String, String)>,
}

impl CorpusEntry {
    pub fn new(id: UtteranceId, sentence: impl Into<String>, graph: Option<AmrGraph>) -> Self {
        CorpusEntry { id, sentence: sentence.into(), graph, comments: Vec::new(), metadata: Vec::new() }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: entry has a graph but no `# ::id`")]
    MissingId { line: usize },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { id: UtteranceId, line: usize },
    #[error("line {line}: {source}")]
    InvalidId { line: usize, source: InvalidUtteranceId },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A graph that failed to parse; the entry is kept with no graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphProblem {
    pub id: UtteranceId,
    /// 1-based line where the graph text starts.
    pub line: usize,
    pub error: ParseError,
}

impl fmt::Display for GraphProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: entry {}: {}", self.line, self.id, self.error)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub entries: Vec<CorpusEntry>,
    pub problems: Vec<GraphProblem>,
}

pub fn load_path(path: &Path) -> Result<LoadedCorpus, CorpusError> {
    load(std::fs::File::open(path)?)
}

pub fn load<R: Read>(mut reader: R) -> Result<LoadedCorpus, CorpusError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_corpus(&text)
}

struct Block<'a> {
    lines: Vec<(usize, &'a str)>,
}

fn blocks(text: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut current: Option<Block<'_>> = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            out.extend(current.take());
        } else {
            current.get_or_insert_with(|| Block { lines: Vec::new() }).lines.push((i + 1, line));
        }
    }
    out.extend(current);
    out
}

/// Splits `::key value` into key and value; a single separating space is
/// consumed so the value keeps any further whitespace.
fn metadata_line(line: &str) -> Option<(&str, &str)> {
    let rest = line.strip_prefix('#')?.trim_start().strip_prefix("::")?;
    let key_end = rest.find(char::is_whitespace).unwrap_or(rest.len());
    let (key, value) = rest.split_at(key_end);
    let value = value.strip_prefix(' ').or_else(|| value.strip_prefix('\t')).unwrap_or(value);
    Some((key, value))
}

pub fn parse_corpus(text: &str) -> Result<LoadedCorpus, CorpusError> {
    let mut loaded = LoadedCorpus::default();
    let mut seen = HashSet::new();
    for block in blocks(text) {
        let mut id = None;
        let mut sentence = String::new();
        let mut comments = Vec::new();
        let mut metadata = Vec::new();
        let mut graph_lines = Vec::new();
        let mut graph_line = None;
        for &(line_no, line) in &block.lines {
            if line.starts_with('#') {
                match metadata_line(line) {
                    Some(("id", value)) => {
                        let parsed = value
                            .trim()
                            .parse::<UtteranceId>()
                            .map_err(|source| CorpusError::InvalidId { line: line_no, source })?;
                        id = Some((parsed, line_no));
                    }
                    Some(("snt", value)) => sentence = value.to_string(),
                    Some(("comment", value)) => comments.push(value.to_string()),
                    Some((key, value)) => metadata.push((key.to_string(), value.to_string())),
                    None => {}
                }
            } else {
                graph_line.get_or_insert(line_no);
                graph_lines.push(line);
            }
        }
        let Some((id, id_line)) = id else {
            if let Some(line) = graph_line {
                return Err(CorpusError::MissingId { line });
            }
            continue;
        };
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, line: id_line });
        }
        let graph = match graph_line {
            None => None,
            Some(line) => match penman::parse(&graph_lines.join("\n")) {
                Ok(g) => Some(g),
                Err(error) => {
                    loaded.problems.push(GraphProblem { id: id.clone(), line, error });
                    None
                }
            },
        };
        loaded.entries.push(CorpusEntry { id, sentence, graph, comments, metadata });
    }
    Ok(loaded)
}

/// Writes entries in the canonical corpus layout. Fails only on I/O or if a
/// graph cannot be linearized.
pub fn save<W: Write>(entries: &[CorpusEntry], mut writer: W) -> io::Result<()> {
    writer.write_all(to_corpus_string(entries)?.as_bytes())
}

pub fn save_path(entries: &[CorpusEntry], path: &Path) -> io::Result<()> {
    save(entries, io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn to_corpus_string(entries: &[CorpusEntry]) -> io::Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("# ::id {}\n# ::snt {}\n", e.id, e.sentence));
        for c in &e.comments {
            out.push_str(&format!("# ::comment {c}\n"));
        }
        for (k, v) in &e.metadata {
            out.push_str(&format!("# ::{k} {v}\n"));
        }
        if let Some(g) = &e.graph {
            let text = penman::serialize(g, SerializationStyle::default())
                .map_err(|err| io::Error::new(io::ErrorKind::InvalidData, format!("entry {}: {err}", e.id)))?;
            out.push_str(&text);
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// Removes `[...]` event spans such as `[rire]`. An unclosed `[` is kept.
pub fn strip_bracketed(sentence: &str) -> String {
    let mut out = String::with_capacity(sentence.len());
    let mut rest = sentence;
    while let Some(open) = rest.find('[') {
        match rest[open..].find(']') {
            Some(close) => {
                out.push_str(&rest[..open]);
                out.push(' ');
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// True when something other than bracketed events, whitespace and
/// punctuation remains.
pub fn is_annotable_sentence(sentence: &str) -> bool {
    strip_bracketed(sentence).chars().any(char::is_alphanumeric)
}

pub fn is_annotable(entry: &CorpusEntry) -> bool {
    entry.graph.is_some() && is_annotable_sentence(&entry.sentence)
}

pub fn filter_annotable(entries: &[CorpusEntry]) -> Vec<CorpusEntry> {
    entries.iter().filter(|e| is_annotable(e)).cloned().collect()
}

/// Whitespace tokens after removing bracketed spans.
pub fn token_count(sentence: &str) -> usize {
    strip_bracketed(sentence).split_whitespace().count()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub utterances_nonempty: usize,
    pub tokens: usize,
    /// Distinct speaker letters over all entries.
    pub speaker_letters: BTreeSet<char>,
    pub extensions: ExtensionCounts,
}

impl CorpusStats {
    pub fn speakers(&self) -> usize {
        self.speaker_letters.len()
    }

    pub fn discourse_markers(&self) -> usize {
        self.extensions.discourse_markers
    }

    pub fn backchannels(&self) -> usize {
        self.extensions.backchannels
    }

    pub fn reparanda(&self) -> usize {
        self.extensions.reparanda
    }
}

/// Counts add; speaker sets take the union.
impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(mut self, other: CorpusStats) -> CorpusStats {
        self.utterances_nonempty += other.utterances_nonempty;
        self.tokens += other.tokens;
        self.speaker_letters.extend(other.speaker_letters);
        self.extensions += other.extensions;
        self
    }
}

pub fn stats(entries: &[CorpusEntry]) -> CorpusStats {
    let mut s = CorpusStats::default();
    for e in entries {
        s.speaker_letters.insert(e.id.speaker());
        if !is_annotable(e) {
            continue;
        }
        s.utterances_nonempty += 1;
        s.tokens += token_count(&e.sentence);
        if let Some(g) = &e.graph {
            s.extensions += count_extensions(g);
        }
    }
    s
}

/// Train/dev/test fractions. Dev and test sizes are rounded to nearest and
/// train takes the remainder; these defaults give 1375/146/146 at n = 1667.
pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.8248, 0.0876, 0.0876);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("fractions must be positive and sum to 1")]
    InvalidFractions,
    #[error("corpus of {size} entries is too small: some part would be empty")]
    TooSmall { size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<CorpusEntry>,
    pub dev: Vec<CorpusEntry>,
    pub test: Vec<CorpusEntry>,
}

pub fn split_sizes(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize), SplitError> {
    let (tr, dv, te) = fractions;
    if !(tr > 0.0 && dv > 0.0 && te > 0.0) || ((tr + dv + te) - 1.0).abs() > 1e-6 {
        return Err(SplitError::InvalidFractions);
    }
    let dev = (n as f64 * dv).round() as usize;
    let test = (n as f64 * te).round() as usize;
    if dev == 0 || test == 0 || dev + test >= n {
        return Err(SplitError::TooSmall { size: n });
    }
    Ok((n - dev - test, dev, test))
}

/// Seeded shuffle, then contiguous train/dev/test partition.
pub fn split(entries: &[CorpusEntry], fractions: (f64, f64, f64), seed: u64) -> Result<Split, SplitError> {
    let (train, dev, _) = split_sizes(entries.len(), fractions)?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |range: &[usize]| range.iter().map(|&i| entries[i].clone()).collect();
    Ok(Split {
        train: pick(&order[..train]),
        dev: pick(&order[train..train + dev]),
        test: pick(&order[train + dev..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utterance_ids() {
        let id: UtteranceId = "0780B".parse().unwrap();
        assert_eq!((id.number(), id.speaker()), ("0780", 'B'));
        assert_eq!(id.to_string(), "0780B");
        assert_eq!("0080b".parse::<UtteranceId>().unwrap(), "0080B".parse().unwrap());
        assert!("B0780".parse::<UtteranceId>().is_err());
        assert!("0780".parse::<UtteranceId>().is_err());
        assert!("".parse::<UtteranceId>().is_err());
    }

    #[test]
    fn loads_metadata_variants() {
        let text = "#::id 0780B\n#::snt Donc mets pas ta route ici\n(p / put-01\n    :polarity -)\n";
        let c = parse_corpus(text).unwrap();
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.entries[0].id.speaker(), 'B');
        assert_eq!(c.entries[0].sentence, "Donc mets pas ta route ici");
        assert!(c.entries[0].graph.is_some());
    }

    #[test]
    fn entry_without_graph() {
        let c = parse_corpus("# ::id 0400Y\n# ::snt [rire]\n").unwrap();
        assert!(c.entries[0].graph.is_none());
        assert_eq!(c.entries[0].sentence, "[rire]");
    }

    #[test]
    fn duplicate_and_missing_ids() {
        let dup = "# ::id 0001A\n(a / a)\n\n# ::id 0001A\n(b / b)\n";
        assert!(matches!(parse_corpus(dup), Err(CorpusError::DuplicateId { line: 4, .. })));
        assert!(matches!(parse_corpus("# ::snt x\n(a / a)\n"), Err(CorpusError::MissingId { line: 2 })));
        assert!(matches!(parse_corpus("# ::id nope\n"), Err(CorpusError::InvalidId { line: 1, .. })));
    }

    #[test]
    fn malformed_graph_does_not_stop_loading() {
        let text = "# ::id 0001A\n(a / b\n\n# ::id 0002A\n(c / d)\n";
        let c = parse_corpus(text).unwrap();
        assert_eq!(c.entries.len(), 2);
        assert!(c.entries[0].graph.is_none());
        assert_eq!(c.problems.len(), 1);
        assert_eq!(c.problems[0].line, 2);
    }

    #[test]
    fn save_then_load_is_identity() {
        let text = "# ::id 0001A\n# ::snt  two  spaces [toux]\n# ::comment see AMR 3.0\n# ::tok x\n(a / and\n    :op1 (b / bad))\n\n# ::id 0002B\n# ::snt [rire]\n\n";
        let c = parse_corpus(text).unwrap();
        let saved = to_corpus_string(&c.entries).unwrap();
        assert_eq!(saved, text);
        assert_eq!(parse_corpus(&saved).unwrap(), c);
    }

    #[test]
    fn annotable_filter() {
        assert!(!is_annotable_sentence("[toux]"));
        assert!(!is_annotable_sentence(" [rire] , [toux] ."));
        assert!(is_annotable_sentence("ah [rire] oui"));
        assert_eq!(token_count("ah [rire] oui"), 2);
        assert_eq!(token_count("a[x]b"), 2);
    }

    #[test]
    fn empty_stats() {
        assert_eq!(stats(&[]), CorpusStats::default());
    }

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_sizes(100, (0.8, 0.1, 0.1)).unwrap(), (80, 10, 10));
        assert_eq!(split_sizes(1667, DEFAULT_FRACTIONS).unwrap(), (1375, 146, 146));
        assert_eq!(split_sizes(3, (0.8, 0.1, 0.1)), Err(SplitError::TooSmall { size: 3 }));
        assert_eq!(split_sizes(100, (0.8, 0.1, 0.2)), Err(SplitError::InvalidFractions));
        assert_eq!(split_sizes(100, (1.0, 0.0, 0.0)), Err(SplitError::InvalidFractions));
    }
}
