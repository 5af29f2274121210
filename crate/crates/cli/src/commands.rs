use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use dialamr::compat::strip_corpus;
use dialamr::corpus::{load_path, split as split_corpus, to_corpus_string, CorpusEntry, LoadedCorpus, DEFAULT_FRACTIONS};
use dialamr::links::{merge_dialogue, resolve, MergeOptions};
use dialamr::schema::{validate, RoleInventory};
use dialamr::seq2seq::{linearize_line, rename_variables, repair_batch, ExternalModel, RepairError};
use dialamr::smatch::{score_corpus, SmatchConfig};
use dialamr::{serialize, SerializationStyle};

use crate::{Format, Output, ScoreArgs};

/// Exit status of a command that ran to completion.
pub type Status = u8;

pub const OK: Status = 0;
pub const FINDINGS: Status = 1;

/// A failure that stops the command; reported with exit status 2.
#[derive(Debug)]
pub struct Fatal(String);

impl std::fmt::Display for Fatal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn fatal(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Fatal {
    Fatal(format!("{context}: {e}"))
}

pub struct Context {
    pub format: Format,
    pub inventory: Option<PathBuf>,
}

impl Context {
    fn inventory(&self) -> Result<RoleInventory, Fatal> {
        match &self.inventory {
            Some(path) => RoleInventory::load(path).map_err(|e| fatal(path.display(), e)),
            None => Ok(RoleInventory::default()),
        }
    }
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), Fatal> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fatal(p.display(), e)),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(|e| fatal("stdout", e)),
    }
}

fn write_report(path: Option<&Path>, text: &str) -> Result<(), Fatal> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| fatal(p.display(), e)),
        None => io::stderr().lock().write_all(text.as_bytes()).map_err(|e| fatal("stderr", e)),
    }
}

/// Loads a corpus; graphs that fail to parse are fatal.
fn load_strict(path: &Path) -> Result<Vec<CorpusEntry>, Fatal> {
    let loaded = load_path(path).map_err(|e| fatal(path.display(), e))?;
    if let Some(p) = loaded.problems.first() {
        return Err(fatal(path.display(), p));
    }
    Ok(loaded.entries)
}

fn corpus_text(entries: &[CorpusEntry]) -> Result<String, Fatal> {
    to_corpus_string(entries).map_err(|e| fatal("serialize", e))
}

pub fn check(ctx: &Context, files: &[PathBuf], strict: bool) -> Result<Status, Fatal> {
    let inventory = ctx.inventory()?;
    let mut out = String::new();
    let mut failed = false;
    let mut errors = false;
    for path in files {
        let name = path.display();
        let LoadedCorpus { entries, problems } = match load_path(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("dialamr: {name}: {e}");
                failed = true;
                continue;
            }
        };
        for p in &problems {
            failed = true;
            match ctx.format {
                Format::Human => writeln!(out, "{name}:{}: error P0 [line {}] {}", p.id, p.line, p.error),
                Format::Records => writeln!(out, "{name}\t{}\terror\tP0\tline {}\t{}", p.id, p.line, p.error),
            }
            .expect("writing to a string");
        }
        for entry in &entries {
            let Some(graph) = &entry.graph else { continue };
            let report = validate(graph, &inventory, strict);
            errors |= report.has_errors();
            for f in &report.findings {
                match ctx.format {
                    Format::Human => writeln!(out, "{name}:{}: {f}", entry.id),
                    Format::Records => writeln!(
                        out,
                        "{name}\t{}\t{}\t{}\t{}\t{}",
                        entry.id, f.severity, f.rule, f.location, f.message
                    ),
                }
                .expect("writing to a string");
            }
        }
    }
    write_to(None, &out)?;
    Ok(if failed {
        2
    } else if errors {
        FINDINGS
    } else {
        OK
    })
}

pub fn score(ctx: &Context, args: &ScoreArgs) -> Result<Status, Fatal> {
    let gold = load_strict(&args.gold)?;
    let pred = load_strict(&args.pred)?;
    let mut pairs: Vec<(&CorpusEntry, &CorpusEntry)> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    if args.by_id {
        let gold_by_id: HashMap<_, _> = gold.iter().map(|e| (&e.id, e)).collect();
        let pred_ids: HashSet<_> = pred.iter().map(|e| &e.id).collect();
        for p in &pred {
            match gold_by_id.get(&p.id) {
                Some(g) => pairs.push((p, g)),
                None => warnings.push(format!("{} has no gold entry", p.id)),
            }
        }
        warnings.extend(gold.iter().filter(|g| !pred_ids.contains(&g.id)).map(|g| format!("{} has no prediction", g.id)));
    } else {
        if pred.len() != gold.len() {
            warnings.push(format!("{} predictions for {} gold entries; extra entries ignored", pred.len(), gold.len()));
        }
        pairs.extend(pred.iter().zip(&gold));
    }
    pairs.retain(|(p, g)| {
        let keep = p.graph.is_some() && g.graph.is_some();
        if !keep {
            warnings.push(format!("{}/{} lacks a graph", p.id, g.id));
        }
        keep
    });
    for w in &warnings {
        eprintln!("warning: {w}; excluded");
    }
    let graphs: Vec<_> = pairs.iter().map(|(p, g)| (p.graph.as_ref().unwrap(), g.graph.as_ref().unwrap())).collect();
    let config = SmatchConfig {
        restarts: args.restarts,
        seed: args.seed,
        normalize_inverse: !args.no_normalize_inverse,
        include_top: !args.no_top,
    };
    let result = score_corpus(&graphs, &config).map_err(|e| fatal("score", e))?;
    let mut out = String::new();
    for ((p, g), s) in pairs.iter().zip(&result.pairs) {
        let c = s.counts;
        match ctx.format {
            Format::Human => writeln!(
                out,
                "{}\t{}\tprecision={:.4} recall={:.4} f1={:.4}",
                p.id,
                g.id,
                c.precision(),
                c.recall(),
                c.f1()
            ),
            Format::Records => writeln!(
                out,
                "pair\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                p.id,
                g.id,
                c.matched,
                c.predicted,
                c.gold,
                c.precision(),
                c.recall(),
                c.f1()
            ),
        }
        .expect("writing to a string");
    }
    let t = result.total;
    match ctx.format {
        Format::Human => writeln!(
            out,
            "corpus ({} pairs)\tprecision={:.4} recall={:.4} f1={:.4}",
            pairs.len(),
            t.precision(),
            t.recall(),
            t.f1()
        ),
        Format::Records => writeln!(
            out,
            "total\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            pairs.len(),
            t.matched,
            t.predicted,
            t.gold,
            t.precision(),
            t.recall(),
            t.f1()
        ),
    }
    .expect("writing to a string");
    write_to(args.out.output.as_deref(), &out)?;
    Ok(OK)
}

pub fn stats(ctx: &Context, file: &Path) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let s = dialamr::corpus::stats(&entries);
    let rows = [
        ("utterances", s.utterances_nonempty),
        ("tokens", s.tokens),
        ("speakers", s.speakers()),
        ("discourse-markers", s.discourse_markers()),
        ("back-channels", s.backchannels()),
        ("reparanda", s.reparanda()),
    ];
    let out: String = rows
        .iter()
        .map(|(k, v)| match ctx.format {
            Format::Human => format!("{k}: {v}\n"),
            Format::Records => format!("{k}\t{v}\n"),
        })
        .collect();
    write_to(None, &out)?;
    Ok(OK)
}

pub fn strip(ctx: &Context, file: &Path, out: &Output, report: Option<&Path>) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let (kept, r) = strip_corpus(&entries);
    write_to(out.output.as_deref(), &corpus_text(&kept)?)?;
    let text = match ctx.format {
        Format::Records => r.to_text(),
        Format::Human => {
            let mut s = format!("stripped {} entries: {}\n", r.entries.len(), r.totals);
            for id in &r.dropped {
                let _ = writeln!(s, "dropped {id}: nothing left after stripping");
            }
            s
        }
    };
    write_report(report, &text)?;
    Ok(OK)
}

pub fn link(ctx: &Context, file: &Path, out: &Output) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let table = resolve(&entries).map_err(|e| fatal(file.display(), e))?;
    let text = match ctx.format {
        Format::Records => table.to_records(),
        Format::Human => {
            let mut s = String::new();
            for l in &table.resolved {
                let r = &l.reference;
                let forward = if l.forward { " (forward)" } else { "" };
                let _ = writeln!(
                    s,
                    "{} {} -> {} {} ({}){forward}",
                    l.referring, r.host_variable, r.source_utterance, r.antecedent_variable, r.antecedent_concept
                );
            }
            for d in &table.dangling {
                let r = &d.reference;
                let _ = writeln!(
                    s,
                    "{} {} -> {} {} ({}) dangling: {}",
                    d.referring, r.host_variable, r.source_utterance, r.antecedent_variable, r.antecedent_concept, d.reason
                );
            }
            s
        }
    };
    write_to(out.output.as_deref(), &text)?;
    Ok(if table.dangling.is_empty() { OK } else { FINDINGS })
}

pub fn merge(file: &Path, ids: &[String], out: &Output) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let span: Vec<CorpusEntry> = if ids.is_empty() {
        entries
    } else {
        let by_id: HashMap<String, &CorpusEntry> = entries.iter().map(|e| (e.id.to_string(), e)).collect();
        ids.iter()
            .map(|id| {
                let key = id.to_uppercase();
                by_id.get(&key).map(|e| (*e).clone()).ok_or_else(|| Fatal(format!("no entry with id {id}")))
            })
            .collect::<Result<_, _>>()?
    };
    let table = resolve(&span).map_err(|e| fatal(file.display(), e))?;
    match merge_dialogue(&span, &table, MergeOptions::default()) {
        Ok(graph) => {
            let text = serialize(&graph, SerializationStyle::default()).map_err(|e| fatal("serialize", e))?;
            write_to(out.output.as_deref(), &format!("{text}\n"))?;
            Ok(OK)
        }
        Err(e) => {
            eprintln!("dialamr: {}: {e}", file.display());
            Ok(FINDINGS)
        }
    }
}

pub fn linearize(file: &Path, out: &Output) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let mut text = String::new();
    for e in &entries {
        if let Some(g) = &e.graph {
            text.push_str(&linearize_line(g).map_err(|err| fatal(&e.id, err))?);
            text.push('\n');
        }
    }
    write_to(out.output.as_deref(), &text)?;
    Ok(OK)
}

pub fn rename(file: &Path, out: &Output) -> Result<Status, Fatal> {
    let mut entries = load_strict(file)?;
    for e in &mut entries {
        e.graph = e.graph.as_ref().map(rename_variables);
    }
    write_to(out.output.as_deref(), &corpus_text(&entries)?)?;
    Ok(OK)
}

/// Repairs every line; returns the output lines (empty when unrepairable)
/// and the status records.
fn repair_lines(format: Format, lines: &[String]) -> Result<(Vec<String>, String, bool), Fatal> {
    let results = repair_batch(lines);
    let mut graphs = Vec::with_capacity(lines.len());
    let mut status = String::new();
    let mut any_failed = false;
    for (i, result) in results.into_iter().enumerate() {
        let line = i + 1;
        let (state, log, graph) = match result {
            Ok(r) if r.log.is_clean() => ("ok", r.log, Some(r.graph)),
            Ok(r) => ("repaired", r.log, Some(r.graph)),
            Err(RepairError::Unrepairable { log }) => ("unrepairable", log, None),
        };
        any_failed |= graph.is_none();
        graphs.push(match graph {
            Some(g) => serialize(&g, SerializationStyle::seq2seq()).map_err(|e| fatal(format!("line {line}"), e))?,
            None => String::new(),
        });
        match format {
            Format::Records => {
                let _ = writeln!(status, "{line}\tstatus\t{state}\tactions={}", log.actions.len());
                status.push_str(&log.to_records(line));
            }
            Format::Human => {
                let _ = writeln!(status, "line {line}: {state}");
                for a in &log.actions {
                    let _ = writeln!(status, "    {a}");
                }
            }
        }
    }
    Ok((graphs, status, any_failed))
}

pub fn repair(ctx: &Context, file: &Path, out: &Output, status_path: Option<&Path>) -> Result<Status, Fatal> {
    let text = fs::read_to_string(file).map_err(|e| fatal(file.display(), e))?;
    let lines: Vec<String> = text.lines().map(str::to_string).collect();
    let (graphs, status, any_failed) = repair_lines(ctx.format, &lines)?;
    let body: String = graphs.iter().map(|g| format!("{g}\n")).collect();
    write_to(out.output.as_deref(), &body)?;
    write_report(status_path, &status)?;
    Ok(if any_failed { FINDINGS } else { OK })
}

pub fn split(ctx: &Context, file: &Path, seed: u64, out_dir: &Path, fractions: Option<Vec<f64>>) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let fractions = match fractions.as_deref() {
        Some(&[a, b, c]) => (a, b, c),
        Some(_) => return Err(Fatal("--fractions takes three values".into())),
        None => DEFAULT_FRACTIONS,
    };
    let parts = split_corpus(&entries, fractions, seed).map_err(|e| fatal(file.display(), e))?;
    let mut summary = String::new();
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        let path = out_dir.join(format!("{name}.amr"));
        write_to(Some(&path), &corpus_text(part)?)?;
        match ctx.format {
            Format::Human => writeln!(summary, "{name}: {} entries -> {}", part.len(), path.display()),
            Format::Records => writeln!(summary, "{name}\t{}\t{}", part.len(), path.display()),
        }
        .expect("writing to a string");
    }
    write_to(None, &summary)?;
    Ok(OK)
}

pub fn predict(file: &Path, model: String, model_args: Vec<String>, out: &Output) -> Result<Status, Fatal> {
    let entries = load_strict(file)?;
    let inputs: Vec<&CorpusEntry> = entries.iter().filter(|e| e.graph.is_some()).collect();
    let lines: Vec<String> = inputs
        .iter()
        .map(|e| linearize_line(e.graph.as_ref().unwrap()).map_err(|err| fatal(&e.id, err)))
        .collect::<Result<_, _>>()?;
    let outputs = ExternalModel::new(model, model_args).predict(&lines).map_err(|e| fatal("model", e))?;
    let mut predicted = Vec::with_capacity(inputs.len());
    let mut any_failed = false;
    for (entry, result) in inputs.iter().zip(repair_batch(&outputs)) {
        let mut e = (*entry).clone();
        match result {
            Ok(r) => e.graph = Some(r.graph),
            Err(_) => {
                eprintln!("warning: {}: model output could not be repaired", entry.id);
                e.graph = None;
                any_failed = true;
            }
        }
        predicted.push(e);
    }
    write_to(out.output.as_deref(), &corpus_text(&predicted)?)?;
    Ok(if any_failed { FINDINGS } else { OK })
}
