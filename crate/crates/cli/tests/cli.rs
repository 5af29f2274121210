use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dialamr::seq2seq::linearize;
use dialamr::{parse, Variable};
use tempfile::TempDir;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(rel)
}

fn corpus() -> PathBuf {
    data("mini_corpus.amr")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialamr")).args(args).env_remove("DIALAMR_INVENTORY").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes figure fixtures as a corpus file, one entry per figure.
fn figure_corpus(dir: &TempDir, name: &str, figures: &[(&str, &str)]) -> PathBuf {
    let mut text = String::new();
    for (id, figure) in figures {
        let graph = fs::read_to_string(data(&format!("figures/{figure}.amr"))).unwrap();
        text.push_str(&format!("# ::id {id}\n# ::snt -\n{}\n\n", graph.trim_end()));
    }
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn check_conformant_corpus_is_silent() {
    let o = run(&["check", p(&corpus())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");
}

#[test]
fn check_reports_cycle_with_entry_id() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("cycle.amr");
    fs::write(&path, "# ::id 0007B\n# ::snt x\n(a / and\n    :op1 (b / boy\n        :op1 a))\n").unwrap();
    let o = run(&["check", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains(":0007B:") && out.contains("R1"), "{out}");
    let o = run(&["check", "--format", "records", p(&path)]);
    assert!(stdout(&o).lines().any(|l| l.split('\t').collect::<Vec<_>>()[1..4] == ["0007B", "error", "R1"]));
}

#[test]
fn check_missing_file_and_parse_failure() {
    assert_eq!(run(&["check", "/nonexistent/corpus.amr"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.amr");
    fs::write(&path, "# ::id 0001A\n# ::snt x\n(a / and :op1 (b / boy)\n").unwrap();
    let o = run(&["check", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("P0"));
}

#[test]
fn check_strict_and_inventory() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("typo.amr");
    fs::write(&path, "# ::id 0001A\n# ::snt x\n(p / put-01 :discourse-markr \"et\")\n").unwrap();
    assert_eq!(run(&["check", "--strict", p(&path)]).status.code(), Some(1));
    let o = run(&["check", "--inventory", "/nonexistent/roles.txt", p(&path)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn score_against_itself() {
    let o = run(&["score", "--gold", p(&corpus()), "--pred", p(&corpus())]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().last().unwrap().ends_with("f1=1.0000"), "{}", stdout(&o));
    // the entry without a graph is excluded with a warning
    assert!(String::from_utf8_lossy(&o.stderr).contains("0400Y"));
}

#[test]
fn score_fixture_pair_matches_hand_count() {
    let dir = TempDir::new().unwrap();
    let gold = figure_corpus(&dir, "gold.amr", &[("0001A", "gold_reference")]);
    let pred = figure_corpus(&dir, "pred.amr", &[("0001A", "predicted_output")]);
    let mut outputs = Vec::new();
    for seed in ["0", "1", "977"] {
        let o = run(&["score", "--format", "records", "--seed", seed, "--gold", p(&gold), "--pred", p(&pred)]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(stdout(&o));
    }
    let total: Vec<String> = outputs[0].lines().last().unwrap().split('\t').map(String::from).collect();
    // 2 matched of 16 predicted and 4 gold triples
    assert_eq!(total[..5], ["total", "1", "2", "16", "4"]);
    assert_eq!(total[7], "0.2000");
    assert!(outputs.iter().all(|o| *o == outputs[0]));
}

#[test]
fn score_by_id_and_empty_intersection() {
    let dir = TempDir::new().unwrap();
    let gold = figure_corpus(&dir, "gold.amr", &[("0001A", "break_window"), ("0002B", "discourse_marker")]);
    let pred = figure_corpus(&dir, "pred.amr", &[("0002B", "discourse_marker"), ("0003A", "break_window")]);
    let o = run(&["score", "--by-id", "--gold", p(&gold), "--pred", p(&pred)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("f1=1.0000\n"));
    let stderr = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(stderr.contains("0003A") && stderr.contains("0001A"), "{stderr}");
    let other = figure_corpus(&dir, "other.amr", &[("0009A", "break_window")]);
    assert_eq!(run(&["score", "--by-id", "--gold", p(&gold), "--pred", p(&other)]).status.code(), Some(2));
}

#[test]
fn stats_records() {
    let o = run(&["stats", "--format", "records", p(&corpus())]);
    assert_eq!(
        stdout(&o),
        "utterances\t11\ntokens\t87\nspeakers\t4\ndiscourse-markers\t6\nback-channels\t1\nreparanda\t1\n"
    );
}

#[test]
fn strip_output_passes_strict_check() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("stripped.amr");
    let report = dir.path().join("report.tsv");
    let o = run(&["strip", "--format", "records", p(&corpus()), "-o", p(&out), "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");
    let report = fs::read_to_string(report).unwrap();
    assert!(report.contains("dropped\t0852Y"));
    assert!(report.lines().last().unwrap().starts_with("total\tdiscourse-markers=6 back-channels=1 reparanda=1"));
    let check = run(&["check", "--strict", p(&out)]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(stdout(&check), "");
    let stats = stdout(&run(&["stats", "--format", "records", p(&out)]));
    assert!(stats.contains("discourse-markers\t0\nback-channels\t0\nreparanda\t0\n"), "{stats}");
}

#[test]
fn link_and_merge() {
    let o = run(&["link", "--format", "records", p(&corpus())]);
    assert_eq!(o.status.code(), Some(0));
    let records = stdout(&o);
    assert!(records.contains("0082B\ts1\t0080B\ts\tstone\tresolved\t-\n"), "{records}");

    let dir = TempDir::new().unwrap();
    let merged = dir.path().join("merged.amr");
    let o = run(&["merge", p(&corpus()), "--ids", "0080B,0082B", "-o", p(&merged)]);
    assert_eq!(o.status.code(), Some(0));
    let g = parse(&fs::read_to_string(&merged).unwrap()).unwrap();
    assert_eq!(g.concept(&g.root).unwrap().as_str(), "multi-sentence");
    assert!(g.concept(&Variable::new("s1").unwrap()).is_none());

    let o = run(&["merge", p(&corpus()), "--ids", "0082B"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn linearize_and_rename() {
    let o = run(&["linearize", p(&corpus())]);
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert_eq!(first, "( b / break-01 :ARG0 ( m / man ) :ARG1 ( w / window ) )");
    let dir = TempDir::new().unwrap();
    let renamed = dir.path().join("renamed.amr");
    assert_eq!(run(&["rename", p(&corpus()), "-o", p(&renamed)]).status.code(), Some(0));
    assert_eq!(stdout(&run(&["linearize", p(&renamed)])), stdout(&o));
    let o = run(&["score", "--gold", p(&corpus()), "--pred", p(&renamed)]);
    assert!(stdout(&o).ends_with("f1=1.0000\n"));
}

#[test]
fn split_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    for out in [&a, &b] {
        let o = run(&["split", p(&corpus()), "--seed", "0", "--out-dir", p(out), "--fractions", "0.5,0.25,0.25"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for part in ["train.amr", "dev.amr", "test.amr"] {
        assert_eq!(fs::read(a.join(part)).unwrap(), fs::read(b.join(part)).unwrap());
    }
    assert_ne!(run(&["split", p(&corpus()), "--out-dir", p(&a)]).status.code(), Some(0));
}

/// Every single-token deletion of every corpus linearization.
fn fuzz_lines() -> Vec<String> {
    let loaded = dialamr::corpus::load_path(&corpus()).unwrap();
    let mut lines = Vec::new();
    for g in loaded.entries.iter().filter_map(|e| e.graph.as_ref()) {
        let tokens = linearize(g).unwrap();
        for i in 0..tokens.len() {
            let mut t = tokens.clone();
            t.remove(i);
            lines.push(t.join(" "));
        }
    }
    lines
}

#[test]
fn repair_fuzz_file() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("fuzz.txt");
    let lines = fuzz_lines();
    fs::write(&input, lines.join("\n") + "\n").unwrap();
    let (out, status) = (dir.path().join("out.txt"), dir.path().join("status.tsv"));
    run(&["repair", "--format", "records", p(&input), "-o", p(&out), "--status", p(&status)]);
    let status = fs::read_to_string(status).unwrap();
    let states: Vec<&str> =
        status.lines().filter(|l| l.split('\t').nth(1) == Some("status")).map(|l| l.split('\t').nth(2).unwrap()).collect();
    assert_eq!(states.len(), lines.len());
    let ok = states.iter().filter(|s| **s != "unrepairable").count();
    assert!(ok * 100 >= lines.len() * 99, "{ok}/{}", lines.len());
    let repaired = fs::read_to_string(&out).unwrap();
    assert_eq!(repaired.lines().count(), lines.len());
    for line in repaired.lines().filter(|l| !l.is_empty()) {
        parse(line).unwrap();
    }
}

#[test]
fn repair_contentless_input() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.txt");
    fs::write(&input, ")))\n").unwrap();
    let o = run(&["repair", p(&input)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "\n");
    assert!(String::from_utf8_lossy(&o.stderr).contains("unrepairable"));
}

#[test]
fn jobs_do_not_change_results() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("fuzz.txt");
    fs::write(&input, fuzz_lines().join("\n")).unwrap();
    let repair_with = |jobs: &str| run(&["--jobs", jobs, "repair", "--format", "records", p(&input)]);
    let (one, four) = (repair_with("1"), repair_with("4"));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stderr, four.stderr);

    let repaired = dir.path().join("repaired.txt");
    fs::write(&repaired, &one.stdout).unwrap();
    let score_with = |jobs: &str| {
        run(&["--jobs", jobs, "score", "--format", "records", "--gold", p(&corpus()), "--pred", p(&corpus())]).stdout
    };
    assert_eq!(score_with("1"), score_with("3"));
}

#[cfg(unix)]
#[test]
fn predict_through_identity_model() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pred.amr");
    let o = run(&["predict", p(&corpus()), "--model", "cat", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["score", "--by-id", "--gold", p(&corpus()), "--pred", p(&out)]);
    assert!(stdout(&o).ends_with("f1=1.0000\n"), "{}", stdout(&o));
    let o = run(&["predict", p(&corpus()), "--model", "/nonexistent/model"]);
    assert_eq!(o.status.code(), Some(2));
}
