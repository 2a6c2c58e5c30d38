use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gec-lab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn put(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join(name)).unwrap()
}

const GOLD: &str = "S a b c\nA 1 2|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n\nS d e\nA 2 2|||M:PUNCT|||.|||REQUIRED|||-NONE-|||0\n";

#[test]
fn unknown_subcommand_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&gec(d.path(), &["bogus"])), 2);
    assert_eq!(code(&gec(d.path(), &[])), 2);
}

#[test]
fn help_exits_cleanly() {
    let d = tempfile::tempdir().unwrap();
    let o = gec(d.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("bpe-learn"));
}

#[test]
fn m2_prints_percentages() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "gold.m2", GOLD);
    put(&d, "hyp.txt", "a x d\nd e .\n");
    let o = gec(d.path(), &["m2", "--hyp", "hyp.txt", "--gold", "gold.m2", "--json", "run.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    let head: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(head, ["P", "R", "F0.5"]);
    let vals: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    // tp 2, fp 1, fn 0
    assert_eq!(vals, ["66.67", "100.00", "71.43"]);
    let json = read(&d, "run.json");
    assert!(json.contains("\"metric\": \"m2\"") || json.contains("\"metric\":\"m2\""));
}

#[test]
fn m2_with_wrong_line_count_is_validation_error() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "gold.m2", GOLD);
    put(&d, "hyp.txt", "a x d\n");
    let o = gec(d.path(), &["m2", "--hyp", "hyp.txt", "--gold", "gold.m2"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn missing_file_is_io_error() {
    let d = tempfile::tempdir().unwrap();
    let o = gec(d.path(), &["m2", "--hyp", "nope.txt", "--gold", "nope.m2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn seeded_commands_need_a_seed() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "in.txt", "a b c\n");
    put(&d, "noise.cfg", "word_error_rate = 0.5\n");
    let o = gec(d.path(), &["noise", "--input", "in.txt", "--out-src", "s", "--out-tgt", "t", "--config", "noise.cfg"]);
    assert_eq!(code(&o), 2);
    let o = gec(d.path(), &["denoise", "--input", "in.txt", "--out-src", "s", "--out-tgt", "t"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gleu_with_several_references_needs_a_seed() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "src.txt", "a b c d\n");
    put(&d, "hyp.txt", "a b c e\n");
    put(&d, "r1.txt", "a b c e\n");
    put(&d, "r2.txt", "a b c f\n");
    let args = ["gleu", "--src", "src.txt", "--hyp", "hyp.txt", "--ref", "r1.txt", "--ref", "r2.txt"];
    assert_eq!(code(&gec(d.path(), &args)), 2);

    let one = gec(d.path(), &["gleu", "--src", "src.txt", "--hyp", "hyp.txt", "--ref", "r1.txt"]);
    assert_eq!(code(&one), 0);
    assert_eq!(stdout(&one).trim(), "1.0000");

    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "7"]);
    let a = gec(d.path(), &seeded);
    let b = gec(d.path(), &seeded);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn json_only_for_scoring_commands() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "in.txt", "low lower lowest\n");
    let o = gec(d.path(), &["bpe-learn", "--input", "in.txt", "--merges", "3", "--model", "m.bpe", "--json", "x.json"]);
    assert_eq!(code(&o), 2);
    assert!(!d.path().join("x.json").exists());
}

#[test]
fn bpe_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let text = "the lowest newer low\nwidest newest lower\n";
    put(&d, "in.txt", text);
    assert_eq!(code(&gec(d.path(), &["bpe-learn", "--input", "in.txt", "--merges", "10", "--model", "m.bpe"])), 0);
    assert_eq!(code(&gec(d.path(), &["bpe-apply", "--model", "m.bpe", "--input", "in.txt", "--output", "sub.txt"])), 0);
    let sub = read(&d, "sub.txt");
    assert_ne!(sub, text);
    assert_eq!(code(&gec(d.path(), &["bpe-restore", "--input", "sub.txt", "--output", "back.txt"])), 0);
    assert_eq!(read(&d, "back.txt"), text);
}

#[test]
fn noise_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "in.txt", "the cat sat on the mat\nshe has a red car\n");
    put(&d, "vocab.txt", "the\ncat\ncap\nsat\nset\non\nmat\nmap\nshe\nhas\na\nred\nrod\ncar\n");
    put(&d, "noise.cfg", "word_error_rate = 0.5\nvocab = vocab.txt\n");
    let run = |tag: &str| {
        let (s, t) = (format!("s{tag}"), format!("t{tag}"));
        let o = gec(d.path(), &["noise", "--seed", "3", "--input", "in.txt", "--out-src", &s, "--out-tgt", &t, "--config", "noise.cfg"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (read(&d, &s), read(&d, &t))
    };
    let (s1, t1) = run("1");
    let (s2, _) = run("2");
    assert_eq!(s1, s2);
    assert_eq!(t1, read(&d, "in.txt"));
    assert_eq!(s1.lines().count(), 2);
}

#[test]
fn denoise_emits_one_line_per_paragraph() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "in.txt", "a b c d e f\ng h i j\n\nk l m n o p q r\n");
    let o = gec(d.path(), &["denoise", "--seed", "1", "--input", "in.txt", "--out-src", "s", "--out-tgt", "t", "--shuffle"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tgt = read(&d, "t");
    let src = read(&d, "s");
    assert_eq!(tgt.lines().count(), 2);
    assert_eq!(src.lines().count(), 2);
    assert!(src.contains("<mask>"));
}

#[test]
fn filter_drops_unchanged_and_tags() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "s.txt", "a b\nc d\ne\n");
    put(&d, "t.txt", "a b\nc x\ne f\n");
    let o = gec(d.path(), &["filter", "--src", "s.txt", "--tgt", "t.txt", "--out-src", "os", "--out-tgt", "ot", "--lang", "de_DE"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&d, "os"), "c d\ne\n");
    assert_eq!(read(&d, "ot"), "c x <de_DE>\ne f <de_DE>\n");

    let o = gec(d.path(), &["filter", "--src", "s.txt", "--tgt", "t.txt", "--out-src", "os", "--out-tgt", "ot", "--lang", "xx_YY"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn extract_writes_m2() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "s.txt", "I saw cat\nfine\n");
    put(&d, "h.txt", "I saw a cat\nfine\n");
    let o = gec(d.path(), &["extract", "--src", "s.txt", "--hyp", "h.txt"]);
    assert_eq!(code(&o), 0);
    let m2 = stdout(&o);
    assert!(m2.contains("S I saw cat\nA 2 2|||"));
    assert!(m2.contains("|||a|||"));
    assert!(m2.contains("S fine\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0"));
}

#[test]
fn correct_identity_and_spell() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "in.txt", "teh cat\n");
    put(&d, "vocab.txt", "the\ncat\n");
    assert_eq!(code(&gec(d.path(), &["correct", "--method", "identity", "--input", "in.txt", "--output", "o1"])), 0);
    assert_eq!(read(&d, "o1"), "teh cat\n");
    assert_eq!(code(&gec(d.path(), &["correct", "--method", "spell", "--input", "in.txt", "--output", "o2"])), 2);
    let o = gec(d.path(), &["correct", "--method", "spell", "--vocab", "vocab.txt", "--input", "in.txt", "--output", "o2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&d, "o2"), "the cat\n");
}

#[test]
fn errant_lite_table() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "gold.m2", "S I saw cat in park\nA 2 2|||M:DET|||a|||REQUIRED|||-NONE-|||0\n\nS hi\nA 1 1|||M:PUNCT|||!|||REQUIRED|||-NONE-|||0\n");
    put(&d, "hyp.txt", "I saw a cat in park\nhi\n");
    fs::create_dir(d.path().join("lex")).unwrap();
    put(&d, "lex/determiners.txt", "a\nan\nthe\n");
    put(&d, "lex/prepositions.txt", "in\non\n");
    let o = gec(d.path(), &["errant-lite", "--hyp", "hyp.txt", "--gold", "gold.m2", "--lexicons", "lex"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("Error Type"));
    assert!(out.lines().any(|l| l.starts_with("DET") && l.contains("100.0")));
    assert!(out.lines().any(|l| l.starts_with("PUNCT") && l.contains("0.0")));
}

#[test]
fn report_averages_runs() {
    let d = tempfile::tempdir().unwrap();
    put(&d, "gold.m2", GOLD);
    put(&d, "h1.txt", "a x d\nd e .\n");
    put(&d, "h2.txt", "a x c\nd e\n");
    for (h, j) in [("h1.txt", "r1.json"), ("h2.txt", "r2.json")] {
        assert_eq!(code(&gec(d.path(), &["m2", "-q", "--hyp", h, "--gold", "gold.m2", "--json", j])), 0);
    }
    let o = gec(d.path(), &["report", "--runs", "r1.json", "r2.json", "--markdown"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with('|'));
    assert!(out.contains("mean (n=2)"));
    assert!(out.contains('±'));

    let o = gec(d.path(), &["report", "--runs", "r1.json", "r2.json", "--pooled"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("pooled"));
}
