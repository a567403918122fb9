mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clinlex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clinlex"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(name: &str) -> String {
    common::fixtures().join(name).to_string_lossy().into_owned()
}

fn resources(cache: &Path) -> Vec<String> {
    vec![
        "--lexicon".into(),
        fixture("lexicon.tsv"),
        "--transforms".into(),
        fixture("transforms.tsv"),
        "--rules".into(),
        fixture("context.rules"),
        "--cache".into(),
        cache.to_string_lossy().into_owned(),
    ]
}

fn run(sub: &str, extra: &[String]) -> Output {
    let mut args = vec![sub.to_string()];
    args.extend_from_slice(extra);
    clinlex(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn eval_identity_scores_one() {
    let corpus = fixture("corpus");
    let out = clinlex(&["eval", "--task", "ner", "--gold", &corpus, "--sys", &corpus]);
    assert!(out.status.success(), "{}", stderr(&out));
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.ends_with("1.00000    1.00000    1.00000"), "{row}");
}

#[test]
fn check_rules_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.rules");
    fs::write(&bad, "- [Cr] - > [m=cromo]\n\n[il::urea - [Cr] - > [m=creatinina]\n").unwrap();
    let out = clinlex(&["check-rules", "--rules", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));

    let good = clinlex(&["check-rules", "--rules", &fixture("context.rules")]);
    assert!(good.status.success());
    assert_eq!(stdout(&good), "4 rules (3 contextual, 1 default)\n");
}

#[test]
fn compile_twice_hits_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("lexicon.cache");
    let first = run("compile", &resources(&cache));
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("cache\twritten"));
    assert!(stdout(&first).contains("primary entities\t37"));
    let second = run("compile", &resources(&cache));
    assert!(stdout(&second).contains("cache\thit"), "{}", stdout(&second));

    let mut plural_free = resources(&cache);
    plural_free.push("--no-plurals".into());
    let third = run("compile", &plural_free);
    assert!(stdout(&third).contains("cache\twritten"));
}

#[test]
fn corrupt_cache_is_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("lexicon.cache");
    run("compile", &resources(&cache));
    let bytes = fs::read(&cache).unwrap();
    fs::write(&cache, &bytes[..bytes.len() / 2]).unwrap();
    let out = run("compile", &resources(&cache));
    assert!(out.status.success());
    assert!(stdout(&out).contains("cache\twritten"));
    assert!(stderr(&out).contains("corrupt"), "{}", stderr(&out));
}

#[test]
fn annotate_then_eval_matches_golden_scores() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("lexicon.cache");
    let out_dir = dir.path().join("sys");
    let mut args = resources(&cache);
    args.extend(["--input".into(), fixture("corpus"), "--output".into(), out_dir.to_string_lossy().into_owned()]);
    let out = run("annotate", &args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read_to_string(out_dir.join("index.tsv")).unwrap(),
        common::read("golden/sys/index.tsv")
    );
    let diff = dir.path().join("diff.tsv");
    let eval = clinlex(&[
        "eval",
        "--gold",
        &fixture("corpus"),
        "--sys",
        out_dir.to_str().unwrap(),
        "--diff",
        diff.to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    assert_eq!(stdout(&eval), common::read("golden/scores.txt"));
    assert_eq!(fs::read_to_string(diff).unwrap(), common::read("golden/diff.tsv"));
}

#[test]
fn jobs_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out_dir = dir.path().join(format!("sys{jobs}"));
        let mut args = resources(&dir.path().join("lexicon.cache"));
        args.extend([
            "--input".into(),
            fixture("corpus"),
            "--output".into(),
            out_dir.to_string_lossy().into_owned(),
            "--jobs".into(),
            jobs.into(),
        ]);
        assert!(run("annotate", &args).status.success());
        let mut files: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        outputs.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn fuzzy_scan_writes_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("candidates.tsv");
    let mut args = resources(&dir.path().join("lexicon.cache"));
    args.extend([
        "--input".into(),
        fixture("corpus"),
        "--vocab".into(),
        fixture("vocab.txt"),
        "--output".into(),
        out.to_string_lossy().into_owned(),
    ]);
    let run_out = run("fuzzy-scan", &args);
    assert!(run_out.status.success(), "{}", stderr(&run_out));
    assert_eq!(fs::read_to_string(out).unwrap(), common::read("fuzzy/candidates.tsv"));
}

#[test]
fn usage_errors_exit_one() {
    let out = clinlex(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!stderr(&out).is_empty());
    let out = clinlex(&["eval", "--gold", "/nonexistent", "--sys", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(1));
    let help = clinlex(&["annotate", "--help"]);
    assert!(help.status.success());
    for flag in ["--window", "--jobs", "--limit", "--cache", "--no-plurals"] {
        assert!(stdout(&help).contains(flag), "{flag}");
    }
}

#[test]
fn unknown_system_document_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("zz.ann"), "").unwrap();
    let out = clinlex(&["eval", "--gold", &fixture("corpus"), "--sys", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("zz"));
}
