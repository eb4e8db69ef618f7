mod common;

use std::process::{Command, Output};

use common::corpus;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbrepair")).args(args).output().unwrap()
}

fn on(cmd: &str, case: &str, extra: &[&str]) -> Output {
    let dir = corpus(case);
    let facts = dir.join("facts");
    let ic = dir.join("ic");
    let mut args = vec![cmd, "--facts", facts.to_str().unwrap(), "--ic", ic.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_reports_inconsistency_with_exit_one() {
    let o = on("check", "supply", &[]);
    assert_eq!(stdout(&o), "inconsistent\n");
    assert_eq!(o.status.code(), Some(1));
    let o = on("check", "employee", &["--verify"]);
    assert_eq!(stdout(&o), "consistent\n");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn repairs_prints_one_section_per_repair() {
    let o = on("repairs", "two_models", &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "--- repair 1 ---\np(a).\nq(a).\nr(b).\n--- repair 2 ---\nr(b).\n");
}

#[test]
fn cqa_inline_query() {
    let o = on("cqa", "student", &["--query", "course(X,Y,Z)"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "? course(X,Y,Z)\n(s1,c1,g1)\n(s1,c2,g2)\n");
}

#[test]
fn json_output_is_versioned() {
    let o = on("repairs", "supply", &["--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["repairs"].as_array().unwrap().len(), 2);
    assert_eq!(v["repairs"][1]["deletions"][0], "class(it2,t4)");

    let o = on("cqa", "student", &["--query", "student(s1,n2,d1)", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["answers"][0]["verdict"], false);
}

#[test]
fn explain_lists_closures_and_openings() {
    let o = on("explain", "supply", &["--no-subsumption", "--no-groundedness"]);
    let out = stdout(&o);
    assert!(out.contains("B9 × [cond 1: d = c under unique names]"), "{out}");
    assert!(out.contains("B7: L = {supply(d,d2,it2)}"), "{out}");
    assert!(out.contains("B3: not data closed"), "{out}");
}

#[test]
fn oracle_commands_agree_with_engine() {
    for case in ["supply", "two_models", "student"] {
        let a = on("repairs", case, &[]);
        let b = on("oracle-repairs", case, &[]);
        assert_eq!(stdout(&a), stdout(&b), "{case}");
    }
    let q = corpus("student_exist").join("query");
    let a = on("cqa", "student_exist", &["--queries", q.to_str().unwrap()]);
    let b = on("oracle-cqa", "student_exist", &["--queries", q.to_str().unwrap()]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn diff_finds_no_discrepancy_on_corpus() {
    for case in ["supply", "referential", "two_models", "student", "student_exist", "employee"] {
        let q = corpus(case).join("query");
        let o = on("diff", case, &["--queries", q.to_str().unwrap(), "--seed", "3"]);
        assert!(o.status.success(), "{case}: {}", stdout(&o));
        assert!(stdout(&o).contains("discrepancies: 0"), "{case}");
    }
}

#[test]
fn verify_passes_on_corpus() {
    let q = corpus("student").join("query");
    assert!(on("repairs", "student", &["--verify"]).status.success());
    assert!(on("cqa", "student", &["--verify", "--queries", q.to_str().unwrap()]).status.success());
}

#[test]
fn output_is_deterministic() {
    let q = corpus("student_exist").join("query");
    let a = on("cqa", "student_exist", &["--queries", q.to_str().unwrap(), "--format", "json"]);
    let b = on("cqa", "student_exist", &["--queries", q.to_str().unwrap(), "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let a = on("explain", "referential", &[]);
    let b = on("explain", "referential", &[]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.facts");
    std::fs::write(&bad, "p(a).\nq(a,\n").unwrap();
    let ic = corpus("two_models").join("ic");
    let o = run(&["repairs", "--facts", bad.to_str().unwrap(), "--ic", ic.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.facts:2:"), "{}", stderr(&o));

    let o = run(&["repairs", "--facts", "/nonexistent/facts", "--ic", ic.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = on("cqa", "two_models", &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = on("repairs", "two_models", &["--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn arity_clash_between_files_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let ic = dir.path().join("ic");
    std::fs::write(&ic, "forall X. (p(X,X) -> q(X))\n").unwrap();
    let facts = corpus("two_models").join("facts");
    let o = run(&["check", "--facts", facts.to_str().unwrap(), "--ic", ic.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_caps_exit_three() {
    let o = on("repairs", "supply", &["--max-branches", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("branches"));
}
