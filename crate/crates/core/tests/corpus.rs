mod common;

use std::process::Command;

use common::*;
use dbrepair::cqa::{Cqa, Query};
use dbrepair::tableau::BuildOptions;

const CASES: [&str; 6] = ["supply", "referential", "two_models", "student", "student_exist", "employee"];

fn cli(args: &[&str]) -> String {
    let o = Command::new(env!("CARGO_BIN_EXE_dbrepair")).args(args).output().unwrap();
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn golden_outputs() {
    for case in CASES {
        let dir = corpus(case);
        let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
        let (facts, ic, query) = (p("facts"), p("ic"), p("query"));
        let mut got = cli(&["repairs", "--facts", &facts, "--ic", &ic]);
        got.push_str(&cli(&["cqa", "--facts", &facts, "--ic", &ic, "--queries", &query]));
        assert_eq!(got, read(case, "expected"), "{case}");
    }
}

#[test]
fn goldens_hold_without_pruning() {
    for case in CASES {
        let dir = corpus(case);
        let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
        let (facts, ic, query) = (p("facts"), p("ic"), p("query"));
        let flags = ["--no-groundedness", "--no-subsumption"];
        let mut got = cli(&[&["repairs", "--facts", &facts, "--ic", &ic][..], &flags].concat());
        got.push_str(&cli(&[&["cqa", "--facts", &facts, "--ic", &ic, "--queries", &query][..], &flags].concat()));
        assert_eq!(got, read(case, "expected"), "{case}");
    }
}

#[test]
fn open_and_closed_queries_agree() {
    for case in CASES {
        let (ics, r) = load(case);
        let cqa = Cqa::new(&ics, &r, &BuildOptions::default()).unwrap();
        for q in Query::parse_many(&read(case, "query"), r.schema()).unwrap() {
            if q.is_sentence() {
                continue;
            }
            let answers = cqa.answer(&q).unwrap().tuples();
            for t in cqa.candidates(&q) {
                let (yes, _) = cqa.holds(&q.bind(&t)).unwrap();
                assert_eq!(answers.contains(&t), yes, "{case}: {q} at {t:?}");
            }
            assert_eq!(cqa.answer_by_intersection(&q).tuples(), answers, "{case}: {q}");
        }
    }
}

#[test]
fn provenance_names_a_closing_per_repair() {
    let (ics, r) = load("student_exist");
    let cqa = Cqa::new(&ics, &r, &BuildOptions::default()).unwrap();
    let q = query(&r, "exists X. student(s1,X,d1)");
    let (yes, closings) = cqa.holds(&q.formula).unwrap();
    assert!(yes);
    let repairs: std::collections::BTreeSet<usize> = closings.iter().map(|c| c.repair).collect();
    assert_eq!(repairs.len(), 2);
}

#[test]
fn employee_update_shrinks_answers() {
    let (ics, r) = load("employee");
    let (_, r2) = setup(&read("employee", "ic"), &read("employee", "update.facts"));
    let q = query(&r, "employee(X,Y)");
    let opts = BuildOptions::default();
    let before = Cqa::new(&ics, &r, &opts).unwrap().answer(&q).unwrap();
    let after = Cqa::new(&ics, &r2, &opts).unwrap().answer(&q).unwrap();
    assert_eq!(before.answers.len(), 3);
    assert_eq!(after.answers.len(), 2);
    assert!(after.tuples().is_subset(&before.tuples()));
}
