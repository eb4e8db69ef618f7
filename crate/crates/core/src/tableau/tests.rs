use super::*;
use crate::instance::Schema;

fn setup(ic: &str, facts: &str) -> (Constraints, Instance) {
    let mut s = Schema::new();
    let r = Instance::parse_with(facts, &mut s).unwrap();
    let ics = Constraints::parse(ic, &mut s).unwrap();
    (ics, r.with_schema(s).unwrap())
}

fn plain() -> BuildOptions {
    BuildOptions { regularity: true, subsumption: false, groundedness: false, ..BuildOptions::default() }
}

fn reasons(t: &Tableau) -> Vec<String> {
    t.branches
        .iter()
        .map(|b| match b.status() {
            Status::Closed(r) => r.to_string(),
            Status::Open => "open".into(),
            Status::Suspended(_) => "suspended".into(),
        })
        .collect()
}

const SUPPLY_IC: &str = "forall X,Y,Z. (supply(X,Y,Z) & class(Z,t4) -> X = c)";
const SUPPLY: &str = "supply(c,d1,it1). supply(d,d2,it2). class(it1,t4). class(it2,t4).";

#[test]
fn supply_class_has_nine_closed_branches() {
    let (ics, r) = setup(SUPPLY_IC, SUPPLY);
    let t = build(&ics, &r, &plain()).unwrap();
    assert_eq!(t.branches.len(), 9);
    assert!(t.is_closed());
    let got = reasons(&t);
    for i in [2, 5, 8] {
        assert_eq!(got[i], "cond 1: d = c under unique names");
    }
    assert_eq!(got[6], "cond 3: ~supply(d,d2,it2) but supply(d,d2,it2) in r");
    assert_eq!(got[7], "cond 3: ~class(it2,t4) but class(it2,t4) in r");
}

#[test]
fn missing_skolem_witness_closes() {
    let (ics, r) = setup("forall X. (p(X) -> exists Y. q(X,Y))", "p(a). q(b,d).");
    let t = build(&ics, &r, &plain()).unwrap();
    let got = reasons(&t);
    assert_eq!(got, vec!["cond 3: ~p(a) but p(a) in r", "cond 2b: no σ for q(a,$f1(a))"]);
}

#[test]
fn skolem_witness_in_instance_stays_open() {
    let (ics, r) = setup("forall X. (p(X) -> exists Y. q(X,Y))", "p(a). q(a,d).");
    let t = build(&ics, &r, &plain()).unwrap();
    assert_eq!(reasons(&t), vec!["cond 3: ~p(a) but p(a) in r", "open"]);
    assert!(!t.is_closed());
}

#[test]
fn existential_parameter() {
    let (ics, r) = setup("exists X. p(X)", "q(a). q(b).");
    let t = build(&ics, &r, &plain()).unwrap();
    assert_eq!(reasons(&t), vec!["cond 2b: no σ for p($p1)"]);
    let (ics, r) = setup("exists X. p(X)", "p(a). p(b).");
    let t = build(&ics, &r, &plain()).unwrap();
    assert_eq!(reasons(&t), vec!["open"]);
}

#[test]
fn negated_parameter_never_closes() {
    let (ics, r) = setup("exists X. ~p(X)", "p(a).");
    let t = build(&ics, &r, &plain()).unwrap();
    assert_eq!(reasons(&t), vec!["open"]);
}

#[test]
fn unsafe_constraint_is_rejected() {
    let (ics, r) = setup("forall X. p(X)", "p(a).");
    assert!(matches!(build(&ics, &r, &plain()), Err(Error::UnsafeConstraint(_))));
}

#[test]
fn pruning_develops_fewer_nodes() {
    let (ics, r) = setup(SUPPLY_IC, SUPPLY);
    let t0 = build(&ics, &r, &plain()).unwrap();
    let t1 = build(&ics, &r, &BuildOptions::default()).unwrap();
    assert!(t1.stats.nodes < t0.stats.nodes, "{:?} vs {:?}", t1.stats, t0.stats);
}

#[test]
fn exhaustive_and_relevant_agree_on_closure() {
    let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). r(b).");
    let ex = BuildOptions { strategy: Strategy::Exhaustive, ..plain() };
    let t = build(&ics, &r, &ex).unwrap();
    assert_eq!(t.branches.len(), 4);
    assert!(t.is_closed());
    assert!(build(&ics, &r, &plain()).unwrap().is_closed());
}

#[test]
fn sequential_and_parallel_agree() {
    let (ics, r) = setup(SUPPLY_IC, SUPPLY);
    let a = build(&ics, &r, &BuildOptions { parallel: false, ..plain() }).unwrap();
    let b = build(&ics, &r, &BuildOptions { parallel: true, ..plain() }).unwrap();
    assert_eq!(reasons(&a), reasons(&b));
    assert_eq!(explain(&a), explain(&b));
}

#[test]
fn explain_marks_closures() {
    let (ics, r) = setup("exists X. p(X)", "q(a).");
    let t = build(&ics, &r, &plain()).unwrap();
    let text = explain(&t);
    assert!(text.contains("× [cond 2b: no σ for p($p1)]"), "{text}");
}
