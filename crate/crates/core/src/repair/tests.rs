use super::*;
use crate::instance::Schema;

fn setup(ic: &str, facts: &str) -> (Constraints, Instance) {
    let mut s = Schema::new();
    let r = Instance::parse_with(facts, &mut s).unwrap();
    let ics = Constraints::parse(ic, &mut s).unwrap();
    (ics, r.with_schema(s).unwrap())
}

fn results(set: &RepairSet) -> Vec<String> {
    set.repairs.iter().map(|r| r.instance.to_string()).collect()
}

#[test]
fn two_repairs_for_inclusion() {
    let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). r(b).");
    for (g, s) in [(true, true), (false, false), (true, false), (false, true)] {
        let opts = BuildOptions { groundedness: g, subsumption: s, ..BuildOptions::default() };
        let set = repairs(&ics, &r, &opts).unwrap();
        assert_eq!(results(&set), vec!["{p(a), q(a), r(b)}", "{r(b)}"], "g={g} s={s}");
    }
}

#[test]
fn consistent_instance_is_its_own_repair() {
    let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). q(a). r(b).");
    let set = repairs(&ics, &r, &BuildOptions::default()).unwrap();
    assert_eq!(set.repairs.len(), 1);
    assert_eq!(set.repairs[0].instance, r);
    assert!(set.repairs[0].deletions.is_empty() && set.repairs[0].insertions.is_empty());
}

#[test]
fn supply_class_keeps_two_branches() {
    let (ics, r) = setup(
        "forall X,Y,Z. (supply(X,Y,Z) & class(Z,t4) -> X = c)",
        "supply(c,d1,it1). supply(d,d2,it2). class(it1,t4). class(it2,t4).",
    );
    let opts = BuildOptions { groundedness: false, subsumption: false, ..BuildOptions::default() };
    let t = build(&ics, &r, &opts).unwrap();
    let dc: Vec<bool> = t.branches.iter().map(|b| data_closed(b, &t.pool).unwrap()).collect();
    assert_eq!(dc, vec![true, true, false, true, true, false, true, true, false]);
    assert_eq!(subsumption_prune(&t.branches, &t.pool), vec![6, 7]);
    let set = repairs(&ics, &r, &opts).unwrap();
    assert_eq!(
        results(&set),
        vec![
            "{class(it1,t4), class(it2,t4), supply(c,d1,it1)}",
            "{class(it1,t4), supply(c,d1,it1), supply(d,d2,it2)}"
        ]
    );
}

#[test]
fn minimality_filter() {
    let (_, r) = setup("forall X. (p(X) -> q(X))", "p(a). p(b).");
    let a = GroundAtom::new("p", &["a"]);
    let b = GroundAtom::new("p", &["b"]);
    let mk = |del: Vec<&GroundAtom>| {
        let deletions: BTreeSet<GroundAtom> = del.into_iter().cloned().collect();
        Opening {
            branch: 0,
            result: r.apply_changes(&deletions, []),
            deletions,
            insertions: BTreeSet::new(),
            k_pattern: BTreeSet::new(),
            valuation: Valuation::new(),
        }
    };
    let kept = minimal_openings(&[mk(vec![&a, &b]), mk(vec![&a])]);
    assert_eq!(kept.len(), 1);
    assert_eq!(kept[0].deletions.len(), 1);
}

#[test]
fn skolem_witness_is_valued() {
    let (ics, r) = setup("forall X. (p(X) -> exists Y. q(X,Y))", "p(a). q(b,d).");
    let set = repairs(&ics, &r, &BuildOptions::default()).unwrap();
    let got = results(&set);
    assert!(got.contains(&"{q(b,d)}".to_string()), "{got:?}");
    assert!(got.contains(&"{p(a), q(a,d), q(b,d)}".to_string()), "{got:?}");
    for rep in &set.repairs {
        assert!(crate::instance::satisfies_all(&rep.instance, &ics.original, &DomainPolicy::default()));
    }
}
