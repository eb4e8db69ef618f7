mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use dbrepair::formula::{parse_formula, Formula};
use dbrepair::instance::{satisfies_all, symmetric_difference};
use dbrepair::oracle::{enumerate_repairs_bruteforce, ChangeUniverse, MAX_UNIVERSE};
use dbrepair::repair::repairs;
use dbrepair::tableau::BuildOptions;
use dbrepair::{Constraints, DomainPolicy, GroundAtom, Instance, Schema};
use proptest::prelude::*;

const ICS: [&str; 6] = [
    "forall X,Y,Z. (q(X,Y) & q(X,Z) -> Y = Z)",
    "forall X. (p(X) -> exists Y. q(X,Y))",
    "forall X,Y. (q(X,Y) -> p(Y))",
    "forall X. ~(p(X) & q(X,X))",
    "forall X. (p(X) -> s(X))",
    "exists X. s(X)",
];

fn schema() -> Schema {
    let mut s = Schema::new();
    s.declare("p", 1).unwrap();
    s.declare("s", 1).unwrap();
    s.declare("q", 2).unwrap();
    s
}

fn atom() -> impl Strategy<Value = GroundAtom> {
    let c = prop::sample::select(vec!["a", "b", "c"]);
    prop_oneof![
        c.clone().prop_map(|x| GroundAtom::new("p", &[x])),
        c.clone().prop_map(|x| GroundAtom::new("s", &[x])),
        (c.clone(), c).prop_map(|(x, y)| GroundAtom::new("q", &[x, y])),
    ]
}

fn case() -> impl Strategy<Value = (Constraints, Instance)> {
    (prop::collection::btree_set(0..ICS.len(), 1..=2), prop::collection::btree_set(atom(), 0..=4)).prop_map(
        |(ics, atoms)| {
            let mut s = schema();
            let text: Vec<&str> = ics.into_iter().map(|i| ICS[i]).collect();
            let ics = Constraints::parse(&text.join("\n"), &mut s).unwrap();
            (ics, Instance::with_atoms(Arc::new(s), atoms).unwrap())
        },
    )
}

fn opts() -> BuildOptions {
    BuildOptions { policy: DomainPolicy { fresh_pool: Some(1), ..DomainPolicy::default() }, ..BuildOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repairs_match_the_search_oracle((ics, r) in case()) {
        let o = opts();
        let engine: Vec<Instance> = repairs(&ics, &r, &o).unwrap().repairs.into_iter().map(|x| x.instance).collect();
        let u = ChangeUniverse::new(&ics.original, &r, &o.policy);
        prop_assume!(u.len() <= MAX_UNIVERSE);
        let brute = enumerate_repairs_bruteforce(&ics.original, &r, &u).unwrap();
        prop_assert_eq!(common::sets(&engine), common::sets(&brute));
    }

    #[test]
    fn repairs_are_consistent_and_incomparable((ics, r) in case()) {
        let o = opts();
        let list: Vec<Instance> = repairs(&ics, &r, &o).unwrap().repairs.into_iter().map(|x| x.instance).collect();
        prop_assert!(!list.is_empty());
        let deltas: Vec<BTreeSet<GroundAtom>> = list.iter().map(|m| symmetric_difference(&r, m).unwrap()).collect();
        for (i, m) in list.iter().enumerate() {
            prop_assert!(satisfies_all(m, &ics.original, &o.policy), "{} violates", m);
            for (j, d) in deltas.iter().enumerate() {
                prop_assert!(i == j || !d.is_subset(&deltas[i]));
            }
        }
        if satisfies_all(&r, &ics.original, &o.policy) {
            prop_assert_eq!(list, vec![r.clone()]);
        }
    }

    #[test]
    fn sequential_and_parallel_agree((ics, r) in case()) {
        let seq = BuildOptions { parallel: false, ..opts() };
        let par = BuildOptions { parallel: true, ..opts() };
        let a = repairs(&ics, &r, &seq).unwrap();
        let b = repairs(&ics, &r, &par).unwrap();
        prop_assert_eq!(a.tableau.branches.len(), b.tableau.branches.len());
        prop_assert_eq!(a.repairs, b.repairs);
    }

    #[test]
    fn formulas_print_and_reparse(i in 0..ICS.len()) {
        let mut s = schema();
        let f = Constraints::parse(ICS[i], &mut s).unwrap().original.remove(0);
        let again: Formula = parse_formula(&f.to_string(), &s).unwrap();
        prop_assert_eq!(again, f);
    }
}
