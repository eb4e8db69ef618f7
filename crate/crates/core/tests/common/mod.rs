#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use dbrepair::cqa::Query;
use dbrepair::tableau::BuildOptions;
use dbrepair::{Constraints, Instance, Schema};

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn read(name: &str, file: &str) -> String {
    std::fs::read_to_string(corpus(name).join(file)).unwrap()
}

pub fn setup(ic: &str, facts: &str) -> (Constraints, Instance) {
    let mut s = Schema::new();
    let r = Instance::parse_with(facts, &mut s).unwrap();
    let ics = Constraints::parse(ic, &mut s).unwrap();
    (ics, r.with_schema(s).unwrap())
}

pub fn load(name: &str) -> (Constraints, Instance) {
    setup(&read(name, "ic"), &read(name, "facts"))
}

pub fn query(r: &Instance, text: &str) -> Query {
    Query::parse(text, r.schema()).unwrap()
}

pub fn instance(r: &Instance, text: &str) -> Instance {
    let mut s = r.schema().clone();
    Instance::parse_with(text, &mut s).unwrap().with_schema(s).unwrap()
}

pub fn atoms(i: &Instance) -> String {
    i.to_string()
}

pub fn sets(list: &[Instance]) -> BTreeSet<String> {
    list.iter().map(atoms).collect()
}

/// The four pruning configurations, default first.
pub fn configs() -> Vec<(&'static str, BuildOptions)> {
    let with = |groundedness, subsumption| BuildOptions { groundedness, subsumption, ..BuildOptions::default() };
    vec![
        ("default", with(true, true)),
        ("no-groundedness", with(false, true)),
        ("no-subsumption", with(true, false)),
        ("no-groundedness no-subsumption", with(false, false)),
    ]
}

pub fn tuples(list: &[&[&str]]) -> BTreeSet<Vec<String>> {
    list.iter().map(|t| t.iter().map(|c| c.to_string()).collect()).collect()
}
