use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dbrepair::cqa::{Cqa, Query};
use dbrepair::repair::repairs;
use dbrepair::tableau::BuildOptions;
use dbrepair::{Constraints, Instance, Schema};

fn setup(ic: &str, facts: &str) -> (Constraints, Instance) {
    let mut s = Schema::new();
    let r = Instance::parse_with(facts, &mut s).unwrap();
    let ics = Constraints::parse(ic, &mut s).unwrap();
    (ics, r.with_schema(s).unwrap())
}

/// `n` keys, each with two conflicting values.
fn fd_conflicts(n: usize) -> (Constraints, Instance) {
    let facts: String = (0..n).map(|i| format!("emp(e{i}, s{i}). emp(e{i}, t{i}). dept(e{i}, d{}).\n", i % 2)).collect();
    setup("forall X,Y,Z. (emp(X,Y) & emp(X,Z) -> Y = Z)\nforall X,Y. (dept(X,Y) -> exists Z. emp(X,Z))", &facts)
}

fn modes() -> [(&'static str, BuildOptions); 2] {
    [
        ("sequential", BuildOptions { parallel: false, ..BuildOptions::default() }),
        ("parallel", BuildOptions { parallel: true, ..BuildOptions::default() }),
    ]
}

fn bench_repairs(c: &mut Criterion) {
    let mut g = c.benchmark_group("repairs");
    for n in [2, 4, 6] {
        let (ics, r) = fd_conflicts(n);
        for (mode, opts) in modes() {
            g.bench_with_input(BenchmarkId::new(mode, n), &n, |b, _| {
                b.iter(|| repairs(black_box(&ics), black_box(&r), &opts).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_cqa(c: &mut Criterion) {
    let mut g = c.benchmark_group("cqa");
    let (ics, r) = fd_conflicts(4);
    let q = Query::parse("exists Y. emp(X,Y) & dept(X,d0)", r.schema()).unwrap();
    for (mode, opts) in modes() {
        let cqa = Cqa::new(&ics, &r, &opts).unwrap();
        g.bench_function(mode, |b| b.iter(|| cqa.answer(black_box(&q)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_repairs, bench_cqa);
criterion_main!(benches);
