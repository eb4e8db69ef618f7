use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use dbrepair::cqa::{AnswerSet, Cqa, Query};
use dbrepair::instance::{active_domain, satisfies_all};
use dbrepair::oracle::{consistent_answers_bruteforce, enumerate_repairs_bruteforce, winslett_pool, winslett_update_models, ChangeUniverse};
use dbrepair::repair::{data_closed, repairs, RepairSet};
use dbrepair::tableau::{build, explain, BuildOptions, Status};
use dbrepair::{Constraints, DomainPolicy, Error, GroundAtom, Instance, Schema};

#[derive(Parser)]
#[command(name = "dbrepair", version, about = "Consistency checks, repairs and consistent answers for relational instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report whether the instance satisfies the constraints
    Check(Opts),
    /// List the repairs of the instance
    Repairs(Opts),
    /// Consistent answers to queries
    Cqa(Opts),
    /// Print the tableau with closure reasons and openings
    Explain(Opts),
    /// Repairs by exhaustive search, without tableaux
    OracleRepairs(Opts),
    /// Consistent answers by intersecting exhaustively searched repairs
    OracleCqa(Opts),
    /// Compare the engine with the oracles
    Diff(Opts),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, value_name = "PATH")]
    facts: PathBuf,
    #[arg(long, value_name = "PATH")]
    ic: PathBuf,
    #[arg(long, value_name = "STR", conflicts_with = "queries")]
    query: Option<String>,
    #[arg(long, value_name = "PATH")]
    queries: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Fresh constants added to the domain (default: one per existential)
    #[arg(long, value_name = "N")]
    fresh_pool: Option<usize>,
    #[arg(long, value_name = "N", default_value_t = 1)]
    term_depth: usize,
    #[arg(long, value_name = "N", default_value_t = 20_000)]
    max_branches: usize,
    #[arg(long)]
    no_groundedness: bool,
    #[arg(long)]
    no_subsumption: bool,
    /// Cross-check the result against the oracle
    #[arg(long)]
    verify: bool,
    /// Also compare on random perturbations of the instance (diff only)
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

struct Input {
    r: Instance,
    ics: Constraints,
    queries: Vec<Query>,
    opts: BuildOptions,
}

enum Failure {
    Usage(String),
    Resource(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

fn fail(path: Option<&Path>, e: Error) -> Failure {
    let msg = match path {
        Some(p) => format!("{}:{e}", p.display()),
        None => e.to_string(),
    };
    if e.is_resource() { Failure::Resource(msg) } else { Failure::Usage(msg) }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(o: &Opts) -> Result<Input, Failure> {
    let mut schema = Schema::new();
    let r = Instance::parse_with(&read(&o.facts)?, &mut schema).map_err(|e| fail(Some(&o.facts), e))?;
    let ics = Constraints::parse(&read(&o.ic)?, &mut schema).map_err(|e| fail(Some(&o.ic), e))?;
    let r = r.with_schema(schema).map_err(|e| fail(Some(&o.facts), e))?;
    let mut queries = Vec::new();
    if let Some(q) = &o.query {
        queries.push(Query::parse(q, r.schema()).map_err(|e| fail(Some(Path::new("--query")), e))?);
    }
    if let Some(p) = &o.queries {
        queries.extend(Query::parse_many(&read(p)?, r.schema()).map_err(|e| fail(Some(p), e))?);
    }
    let opts = BuildOptions {
        policy: DomainPolicy { fresh_pool: o.fresh_pool, term_depth: o.term_depth, ..DomainPolicy::default() },
        max_branches: o.max_branches,
        groundedness: !o.no_groundedness,
        subsumption: !o.no_subsumption,
        ..BuildOptions::default()
    };
    Ok(Input { r, ics, queries, opts })
}

fn facts(i: &Instance) -> Vec<String> {
    i.atoms().map(|a| a.to_string()).collect()
}

fn atoms(s: &BTreeSet<GroundAtom>) -> Vec<String> {
    s.iter().map(|a| a.to_string()).collect()
}

fn tuple_text(t: &[dbrepair::formula::Name]) -> String {
    let parts: Vec<String> = t.iter().map(|c| dbrepair::formula::quote_constant(c)).collect();
    format!("({})", parts.join(","))
}

fn repairs_text(list: &[Instance]) -> String {
    let mut out = String::new();
    for (k, m) in list.iter().enumerate() {
        let _ = writeln!(out, "--- repair {} ---", k + 1);
        out.push_str(&m.serialize());
    }
    out
}

#[derive(Serialize)]
struct RepairJson {
    facts: Vec<String>,
    deletions: Vec<String>,
    insertions: Vec<String>,
    branches: Vec<String>,
}

#[derive(Serialize)]
struct ClosingJson {
    repair: usize,
    reason: String,
    binding: Option<Vec<(String, String)>>,
}

#[derive(Serialize)]
struct AnswerJson {
    tuple: Vec<String>,
    provenance: Vec<ClosingJson>,
}

#[derive(Serialize)]
struct QueryJson {
    query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples: Option<Vec<AnswerJson>>,
}

fn answer_json(a: &AnswerSet) -> QueryJson {
    let answers = a
        .answers
        .iter()
        .map(|x| AnswerJson {
            tuple: x.tuple.iter().map(|c| c.to_string()).collect(),
            provenance: x
                .provenance
                .iter()
                .map(|c| ClosingJson {
                    repair: c.repair + 1,
                    reason: c.reason.to_string(),
                    binding: c.binding.as_ref().map(|b| b.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect()),
                })
                .collect(),
        })
        .collect();
    match a.verdict() {
        Some(v) => QueryJson { query: a.query.to_string(), verdict: Some(v), tuples: None },
        None => QueryJson { query: a.query.to_string(), verdict: None, tuples: Some(answers) },
    }
}

fn answer_text(a: &AnswerSet, provenance: bool) -> String {
    let mut out = format!("? {}\n", a.query);
    match a.verdict() {
        Some(v) => out.push_str(if v { "yes\n" } else { "no\n" }),
        None if a.answers.is_empty() => out.push_str("(none)\n"),
        None => {
            for x in &a.answers {
                let _ = writeln!(out, "{}", tuple_text(&x.tuple));
            }
        }
    }
    if provenance {
        for x in &a.answers {
            for c in &x.provenance {
                let label = if x.tuple.is_empty() { String::new() } else { format!("{} ", tuple_text(&x.tuple)) };
                let _ = writeln!(out, "  {label}{c}");
            }
        }
    }
    out
}

fn emit(format: Format, text: String, json: serde_json::Value) {
    match format {
        Format::Text => print!("{text}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&json).expect("serializable")),
    }
}

fn oracle_repairs(input: &Input) -> Result<Vec<Instance>, Failure> {
    let u = ChangeUniverse::new(&input.ics.original, &input.r, &input.opts.policy);
    enumerate_repairs_bruteforce(&input.ics.original, &input.r, &u).map_err(|e| fail(None, e))
}

fn engine_repairs(set: &RepairSet) -> Vec<Instance> {
    set.repairs.iter().map(|r| r.instance.clone()).collect()
}

fn check(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    let t = build(&input.ics, &input.r, &input.opts).map_err(|e| fail(None, e))?;
    let consistent = !t.is_closed();
    if o.verify && consistent != satisfies_all(&input.r, &input.ics.original, &input.opts.policy) {
        return Err(Failure::Mismatch("tableau verdict differs from direct evaluation".into()));
    }
    let word = if consistent { "consistent" } else { "inconsistent" };
    emit(
        o.format,
        format!("{word}\n"),
        serde_json::json!({"schema": 1, "command": "check", "consistent": consistent, "branches": t.branches.len()}),
    );
    if consistent { Ok(()) } else { Err(Failure::Mismatch(String::new())) }
}

fn run_repairs(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    let set = repairs(&input.ics, &input.r, &input.opts).map_err(|e| fail(None, e))?;
    let list = engine_repairs(&set);
    if o.verify && list != oracle_repairs(&input)? {
        return Err(Failure::Mismatch("repairs differ from the oracle".into()));
    }
    let json: Vec<RepairJson> = set
        .repairs
        .iter()
        .map(|r| RepairJson {
            facts: facts(&r.instance),
            deletions: atoms(&r.deletions),
            insertions: atoms(&r.insertions),
            branches: r.sources.iter().map(|b| format!("B{}", b + 1)).collect(),
        })
        .collect();
    emit(o.format, repairs_text(&list), serde_json::json!({"schema": 1, "command": "repairs", "repairs": json}));
    Ok(())
}

fn run_cqa(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    if input.queries.is_empty() {
        return Err(Failure::Usage("cqa needs --query or --queries".into()));
    }
    let cqa = Cqa::new(&input.ics, &input.r, &input.opts).map_err(|e| fail(None, e))?;
    let mut text = String::new();
    let mut json = Vec::new();
    for q in &input.queries {
        let a = cqa.answer(q).map_err(|e| fail(None, e))?;
        if o.verify {
            let expected = consistent_answers_bruteforce(&input.ics.original, &input.r, &q.formula, &input.opts.policy)
                .map_err(|e| fail(None, e))?;
            if a.tuples() != expected {
                return Err(Failure::Mismatch(format!("answers to {q} differ from the oracle")));
            }
        }
        text.push_str(&answer_text(&a, false));
        json.push(answer_json(&a));
    }
    emit(o.format, text, serde_json::json!({"schema": 1, "command": "cqa", "answers": json}));
    Ok(())
}

fn run_explain(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    let set = repairs(&input.ics, &input.r, &input.opts).map_err(|e| fail(None, e))?;
    let t = &set.tableau;
    let mut text = explain(t);
    let _ = writeln!(text, "\nopenings:");
    let mut json_openings = Vec::new();
    for (i, b) in t.branches.iter().enumerate() {
        let label = format!("B{}", i + 1);
        let note = match b.status() {
            Status::Closed(_) if !data_closed(b, &t.pool).unwrap_or(false) => Some("not data closed"),
            Status::Suspended(_) => Some("suspended"),
            _ if !set.candidates.contains(&i) => Some("subsumed"),
            _ => None,
        };
        if let Some(n) = note {
            let _ = writeln!(text, "{label}: {n}");
            continue;
        }
        for op in set.openings.iter().filter(|op| op.branch == i) {
            let minimal = set.minimal.contains(op);
            let _ = writeln!(
                text,
                "{label}: L = {{{}}} K = {{{}}} τ = {}{}",
                atoms(&op.deletions).join(", "),
                atoms(&op.insertions).join(", "),
                op.valuation,
                if minimal { "  minimal" } else { "" }
            );
            json_openings.push(serde_json::json!({
                "branch": label,
                "deletions": atoms(&op.deletions),
                "insertions": atoms(&op.insertions),
                "valuation": op.valuation.to_string(),
                "minimal": minimal,
            }));
        }
    }
    let branches: Vec<serde_json::Value> = t
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let status = match b.status() {
                Status::Open => "open".to_string(),
                Status::Closed(r) => r.to_string(),
                Status::Suspended(_) => "suspended".to_string(),
            };
            serde_json::json!({
                "branch": format!("B{}", i + 1),
                "formulas": b.formulas().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "status": status,
            })
        })
        .collect();
    emit(
        o.format,
        text,
        serde_json::json!({"schema": 1, "command": "explain", "branches": branches, "openings": json_openings, "nodes": t.stats.nodes}),
    );
    Ok(())
}

fn run_oracle_repairs(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    let list = oracle_repairs(&input)?;
    let json: Vec<Vec<String>> = list.iter().map(facts).collect();
    emit(o.format, repairs_text(&list), serde_json::json!({"schema": 1, "command": "oracle-repairs", "repairs": json}));
    Ok(())
}

fn run_oracle_cqa(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    if input.queries.is_empty() {
        return Err(Failure::Usage("oracle-cqa needs --query or --queries".into()));
    }
    let mut text = String::new();
    let mut json = Vec::new();
    for q in &input.queries {
        let tuples = consistent_answers_bruteforce(&input.ics.original, &input.r, &q.formula, &input.opts.policy)
            .map_err(|e| fail(None, e))?;
        let _ = writeln!(text, "? {q}");
        if q.is_sentence() {
            text.push_str(if tuples.is_empty() { "no\n" } else { "yes\n" });
            json.push(serde_json::json!({"query": q.to_string(), "verdict": !tuples.is_empty()}));
        } else {
            if tuples.is_empty() {
                text.push_str("(none)\n");
            }
            for t in &tuples {
                let _ = writeln!(text, "{}", tuple_text(t));
            }
            let ts: Vec<Vec<String>> = tuples.iter().map(|t| t.iter().map(|c| c.to_string()).collect()).collect();
            json.push(serde_json::json!({"query": q.to_string(), "tuples": ts}));
        }
    }
    emit(o.format, text, serde_json::json!({"schema": 1, "command": "oracle-cqa", "answers": json}));
    Ok(())
}

/// Engine against oracles on one instance; returns the discrepancies.
fn compare(input: &Input, r: &Instance) -> Result<Vec<String>, Failure> {
    let mut out = Vec::new();
    let name = |k: &str| format!("{k} on {r}");
    let t = build(&input.ics, r, &input.opts).map_err(|e| fail(None, e))?;
    if t.is_closed() == satisfies_all(r, &input.ics.original, &input.opts.policy) {
        out.push(name("consistency verdict"));
    }
    let cqa = Cqa::new(&input.ics, r, &input.opts).map_err(|e| fail(None, e))?;
    let engine = engine_repairs(&cqa.repairs);
    let u = ChangeUniverse::new(&input.ics.original, r, &input.opts.policy);
    let brute = enumerate_repairs_bruteforce(&input.ics.original, r, &u).map_err(|e| fail(None, e))?;
    let pool = winslett_pool(&input.ics.original, r, &input.opts.policy);
    let winslett = winslett_update_models(r, &input.ics.original, &pool).map_err(|e| fail(None, e))?;
    if engine != brute {
        out.push(name("repairs (search oracle)"));
    }
    if engine != winslett {
        out.push(name("repairs (update oracle)"));
    }
    for q in &input.queries {
        let a = cqa.answer(q).map_err(|e| fail(None, e))?;
        let b = consistent_answers_bruteforce(&input.ics.original, r, &q.formula, &input.opts.policy)
            .map_err(|e| fail(None, e))?;
        if a.tuples() != b {
            out.push(name(&format!("answers to {q}")));
        }
    }
    Ok(out)
}

fn perturb(r: &Instance, rng: &mut StdRng) -> Instance {
    let dom: Vec<_> = active_domain(r).into_iter().collect();
    let preds: Vec<(String, usize)> = r.schema().predicates().map(|(p, a)| (p.to_string(), a)).collect();
    let mut atoms: BTreeSet<GroundAtom> = r.atom_set().clone();
    for _ in 0..rng.random_range(1..=2) {
        if !atoms.is_empty() && rng.random_bool(0.5) {
            let k = rng.random_range(0..atoms.len());
            let a = atoms.iter().nth(k).cloned().expect("index in range");
            atoms.remove(&a);
        } else if !dom.is_empty() && !preds.is_empty() {
            let (p, arity) = &preds[rng.random_range(0..preds.len())];
            let args: Vec<&str> = (0..*arity).map(|_| &*dom[rng.random_range(0..dom.len())]).collect();
            atoms.insert(GroundAtom::new(p, &args));
        }
    }
    r.apply_changes([], &atoms).apply_changes(&r.atom_set().difference(&atoms).cloned().collect::<Vec<_>>(), [])
}

fn run_diff(o: &Opts) -> Result<(), Failure> {
    let input = load(o)?;
    let mut cases = vec![input.r.clone()];
    if let Some(seed) = o.seed {
        let mut rng = StdRng::seed_from_u64(seed);
        for _ in 0..20 {
            cases.push(perturb(&input.r, &mut rng));
        }
    }
    let mut problems = Vec::new();
    let mut skipped = 0;
    for r in &cases {
        match compare(&input, r) {
            Ok(p) => problems.extend(p),
            Err(Failure::Resource(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let mut text = format!("cases: {}\nskipped (too large): {skipped}\ndiscrepancies: {}\n", cases.len(), problems.len());
    for p in &problems {
        let _ = writeln!(text, "  {p}");
    }
    emit(
        o.format,
        text,
        serde_json::json!({"schema": 1, "command": "diff", "cases": cases.len(), "skipped": skipped, "discrepancies": problems}),
    );
    if problems.is_empty() { Ok(()) } else { Err(Failure::Mismatch(String::new())) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(o) => check(o),
        Command::Repairs(o) => run_repairs(o),
        Command::Cqa(o) => run_cqa(o),
        Command::Explain(o) => run_explain(o),
        Command::OracleRepairs(o) => run_oracle_repairs(o),
        Command::OracleCqa(o) => run_oracle_cqa(o),
        Command::Diff(o) => run_diff(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            match f {
                Failure::Usage(m) | Failure::Resource(m) | Failure::Mismatch(m) if !m.is_empty() => eprintln!("error: {m}"),
                _ => {}
            }
            ExitCode::from(code)
        }
    }
}
