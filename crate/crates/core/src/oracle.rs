//! Reference answers computed without the tableau engine: repairs by search
//! over the space of changes, possible-models update over a propositional
//! grounding, and consistent answers by intersecting repairs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::formula::{count_existentials, Formula, Name, Term};
use crate::instance::{satisfies, DomainPolicy, GroundAtom, Instance};

/// Largest change universe the repair search accepts.
pub const MAX_UNIVERSE: usize = 22;
const MAX_CLAUSES: usize = 1_000_000;

/// Candidate changes to `r`: deletions are the atoms of `r`, insertions the
/// ground atoms over the pool whose predicate occurs positively in some
/// constraint (inserting any other atom can never restore consistency).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeUniverse {
    pub pool: Vec<Name>,
    pub deletions: Vec<GroundAtom>,
    pub insertions: Vec<GroundAtom>,
    pub insertion_cap: usize,
}

impl ChangeUniverse {
    pub fn new(ics: &[Formula], r: &Instance, policy: &DomainPolicy) -> Self {
        let pool = oracle_pool(ics, r, policy);
        let mut positive = BTreeSet::new();
        for f in ics {
            positive_predicates(f, true, &mut positive);
        }
        let mut insertions = Vec::new();
        for (pred, arity) in r.schema().predicates() {
            if !positive.contains(pred) {
                continue;
            }
            for args in tuples(&pool, arity) {
                let a = GroundAtom { pred: pred.clone(), args };
                if !r.contains(&a) {
                    insertions.push(a);
                }
            }
        }
        let deletions: Vec<GroundAtom> = r.atoms().cloned().collect();
        let insertion_cap = insertions.len();
        ChangeUniverse { pool, deletions, insertions, insertion_cap }
    }

    pub fn len(&self) -> usize {
        self.deletions.len() + self.insertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn oracle_pool(ics: &[Formula], r: &Instance, policy: &DomainPolicy) -> Vec<Name> {
    let consts: BTreeSet<Name> = ics.iter().flat_map(|f| f.constants()).collect();
    let existentials = ics.iter().map(count_existentials).sum();
    policy.universe(r, &consts, existentials).to_vec()
}

fn positive_predicates(f: &Formula, positive: bool, out: &mut BTreeSet<Name>) {
    match f {
        Formula::Atom(a) => {
            if positive {
                out.insert(a.pred.clone());
            }
        }
        Formula::Eq(..) => {}
        Formula::Not(x) => positive_predicates(x, !positive, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            positive_predicates(a, positive, out);
            positive_predicates(b, positive, out);
        }
        Formula::Implies(a, b) => {
            positive_predicates(a, !positive, out);
            positive_predicates(b, positive, out);
        }
        Formula::Forall(_, x) | Formula::Exists(_, x) => positive_predicates(x, positive, out),
    }
}

fn tuples(pool: &[Name], arity: usize) -> Vec<Vec<Name>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * pool.len());
        for t in &out {
            for c in pool {
                let mut t = t.clone();
                t.push(c.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Debug)]
enum G {
    Val(bool),
    Var(usize),
    Not(Box<G>),
    All(Vec<G>),
    Any(Vec<G>),
}

/// Grounds formulas over a pool; atoms found in `vars` become variables,
/// all others take their truth value in `r`.
struct Grounding<'a> {
    pool: &'a [Name],
    vars: &'a HashMap<GroundAtom, usize>,
    r: &'a Instance,
}

impl Grounding<'_> {
    fn term(t: &Term, env: &BTreeMap<Name, Name>) -> Name {
        match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env[v].clone(),
            other => panic!("unexpected term {other} in a constraint"),
        }
    }

    fn ground(&self, f: &Formula, env: &mut BTreeMap<Name, Name>) -> G {
        match f {
            Formula::Atom(a) => {
                let g = GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| Self::term(t, env)).collect() };
                match self.vars.get(&g) {
                    Some(&i) => G::Var(i),
                    None => G::Val(self.r.contains(&g)),
                }
            }
            Formula::Eq(s, t) => G::Val(Self::term(s, env) == Self::term(t, env)),
            Formula::Not(x) => match self.ground(x, env) {
                G::Val(b) => G::Val(!b),
                g => G::Not(Box::new(g)),
            },
            Formula::And(a, b) => all(vec![self.ground(a, env), self.ground(b, env)]),
            Formula::Or(a, b) => any(vec![self.ground(a, env), self.ground(b, env)]),
            Formula::Implies(a, b) => {
                let na = match self.ground(a, env) {
                    G::Val(v) => G::Val(!v),
                    g => G::Not(Box::new(g)),
                };
                any(vec![na, self.ground(b, env)])
            }
            Formula::Forall(v, x) | Formula::Exists(v, x) => {
                let saved = env.get(v).cloned();
                let mut parts = Vec::with_capacity(self.pool.len());
                for c in self.pool {
                    env.insert(v.clone(), c.clone());
                    parts.push(self.ground(x, env));
                }
                match saved {
                    Some(s) => env.insert(v.clone(), s),
                    None => env.remove(v),
                };
                if matches!(f, Formula::Forall(..)) { all(parts) } else { any(parts) }
            }
        }
    }
}

fn all(xs: Vec<G>) -> G {
    let mut out = Vec::new();
    for x in xs {
        match x {
            G::Val(true) => {}
            G::Val(false) => return G::Val(false),
            G::All(ys) => out.extend(ys),
            y => out.push(y),
        }
    }
    if out.is_empty() { G::Val(true) } else { G::All(out) }
}

fn any(xs: Vec<G>) -> G {
    let mut out = Vec::new();
    for x in xs {
        match x {
            G::Val(false) => {}
            G::Val(true) => return G::Val(true),
            G::Any(ys) => out.extend(ys),
            y => out.push(y),
        }
    }
    if out.is_empty() { G::Val(false) } else { G::Any(out) }
}

/// Strong Kleene evaluation; `None` is unknown.
fn kleene(g: &G, val: &[Option<bool>]) -> Option<bool> {
    match g {
        G::Val(b) => Some(*b),
        G::Var(i) => val[*i],
        G::Not(x) => kleene(x, val).map(|b| !b),
        G::All(xs) => {
            let mut unknown = false;
            for x in xs {
                match kleene(x, val) {
                    Some(false) => return Some(false),
                    None => unknown = true,
                    _ => {}
                }
            }
            if unknown { None } else { Some(true) }
        }
        G::Any(xs) => {
            let mut unknown = false;
            for x in xs {
                match kleene(x, val) {
                    Some(true) => return Some(true),
                    None => unknown = true,
                    _ => {}
                }
            }
            if unknown { None } else { Some(false) }
        }
    }
}

fn keep_minimal(mut found: Vec<BTreeSet<usize>>) -> Vec<BTreeSet<usize>> {
    found.sort_by_key(|d| d.len());
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for d in found {
        if !out.iter().any(|m| m.is_subset(&d)) {
            out.push(d);
        }
    }
    out
}

fn sorted_instances(mut v: Vec<Instance>) -> Vec<Instance> {
    v.sort_by(|a, b| a.atom_set().cmp(b.atom_set()));
    v.dedup();
    v
}

/// All consistent `(r ∖ Del) ∪ Ins` over the universe whose change set is
/// minimal under inclusion.
pub fn enumerate_repairs_bruteforce(ics: &[Formula], r: &Instance, u: &ChangeUniverse) -> Result<Vec<Instance>> {
    if u.len() > MAX_UNIVERSE {
        return Err(Error::UniverseTooLarge(u.len()));
    }
    let atoms: Vec<GroundAtom> = u.deletions.iter().chain(&u.insertions).cloned().collect();
    let vars: HashMap<GroundAtom, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let gr = Grounding { pool: &u.pool, vars: &vars, r };
    let theory = all(ics.iter().map(|f| gr.ground(f, &mut BTreeMap::new())).collect());

    struct Search<'a> {
        theory: &'a G,
        in_r: Vec<bool>,
        cap: usize,
        val: Vec<Option<bool>>,
        changed: BTreeSet<usize>,
        inserted: usize,
        found: Vec<BTreeSet<usize>>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize) {
            if kleene(self.theory, &self.val) == Some(false) {
                return;
            }
            if self.found.iter().any(|d| d.is_subset(&self.changed)) {
                return;
            }
            if i == self.val.len() {
                self.found.push(self.changed.clone());
                return;
            }
            self.val[i] = Some(self.in_r[i]);
            self.go(i + 1);
            if self.in_r[i] || self.inserted < self.cap {
                self.val[i] = Some(!self.in_r[i]);
                self.changed.insert(i);
                self.inserted += usize::from(!self.in_r[i]);
                self.go(i + 1);
                self.inserted -= usize::from(!self.in_r[i]);
                self.changed.remove(&i);
            }
            self.val[i] = None;
        }
    }
    let in_r: Vec<bool> = atoms.iter().map(|a| r.contains(a)).collect();
    let mut s = Search {
        theory: &theory,
        in_r,
        cap: u.insertion_cap,
        val: vec![None; atoms.len()],
        changed: BTreeSet::new(),
        inserted: 0,
        found: Vec::new(),
    };
    s.go(0);
    let out = keep_minimal(s.found)
        .into_iter()
        .map(|d| {
            let del: Vec<&GroundAtom> = d.iter().map(|&i| &atoms[i]).filter(|a| r.contains(a)).collect();
            let ins: Vec<&GroundAtom> = d.iter().map(|&i| &atoms[i]).filter(|a| !r.contains(a)).collect();
            r.apply_changes(del, ins)
        })
        .collect();
    Ok(sorted_instances(out))
}

/// A clause over literals `±(var + 1)`.
type Clause = Vec<i64>;

fn lit(i: usize, positive: bool) -> i64 {
    if positive { i as i64 + 1 } else { -(i as i64 + 1) }
}

/// Negation normal form followed by distribution into clauses.
fn cnf(g: &G, positive: bool, out: &mut Vec<Clause>) -> Result<()> {
    fn go(g: &G, positive: bool) -> Result<Vec<Clause>> {
        Ok(match (g, positive) {
            (G::Val(b), p) => {
                if *b == p { Vec::new() } else { vec![Vec::new()] }
            }
            (G::Var(i), p) => vec![vec![lit(*i, p)]],
            (G::Not(x), p) => go(x, !p)?,
            (G::All(xs), true) | (G::Any(xs), false) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(go(x, positive)?);
                }
                out
            }
            (G::Any(xs), true) | (G::All(xs), false) => {
                let mut acc: Vec<Clause> = vec![Vec::new()];
                for x in xs {
                    let part = go(x, positive)?;
                    let mut next = Vec::with_capacity(acc.len() * part.len());
                    for a in &acc {
                        for b in &part {
                            let mut c = a.clone();
                            c.extend(b);
                            c.sort_unstable();
                            c.dedup();
                            if !c.iter().any(|l| c.contains(&-l)) {
                                next.push(c);
                            }
                        }
                    }
                    if next.len() > MAX_CLAUSES {
                        return Err(Error::ResourceExceeded { what: "clauses", limit: MAX_CLAUSES });
                    }
                    acc = next;
                }
                acc
            }
        })
    }
    out.extend(go(g, positive)?);
    if out.len() > MAX_CLAUSES {
        return Err(Error::ResourceExceeded { what: "clauses", limit: MAX_CLAUSES });
    }
    Ok(())
}

/// Models `m'` of the ground constraints with `r △ m'` minimal under
/// inclusion, over every atom the grounding mentions.
pub fn winslett_update_models(r: &Instance, ics: &[Formula], pool: &[Name]) -> Result<Vec<Instance>> {
    let mut letters: BTreeSet<GroundAtom> = r.atom_set().clone();
    for f in ics {
        collect_atoms(f, pool, &mut BTreeMap::new(), &mut letters);
    }
    // atoms of r come first so that deletions are decided early
    let mut atoms: Vec<GroundAtom> = r.atoms().cloned().collect();
    atoms.extend(letters.into_iter().filter(|a| !r.contains(a)));
    let vars: HashMap<GroundAtom, usize> = atoms.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
    let gr = Grounding { pool, vars: &vars, r };
    let mut clauses = Vec::new();
    for f in ics {
        cnf(&gr.ground(f, &mut BTreeMap::new()), true, &mut clauses)?;
    }
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); atoms.len()];
    for (k, c) in clauses.iter().enumerate() {
        if c.is_empty() {
            return Ok(Vec::new());
        }
        let last = c.iter().map(|l| l.unsigned_abs() as usize - 1).max().unwrap();
        watch[last].push(k);
    }
    let in_r: Vec<bool> = atoms.iter().map(|a| r.contains(a)).collect();
    let mut value = vec![false; atoms.len()];
    let mut changed = BTreeSet::new();
    let mut found = Vec::new();
    models(0, &clauses, &watch, &in_r, &mut value, &mut changed, &mut found);
    let out = keep_minimal(found)
        .into_iter()
        .map(|d| {
            let del: Vec<&GroundAtom> = d.iter().map(|&i| &atoms[i]).filter(|a| r.contains(a)).collect();
            let ins: Vec<&GroundAtom> = d.iter().map(|&i| &atoms[i]).filter(|a| !r.contains(a)).collect();
            r.apply_changes(del, ins)
        })
        .collect();
    Ok(sorted_instances(out))
}

/// Assign variables in order; a clause is checked once its last variable
/// is assigned.
fn models(
    i: usize,
    clauses: &[Clause],
    watch: &[Vec<usize>],
    in_r: &[bool],
    value: &mut Vec<bool>,
    changed: &mut BTreeSet<usize>,
    found: &mut Vec<BTreeSet<usize>>,
) {
    if found.iter().any(|d| d.is_subset(changed)) {
        return;
    }
    if i == value.len() {
        found.push(changed.clone());
        return;
    }
    for flip in [false, true] {
        value[i] = in_r[i] != flip;
        if flip {
            changed.insert(i);
        }
        let ok = watch[i].iter().all(|&k| {
            clauses[k].iter().any(|&l| value[l.unsigned_abs() as usize - 1] == (l > 0))
        });
        if ok {
            models(i + 1, clauses, watch, in_r, value, changed, found);
        }
        if flip {
            changed.remove(&i);
        }
    }
}

fn collect_atoms(f: &Formula, pool: &[Name], env: &mut BTreeMap<Name, Name>, out: &mut BTreeSet<GroundAtom>) {
    match f {
        Formula::Atom(a) => {
            out.insert(GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| Grounding::term(t, env)).collect() });
        }
        Formula::Eq(..) => {}
        Formula::Not(x) => collect_atoms(x, pool, env, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_atoms(a, pool, env, out);
            collect_atoms(b, pool, env, out);
        }
        Formula::Forall(v, x) | Formula::Exists(v, x) => {
            let saved = env.get(v).cloned();
            for c in pool {
                env.insert(v.clone(), c.clone());
                collect_atoms(x, pool, env, out);
            }
            match saved {
                Some(s) => env.insert(v.clone(), s),
                None => env.remove(v),
            };
        }
    }
}

/// The pool the update oracle grounds over for these constraints.
pub fn winslett_pool(ics: &[Formula], r: &Instance, policy: &DomainPolicy) -> Vec<Name> {
    oracle_pool(ics, r, policy)
}

/// Tuples over Act(r) and the query's constants, in the order of the
/// query's free variables, that hold in every enumerated repair. For a
/// sentence the result is `{[]}` when it holds in every repair and empty
/// otherwise.
pub fn consistent_answers_bruteforce(
    ics: &[Formula],
    r: &Instance,
    q: &Formula,
    policy: &DomainPolicy,
) -> Result<BTreeSet<Vec<Name>>> {
    let u = ChangeUniverse::new(ics, r, policy);
    let repairs = enumerate_repairs_bruteforce(ics, r, &u)?;
    let free = q.free_vars();
    let mut consts: BTreeSet<Name> = crate::instance::active_domain(r);
    consts.extend(q.constants());
    let consts: Vec<Name> = consts.into_iter().collect();
    let mut out = BTreeSet::new();
    for t in tuples(&consts, free.len()) {
        let binding: Vec<(Name, Term)> = free.iter().cloned().zip(t.iter().cloned().map(Term::Const)).collect();
        let qt = crate::formula::instantiate(q, &binding);
        if repairs.iter().all(|m| satisfies(m, &qt, policy)) {
            out.insert(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Constraints;
    use crate::formula::parse_formula;
    use crate::instance::Schema;

    fn setup(ic: &str, facts: &str) -> (Vec<Formula>, Instance) {
        let mut s = Schema::new();
        let r = Instance::parse_with(facts, &mut s).unwrap();
        let ics = Constraints::parse(ic, &mut s).unwrap();
        (ics.original, r.with_schema(s).unwrap())
    }

    fn show(v: &[Instance]) -> Vec<String> {
        v.iter().map(|i| i.to_string()).collect()
    }

    #[test]
    fn inclusion_has_two_repairs() {
        let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). r(b).");
        let p = DomainPolicy::default();
        let u = ChangeUniverse::new(&ics, &r, &p);
        let bf = enumerate_repairs_bruteforce(&ics, &r, &u).unwrap();
        assert_eq!(show(&bf), vec!["{p(a), q(a), r(b)}", "{r(b)}"]);
        let w = winslett_update_models(&r, &ics, &winslett_pool(&ics, &r, &p)).unwrap();
        assert_eq!(bf, w);
    }

    #[test]
    fn consistent_instance_is_unchanged() {
        let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). q(a).");
        let u = ChangeUniverse::new(&ics, &r, &DomainPolicy::default());
        assert_eq!(enumerate_repairs_bruteforce(&ics, &r, &u).unwrap(), vec![r]);
    }

    #[test]
    fn only_positive_predicates_are_inserted() {
        let (ics, r) = setup("forall X,Y. (q(X,Y) -> p(Y))", "q(a,b).");
        let u = ChangeUniverse::new(&ics, &r, &DomainPolicy::default());
        assert!(u.insertions.iter().all(|a| &*a.pred == "p"));
        assert_eq!(u.insertions.len(), 2);
    }

    #[test]
    fn denial_empties_intersection() {
        let (ics, r) = setup("forall X. ~p(X)", "p(a).");
        let p = DomainPolicy::default();
        let q = parse_formula("p(X)", r.schema()).unwrap();
        assert!(consistent_answers_bruteforce(&ics, &r, &q, &p).unwrap().is_empty());
    }

    #[test]
    fn universe_guard() {
        let (ics, r) = setup("forall X. (p(X) -> exists Y. q(X,Y))", "p(a). p(b). p(c). p(d). p(e).");
        let u = ChangeUniverse::new(&ics, &r, &DomainPolicy::default());
        assert!(matches!(enumerate_repairs_bruteforce(&ics, &r, &u), Err(Error::UniverseTooLarge(_))));
    }
}
