//! Groundedness of openings: every change must follow classically from the
//! constraints over the repaired predicates, the change definitions and the
//! completion of the change set.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::sat::{self, Cnf, Lit};
use crate::constraints::Constraints;
use crate::error::{Error, Result};
use crate::formula::{Formula, Name, Term};
use crate::instance::{DomainPolicy, GroundAtom, Instance};

const NODE_CAP: usize = 4_000_000;

#[derive(Clone, Debug)]
enum GNode {
    Const(bool),
    Atom(usize),
    Not(Box<GNode>),
    And(Vec<GNode>),
    Or(Vec<GNode>),
}

fn and(xs: Vec<GNode>) -> GNode {
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        match x {
            GNode::Const(true) => {}
            GNode::Const(false) => return GNode::Const(false),
            GNode::And(ys) => out.extend(ys),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => GNode::Const(true),
        1 => out.pop().unwrap(),
        _ => GNode::And(out),
    }
}

fn or(xs: Vec<GNode>) -> GNode {
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        match x {
            GNode::Const(false) => {}
            GNode::Const(true) => return GNode::Const(true),
            GNode::Or(ys) => out.extend(ys),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => GNode::Const(false),
        1 => out.pop().unwrap(),
        _ => GNode::Or(out),
    }
}

fn not(x: GNode) -> GNode {
    match x {
        GNode::Const(b) => GNode::Const(!b),
        GNode::Not(y) => *y,
        other => GNode::Not(Box::new(other)),
    }
}

/// The constraints grounded over a finite domain, with atoms interned and the
/// original instance's truth values attached.
#[derive(Debug)]
pub struct GroundTheory {
    domain: Vec<Name>,
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, usize>,
    orig: Vec<bool>,
    instances: Vec<GNode>,
    by_atom: Vec<Vec<usize>>,
    violated: Vec<(usize, Vec<usize>)>,
    r: Instance,
}

struct Grounder<'a> {
    domain: &'a [Name],
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, usize>,
    nodes: usize,
}

impl Grounder<'_> {
    fn term(&self, t: &Term, env: &[(Name, Name)]) -> Name {
        match t {
            Term::Const(c) => c.clone(),
            Term::Var(v) => env.iter().rev().find(|(w, _)| w == v).map(|(_, c)| c.clone()).expect("bound variable"),
            _ => panic!("grounding expects constraints as written, found {t}"),
        }
    }

    fn ground(&mut self, f: &Formula, env: &mut Vec<(Name, Name)>) -> Result<GNode> {
        self.nodes += 1;
        if self.nodes > NODE_CAP {
            return Err(Error::ResourceExceeded { what: "grounding nodes", limit: NODE_CAP });
        }
        Ok(match f {
            Formula::Atom(a) => {
                let g = GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| self.term(t, env)).collect() };
                let next = self.atoms.len();
                let i = *self.index.entry(g.clone()).or_insert(next);
                if i == next {
                    self.atoms.push(g);
                }
                GNode::Atom(i)
            }
            Formula::Eq(s, t) => GNode::Const(self.term(s, env) == self.term(t, env)),
            Formula::Not(x) => not(self.ground(x, env)?),
            Formula::And(a, b) => and(vec![self.ground(a, env)?, self.ground(b, env)?]),
            Formula::Or(a, b) => or(vec![self.ground(a, env)?, self.ground(b, env)?]),
            Formula::Implies(a, b) => or(vec![not(self.ground(a, env)?), self.ground(b, env)?]),
            Formula::Forall(v, x) | Formula::Exists(v, x) => {
                let mut parts = Vec::with_capacity(self.domain.len());
                for c in self.domain {
                    env.push((v.clone(), c.clone()));
                    let p = self.ground(x, env);
                    env.pop();
                    parts.push(p?);
                }
                if matches!(f, Formula::Forall(..)) {
                    and(parts)
                } else {
                    or(parts)
                }
            }
        })
    }

    fn instances(&mut self, f: &Formula, env: &mut Vec<(Name, Name)>, out: &mut Vec<GNode>) -> Result<()> {
        if let Formula::Forall(v, x) = f {
            for c in self.domain {
                env.push((v.clone(), c.clone()));
                let r = self.instances(x, env, out);
                env.pop();
                r?;
            }
            return Ok(());
        }
        out.push(self.ground(f, env)?);
        Ok(())
    }
}

fn eval(n: &GNode, val: &dyn Fn(usize) -> bool) -> bool {
    match n {
        GNode::Const(b) => *b,
        GNode::Atom(i) => val(*i),
        GNode::Not(x) => !eval(x, val),
        GNode::And(xs) => xs.iter().all(|x| eval(x, val)),
        GNode::Or(xs) => xs.iter().any(|x| eval(x, val)),
    }
}

fn simplify(n: &GNode, fixed: &dyn Fn(usize) -> Option<bool>) -> GNode {
    match n {
        GNode::Const(_) => n.clone(),
        GNode::Atom(i) => match fixed(*i) {
            Some(b) => GNode::Const(b),
            None => n.clone(),
        },
        GNode::Not(x) => not(simplify(x, fixed)),
        GNode::And(xs) => and(xs.iter().map(|x| simplify(x, fixed)).collect()),
        GNode::Or(xs) => or(xs.iter().map(|x| simplify(x, fixed)).collect()),
    }
}

fn collect_atoms(n: &GNode, out: &mut Vec<usize>) {
    match n {
        GNode::Const(_) => {}
        GNode::Atom(i) => out.push(*i),
        GNode::Not(x) => collect_atoms(x, out),
        GNode::And(xs) | GNode::Or(xs) => xs.iter().for_each(|x| collect_atoms(x, out)),
    }
}

fn tseitin(n: &GNode, cnf: &mut Cnf, var: &HashMap<usize, Lit>) -> Lit {
    match n {
        GNode::Const(_) => unreachable!("constants are folded away"),
        GNode::Atom(i) => var[i],
        GNode::Not(x) => -tseitin(x, cnf, var),
        GNode::And(xs) | GNode::Or(xs) => {
            let is_and = matches!(n, GNode::And(_));
            let kids: Vec<Lit> = xs.iter().map(|x| tseitin(x, cnf, var)).collect();
            let v = cnf.new_var();
            let mut big = Vec::with_capacity(kids.len() + 1);
            for &k in &kids {
                if is_and {
                    cnf.add(vec![-v, k]);
                    big.push(-k);
                } else {
                    cnf.add(vec![v, -k]);
                    big.push(k);
                }
            }
            big.push(if is_and { v } else { -v });
            cnf.add(big);
            v
        }
    }
}

impl GroundTheory {
    /// Ground `ics` over Act(r) ∪ constraint constants ∪ the fresh pool.
    pub fn new(ics: &Constraints, r: &Instance, policy: &DomainPolicy) -> Result<Self> {
        let domain = policy.universe(r, &ics.constants(), ics.existentials()).to_vec();
        let mut g = Grounder { domain: &domain, atoms: Vec::new(), index: HashMap::new(), nodes: 0 };
        let mut instances = Vec::new();
        for f in &ics.original {
            g.instances(f, &mut Vec::new(), &mut instances)?;
        }
        let Grounder { atoms, index, .. } = g;
        let orig: Vec<bool> = atoms.iter().map(|a| r.contains(a)).collect();
        let mut by_atom = vec![Vec::new(); atoms.len()];
        let mut violated = Vec::new();
        for (k, inst) in instances.iter().enumerate() {
            let mut ats = Vec::new();
            collect_atoms(inst, &mut ats);
            ats.sort_unstable();
            ats.dedup();
            for &i in &ats {
                by_atom[i].push(k);
            }
            if !eval(inst, &|i| orig[i]) {
                violated.push((k, ats));
            }
        }
        Ok(GroundTheory { domain, atoms, index, orig, instances, by_atom, violated, r: r.clone() })
    }

    pub fn domain(&self) -> &[Name] {
        &self.domain
    }

    /// Whether `m` satisfies every ground instance.
    pub fn holds(&self, m: &Instance) -> bool {
        self.instances.iter().all(|inst| eval(inst, &|i| m.contains(&self.atoms[i])))
    }

    /// Whether `target` (a member of `changes`) follows from the theory plus
    /// the completion of `changes`: no model keeps `target` unchanged while
    /// every atom outside `changes` keeps its original value.
    pub fn entailed(&self, changes: &BTreeSet<GroundAtom>, target: &GroundAtom) -> bool {
        self.follows(changes, target, true)
    }

    /// Like `entailed`, but violations the changes do not touch are left
    /// out instead of making every atom follow. Not monotone under growing
    /// change sets, so unfit for pruning during the build.
    pub fn derivable(&self, changes: &BTreeSet<GroundAtom>, target: &GroundAtom) -> bool {
        self.follows(changes, target, false)
    }

    fn follows(&self, changes: &BTreeSet<GroundAtom>, target: &GroundAtom, vacuous: bool) -> bool {
        let changed: HashSet<usize> = changes.iter().filter_map(|a| self.index.get(a).copied()).collect();
        if vacuous && self.violated.iter().any(|(_, ats)| ats.iter().all(|i| !changed.contains(i))) {
            return true;
        }
        let Some(&t) = self.index.get(target) else { return false };
        let fixed = |i: usize| if changed.contains(&i) { None } else { Some(self.orig[i]) };
        let mut relevant: Vec<usize> = changed.iter().flat_map(|&i| self.by_atom[i].iter().copied()).collect();
        relevant.sort_unstable();
        relevant.dedup();
        let mut cnf = Cnf::default();
        let mut var = HashMap::new();
        let mut sorted: Vec<usize> = changed.iter().copied().collect();
        sorted.sort_unstable();
        for i in sorted {
            var.insert(i, cnf.new_var());
        }
        for k in relevant {
            match simplify(&self.instances[k], &fixed) {
                GNode::Const(true) => {}
                GNode::Const(false) => return true,
                GNode::And(xs) => {
                    for x in xs {
                        let l = tseitin(&x, &mut cnf, &var);
                        cnf.add(vec![l]);
                    }
                }
                other => {
                    let l = tseitin(&other, &mut cnf, &var);
                    cnf.add(vec![l]);
                }
            }
        }
        let keep = if self.orig[t] { var[&t] } else { -var[&t] };
        !sat::satisfiable(&cnf, &[keep])
    }

    /// Changes of `m` with respect to the original instance.
    pub fn changes(&self, m: &Instance) -> BTreeSet<GroundAtom> {
        self.r.atom_set().symmetric_difference(m.atom_set()).cloned().collect()
    }

    /// M is a model and every change in it is entailed.
    pub fn grounded(&self, m: &Instance) -> bool {
        if !self.holds(m) {
            return false;
        }
        let c = self.changes(m);
        c.iter().all(|a| self.entailed(&c, a))
    }

    pub fn context(&self, m: &Instance) -> GroundednessContext {
        GroundednessContext::new(&self.r, m, &self.domain)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtKind {
    Original,
    Repaired,
    Deleted,
    Inserted,
}

/// An atom of the extended signature: original, repaired or change predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtAtom {
    pub kind: ExtKind,
    pub atom: GroundAtom,
}

impl fmt::Display for ExtAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            ExtKind::Original => "",
            ExtKind::Repaired => "new_",
            ExtKind::Deleted => "L_",
            ExtKind::Inserted => "K_",
        };
        write!(f, "{prefix}{}", self.atom)
    }
}

/// Λ and its completion N for one candidate repair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundednessContext {
    pub lambda: BTreeSet<ExtAtom>,
    /// Signed literals: `(true, a)` asserts `a`, `(false, a)` denies it.
    pub completion: BTreeSet<(bool, ExtAtom)>,
}

impl GroundednessContext {
    pub fn new(r: &Instance, m: &Instance, domain: &[Name]) -> Self {
        let ext = |kind, atom: &GroundAtom| ExtAtom { kind, atom: atom.clone() };
        let mut lambda = BTreeSet::new();
        for a in r.atoms() {
            lambda.insert(ext(ExtKind::Original, a));
            if !m.contains(a) {
                lambda.insert(ext(ExtKind::Deleted, a));
            }
        }
        for a in m.atoms() {
            lambda.insert(ext(ExtKind::Repaired, a));
            if !r.contains(a) {
                lambda.insert(ext(ExtKind::Inserted, a));
            }
        }
        let mut completion = BTreeSet::new();
        for (pred, arity) in r.schema().predicates() {
            for args in tuples(domain, arity) {
                let a = GroundAtom { pred: pred.clone(), args };
                for kind in [ExtKind::Deleted, ExtKind::Inserted, ExtKind::Original] {
                    let x = ext(kind, &a);
                    if !lambda.contains(&x) {
                        completion.insert((false, x));
                    } else if kind == ExtKind::Original {
                        completion.insert((true, x));
                    }
                }
            }
        }
        GroundednessContext { lambda, completion }
    }
}

fn tuples(domain: &[Name], arity: usize) -> Vec<Vec<Name>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |c| {
                    let mut t = t.clone();
                    t.push(c.clone());
                    t
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(ic: &str, facts: &str) -> (GroundTheory, Instance) {
        let mut s = crate::instance::Schema::new();
        let r = Instance::parse_with(facts, &mut s).unwrap();
        let ics = Constraints::parse(ic, &mut s).unwrap();
        let r = r.with_schema(s).unwrap();
        (GroundTheory::new(&ics, &r, &DomainPolicy::default()).unwrap(), r)
    }

    fn inst(r: &Instance, text: &str) -> Instance {
        let mut s = r.schema().clone();
        Instance::parse_with(text, &mut s).unwrap()
    }

    #[test]
    fn deletion_repair_is_grounded() {
        let (t, r) = setup("forall X. (P(X) -> Q(X))", "P(a). R(b).");
        assert!(t.grounded(&inst(&r, "R(b).")));
        assert!(t.grounded(&inst(&r, "P(a). Q(a). R(b).")));
        assert!(!t.grounded(&inst(&r, "P(a). Q(b). R(b).")));
        assert!(!t.grounded(&inst(&r, "P(a). Q(a). Q(b). R(b).")));
    }

    #[test]
    fn untouched_violation_makes_entailment_vacuous() {
        let (t, _) = setup("forall X. (P(X) -> Q(X))", "P(a). R(b).");
        let qb = GroundAtom::new("Q", &["b"]);
        let only = BTreeSet::from([qb.clone()]);
        assert!(t.entailed(&only, &qb));
        assert!(!t.derivable(&only, &qb));
        let pa = GroundAtom::new("P", &["a"]);
        assert!(t.derivable(&BTreeSet::from([pa.clone()]), &pa));
    }

    #[test]
    fn unchanged_instance_is_vacuously_grounded_when_consistent() {
        let (t, r) = setup("forall X. (P(X) -> Q(X))", "P(a). Q(a).");
        assert!(t.grounded(&r));
    }

    #[test]
    fn completion_lists_every_absent_change() {
        let (t, r) = setup("forall X. (P(X) -> Q(X))", "P(a). R(b).");
        let ctx = t.context(&inst(&r, "R(b)."));
        let neg = ctx.completion.iter().filter(|(s, _)| !s).count();
        let pos = ctx.completion.iter().filter(|(s, _)| *s).count();
        assert_eq!((neg, pos), (15, 2));
    }
}
