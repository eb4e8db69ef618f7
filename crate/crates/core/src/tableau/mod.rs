//! Analytic tableaux over a database instance: rule expansion, closure
//! against the instance, and the product of tableaux.

mod explain;
mod instantiate;
pub mod valuation;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::constraints::Constraints;
use crate::error::{Error, Result};
use crate::formula::{classify, gamma_block, instantiate as inst, name, negate, Atom, Formula, Literal, Name, RuleClass, Term};
use crate::instance::{DomainPolicy, GroundAtom, Instance};
use crate::par;
use crate::repair::grounded::GroundTheory;

pub use explain::explain;
pub use instantiate::guards;
use valuation::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Instantiate universal blocks only where their guard atoms can hold.
    Relevant,
    /// Instantiate universal blocks over every tuple of the term pool.
    Exhaustive,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub policy: DomainPolicy,
    pub strategy: Strategy,
    pub max_branches: usize,
    pub max_formulas: usize,
    /// Never add a formula already on the branch; skip satisfied β-formulas.
    pub regularity: bool,
    /// Suspend β-children dominated by a tautological sibling, and drop
    /// subsumed branches before opening.
    pub subsumption: bool,
    /// Suspend branches whose ground changes are not entailed.
    pub groundedness: bool,
    pub parallel: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            policy: DomainPolicy::default(),
            strategy: Strategy::Relevant,
            max_branches: 20_000,
            max_formulas: 10_000,
            regularity: true,
            subsumption: true,
            groundedness: true,
            parallel: par::AVAILABLE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClosureReason {
    UnaEquality(Name, Name),
    MissingFact(GroundAtom),
    NoSubstitution(Atom),
    /// No single valuation makes all these literals true at once.
    NoJointSubstitution(Vec<Literal>),
    NegatedFact(GroundAtom),
    Complementary(Formula),
    SelfInequality(Term),
}

impl ClosureReason {
    pub fn condition(&self) -> &'static str {
        match self {
            ClosureReason::UnaEquality(..) => "1",
            ClosureReason::MissingFact(_) => "2a",
            ClosureReason::NoSubstitution(_) | ClosureReason::NoJointSubstitution(_) => "2b",
            ClosureReason::NegatedFact(_) => "3",
            ClosureReason::Complementary(_) => "4",
            ClosureReason::SelfInequality(_) => "5",
        }
    }

    /// Closed by the branch formulas alone, whatever the instance.
    pub fn is_builtin(&self) -> bool {
        matches!(
            self,
            ClosureReason::UnaEquality(..) | ClosureReason::Complementary(_) | ClosureReason::SelfInequality(_)
        )
    }
}

impl fmt::Display for ClosureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cond {}: ", self.condition())?;
        match self {
            ClosureReason::UnaEquality(a, b) => write!(f, "{} = {} under unique names", Term::Const(a.clone()), Term::Const(b.clone())),
            ClosureReason::MissingFact(a) => write!(f, "{a} not in r"),
            ClosureReason::NoSubstitution(a) => write!(f, "no σ for {a}"),
            ClosureReason::NoJointSubstitution(ls) => {
                write!(f, "no σ for {{")?;
                for (i, l) in ls.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{l}")?;
                }
                write!(f, "}}")
            }
            ClosureReason::NegatedFact(a) => write!(f, "~{a} but {a} in r"),
            ClosureReason::Complementary(x) => write!(f, "{x} and its negation"),
            ClosureReason::SelfInequality(t) => write!(f, "{t} != {t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Suspension {
    /// A sibling differs only by a formula true in every structure.
    Dominated,
    /// This change cannot be derived from the constraints and the completion.
    Ungrounded(GroundAtom),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Open,
    Closed(ClosureReason),
    Suspended(Suspension),
}

/// Variable bindings of the universal blocks a formula was instantiated from.
pub type Binding = Arc<Vec<(Name, Term)>>;

#[derive(Clone, Debug)]
struct GammaBlock {
    vars: Vec<Name>,
    body: Formula,
    guards: Vec<Atom>,
    covered: Vec<bool>,
    origin: Option<Binding>,
}

#[derive(Clone, Debug)]
pub struct Branch {
    base: Arc<Instance>,
    trace: Vec<Formula>,
    set: HashSet<Formula>,
    pending: VecDeque<Formula>,
    literals: BTreeSet<Literal>,
    gammas: Vec<GammaBlock>,
    ledger: HashSet<(usize, Vec<Term>)>,
    variants: HashSet<Formula>,
    origins: HashMap<Formula, Binding>,
    changes: BTreeSet<GroundAtom>,
    status: Status,
    deltas: usize,
}

impl Branch {
    fn root(base: Arc<Instance>) -> Self {
        Branch {
            base,
            trace: Vec::new(),
            set: HashSet::new(),
            pending: VecDeque::new(),
            literals: BTreeSet::new(),
            gammas: Vec::new(),
            ledger: HashSet::new(),
            variants: HashSet::new(),
            origins: HashMap::new(),
            changes: BTreeSet::new(),
            status: Status::Open,
            deltas: 0,
        }
    }

    /// A saturated branch holding just `lits`, over instance `base`.
    pub fn from_literals(base: Arc<Instance>, lits: impl IntoIterator<Item = Literal>) -> Self {
        let mut b = Branch::root(base);
        for l in lits {
            let f = l.to_formula();
            if b.set.insert(f.clone()) {
                b.trace.push(f);
            }
            b.literals.insert(l);
        }
        b
    }

    pub fn base(&self) -> &Arc<Instance> {
        &self.base
    }

    /// Formulas of the I-part in the order they were added.
    pub fn formulas(&self) -> &[Formula] {
        &self.trace
    }

    pub fn literals(&self) -> &BTreeSet<Literal> {
        &self.literals
    }

    /// Literals over database predicates.
    pub fn db_literals(&self) -> BTreeSet<Literal> {
        self.literals.iter().filter(|l| !l.is_equality()).cloned().collect()
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.status, Status::Closed(_))
    }

    pub fn is_suspended(&self) -> bool {
        matches!(self.status, Status::Suspended(_))
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.set.contains(f)
    }

    /// The γ-binding a literal descends from, if any.
    pub fn origin(&self, l: &Literal) -> Option<&Binding> {
        self.origins.get(&l.to_formula())
    }

    /// Parameters and ground Skolem terms occurring in the literals.
    pub fn nulls(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        for l in &self.literals {
            for t in l.terms() {
                collect_nulls(t, &mut out);
            }
        }
        out
    }

    pub fn is_saturated(&self) -> bool {
        self.pending.is_empty()
    }
}

fn collect_nulls(t: &Term, out: &mut BTreeSet<Term>) {
    match t {
        Term::Param(_) => {
            out.insert(t.clone());
        }
        Term::Skolem(_, args) => {
            args.iter().for_each(|a| collect_nulls(a, out));
            out.insert(t.clone());
        }
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Formula occurrences added to the tree (shared prefixes count once).
    pub nodes: usize,
    pub branches: usize,
    /// γ-instances skipped for exceeding the term-depth bound.
    pub truncated: usize,
}

#[derive(Clone, Debug)]
pub struct Tableau {
    pub branches: Vec<Branch>,
    pub base: Arc<Instance>,
    pub pool: Arc<Vec<Name>>,
    pub roots: Vec<Formula>,
    pub stats: Stats,
}

impl Tableau {
    /// Every branch is closed or suspended.
    pub fn is_closed(&self) -> bool {
        self.branches.iter().all(|b| !matches!(b.status, Status::Open))
    }

    pub fn open_branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.status == Status::Open)
    }

    /// A one-branch tableau with no formulas: the unit of `combine`.
    pub fn empty(base: Arc<Instance>, pool: Arc<Vec<Name>>) -> Tableau {
        Tableau { branches: vec![Branch::root(base.clone())], base, pool, roots: Vec::new(), stats: Stats::default() }
    }
}

enum Step {
    Continue,
    Split(Vec<Branch>),
    Saturated,
}

/// Expansion engine for one constant pool.
pub struct Builder<'a> {
    opts: &'a BuildOptions,
    pool: Arc<Vec<Name>>,
    theory: Option<&'a GroundTheory>,
    branches: AtomicUsize,
    nodes: AtomicUsize,
    truncated: AtomicUsize,
}

impl<'a> Builder<'a> {
    pub fn new(opts: &'a BuildOptions, pool: Arc<Vec<Name>>, theory: Option<&'a GroundTheory>) -> Self {
        Builder {
            opts,
            pool,
            theory,
            branches: AtomicUsize::new(1),
            nodes: AtomicUsize::new(0),
            truncated: AtomicUsize::new(0),
        }
    }

    pub fn stats(&self) -> Stats {
        Stats {
            nodes: self.nodes.load(Ordering::Relaxed),
            branches: self.branches.load(Ordering::Relaxed),
            truncated: self.truncated.load(Ordering::Relaxed),
        }
    }

    /// A branch over `base` with `formulas` queued for expansion.
    pub fn start(&self, base: Arc<Instance>, formulas: &[Formula]) -> Result<Branch> {
        let mut b = Branch::root(base);
        for f in formulas {
            if let Some(g) = self.add(&mut b, f.clone(), None)? {
                b.pending.push_back(g);
            }
        }
        Ok(b)
    }

    /// Put `f` on the branch, checking the built-in closure conditions.
    /// Returns the formula if it still needs decomposing.
    fn add(&self, b: &mut Branch, f: Formula, origin: Option<Binding>) -> Result<Option<Formula>> {
        if b.status != Status::Open {
            return Ok(None);
        }
        if self.opts.regularity && b.set.contains(&f) {
            return Ok(None);
        }
        self.nodes.fetch_add(1, Ordering::Relaxed);
        b.trace.push(f.clone());
        if b.trace.len() > self.opts.max_formulas {
            return Err(Error::ResourceExceeded { what: "formulas per branch", limit: self.opts.max_formulas });
        }
        b.set.insert(f.clone());
        if let Some(o) = origin {
            b.origins.entry(f.clone()).or_insert(o);
        }
        if b.set.contains(&negate(&f)) {
            b.status = Status::Closed(ClosureReason::Complementary(f));
            return Ok(None);
        }
        if let Formula::Not(g) = &f {
            if b.set.contains(&**g) {
                b.status = Status::Closed(ClosureReason::Complementary((**g).clone()));
                return Ok(None);
            }
        }
        let Some(l) = Literal::from_formula(&f) else { return Ok(Some(f)) };
        match &l {
            Literal::Eq(Term::Const(x), Term::Const(y)) if x != y => {
                b.status = Status::Closed(ClosureReason::UnaEquality(x.clone(), y.clone()));
            }
            Literal::Neq(s, t) if s == t => {
                b.status = Status::Closed(ClosureReason::SelfInequality(s.clone()));
            }
            _ => {}
        }
        let change = match &l {
            Literal::Pos(a) => GroundAtom::from_atom(a).filter(|g| !b.base.contains(g)),
            Literal::Neg(a) => GroundAtom::from_atom(a).filter(|g| b.base.contains(g)),
            _ => None,
        };
        b.literals.insert(l);
        if let (Some(th), Some(c)) = (self.theory, change) {
            if b.status == Status::Open && b.changes.insert(c) {
                if let Some(bad) = b.changes.iter().find(|a| !th.entailed(&b.changes, a)) {
                    b.status = Status::Suspended(Suspension::Ungrounded(bad.clone()));
                }
            }
        }
        Ok(None)
    }

    /// Add formulas in order, queueing the compound ones at the front.
    fn add_front(&self, b: &mut Branch, fs: Vec<Formula>, origin: Option<Binding>) -> Result<()> {
        let mut queued = Vec::new();
        for f in fs {
            if let Some(g) = self.add(b, f, origin.clone())? {
                queued.push(g);
            }
        }
        for g in queued.into_iter().rev() {
            b.pending.push_front(g);
        }
        Ok(())
    }

    fn count_branch(&self) -> Result<()> {
        let n = self.branches.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.opts.max_branches {
            return Err(Error::ResourceExceeded { what: "branches", limit: self.opts.max_branches });
        }
        Ok(())
    }

    /// Apply one rule to the branch.
    pub fn expand_step(&self, b: &Branch) -> Result<Vec<Branch>> {
        let mut b = b.clone();
        match self.step(&mut b)? {
            Step::Continue | Step::Saturated => Ok(vec![b]),
            Step::Split(children) => Ok(children),
        }
    }

    fn step(&self, b: &mut Branch) -> Result<Step> {
        let Some(f) = b.pending.pop_front() else {
            let fresh = self.instances(b);
            if fresh.is_empty() {
                return Ok(Step::Saturated);
            }
            for (f, origin) in fresh {
                if let Some(g) = self.add(b, f, Some(origin))? {
                    b.pending.push_back(g);
                }
            }
            return Ok(Step::Continue);
        };
        let origin = b.origins.get(&f).cloned();
        match classify(&f) {
            RuleClass::LiteralOrEquality(_) => {}
            RuleClass::Alpha(x, y) => {
                let fs = if x == y { vec![x] } else { vec![x, y] };
                self.add_front(b, fs, origin)?;
            }
            RuleClass::Beta(x, y) => {
                if self.opts.regularity && (b.set.contains(&x) || b.set.contains(&y)) {
                    return Ok(Step::Continue);
                }
                if x == y {
                    self.add_front(b, vec![x], origin)?;
                    return Ok(Step::Continue);
                }
                self.count_branch()?;
                let mut left = b.clone();
                let mut right = std::mem::replace(b, Branch::root(left.base.clone()));
                let (tx, ty) = (trivially_true(&x), trivially_true(&y));
                self.add_front(&mut left, vec![x], origin.clone())?;
                self.add_front(&mut right, vec![y], origin)?;
                if self.opts.subsumption {
                    if ty && !tx && left.status == Status::Open {
                        left.status = Status::Suspended(Suspension::Dominated);
                    } else if tx && !ty && right.status == Status::Open {
                        right.status = Status::Suspended(Suspension::Dominated);
                    }
                }
                return Ok(Step::Split(vec![left, right]));
            }
            RuleClass::Gamma(..) => {
                let (vars, body) = gamma_block(&f).expect("gamma formula");
                let guards = instantiate::guards(&body);
                let covered = instantiate::covered(&vars, &guards);
                b.gammas.push(GammaBlock { vars, body, guards, covered, origin });
            }
            RuleClass::Delta(v, body) => {
                b.deltas += 1;
                let p = Term::Param(name(&format!("d{}", b.deltas)));
                self.add_front(b, vec![inst(&body, &[(v, p)])], origin)?;
            }
        }
        Ok(Step::Continue)
    }

    /// Expand to saturation; returns the leaves in left-to-right order.
    pub fn develop(&self, mut b: Branch) -> Result<Vec<Branch>> {
        loop {
            if b.status != Status::Open {
                return Ok(vec![b]);
            }
            match self.step(&mut b)? {
                Step::Continue => {}
                Step::Saturated => {
                    if let Some(reason) = self.closure_status(&b) {
                        b.status = Status::Closed(reason);
                    }
                    return Ok(vec![b]);
                }
                Step::Split(children) => return self.develop_all(children),
            }
        }
    }

    fn develop_all(&self, mut children: Vec<Branch>) -> Result<Vec<Branch>> {
        if children.len() == 1 {
            return self.develop(children.pop().unwrap());
        }
        let right = children.split_off(children.len() / 2);
        let (l, r) = par::join(self.opts.parallel, || self.develop_all(children), || self.develop_all(right));
        let mut l = l?;
        l.extend(r?);
        Ok(l)
    }

    /// First applicable closure condition, in the order 1, 4, 5, 3, 2a, 2b.
    pub fn closure_status(&self, b: &Branch) -> Option<ClosureReason> {
        for l in &b.literals {
            if let Literal::Eq(Term::Const(x), Term::Const(y)) = l {
                if x != y {
                    return Some(ClosureReason::UnaEquality(x.clone(), y.clone()));
                }
            }
        }
        for f in &b.trace {
            if b.set.contains(&negate(f)) {
                return Some(ClosureReason::Complementary(f.clone()));
            }
        }
        for l in &b.literals {
            if let Literal::Neq(s, t) = l {
                if s == t {
                    return Some(ClosureReason::SelfInequality(s.clone()));
                }
            }
        }
        for l in &b.literals {
            if let Literal::Neg(a) = l {
                if let Some(g) = GroundAtom::from_atom(a) {
                    if b.base.contains(&g) {
                        return Some(ClosureReason::NegatedFact(g));
                    }
                }
            }
        }
        for l in &b.literals {
            if let Literal::Pos(a) = l {
                if let Some(g) = GroundAtom::from_atom(a) {
                    if !b.base.contains(&g) {
                        return Some(ClosureReason::MissingFact(g));
                    }
                }
            }
        }
        let with_nulls: Vec<Literal> = b.literals.iter().filter(|l| l.has_null()).cloned().collect();
        if with_nulls.is_empty() {
            return None;
        }
        for l in &with_nulls {
            if let Literal::Pos(a) = l {
                if !valuation::exists(std::slice::from_ref(l), &self.pool, Mode::Within(&b.base)) {
                    return Some(ClosureReason::NoSubstitution(a.clone()));
                }
            }
        }
        if !valuation::exists(&with_nulls, &self.pool, Mode::Within(&b.base)) {
            return Some(ClosureReason::NoJointSubstitution(with_nulls));
        }
        None
    }

    /// New γ-instances for the branch, in canonical order.
    fn instances(&self, b: &mut Branch) -> Vec<(Formula, Binding)> {
        if b.gammas.is_empty() {
            return Vec::new();
        }
        let depth = self.opts.policy.term_depth;
        let nulls: Vec<Term> = b.nulls().into_iter().filter(|t| t.depth() <= depth).collect();
        let mut terms: Vec<Term> = self.pool.iter().map(|c| Term::Const(c.clone())).collect();
        terms.extend(nulls);
        let constants: Vec<Term> = self.pool.iter().map(|c| Term::Const(c.clone())).collect();
        let present = if self.opts.strategy == Strategy::Relevant { present_atoms(b) } else { BTreeMap::new() };

        let mut out = Vec::new();
        for gi in 0..b.gammas.len() {
            let g = &b.gammas[gi];
            let mut tuples: Vec<Vec<Term>> = Vec::new();
            match self.opts.strategy {
                Strategy::Exhaustive => product(&vec![terms.clone(); g.vars.len()], &mut tuples),
                Strategy::Relevant => {
                    let mut joins = Vec::new();
                    instantiate::join(&g.guards, &present, &mut joins);
                    for m in joins {
                        let choices: Vec<Vec<Term>> = g
                            .vars
                            .iter()
                            .zip(&g.covered)
                            .map(|(v, &cov)| match m.get(v) {
                                Some(t) if cov => vec![t.clone()],
                                _ => terms.clone(),
                            })
                            .collect();
                        product(&choices, &mut tuples);
                    }
                }
            }
            let mut candidates = Vec::new();
            for t in tuples {
                let f = inst(&g.body, &g.vars.iter().cloned().zip(t.iter().cloned()).collect::<Vec<_>>());
                if f.term_depth() <= depth {
                    candidates.push((t, f));
                    continue;
                }
                if self.opts.strategy == Strategy::Exhaustive || !t.iter().any(Term::is_null) {
                    self.truncated.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
                // a null whose instance nests too deep stands for some constant
                let choices: Vec<Vec<Term>> =
                    t.iter().map(|x| if x.is_null() { constants.clone() } else { vec![x.clone()] }).collect();
                let mut expanded = Vec::new();
                product(&choices, &mut expanded);
                for e in expanded {
                    let f = inst(&g.body, &g.vars.iter().cloned().zip(e.iter().cloned()).collect::<Vec<_>>());
                    if f.term_depth() <= depth {
                        candidates.push((e, f));
                    } else {
                        self.truncated.fetch_add(1, Ordering::Relaxed);
                    }
                }
            }
            for (t, f) in candidates {
                if !b.ledger.insert((gi, t.clone())) {
                    continue;
                }
                if self.opts.subsumption && trivially_true(&f) {
                    continue;
                }
                if self.opts.regularity && !b.variants.insert(canonical(&f)) {
                    continue;
                }
                let g = &b.gammas[gi];
                let mut binding: Vec<(Name, Term)> = g.origin.as_ref().map(|o| (**o).clone()).unwrap_or_default();
                binding.extend(g.vars.iter().cloned().zip(t));
                out.push((f, Arc::new(binding)));
            }
        }
        out
    }

    /// `t1 ⊗ t2`: every pair of branches merged and re-saturated over the
    /// first branch's instance.
    pub fn combine(&self, t1: &Tableau, t2: &Tableau) -> Result<Tableau> {
        if !t1.pool.iter().all(|c| self.pool.contains(c)) || !t2.pool.iter().all(|c| self.pool.contains(c)) {
            return Err(Error::PoolMismatch);
        }
        let mut starts = Vec::new();
        for x in &t1.branches {
            for y in &t2.branches {
                starts.push(self.merge(x, y)?);
            }
        }
        let developed = par::map(self.opts.parallel, &starts, |b| self.develop(b.clone()));
        let mut branches = Vec::new();
        for d in developed {
            branches.extend(d?);
        }
        let mut roots = t1.roots.clone();
        roots.extend(t2.roots.iter().cloned());
        Ok(Tableau { branches, base: t1.base.clone(), pool: self.pool.clone(), roots, stats: self.stats() })
    }

    fn merge(&self, x: &Branch, y: &Branch) -> Result<Branch> {
        let mut b = x.clone();
        if matches!(b.status, Status::Closed(ref r) if !r.is_builtin()) {
            b.status = Status::Open;
        }
        let offset = b.gammas.len();
        for f in &y.trace {
            let origin = y.origins.get(f).cloned();
            if let Some(g) = self.add(&mut b, f.clone(), origin)? {
                if y.pending.contains(&g) {
                    b.pending.push_back(g);
                }
            }
        }
        b.gammas.extend(y.gammas.iter().cloned());
        b.ledger.extend(y.ledger.iter().map(|(i, t)| (i + offset, t.clone())));
        b.variants.extend(y.variants.iter().cloned());
        if y.status != Status::Open && b.status == Status::Open {
            if let Status::Closed(r) = &y.status {
                if r.is_builtin() {
                    b.status = y.status.clone();
                }
            }
        }
        Ok(b)
    }
}

fn trivially_true(f: &Formula) -> bool {
    match f {
        Formula::Eq(s, t) => s == t,
        Formula::Not(x) => match &**x {
            Formula::Eq(Term::Const(a), Term::Const(b)) => a != b,
            Formula::Not(y) => trivially_true(y),
            _ => false,
        },
        Formula::And(a, b) => trivially_true(a) && trivially_true(b),
        Formula::Or(a, b) => trivially_true(a) || trivially_true(b),
        Formula::Implies(a, b) => trivially_false(a) || trivially_true(b),
        _ => false,
    }
}

fn trivially_false(f: &Formula) -> bool {
    match f {
        Formula::Eq(Term::Const(a), Term::Const(b)) => a != b,
        Formula::Not(x) => trivially_true(x),
        Formula::And(a, b) => trivially_false(a) || trivially_false(b),
        Formula::Or(a, b) => trivially_false(a) && trivially_false(b),
        _ => false,
    }
}

/// A representative of `f` up to the order of conjuncts and disjuncts and
/// the orientation of equalities.
fn canonical(f: &Formula) -> Formula {
    fn flatten(f: &Formula, and: bool, out: &mut Vec<Formula>) {
        match f {
            Formula::And(a, b) if and => {
                flatten(a, and, out);
                flatten(b, and, out);
            }
            Formula::Or(a, b) if !and => {
                flatten(a, and, out);
                flatten(b, and, out);
            }
            _ => out.push(canonical(f)),
        }
    }
    let rebuild = |f: &Formula, and: bool| {
        let mut parts = Vec::new();
        flatten(f, and, &mut parts);
        parts.sort();
        parts.dedup();
        let mut it = parts.into_iter().rev();
        let last = it.next().expect("at least one operand");
        it.fold(last, |acc, x| if and { Formula::And(Box::new(x), Box::new(acc)) } else { Formula::Or(Box::new(x), Box::new(acc)) })
    };
    match f {
        Formula::Eq(s, t) if t < s => Formula::Eq(t.clone(), s.clone()),
        Formula::Atom(_) | Formula::Eq(..) => f.clone(),
        Formula::Not(x) => Formula::Not(Box::new(canonical(x))),
        Formula::And(..) => rebuild(f, true),
        Formula::Or(..) => rebuild(f, false),
        Formula::Implies(a, b) => Formula::Implies(Box::new(canonical(a)), Box::new(canonical(b))),
        Formula::Forall(v, x) => Formula::Forall(v.clone(), Box::new(canonical(x))),
        Formula::Exists(v, x) => Formula::Exists(v.clone(), Box::new(canonical(x))),
    }
}

/// Atoms that may hold in an opening of the branch: base atoms not deleted
/// by a ground negative literal, and the positive literals.
fn present_atoms(b: &Branch) -> BTreeMap<Name, Vec<Vec<Term>>> {
    let mut out: BTreeMap<Name, Vec<Vec<Term>>> = BTreeMap::new();
    for a in b.base.atoms() {
        if b.literals.contains(&Literal::Neg(a.to_atom())) {
            continue;
        }
        out.entry(a.pred.clone()).or_default().push(a.args.iter().map(|c| Term::Const(c.clone())).collect());
    }
    for l in &b.literals {
        if let Literal::Pos(a) = l {
            let tuple = a.args.clone();
            let e = out.entry(a.pred.clone()).or_default();
            if !e.contains(&tuple) {
                e.push(tuple);
            }
        }
    }
    out
}

fn product(choices: &[Vec<Term>], out: &mut Vec<Vec<Term>>) {
    let mut cur = Vec::with_capacity(choices.len());
    fn rec(choices: &[Vec<Term>], cur: &mut Vec<Term>, out: &mut Vec<Vec<Term>>) {
        match choices.split_first() {
            None => out.push(cur.clone()),
            Some((first, rest)) => {
                for t in first {
                    cur.push(t.clone());
                    rec(rest, cur, out);
                    cur.pop();
                }
            }
        }
    }
    rec(choices, &mut cur, out);
}

/// A universally quantified variable no guard atom restricts.
fn unsafe_variable(f: &Formula, positive: bool) -> Option<Name> {
    let universal = matches!((f, positive), (Formula::Forall(..), true) | (Formula::Exists(..), false));
    if universal {
        let g = if positive { f.clone() } else { negate(f) };
        let (vars, body) = gamma_block(&g)?;
        let guards = instantiate::guards(&body);
        let cov = instantiate::covered(&vars, &guards);
        if let Some((v, _)) = vars.iter().zip(cov).find(|(_, c)| !c) {
            return Some(v.clone());
        }
        return unsafe_variable(&body, true);
    }
    match f {
        Formula::Atom(_) | Formula::Eq(..) => None,
        Formula::Not(x) => unsafe_variable(x, !positive),
        Formula::And(a, b) | Formula::Or(a, b) => unsafe_variable(a, positive).or_else(|| unsafe_variable(b, positive)),
        Formula::Implies(a, b) => unsafe_variable(a, !positive).or_else(|| unsafe_variable(b, positive)),
        Formula::Forall(_, x) | Formula::Exists(_, x) => unsafe_variable(x, positive),
    }
}

/// The constant pool for a constraint set over `r`.
pub fn pool_for(ics: &Constraints, r: &Instance, policy: &DomainPolicy) -> Vec<Name> {
    policy.universe(r, &ics.constants(), ics.existentials()).to_vec()
}

/// The saturated tableau of the constraints together with the instance.
pub fn build(ics: &Constraints, r: &Instance, opts: &BuildOptions) -> Result<Tableau> {
    for f in &ics.skolemized {
        if let Some(v) = unsafe_variable(f, true) {
            return Err(Error::UnsafeConstraint(format!("variable {v} of {f} is not bound by a positive database atom")));
        }
    }
    let pool = Arc::new(pool_for(ics, r, &opts.policy));
    let theory = if opts.groundedness { Some(GroundTheory::new(ics, r, &opts.policy)?) } else { None };
    let builder = Builder::new(opts, pool.clone(), theory.as_ref());
    let base = Arc::new(r.clone());
    let root = builder.start(base.clone(), &ics.skolemized)?;
    let branches = builder.develop(root)?;
    Ok(Tableau { branches, base, pool, roots: ics.skolemized.clone(), stats: builder.stats() })
}

/// The saturated tableau of arbitrary closed formulas over `base`.
pub fn build_formulas(formulas: &[Formula], base: Arc<Instance>, pool: Arc<Vec<Name>>, opts: &BuildOptions) -> Result<Tableau> {
    let builder = Builder::new(opts, pool.clone(), None);
    let root = builder.start(base.clone(), formulas)?;
    let branches = builder.develop(root)?;
    Ok(Tableau { branches, base, pool, roots: formulas.to_vec(), stats: builder.stats() })
}

#[cfg(test)]
mod tests;
