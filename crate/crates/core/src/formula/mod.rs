//! First-order syntax: terms, atoms, formulas, literals, substitution and
//! rule classification.

mod parse;
mod print;
mod skolem;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};

pub use parse::{parse_formula, parse_formula_declaring, parse_term_list};
pub use print::{is_bare_constant, quote_constant};
pub use skolem::{count_existentials, skolemize, FreshSource};

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Const(Name),
    Param(Name),
    Skolem(Name, Vec<Term>),
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(name(s))
    }

    pub fn constant(s: &str) -> Term {
        Term::Const(name(s))
    }

    pub fn param(s: &str) -> Term {
        Term::Param(name(s))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Param(_) => true,
            Term::Skolem(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Parameters and Skolem applications: terms a valuation must fix.
    pub fn is_null(&self) -> bool {
        matches!(self, Term::Param(_) | Term::Skolem(..))
    }

    pub fn has_null(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => false,
            Term::Param(_) => true,
            Term::Skolem(..) => true,
        }
    }

    pub fn as_const(&self) -> Option<&Name> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Skolem(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::Skolem(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    fn collect_constants(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::Skolem(_, args) => args.iter().for_each(|a| a.collect_constants(out)),
            _ => {}
        }
    }

    fn apply(&self, s: &Substitution, bound: &[Name]) -> Result<Term> {
        Ok(match self {
            Term::Var(v) if !bound.contains(v) => match s.vars.get(v) {
                Some(t) => {
                    check_capture(t, bound)?;
                    t.clone()
                }
                None => self.clone(),
            },
            Term::Param(p) => match s.params.get(p) {
                Some(t) => {
                    check_capture(t, bound)?;
                    t.clone()
                }
                None => self.clone(),
            },
            Term::Skolem(f, args) => Term::Skolem(
                f.clone(),
                args.iter().map(|a| a.apply(s, bound)).collect::<Result<_>>()?,
            ),
            _ => self.clone(),
        })
    }
}

fn check_capture(t: &Term, bound: &[Name]) -> Result<()> {
    let mut vs = Vec::new();
    t.collect_vars(&mut vs);
    match vs.into_iter().find(|v| bound.contains(v)) {
        Some(v) => Err(Error::Capture(v.to_string())),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: name(pred), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn has_null(&self) -> bool {
        self.args.iter().any(Term::has_null)
    }

    pub fn depth(&self) -> usize {
        self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|t| f(t)).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(Name, Box<Formula>),
    Exists(Name, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom(Atom::new(pred, args))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(v: &str, body: Formula) -> Formula {
        Formula::Forall(name(v), Box::new(body))
    }

    pub fn exists(v: &str, body: Formula) -> Formula {
        Formula::Exists(name(v), Box::new(body))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
        let push = |t: &Term, out: &mut Vec<Name>| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Formula::Atom(a) => a.args.iter().for_each(|t| push(t, out)),
            Formula::Eq(s, t) => {
                push(s, out);
                push(t, out);
            }
            Formula::Not(f) => f.free_vars_into(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                bound.push(v.clone());
                f.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| t.collect_constants(&mut out));
        out
    }

    pub fn predicates(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(a.pred.clone());
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Eq(..) => {}
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => x.visit_atoms(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_atoms(f);
                b.visit_atoms(f);
            }
        }
    }

    pub fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::Atom(a) => a.args.iter().for_each(|t| f(t)),
            Formula::Eq(s, t) => {
                f(s);
                f(t);
            }
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => x.visit_terms(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.map_terms(f)),
            Formula::Eq(s, t) => Formula::Eq(f(s), f(t)),
            Formula::Not(x) => Formula::not(x.map_terms(f)),
            Formula::And(a, b) => Formula::and(a.map_terms(f), b.map_terms(f)),
            Formula::Or(a, b) => Formula::or(a.map_terms(f), b.map_terms(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_terms(f), b.map_terms(f)),
            Formula::Forall(v, x) => Formula::Forall(v.clone(), Box::new(x.map_terms(f))),
            Formula::Exists(v, x) => Formula::Exists(v.clone(), Box::new(x.map_terms(f))),
        }
    }

    /// Largest Skolem nesting depth of any term.
    pub fn term_depth(&self) -> usize {
        let mut d = 0;
        self.visit_terms(&mut |t| d = d.max(t.depth()));
        d
    }

    pub fn has_null(&self) -> bool {
        let mut found = false;
        self.visit_terms(&mut |t| found |= t.has_null());
        found
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Eq(..) => 1,
            Formula::Not(x) | Formula::Forall(_, x) | Formula::Exists(_, x) => 1 + x.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

/// A signed atom or (in)equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    Neq(Term, Term),
}

impl Literal {
    pub fn complement(&self) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Neg(a.clone()),
            Literal::Neg(a) => Literal::Pos(a.clone()),
            Literal::Eq(s, t) => Literal::Neq(s.clone(), t.clone()),
            Literal::Neq(s, t) => Literal::Eq(s.clone(), t.clone()),
        }
    }

    pub fn to_formula(&self) -> Formula {
        match self {
            Literal::Pos(a) => Formula::Atom(a.clone()),
            Literal::Neg(a) => Formula::not(Formula::Atom(a.clone())),
            Literal::Eq(s, t) => Formula::Eq(s.clone(), t.clone()),
            Literal::Neq(s, t) => Formula::not(Formula::Eq(s.clone(), t.clone())),
        }
    }

    pub fn from_formula(f: &Formula) -> Option<Literal> {
        match f {
            Formula::Atom(a) => Some(Literal::Pos(a.clone())),
            Formula::Eq(s, t) => Some(Literal::Eq(s.clone(), t.clone())),
            Formula::Not(x) => match &**x {
                Formula::Atom(a) => Some(Literal::Neg(a.clone())),
                Formula::Eq(s, t) => Some(Literal::Neq(s.clone(), t.clone())),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_equality(&self) -> bool {
        matches!(self, Literal::Eq(..) | Literal::Neq(..))
    }

    pub fn has_null(&self) -> bool {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.has_null(),
            Literal::Eq(s, t) | Literal::Neq(s, t) => s.has_null() || t.has_null(),
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
            Literal::Eq(s, t) | Literal::Neq(s, t) => vec![s, t],
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Pos(a.map_terms(f)),
            Literal::Neg(a) => Literal::Neg(a.map_terms(f)),
            Literal::Eq(s, t) => Literal::Eq(f(s), f(t)),
            Literal::Neq(s, t) => Literal::Neq(f(s), f(t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleClass {
    Alpha(Formula, Formula),
    Beta(Formula, Formula),
    Gamma(Name, Formula),
    Delta(Name, Formula),
    LiteralOrEquality(Literal),
}

/// Smullyan classification of a formula.
pub fn classify(f: &Formula) -> RuleClass {
    use Formula as F;
    match f {
        F::Atom(_) | F::Eq(..) => RuleClass::LiteralOrEquality(Literal::from_formula(f).unwrap()),
        F::And(a, b) => RuleClass::Alpha((**a).clone(), (**b).clone()),
        F::Or(a, b) => RuleClass::Beta((**a).clone(), (**b).clone()),
        F::Implies(a, b) => RuleClass::Beta(negate(a), (**b).clone()),
        F::Forall(v, body) => RuleClass::Gamma(v.clone(), (**body).clone()),
        F::Exists(v, body) => RuleClass::Delta(v.clone(), (**body).clone()),
        F::Not(x) => match &**x {
            F::Atom(_) | F::Eq(..) => {
                RuleClass::LiteralOrEquality(Literal::from_formula(f).unwrap())
            }
            F::Not(y) => RuleClass::Alpha((**y).clone(), (**y).clone()),
            F::And(a, b) => RuleClass::Beta(negate(a), negate(b)),
            F::Or(a, b) => RuleClass::Alpha(negate(a), negate(b)),
            F::Implies(a, b) => RuleClass::Alpha((**a).clone(), negate(b)),
            F::Forall(v, body) => RuleClass::Delta(v.clone(), negate(body)),
            F::Exists(v, body) => RuleClass::Gamma(v.clone(), negate(body)),
        },
    }
}

pub fn negate(f: &Formula) -> Formula {
    Formula::not(f.clone())
}

/// Finite map from variable and parameter names to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution {
    vars: BTreeMap<Name, Term>,
    params: BTreeMap<Name, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_var(mut self, v: &str, t: Term) -> Self {
        self.vars.insert(name(v), t);
        self
    }

    pub fn bind_param(mut self, p: &str, t: Term) -> Self {
        self.params.insert(name(p), t);
        self
    }

    pub fn insert_var(&mut self, v: Name, t: Term) {
        self.vars.insert(v, t);
    }

    pub fn insert_param(&mut self, p: Name, t: Term) {
        self.params.insert(p, t);
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.params.is_empty()
    }

    pub fn vars(&self) -> &BTreeMap<Name, Term> {
        &self.vars
    }

    pub fn params(&self) -> &BTreeMap<Name, Term> {
        &self.params
    }

    pub fn apply_term(&self, t: &Term) -> Result<Term> {
        t.apply(self, &[])
    }
}

pub fn substitute(f: &Formula, s: &Substitution) -> Result<Formula> {
    subst_rec(f, s, &mut Vec::new())
}

fn subst_rec(f: &Formula, s: &Substitution, bound: &mut Vec<Name>) -> Result<Formula> {
    use Formula as F;
    Ok(match f {
        F::Atom(a) => F::Atom(Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| t.apply(s, bound)).collect::<Result<_>>()?,
        }),
        F::Eq(x, y) => F::Eq(x.apply(s, bound)?, y.apply(s, bound)?),
        F::Not(x) => F::not(subst_rec(x, s, bound)?),
        F::And(a, b) => F::and(subst_rec(a, s, bound)?, subst_rec(b, s, bound)?),
        F::Or(a, b) => F::or(subst_rec(a, s, bound)?, subst_rec(b, s, bound)?),
        F::Implies(a, b) => F::implies(subst_rec(a, s, bound)?, subst_rec(b, s, bound)?),
        F::Forall(v, x) | F::Exists(v, x) => {
            bound.push(v.clone());
            let body = subst_rec(x, s, bound);
            bound.pop();
            let body = Box::new(body?);
            if matches!(f, F::Forall(..)) {
                F::Forall(v.clone(), body)
            } else {
                F::Exists(v.clone(), body)
            }
        }
    })
}

/// Replace free occurrences of variables by ground terms. Ground terms cannot
/// be captured, so this never fails.
pub fn instantiate(f: &Formula, binding: &[(Name, Term)]) -> Formula {
    let mut s = Substitution::new();
    for (v, t) in binding {
        debug_assert!(t.is_ground());
        s.insert_var(v.clone(), t.clone());
    }
    substitute(f, &s).expect("ground substitution")
}

/// Split `forall x1 ... xn. body` (or a negated existential block) into its
/// variables and body.
pub fn gamma_block(f: &Formula) -> Option<(Vec<Name>, Formula)> {
    let RuleClass::Gamma(v, mut body) = classify(f) else { return None };
    let mut vars = vec![v];
    while let RuleClass::Gamma(v, b) = classify(&body) {
        vars.push(v);
        body = b;
    }
    Some((vars, body))
}
