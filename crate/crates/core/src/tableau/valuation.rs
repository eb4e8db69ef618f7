//! Valuations of parameters and ground Skolem terms into constants.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::formula::{quote_constant, Literal, Name, Term};
use crate::instance::{GroundAtom, Instance};

/// Maps parameters and Skolem applications over constants to constants.
/// Skolem terms are keyed by their evaluated arguments, so the valuation is
/// functionally consistent by construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation {
    map: BTreeMap<Term, Name>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Term, &Name)> {
        self.map.iter()
    }

    pub fn insert(&mut self, key: Term, value: Name) {
        self.map.insert(key, value);
    }

    /// The constant denoted by `t`, or the innermost null still unvalued.
    pub fn eval(&self, t: &Term) -> Result<Name, Term> {
        match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Param(_) => self.map.get(t).cloned().ok_or_else(|| t.clone()),
            Term::Skolem(f, args) => {
                let args = args.iter().map(|a| self.eval(a).map(Term::Const)).collect::<Result<Vec<_>, _>>()?;
                let key = Term::Skolem(f.clone(), args);
                self.map.get(&key).cloned().ok_or(key)
            }
            Term::Var(v) => panic!("variable {v} in a branch literal"),
        }
    }

    pub fn eval_literal(&self, l: &Literal) -> Result<GLit, Term> {
        let atom = |a: &crate::formula::Atom| -> Result<GroundAtom, Term> {
            Ok(GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| self.eval(t)).collect::<Result<_, _>>()? })
        };
        Ok(match l {
            Literal::Pos(a) => GLit::Pos(atom(a)?),
            Literal::Neg(a) => GLit::Neg(atom(a)?),
            Literal::Eq(s, t) => GLit::Eq(self.eval(s)?, self.eval(t)?),
            Literal::Neq(s, t) => GLit::Neq(self.eval(s)?, self.eval(t)?),
        })
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        match self.eval(t) {
            Ok(c) => Term::Const(c),
            Err(_) => t.clone(),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} ↦ {}", quote_constant(v))?;
        }
        write!(f, "}}")
    }
}

/// A literal after valuation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GLit {
    Pos(GroundAtom),
    Neg(GroundAtom),
    Eq(Name, Name),
    Neq(Name, Name),
}

impl GLit {
    pub fn true_in(&self, r: &Instance) -> bool {
        match self {
            GLit::Pos(a) => r.contains(a),
            GLit::Neg(a) => !r.contains(a),
            GLit::Eq(s, t) => s == t,
            GLit::Neq(s, t) => s != t,
        }
    }
}

#[derive(Clone, Copy)]
pub enum Mode<'a> {
    /// Every literal must hold in the instance.
    Within(&'a Instance),
    /// The literals must be jointly satisfiable: no complementary pair and
    /// all (in)equalities true.
    Consistent,
}

fn acceptable(ground: &[GLit], mode: Mode) -> bool {
    match mode {
        Mode::Within(r) => ground.iter().all(|g| g.true_in(r)),
        Mode::Consistent => {
            let mut pos = HashSet::new();
            let mut neg = HashSet::new();
            for g in ground {
                match g {
                    GLit::Pos(a) => {
                        if neg.contains(a) {
                            return false;
                        }
                        pos.insert(a);
                    }
                    GLit::Neg(a) => {
                        if pos.contains(a) {
                            return false;
                        }
                        neg.insert(a);
                    }
                    GLit::Eq(s, t) if s != t => return false,
                    GLit::Neq(s, t) if s == t => return false,
                    _ => {}
                }
            }
            true
        }
    }
}

/// Enumerate valuations of the nulls in `lits` over `pool` that satisfy
/// `mode`. `found` is called with each complete valuation and the valued
/// literals; returning `false` stops the search.
pub fn search(lits: &[Literal], pool: &[Name], mode: Mode, found: &mut dyn FnMut(&Valuation, &[GLit]) -> bool) {
    let mut val = Valuation::new();
    rec(lits, pool, mode, &mut val, found);
}

fn rec(
    lits: &[Literal],
    pool: &[Name],
    mode: Mode,
    val: &mut Valuation,
    found: &mut dyn FnMut(&Valuation, &[GLit]) -> bool,
) -> bool {
    let mut ground = Vec::with_capacity(lits.len());
    let mut open = None;
    for l in lits {
        match val.eval_literal(l) {
            Ok(g) => ground.push(g),
            Err(key) => {
                if open.is_none() {
                    open = Some(key);
                }
            }
        }
    }
    if !acceptable(&ground, mode) {
        return true;
    }
    match open {
        None => found(val, &ground),
        Some(key) => {
            for c in pool {
                val.insert(key.clone(), c.clone());
                let go_on = rec(lits, pool, mode, val, found);
                val.map.remove(&key);
                if !go_on {
                    return false;
                }
            }
            true
        }
    }
}

/// Whether some valuation satisfies `mode`.
pub fn exists(lits: &[Literal], pool: &[Name], mode: Mode) -> bool {
    let mut any = false;
    search(lits, pool, mode, &mut |_, _| {
        any = true;
        false
    });
    any
}

/// Some valuation satisfying `mode`, if any.
pub fn find(lits: &[Literal], pool: &[Name], mode: Mode) -> Option<Valuation> {
    let mut out = None;
    search(lits, pool, mode, &mut |v, _| {
        out = Some(v.clone());
        false
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{name, Atom};

    fn q(args: Vec<Term>) -> Literal {
        Literal::Pos(Atom::new("Q", args))
    }

    #[test]
    fn skolem_terms_are_keyed_by_arguments() {
        let r = Instance::parse("Q(a,d). Q(b,e).").unwrap();
        let pool: Vec<Name> = ["a", "b", "d", "e"].iter().map(|s| name(s)).collect();
        let fx = |x: Term| Term::Skolem(name("f1"), vec![x]);
        let lits = vec![q(vec![Term::param("p1"), fx(Term::param("p1"))])];
        let mut sols = Vec::new();
        search(&lits, &pool, Mode::Within(&r), &mut |v, _| {
            sols.push(v.to_string());
            true
        });
        assert_eq!(sols, vec!["{$p1 ↦ a, $f1(a) ↦ d}", "{$p1 ↦ b, $f1(b) ↦ e}"]);
    }

    #[test]
    fn consistency_mode_rejects_complementary_pairs() {
        let pool: Vec<Name> = vec![name("a"), name("b")];
        let lits = vec![
            Literal::Pos(Atom::new("P", vec![Term::param("p1")])),
            Literal::Neg(Atom::new("P", vec![Term::constant("a")])),
        ];
        let v = find(&lits, &pool, Mode::Consistent).unwrap();
        assert_eq!(v.to_string(), "{$p1 ↦ b}");
        let lits2 = vec![lits[0].clone(), lits[1].clone(), Literal::Eq(Term::param("p1"), Term::constant("a"))];
        assert!(!exists(&lits2, &pool, Mode::Consistent));
    }
}
