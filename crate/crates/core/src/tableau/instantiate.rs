//! Choosing γ-instances: guard atoms and the relevance join.

use std::collections::BTreeMap;

use crate::formula::{Atom, Formula, Name, Term};

/// `f` is true whenever `a` is false, whatever else holds.
fn true_if_false(f: &Formula, a: &Atom) -> bool {
    match f {
        Formula::Atom(_) | Formula::Eq(..) => false,
        Formula::Not(x) => false_if_false(x, a),
        Formula::And(x, y) => true_if_false(x, a) && true_if_false(y, a),
        Formula::Or(x, y) => true_if_false(x, a) || true_if_false(y, a),
        Formula::Implies(x, y) => false_if_false(x, a) || true_if_false(y, a),
        Formula::Forall(v, x) | Formula::Exists(v, x) => !mentions(a, v) && true_if_false(x, a),
    }
}

/// `f` is false whenever `a` is false.
fn false_if_false(f: &Formula, a: &Atom) -> bool {
    match f {
        Formula::Atom(b) => b == a,
        Formula::Eq(..) => false,
        Formula::Not(x) => true_if_false(x, a),
        Formula::And(x, y) => false_if_false(x, a) || false_if_false(y, a),
        Formula::Or(x, y) => false_if_false(x, a) && false_if_false(y, a),
        Formula::Implies(x, y) => true_if_false(x, a) && false_if_false(y, a),
        Formula::Forall(v, x) | Formula::Exists(v, x) => !mentions(a, v) && false_if_false(x, a),
    }
}

fn mentions(a: &Atom, v: &Name) -> bool {
    fn term(t: &Term, v: &Name) -> bool {
        match t {
            Term::Var(w) => w == v,
            Term::Skolem(_, args) => args.iter().any(|x| term(x, v)),
            _ => false,
        }
    }
    a.args.iter().any(|t| term(t, v))
}

/// Atoms of `body` whose falsity makes `body` true: an instance of the block
/// matters only where all of them can hold.
pub fn guards(body: &Formula) -> Vec<Atom> {
    let mut atoms = Vec::new();
    body.visit_atoms(&mut |a| {
        if !atoms.contains(a) {
            atoms.push(a.clone())
        }
    });
    atoms.into_iter().filter(|a| true_if_false(body, a)).collect()
}

/// Block variables that occur directly as an argument of some guard.
pub fn covered(vars: &[Name], guards: &[Atom]) -> Vec<bool> {
    vars.iter()
        .map(|v| guards.iter().any(|g| g.args.iter().any(|t| matches!(t, Term::Var(w) if w == v))))
        .collect()
}

/// Two terms may denote the same constant under some valuation.
fn compatible(s: &Term, t: &Term) -> bool {
    s.is_null() || t.is_null() || s == t
}

/// All bindings of the guard variables to terms of present atoms such that
/// every guard matches some present atom.
pub fn join(
    guards: &[Atom],
    present: &BTreeMap<Name, Vec<Vec<Term>>>,
    out: &mut Vec<BTreeMap<Name, Term>>,
) {
    fn rec(
        guards: &[Atom],
        present: &BTreeMap<Name, Vec<Vec<Term>>>,
        binding: &mut BTreeMap<Name, Term>,
        out: &mut Vec<BTreeMap<Name, Term>>,
    ) {
        let Some((g, rest)) = guards.split_first() else {
            out.push(binding.clone());
            return;
        };
        let Some(tuples) = present.get(&g.pred) else { return };
        'tuples: for tuple in tuples {
            let mut added = Vec::new();
            for (pat, t) in g.args.iter().zip(tuple) {
                let ok = match pat {
                    Term::Var(v) => match binding.get(v) {
                        Some(b) => compatible(b, t),
                        None => {
                            binding.insert(v.clone(), t.clone());
                            added.push(v.clone());
                            true
                        }
                    },
                    Term::Const(_) => compatible(pat, t),
                    _ => true,
                };
                if !ok {
                    for v in added {
                        binding.remove(&v);
                    }
                    continue 'tuples;
                }
            }
            rec(rest, present, binding, out);
            for v in added {
                binding.remove(&v);
            }
        }
    }
    rec(guards, present, &mut BTreeMap::new(), out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula_declaring, gamma_block};
    use crate::instance::Schema;

    fn body(text: &str) -> (Vec<Name>, Formula) {
        let mut s = Schema::new();
        gamma_block(&parse_formula_declaring(text, &mut s).unwrap()).unwrap()
    }

    #[test]
    fn guards_of_common_shapes() {
        let (_, fd) = body("forall X,Y,Z. (R(X,Y) & R(X,Z) -> Y = Z)");
        assert_eq!(guards(&fd).len(), 2);
        let (_, denial) = body("forall X. ~(P(X) & Q(X,X))");
        assert_eq!(guards(&denial).len(), 2);
        let (_, incl) = body("forall X. (P(X) -> Q(X))");
        assert_eq!(guards(&incl), vec![Atom::new("P", vec![Term::var("X")])]);
        let (_, unsafe_) = body("forall X. P(X)");
        assert!(guards(&unsafe_).is_empty());
        let (_, neg) = body("~(exists X. Course(X,c2,g2))");
        assert_eq!(guards(&neg).len(), 1);
    }

    #[test]
    fn join_is_loose_on_nulls() {
        let (vars, fd) = body("forall X,Y,Z. (R(X,Y) & R(X,Z) -> Y = Z)");
        let g = guards(&fd);
        assert_eq!(covered(&vars, &g), vec![true, true, true]);
        let mut present = BTreeMap::new();
        present.insert(
            crate::formula::name("R"),
            vec![
                vec![Term::constant("a"), Term::constant("b")],
                vec![Term::param("p1"), Term::constant("c")],
                vec![Term::constant("d"), Term::constant("e")],
            ],
        );
        let mut out = Vec::new();
        join(&g, &present, &mut out);
        // a-b pairs with itself and p1; p1 with everything; d-e with itself and p1
        assert_eq!(out.len(), 7);
    }
}
