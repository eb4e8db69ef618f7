use super::{name, Formula, Name, Term};

/// Source of fresh parameter (`p1`, `p2`, ...) and Skolem function
/// (`f1`, `f2`, ...) symbols.
#[derive(Clone, Debug, Default)]
pub struct FreshSource {
    params: usize,
    funcs: usize,
}

impl FreshSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_param(&mut self) -> Name {
        self.params += 1;
        name(&format!("p{}", self.params))
    }

    pub fn next_function(&mut self) -> Name {
        self.funcs += 1;
        name(&format!("f{}", self.funcs))
    }
}

/// Remove essentially existential quantifiers. Each becomes a parameter when
/// no essentially universal quantifier encloses it, otherwise a Skolem
/// application over the enclosing universal variables.
pub fn skolemize(f: &Formula, fresh: &mut FreshSource) -> Formula {
    go(f, true, &mut Vec::new(), &mut Vec::new(), fresh)
}

fn go(
    f: &Formula,
    positive: bool,
    universals: &mut Vec<Name>,
    repl: &mut Vec<(Name, Term)>,
    fresh: &mut FreshSource,
) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Eq(..) => {
            if repl.is_empty() {
                return f.clone();
            }
            f.map_terms(&mut |t| replace(t, repl))
        }
        Formula::Not(x) => Formula::not(go(x, !positive, universals, repl, fresh)),
        Formula::And(a, b) => Formula::and(
            go(a, positive, universals, repl, fresh),
            go(b, positive, universals, repl, fresh),
        ),
        Formula::Or(a, b) => Formula::or(
            go(a, positive, universals, repl, fresh),
            go(b, positive, universals, repl, fresh),
        ),
        Formula::Implies(a, b) => Formula::implies(
            go(a, !positive, universals, repl, fresh),
            go(b, positive, universals, repl, fresh),
        ),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let is_all = matches!(f, Formula::Forall(..));
            if is_all == positive {
                // a shadowing binder hides any outer replacement for v
                let saved = take_binding(repl, v);
                universals.push(v.clone());
                let b = go(body, positive, universals, repl, fresh);
                universals.pop();
                repl.extend(saved);
                let b = Box::new(b);
                if is_all {
                    Formula::Forall(v.clone(), b)
                } else {
                    Formula::Exists(v.clone(), b)
                }
            } else {
                let witness = if universals.is_empty() {
                    Term::Param(fresh.next_param())
                } else {
                    let args = universals.iter().map(|u| replace(&Term::Var(u.clone()), repl)).collect();
                    Term::Skolem(fresh.next_function(), args)
                };
                let saved = take_binding(repl, v);
                repl.push((v.clone(), witness));
                let b = go(body, positive, universals, repl, fresh);
                repl.pop();
                repl.extend(saved);
                b
            }
        }
    }
}

fn take_binding(repl: &mut Vec<(Name, Term)>, v: &Name) -> Option<(Name, Term)> {
    let i = repl.iter().rposition(|(w, _)| w == v)?;
    Some(repl.remove(i))
}

fn replace(t: &Term, repl: &[(Name, Term)]) -> Term {
    match t {
        Term::Var(v) => match repl.iter().rev().find(|(w, _)| w == v) {
            Some((_, r)) => r.clone(),
            None => t.clone(),
        },
        Term::Skolem(g, args) => Term::Skolem(g.clone(), args.iter().map(|a| replace(a, repl)).collect()),
        _ => t.clone(),
    }
}

/// Number of essentially existential quantifiers (those skolemization removes).
pub fn count_existentials(f: &Formula) -> usize {
    fn count(f: &Formula, positive: bool) -> usize {
        match f {
            Formula::Atom(_) | Formula::Eq(..) => 0,
            Formula::Not(x) => count(x, !positive),
            Formula::And(a, b) | Formula::Or(a, b) => count(a, positive) + count(b, positive),
            Formula::Implies(a, b) => count(a, !positive) + count(b, positive),
            Formula::Forall(_, b) => count(b, positive) + usize::from(!positive),
            Formula::Exists(_, b) => count(b, positive) + usize::from(positive),
        }
    }
    count(f, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula_declaring;
    use crate::instance::Schema;

    fn sk(text: &str) -> Formula {
        let mut s = Schema::new();
        let f = parse_formula_declaring(text, &mut s).unwrap();
        skolemize(&f, &mut FreshSource::new())
    }

    #[test]
    fn referential_constraint_gets_function() {
        let f = sk("forall X. (P(X) -> exists Y. Q(X,Y))");
        let want = Formula::forall(
            "X",
            Formula::implies(
                Formula::atom("P", vec![Term::var("X")]),
                Formula::atom("Q", vec![Term::var("X"), Term::Skolem(name("f1"), vec![Term::var("X")])]),
            ),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn top_level_existential_gets_parameter() {
        assert_eq!(sk("exists X. P(X)"), Formula::atom("P", vec![Term::param("p1")]));
        assert_eq!(sk("~(forall X. P(X))"), Formula::not(Formula::atom("P", vec![Term::param("p1")])));
    }

    #[test]
    fn universal_only_is_unchanged_and_stable() {
        let f = sk("forall X. P(X)");
        assert_eq!(f, Formula::forall("X", Formula::atom("P", vec![Term::var("X")])));
        let g = sk("forall X. (P(X) -> exists Y. Q(X,Y))");
        assert_eq!(skolemize(&g, &mut FreshSource::new()), g);
    }

    #[test]
    fn negative_existential_stays() {
        let f = sk("(exists X. P(X)) -> P(a)");
        assert_eq!(count_existentials(&f), 0);
        assert!(matches!(f, Formula::Implies(ref a, _) if matches!(**a, Formula::Exists(..))));
    }
}
