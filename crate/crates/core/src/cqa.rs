//! Consistent query answering over the opened tableau.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::constraints::Constraints;
use crate::error::{Error, Result};
use crate::formula::{
    count_existentials, instantiate, negate, parse_formula, skolemize, Formula, FreshSource, Literal, Name, Term,
};
use crate::instance::{active_domain, fresh_constants, satisfies, Instance, Schema};
use crate::par;
use crate::repair::{repairs, RepairSet};
use crate::tableau::valuation::Valuation;
use crate::tableau::{build_formulas, guards, Binding, Branch, BuildOptions, Builder, ClosureReason, Status, Tableau};

/// A formula with its free variables in order of first occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub formula: Formula,
    pub free: Vec<Name>,
}

impl Query {
    pub fn new(formula: Formula) -> Self {
        let free = formula.free_vars();
        Query { formula, free }
    }

    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        Ok(Query::new(parse_formula(text, schema)?))
    }

    /// One query per non-empty line; lines starting with `#` are skipped.
    pub fn parse_many(text: &str, schema: &Schema) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            out.push(Query::parse(line, schema).map_err(|e| match e {
                Error::Parse { col, msg, .. } => Error::Parse { line: i + 1, col, msg },
                other => other,
            })?);
        }
        Ok(out)
    }

    pub fn is_sentence(&self) -> bool {
        self.free.is_empty()
    }

    /// The sentence obtained by binding the free variables to `tuple`.
    pub fn bind(&self, tuple: &[Name]) -> Formula {
        let binding: Vec<(Name, Term)> = self.free.iter().cloned().zip(tuple.iter().cloned().map(Term::Const)).collect();
        instantiate(&self.formula, &binding)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)
    }
}

/// How one repair's branch of the combined tableau closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closing {
    pub repair: usize,
    pub reason: ClosureReason,
    /// Bindings of the universal blocks the closing literal came from.
    pub binding: Option<Binding>,
}

impl fmt::Display for Closing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "repair {}: {}", self.repair + 1, self.reason)?;
        if let Some(b) = &self.binding {
            let parts: Vec<String> = b.iter().map(|(v, t)| format!("{v} ↦ {t}")).collect();
            write!(f, " with {{{}}}", parts.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub tuple: Vec<Name>,
    pub provenance: Vec<Closing>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    pub query: Query,
    /// Sorted by tuple. For a sentence, holds the empty tuple iff the
    /// answer is yes.
    pub answers: Vec<Answer>,
}

impl AnswerSet {
    pub fn verdict(&self) -> Option<bool> {
        self.query.is_sentence().then(|| !self.answers.is_empty())
    }

    pub fn tuples(&self) -> BTreeSet<Vec<Name>> {
        self.answers.iter().map(|a| a.tuple.clone()).collect()
    }
}

/// The opened tableau of the constraints over `r`, computed once and then
/// combined with the refutation tableau of each query.
pub struct Cqa {
    pub repairs: RepairSet,
    /// One opened branch per distinct repair, over the repaired instance.
    pub opened: Vec<Branch>,
    r: Instance,
    opts: BuildOptions,
}

impl Cqa {
    pub fn new(ics: &Constraints, r: &Instance, opts: &BuildOptions) -> Result<Self> {
        let set = repairs(ics, r, opts)?;
        let mut opened = Vec::new();
        for rep in &set.repairs {
            let o = set.minimal.iter().find(|o| o.result == rep.instance).expect("repair comes from an opening");
            let b = &set.tableau.branches[o.branch];
            let lits = b.literals().iter().map(|l| value_literal(l, &o.valuation));
            opened.push(Branch::from_literals(Arc::new(rep.instance.clone()), lits));
        }
        let opts = BuildOptions { subsumption: false, groundedness: false, ..opts.clone() };
        Ok(Cqa { repairs: set, opened, r: r.clone(), opts })
    }

    fn pool_for(&self, q: &Formula) -> Arc<Vec<Name>> {
        let mut named: BTreeSet<Name> = self.repairs.tableau.pool.iter().cloned().collect();
        named.extend(q.constants());
        let fresh = fresh_constants(count_existentials(q), &named);
        let mut pool: Vec<Name> = self.repairs.tableau.pool.to_vec();
        let extra: Vec<Name> = q.constants().into_iter().filter(|c| !pool.contains(c)).collect();
        pool.extend(extra);
        pool.extend(fresh);
        Arc::new(pool)
    }

    /// Whether the sentence holds in every repair, with the closing of each
    /// repair's branches when it does.
    pub fn holds(&self, q: &Formula) -> Result<(bool, Vec<Closing>)> {
        let pool = self.pool_for(q);
        let neg = skolemize(&negate(q), &mut FreshSource::new());
        let qt = build_formulas(&[neg], Arc::new(self.r.clone()), pool.clone(), &self.opts)?;
        let builder = Builder::new(&self.opts, pool.clone(), None);
        let mut closings = Vec::new();
        for (i, b) in self.opened.iter().enumerate() {
            let single = Tableau { branches: vec![b.clone()], ..Tableau::empty(b.base().clone(), pool.clone()) };
            let t = builder.combine(&single, &qt)?;
            if !t.is_closed() {
                return Ok((false, Vec::new()));
            }
            for cb in &t.branches {
                if let Status::Closed(reason) = cb.status() {
                    let binding = closing_literal(reason).and_then(|l| cb.origin(&l).cloned());
                    closings.push(Closing { repair: i, reason: reason.clone(), binding });
                }
            }
        }
        Ok((true, closings))
    }

    /// Consistent answers: every candidate tuple whose instance of the query
    /// holds in every repair.
    pub fn answer(&self, q: &Query) -> Result<AnswerSet> {
        let candidates = self.candidates(q);
        let results = par::map(self.opts.parallel, &candidates, |t| self.holds(&q.bind(t)));
        let mut answers = Vec::new();
        for (t, res) in candidates.into_iter().zip(results) {
            let (yes, provenance) = res?;
            if yes {
                answers.push(Answer { tuple: t, provenance });
            }
        }
        Ok(AnswerSet { query: q.clone(), answers })
    }

    /// Tuples over Act(r) and the query constants. A variable occurring in
    /// an atom the query needs is only tried with values found in that
    /// position in a repair.
    pub fn candidates(&self, q: &Query) -> Vec<Vec<Name>> {
        let mut consts = active_domain(&self.r);
        consts.extend(q.formula.constants());
        let mut choices: Vec<BTreeSet<Name>> = vec![consts.clone(); q.free.len()];
        if let Some(first) = self.repairs.repairs.first() {
            let mut seen: BTreeMap<(Name, usize), BTreeSet<Name>> = BTreeMap::new();
            for a in first.instance.atoms() {
                for (i, c) in a.args.iter().enumerate() {
                    seen.entry((a.pred.clone(), i)).or_default().insert(c.clone());
                }
            }
            for g in guards(&Formula::not(q.formula.clone())) {
                for (i, t) in g.args.iter().enumerate() {
                    if let Term::Var(v) = t {
                        if let Some(k) = q.free.iter().position(|f| f == v) {
                            let vals = seen.get(&(g.pred.clone(), i)).cloned().unwrap_or_default();
                            choices[k] = choices[k].intersection(&vals).cloned().collect();
                        }
                    }
                }
            }
        }
        let mut out = vec![Vec::new()];
        for c in &choices {
            let mut next = Vec::new();
            for t in &out {
                for v in c {
                    let mut t: Vec<Name> = t.clone();
                    t.push(v.clone());
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    /// The same answers computed by evaluating the query in each repair.
    pub fn answer_by_intersection(&self, q: &Query) -> AnswerSet {
        let answers = self
            .candidates(q)
            .into_iter()
            .filter(|t| {
                let f = q.bind(t);
                self.repairs.repairs.iter().all(|m| satisfies(&m.instance, &f, &self.opts.policy))
            })
            .map(|tuple| Answer { tuple, provenance: Vec::new() })
            .collect();
        AnswerSet { query: q.clone(), answers }
    }
}

fn value_literal(l: &Literal, v: &Valuation) -> Literal {
    l.map_terms(&mut |t| v.apply_term(t))
}

fn closing_literal(reason: &ClosureReason) -> Option<Literal> {
    match reason {
        ClosureReason::MissingFact(g) => Some(Literal::Pos(g.to_atom())),
        ClosureReason::NegatedFact(g) => Some(Literal::Neg(g.to_atom())),
        ClosureReason::NoSubstitution(a) => Some(Literal::Pos(a.clone())),
        ClosureReason::Complementary(f) => Literal::from_formula(f),
        _ => None,
    }
}

/// Whether the sentence is true in every repair.
pub fn consistent_true(ics: &Constraints, r: &Instance, q: &Formula, opts: &BuildOptions) -> Result<(bool, Vec<Closing>)> {
    Cqa::new(ics, r, opts)?.holds(q)
}

pub fn consistent_answers(ics: &Constraints, r: &Instance, q: &Query, opts: &BuildOptions) -> Result<AnswerSet> {
    Cqa::new(ics, r, opts)?.answer(q)
}

pub fn answers_via_repair_intersection(
    ics: &Constraints,
    r: &Instance,
    q: &Query,
    opts: &BuildOptions,
) -> Result<AnswerSet> {
    Ok(Cqa::new(ics, r, opts)?.answer_by_intersection(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(ic: &str, facts: &str) -> (Constraints, Instance) {
        let mut s = Schema::new();
        let r = Instance::parse_with(facts, &mut s).unwrap();
        let ics = Constraints::parse(ic, &mut s).unwrap();
        (ics, r.with_schema(s).unwrap())
    }

    #[test]
    fn denial_leaves_no_answers() {
        let (ics, r) = setup("forall X. ~p(X)", "p(a). q(a).");
        let cqa = Cqa::new(&ics, &r, &BuildOptions::default()).unwrap();
        let q = Query::parse("p(X)", r.schema()).unwrap();
        assert!(cqa.answer(&q).unwrap().answers.is_empty());
        let q = Query::parse("q(X)", r.schema()).unwrap();
        assert_eq!(cqa.answer(&q).unwrap().tuples().len(), 1);
    }

    #[test]
    fn sentence_verdicts() {
        let (ics, r) = setup("forall X. (p(X) -> q(X))", "p(a). r(b).");
        let cqa = Cqa::new(&ics, &r, &BuildOptions::default()).unwrap();
        let yes = Query::parse("r(b)", r.schema()).unwrap();
        let no = Query::parse("p(a)", r.schema()).unwrap();
        let either = Query::parse("~p(a) | q(a)", r.schema()).unwrap();
        assert_eq!(cqa.answer(&yes).unwrap().verdict(), Some(true));
        assert_eq!(cqa.answer(&no).unwrap().verdict(), Some(false));
        assert_eq!(cqa.answer(&either).unwrap().verdict(), Some(true));
    }
}
