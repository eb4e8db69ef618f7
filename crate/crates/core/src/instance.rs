//! Database instances under the closed world and unique names assumptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Bound;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{self, count_existentials, name, quote_constant, Atom, Formula, Literal, Name, Term};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    preds: BTreeMap<Name, usize>,
}

impl Schema {
    pub const EMPTY: Schema = Schema { preds: BTreeMap::new() };

    pub fn new() -> Self {
        Self::default()
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.preds.get(pred).copied()
    }

    pub fn declare(&mut self, pred: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::SchemaMismatch(format!("{pred} must have arity at least 1")));
        }
        match self.preds.get(pred) {
            Some(&a) if a != arity => Err(Error::SchemaMismatch(format!(
                "{pred} declared with arity {a}, used with arity {arity}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.preds.insert(name(pred), arity);
                Ok(())
            }
        }
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.preds.iter().map(|(p, a)| (p, *a))
    }

    pub fn merge(&mut self, other: &Schema) -> Result<()> {
        for (p, a) in other.predicates() {
            self.declare(p, a)?;
        }
        Ok(())
    }

    fn compatible(&self, other: &Schema) -> bool {
        self.preds.iter().all(|(p, a)| other.arity(p).is_none_or(|b| b == *a))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub pred: Name,
    pub args: Vec<Name>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        GroundAtom { pred: name(pred), args: args.iter().map(|a| name(a)).collect() }
    }

    pub fn to_atom(&self) -> Atom {
        Atom { pred: self.pred.clone(), args: self.args.iter().map(|c| Term::Const(c.clone())).collect() }
    }

    /// The ground atom denoted by `a` when every argument is a constant.
    pub fn from_atom(a: &Atom) -> Option<Self> {
        let args = a.args.iter().map(|t| t.as_const().cloned()).collect::<Option<Vec<_>>>()?;
        Some(GroundAtom { pred: a.pred.clone(), args })
    }

    /// Lowest atom of predicate `pred` in the canonical order.
    fn floor(pred: &Name) -> Self {
        GroundAtom { pred: pred.clone(), args: Vec::new() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", quote_constant(a))?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    atoms: BTreeSet<GroundAtom>,
    schema: Arc<Schema>,
}

impl Instance {
    pub fn new(schema: Schema) -> Self {
        Instance { atoms: BTreeSet::new(), schema: Arc::new(schema) }
    }

    pub fn with_atoms(schema: Arc<Schema>, atoms: impl IntoIterator<Item = GroundAtom>) -> Result<Self> {
        let atoms: BTreeSet<GroundAtom> = atoms.into_iter().collect();
        for a in &atoms {
            match schema.arity(&a.pred) {
                Some(n) if n == a.args.len() => {}
                _ => return Err(Error::SchemaMismatch(format!("{a} does not conform to the schema"))),
            }
        }
        Ok(Instance { atoms, schema })
    }

    /// Same atoms, different (compatible) schema.
    pub fn with_schema(&self, schema: Schema) -> Result<Self> {
        Instance::with_atoms(Arc::new(schema), self.atoms.iter().cloned())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        self.schema.clone()
    }

    pub fn contains(&self, a: &GroundAtom) -> bool {
        self.atoms.contains(a)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn atom_set(&self) -> &BTreeSet<GroundAtom> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All atoms of one predicate, in canonical order.
    pub fn atoms_of<'a>(&'a self, pred: &'a Name) -> impl Iterator<Item = &'a GroundAtom> + 'a {
        self.atoms
            .range((Bound::Included(GroundAtom::floor(pred)), Bound::Unbounded))
            .take_while(move |a| &a.pred == pred)
    }

    /// `(self \ del) ∪ ins`.
    pub fn apply_changes<'a>(
        &self,
        del: impl IntoIterator<Item = &'a GroundAtom>,
        ins: impl IntoIterator<Item = &'a GroundAtom>,
    ) -> Instance {
        let mut atoms = self.atoms.clone();
        for a in del {
            atoms.remove(a);
        }
        for a in ins {
            atoms.insert(a.clone());
        }
        Instance { atoms, schema: self.schema.clone() }
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let mut schema = Schema::new();
        Instance::parse_with(text, &mut schema)
    }

    /// Parse a fact file, declaring new predicates in `schema`.
    pub fn parse_with(text: &str, schema: &mut Schema) -> Result<Instance> {
        let mut atoms = BTreeSet::new();
        for (pred, args, line) in formula::parse_term_list(text)? {
            schema.declare(&pred, args.len()).map_err(|e| Error::parse(line, 1, e.to_string()))?;
            atoms.insert(GroundAtom { pred, args });
        }
        Ok(Instance { atoms, schema: Arc::new(schema.clone()) })
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for a in &self.atoms {
            s.push_str(&a.to_string());
            s.push_str(".\n");
        }
        s
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

pub fn active_domain(r: &Instance) -> BTreeSet<Name> {
    r.atoms.iter().flat_map(|a| a.args.iter().cloned()).collect()
}

/// Truth of a ground literal in `r`.
pub fn cwa_truth(r: &Instance, lit: &Literal) -> Result<bool> {
    let ground = |a: &Atom| GroundAtom::from_atom(a).ok_or_else(|| Error::NonGround(lit.to_string()));
    let constant = |t: &Term| t.as_const().cloned().ok_or_else(|| Error::NonGround(lit.to_string()));
    Ok(match lit {
        Literal::Pos(a) => r.contains(&ground(a)?),
        Literal::Neg(a) => !r.contains(&ground(a)?),
        Literal::Eq(s, t) => constant(s)? == constant(t)?,
        Literal::Neq(s, t) => constant(s)? != constant(t)?,
    })
}

/// How far the infinite domain is approximated by finite constant pools.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainPolicy {
    pub extra_constants: BTreeSet<Name>,
    /// Number of fresh constants; `None` means one per existential quantifier.
    pub fresh_pool: Option<usize>,
    pub term_depth: usize,
}

impl Default for DomainPolicy {
    fn default() -> Self {
        DomainPolicy { extra_constants: BTreeSet::new(), fresh_pool: None, term_depth: 1 }
    }
}

impl DomainPolicy {
    /// Act(r) ∪ extra constants ∪ `consts`, followed by fresh constants.
    pub fn universe(&self, r: &Instance, consts: &BTreeSet<Name>, existentials: usize) -> Universe {
        let mut named: BTreeSet<Name> = active_domain(r);
        named.extend(self.extra_constants.iter().cloned());
        named.extend(consts.iter().cloned());
        let fresh = fresh_constants(self.fresh_pool.unwrap_or(existentials), &named);
        Universe { named: named.into_iter().collect(), fresh }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Universe {
    pub named: Vec<Name>,
    pub fresh: Vec<Name>,
}

impl Universe {
    pub fn all(&self) -> impl Iterator<Item = &Name> {
        self.named.iter().chain(self.fresh.iter())
    }

    pub fn to_vec(&self) -> Vec<Name> {
        self.all().cloned().collect()
    }
}

/// `k` constants `_new1`, `_new2`, ... avoiding names in `avoid`.
pub fn fresh_constants(k: usize, avoid: &BTreeSet<Name>) -> Vec<Name> {
    let mut out = Vec::with_capacity(k);
    let mut i = 0;
    while out.len() < k {
        i += 1;
        let c = name(&format!("_new{i}"));
        if !avoid.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Tarskian evaluation of a closed, function-free formula. Quantifiers range
/// over Act(r), the policy's extra constants, the formula's constants and a
/// pool of fresh constants.
pub fn satisfies(r: &Instance, f: &Formula, policy: &DomainPolicy) -> bool {
    let domain = policy.universe(r, &f.constants(), count_existentials(f)).to_vec();
    eval(r, f, &domain, &mut Vec::new())
}

/// `satisfies` for every formula, each with its own domain.
pub fn satisfies_all(r: &Instance, fs: &[Formula], policy: &DomainPolicy) -> bool {
    fs.iter().all(|f| satisfies(r, f, policy))
}

fn eval_term(t: &Term, env: &[(Name, Name)]) -> Name {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => match env.iter().rev().find(|(w, _)| w == v) {
            Some((_, c)) => c.clone(),
            None => panic!("free variable {v} in evaluated formula"),
        },
        _ => panic!("evaluation of {t} requires a valuation"),
    }
}

fn eval(r: &Instance, f: &Formula, dom: &[Name], env: &mut Vec<(Name, Name)>) -> bool {
    match f {
        Formula::Atom(a) => {
            let g = GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| eval_term(t, env)).collect() };
            r.contains(&g)
        }
        Formula::Eq(s, t) => eval_term(s, env) == eval_term(t, env),
        Formula::Not(x) => !eval(r, x, dom, env),
        Formula::And(a, b) => eval(r, a, dom, env) && eval(r, b, dom, env),
        Formula::Or(a, b) => eval(r, a, dom, env) || eval(r, b, dom, env),
        Formula::Implies(a, b) => !eval(r, a, dom, env) || eval(r, b, dom, env),
        Formula::Forall(v, b) | Formula::Exists(v, b) => {
            let want = matches!(f, Formula::Forall(..));
            for c in dom {
                env.push((v.clone(), c.clone()));
                let val = eval(r, b, dom, env);
                env.pop();
                if val != want {
                    return !want;
                }
            }
            want
        }
    }
}

pub fn symmetric_difference(r1: &Instance, r2: &Instance) -> Result<BTreeSet<GroundAtom>> {
    if !r1.schema.compatible(&r2.schema) {
        return Err(Error::SchemaMismatch("instances use incompatible schemas".into()));
    }
    Ok(r1.atoms.symmetric_difference(&r2.atoms).cloned().collect())
}

/// `r1 ≤_base r2`: Δ(base, r1) ⊆ Δ(base, r2).
pub fn closer_or_equal(base: &Instance, r1: &Instance, r2: &Instance) -> Result<bool> {
    let d1 = symmetric_difference(base, r1)?;
    let d2 = symmetric_difference(base, r2)?;
    Ok(d1.is_subset(&d2))
}
