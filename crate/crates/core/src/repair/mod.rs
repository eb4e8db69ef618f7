//! Openings of closed branches, minimal openings and repairs.

pub mod grounded;
pub mod sat;

use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::Constraints;
use crate::error::{Error, Result};
use crate::formula::{Atom, Literal, Name};
use crate::instance::{DomainPolicy, GroundAtom, Instance};
use crate::par;
use crate::tableau::valuation::{self, GLit, Mode, Valuation};
use crate::tableau::{build, Branch, BuildOptions, Status, Tableau};

pub use grounded::{GroundTheory, GroundednessContext};

/// `(r ∖ L) ∪ τ(K)` for one branch and one valuation of its nulls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub branch: usize,
    pub deletions: BTreeSet<GroundAtom>,
    pub insertions: BTreeSet<GroundAtom>,
    /// Positive atoms of the branch not already in r, before valuation.
    pub k_pattern: BTreeSet<Atom>,
    pub valuation: Valuation,
    pub result: Instance,
}

impl Opening {
    pub fn changes(&self) -> BTreeSet<GroundAtom> {
        self.deletions.union(&self.insertions).cloned().collect()
    }

    /// Both change sets are included in `other`'s.
    pub fn included_in(&self, other: &Opening) -> bool {
        self.deletions.is_subset(&other.deletions) && self.insertions.is_subset(&other.insertions)
    }
}

/// The branch is closed, but some valuation makes its literals jointly
/// satisfiable: only the instance stands in the way.
pub fn data_closed(b: &Branch, pool: &[Name]) -> Result<bool> {
    match b.status() {
        Status::Closed(reason) => {
            if reason.is_builtin() {
                return Ok(false);
            }
            let lits: Vec<Literal> = b.literals().iter().cloned().collect();
            Ok(valuation::exists(&lits, pool, Mode::Consistent))
        }
        _ => Err(Error::Invalid("data_closed expects a closed branch".into())),
    }
}

/// Branches whose openings are worth computing: open, or data closed.
pub fn openable(b: &Branch, pool: &[Name]) -> bool {
    match b.status() {
        Status::Open => true,
        Status::Closed(_) => data_closed(b, pool).unwrap_or(false),
        Status::Suspended(_) => false,
    }
}

/// Every distinct opening of a branch, one per (L, K) reached by some
/// consistent valuation of its nulls over `pool`.
pub fn open_branch(id: usize, b: &Branch, pool: &[Name]) -> Vec<Opening> {
    let base = b.base();
    let lits: Vec<Literal> = b.literals().iter().cloned().collect();
    let k_pattern: BTreeSet<Atom> = b
        .literals()
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) if GroundAtom::from_atom(a).is_none_or(|g| !base.contains(&g)) => Some(a.clone()),
            _ => None,
        })
        .collect();
    let mut seen = BTreeMap::new();
    valuation::search(&lits, pool, Mode::Consistent, &mut |val, ground| {
        let mut del = BTreeSet::new();
        let mut ins = BTreeSet::new();
        for g in ground {
            match g {
                GLit::Neg(a) if base.contains(a) => {
                    del.insert(a.clone());
                }
                GLit::Pos(a) if !base.contains(a) => {
                    ins.insert(a.clone());
                }
                _ => {}
            }
        }
        seen.entry((del, ins)).or_insert_with(|| val.clone());
        true
    });
    seen.into_iter()
        .map(|((del, ins), val)| {
            let result = base.apply_changes(&del, &ins);
            Opening { branch: id, deletions: del, insertions: ins, k_pattern: k_pattern.clone(), valuation: val, result }
        })
        .collect()
}

/// Keep the openings no other opening strictly improves on.
pub fn minimal_openings(openings: &[Opening]) -> Vec<Opening> {
    let mut order: Vec<usize> = (0..openings.len()).collect();
    order.sort_by_key(|&i| openings[i].deletions.len() + openings[i].insertions.len());
    let mut keep = vec![true; openings.len()];
    for (pos, &i) in order.iter().enumerate() {
        let o = &openings[i];
        let size = o.deletions.len() + o.insertions.len();
        keep[i] = !order[..pos].iter().any(|&j| {
            let p = &openings[j];
            p.deletions.len() + p.insertions.len() < size && keep[j] && p.included_in(o)
        });
    }
    openings.iter().zip(keep).filter(|(_, k)| *k).map(|(o, _)| o.clone()).collect()
}

/// Literals compared when one branch subsumes another: database literals,
/// and (in)equalities that constrain nulls.
fn comparable(b: &Branch) -> BTreeSet<Literal> {
    b.literals().iter().filter(|l| !l.is_equality() || l.has_null()).cloned().collect()
}

/// Indices of the branches surviving subsumption: a data-closed branch is
/// dropped when its literals strictly contain those of an openable branch.
pub fn subsumption_prune(branches: &[Branch], pool: &[Name]) -> Vec<usize> {
    let open: Vec<bool> = branches.iter().map(|b| openable(b, pool)).collect();
    let sets: Vec<BTreeSet<Literal>> = branches.iter().map(comparable).collect();
    (0..branches.len())
        .filter(|&i| {
            if !open[i] {
                return false;
            }
            if branches[i].status() == &Status::Open {
                return true;
            }
            !(0..branches.len()).any(|j| j != i && open[j] && sets[j].len() < sets[i].len() && sets[j].is_subset(&sets[i]))
        })
        .collect()
}

/// A repaired instance and the branches it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Repair {
    pub instance: Instance,
    pub deletions: BTreeSet<GroundAtom>,
    pub insertions: BTreeSet<GroundAtom>,
    pub sources: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RepairSet {
    pub tableau: Tableau,
    /// Branches whose openings were computed.
    pub candidates: Vec<usize>,
    pub openings: Vec<Opening>,
    pub minimal: Vec<Opening>,
    pub repairs: Vec<Repair>,
}

/// Every opening of the candidate branches, in branch order.
pub fn openings(t: &Tableau, candidates: &[usize], parallel: bool) -> Vec<Opening> {
    par::map(parallel, candidates, |&i| open_branch(i, &t.branches[i], &t.pool)).into_iter().flatten().collect()
}

pub fn repairs(ics: &Constraints, r: &Instance, opts: &BuildOptions) -> Result<RepairSet> {
    let tableau = build(ics, r, opts)?;
    let candidates = if opts.subsumption {
        subsumption_prune(&tableau.branches, &tableau.pool)
    } else {
        (0..tableau.branches.len()).filter(|&i| openable(&tableau.branches[i], &tableau.pool)).collect()
    };
    let all = openings(&tableau, &candidates, opts.parallel);
    let minimal = minimal_openings(&all);
    let mut merged: BTreeMap<BTreeSet<GroundAtom>, Repair> = BTreeMap::new();
    for o in &minimal {
        let e = merged.entry(o.result.atom_set().clone()).or_insert_with(|| Repair {
            instance: o.result.clone(),
            deletions: o.deletions.clone(),
            insertions: o.insertions.clone(),
            sources: Vec::new(),
        });
        if !e.sources.contains(&o.branch) {
            e.sources.push(o.branch);
        }
    }
    let repairs = merged.into_values().collect();
    Ok(RepairSet { tableau, candidates, openings: all, minimal, repairs })
}

/// Whether the opening's changes all follow from the constraints and the
/// completion of its change set.
pub fn grounded(o: &Opening, ics: &Constraints, r: &Instance, policy: &DomainPolicy) -> Result<bool> {
    Ok(GroundTheory::new(ics, r, policy)?.grounded(&o.result))
}

#[cfg(test)]
mod tests;
