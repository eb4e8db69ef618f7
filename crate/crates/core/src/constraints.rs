//! Integrity constraint sets, kept both as written and skolemized.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::{count_existentials, parse_formula_declaring, skolemize, Formula, FreshSource, Name};
use crate::instance::Schema;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraints {
    pub original: Vec<Formula>,
    pub skolemized: Vec<Formula>,
}

impl Constraints {
    /// Skolemize closed constraints with one shared symbol source, so symbol
    /// names follow the order of the list.
    pub fn new(ics: Vec<Formula>) -> Result<Self> {
        let mut fresh = FreshSource::new();
        let mut skolemized = Vec::with_capacity(ics.len());
        for f in &ics {
            if let Some(v) = f.free_vars().first() {
                return Err(Error::Invalid(format!("constraint {f} has free variable {v}")));
            }
            skolemized.push(skolemize(f, &mut fresh));
        }
        Ok(Constraints { original: ics, skolemized })
    }

    /// One constraint per non-empty line; `#` starts a comment.
    pub fn parse(text: &str, schema: &mut Schema) -> Result<Self> {
        let mut ics = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f = parse_formula_declaring(line, schema).map_err(|e| match e {
                Error::Parse { col, msg, .. } => Error::Parse { line: i + 1, col, msg },
                other => other,
            })?;
            ics.push(f);
        }
        Constraints::new(ics)
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.original.iter().flat_map(|f| f.constants()).collect()
    }

    /// Number of quantifiers removed by skolemization.
    pub fn existentials(&self) -> usize {
        self.original.iter().map(count_existentials).sum()
    }
}
