use std::fmt;

use super::{Atom, Formula, Literal, Term};

/// Constants that can be written without quotes in formulas.
pub fn is_bare_constant(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    cs.all(|c| c.is_alphanumeric() || c == '_') && s != "forall" && s != "exists"
}

pub fn quote_constant(s: &str) -> String {
    if is_bare_constant(s) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{}", quote_constant(c)),
            Term::Param(p) => write!(f, "${p}"),
            Term::Skolem(g, args) => {
                write!(f, "${g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "~{a}"),
            Literal::Eq(s, t) => write!(f, "{s} = {t}"),
            Literal::Neq(s, t) => write!(f, "{s} != {t}"),
        }
    }
}

// Binding strength: 1 implication, 2 disjunction, 3 conjunction, 4 unary.
fn level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 1,
        Formula::Or(..) => 2,
        Formula::And(..) => 3,
        Formula::Forall(..) | Formula::Exists(..) => 0,
        _ => 4,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, x: &Formula, min: u8) -> fmt::Result {
    if level(x) < min {
        write!(f, "(")?;
        write_formula(f, x)?;
        write!(f, ")")
    } else {
        write_formula(f, x)
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, x: &Formula) -> fmt::Result {
    match x {
        Formula::Atom(a) => write!(f, "{a}"),
        Formula::Eq(s, t) => write!(f, "{s} = {t}"),
        Formula::Not(y) => match &**y {
            Formula::Eq(s, t) => write!(f, "{s} != {t}"),
            _ => {
                write!(f, "~")?;
                write_at(f, y, 4)
            }
        },
        Formula::And(a, b) => {
            write_at(f, a, 3)?;
            write!(f, " & ")?;
            write_at(f, b, 4)
        }
        Formula::Or(a, b) => {
            write_at(f, a, 2)?;
            write!(f, " | ")?;
            write_at(f, b, 3)
        }
        Formula::Implies(a, b) => {
            write_at(f, a, 2)?;
            write!(f, " -> ")?;
            write_at(f, b, 1)
        }
        Formula::Forall(..) | Formula::Exists(..) => {
            let is_all = matches!(x, Formula::Forall(..));
            let mut vars = Vec::new();
            let mut body = x;
            loop {
                match body {
                    Formula::Forall(v, b) if is_all => {
                        vars.push(v.clone());
                        body = b;
                    }
                    Formula::Exists(v, b) if !is_all => {
                        vars.push(v.clone());
                        body = b;
                    }
                    _ => break,
                }
            }
            write!(f, "{} ", if is_all { "forall" } else { "exists" })?;
            for (i, v) in vars.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, ". ")?;
            write_formula(f, body)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self)
    }
}
