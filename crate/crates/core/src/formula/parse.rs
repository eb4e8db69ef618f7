use super::{name, Atom, Formula, Name, Term};
use crate::error::{Error, Result};
use crate::instance::Schema;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Not,
    And,
    Or,
    Arrow,
    Eq,
    Neq,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let bump = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => bump(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' | ')' | ',' | '.' | '~' | '&' | '|' | '=' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '~' => Tok::Not,
                    '&' => Tok::And,
                    '|' => Tok::Or,
                    _ => Tok::Eq,
                };
                out.push(Token { tok, line: l0, col: c0 });
                bump(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Token { tok: Tok::Arrow, line: l0, col: c0 });
                bump(2, &mut i, &mut col);
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                out.push(Token { tok: Tok::Neq, line: l0, col: c0 });
                bump(2, &mut i, &mut col);
            }
            '\'' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => return Err(Error::parse(l0, c0, "unterminated quoted constant")),
                        Some('\\') if matches!(chars.get(j + 1), Some('\'') | Some('\\')) => {
                            s.push(chars[j + 1]);
                            j += 2;
                        }
                        Some('\'') => break,
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                if s.is_empty() {
                    return Err(Error::parse(l0, c0, "empty quoted constant"));
                }
                out.push(Token { tok: Tok::Quoted(s), line: l0, col: c0 });
                let n = j + 1 - i;
                bump(n, &mut i, &mut col);
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[i..j].iter().collect()), line: l0, col: c0 });
                bump(j - i, &mut i, &mut col);
            }
            other => return Err(Error::parse(l0, c0, format!("unexpected character '{other}'"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

enum SchemaMode<'a> {
    Strict(&'a Schema),
    Declaring(&'a mut Schema),
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    schema: SchemaMode<'a>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(Error::parse(l, c, msg))
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.next();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula> {
        let mut f = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.next();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while *self.peek() == Tok::And {
            self.next();
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::Not => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(kw) if (kw == "forall" || kw == "exists") && *self.peek_at(1) != Tok::LParen => {
                self.next();
                let mut vars = Vec::new();
                loop {
                    match self.next() {
                        Tok::Ident(v) if is_variable(&v) => vars.push(name(&v)),
                        _ => {
                            self.pos -= 1;
                            return self.err("expected a variable (uppercase identifier)");
                        }
                    }
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Dot, "'.' after quantified variables")?;
                let mut body = self.formula()?;
                for v in vars.into_iter().rev() {
                    body = if kw == "forall" {
                        Formula::Forall(v, Box::new(body))
                    } else {
                        Formula::Exists(v, Box::new(body))
                    };
                }
                Ok(body)
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek().clone() {
            Tok::LParen => {
                self.next();
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Tok::Ident(p) if *self.peek_at(1) == Tok::LParen => {
                let (line, col) = self.here();
                self.next();
                self.next();
                let mut args = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.next();
                    args.push(self.term()?);
                }
                self.expect(Tok::RParen, "')' closing the argument list")?;
                self.check_arity(&p, args.len(), line, col)?;
                Ok(Formula::Atom(Atom { pred: name(&p), args }))
            }
            Tok::Ident(_) | Tok::Quoted(_) => {
                let lhs = self.term()?;
                match self.next() {
                    Tok::Eq => Ok(Formula::Eq(lhs, self.term()?)),
                    Tok::Neq => Ok(Formula::not(Formula::Eq(lhs, self.term()?))),
                    _ => {
                        self.pos -= 1;
                        self.err("expected '=' or '!=' after a term")
                    }
                }
            }
            other => self.err(format!("unexpected {}", describe(&other))),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Tok::Quoted(s) => Ok(Term::Const(name(&s))),
            Tok::Ident(s) if s == "forall" || s == "exists" => {
                self.pos -= 1;
                self.err("keyword used as a term")
            }
            Tok::Ident(s) if is_variable(&s) => Ok(Term::Var(name(&s))),
            Tok::Ident(s) if s.starts_with('_') => {
                self.pos -= 1;
                self.err("identifiers may not start with '_'")
            }
            Tok::Ident(s) => Ok(Term::Const(name(&s))),
            other => {
                self.pos -= 1;
                self.err(format!("expected a term, found {}", describe(&other)))
            }
        }
    }

    fn check_arity(&mut self, p: &str, n: usize, line: usize, col: usize) -> Result<()> {
        match &mut self.schema {
            SchemaMode::Strict(s) => match s.arity(p) {
                None => Err(Error::parse(line, col, format!("unknown predicate {p}"))),
                Some(a) if a != n => Err(Error::parse(
                    line,
                    col,
                    format!("arity mismatch for {p}: expected {a}, found {n}"),
                )),
                Some(_) => Ok(()),
            },
            SchemaMode::Declaring(s) => match s.arity(p) {
                Some(a) if a != n => Err(Error::parse(
                    line,
                    col,
                    format!("arity mismatch for {p}: expected {a}, found {n}"),
                )),
                Some(_) => Ok(()),
                None => {
                    s.declare(p, n).map_err(|e| Error::parse(line, col, e.to_string()))?;
                    Ok(())
                }
            },
        }
    }
}

fn is_variable(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Quoted(s) => format!("'{s}'"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Dot => "'.'".into(),
        Tok::Not => "'~'".into(),
        Tok::And => "'&'".into(),
        Tok::Or => "'|'".into(),
        Tok::Arrow => "'->'".into(),
        Tok::Eq => "'='".into(),
        Tok::Neq => "'!='".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn run(text: &str, schema: SchemaMode) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, schema };
    if *p.peek() == Tok::Eof {
        return p.err("empty formula");
    }
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {} after formula", describe(p.peek())));
    }
    Ok(f)
}

/// Parse against a fixed schema; unknown predicates are errors.
pub fn parse_formula(text: &str, schema: &Schema) -> Result<Formula> {
    run(text, SchemaMode::Strict(schema))
}

/// Parse, declaring any predicate not yet in the schema.
pub fn parse_formula_declaring(text: &str, schema: &mut Schema) -> Result<Formula> {
    run(text, SchemaMode::Declaring(schema))
}

/// Parse a fact file body: `pred(c1,...,cn).` entries. Every bare identifier
/// in argument position is a constant. Returns (predicate, constants, line).
pub fn parse_term_list(text: &str) -> Result<Vec<(Name, Vec<Name>, usize)>> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, schema: SchemaMode::Strict(&Schema::EMPTY) };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        let (line, _) = p.here();
        let pred = match p.next() {
            Tok::Ident(s) if !s.starts_with('_') => s,
            other => {
                p.pos -= 1;
                return p.err(format!("expected a predicate name, found {}", describe(&other)));
            }
        };
        p.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            match p.next() {
                Tok::Ident(s) if !s.starts_with('_') && s != "forall" && s != "exists" => args.push(name(&s)),
                Tok::Quoted(s) => args.push(name(&s)),
                other => {
                    p.pos -= 1;
                    return p.err(format!("expected a constant, found {}", describe(&other)));
                }
            }
            match p.next() {
                Tok::Comma => continue,
                Tok::RParen => break,
                other => {
                    p.pos -= 1;
                    return p.err(format!("expected ',' or ')', found {}", describe(&other)));
                }
            }
        }
        p.expect(Tok::Dot, "'.' ending the fact")?;
        out.push((name(&pred), args, line));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        let mut s = Schema::new();
        s.declare("P", 1).unwrap();
        s.declare("Q", 2).unwrap();
        s.declare("Supply", 3).unwrap();
        s.declare("Class", 2).unwrap();
        s
    }

    #[test]
    fn supply_constraint_parses_as_forall_chain() {
        let f = parse_formula("forall X,Y,Z. (Supply(X,Y,Z) & Class(Z,t4) -> X = c)", &schema()).unwrap();
        let Formula::Forall(x, rest) = f else { panic!() };
        assert_eq!(&*x, "X");
        let Formula::Forall(_, rest) = *rest else { panic!() };
        let Formula::Forall(_, rest) = *rest else { panic!() };
        assert!(matches!(*rest, Formula::Implies(..)));
    }

    #[test]
    fn exists_single() {
        let f = parse_formula("exists X. P(X)", &schema()).unwrap();
        assert_eq!(f, Formula::exists("X", Formula::atom("P", vec![Term::var("X")])));
    }

    #[test]
    fn arity_and_unknown_predicate_errors() {
        assert!(matches!(parse_formula("P(a,b)", &schema()), Err(Error::Parse { .. })));
        let e = parse_formula("R(a)", &schema()).unwrap_err();
        assert!(e.to_string().contains("unknown predicate"));
    }

    #[test]
    fn precedence_and_associativity() {
        let s = schema();
        let f = parse_formula("P(a) | P(b) & ~P(c) -> P(d) -> P(e)", &s).unwrap();
        let pa = |c: &str| Formula::atom("P", vec![Term::constant(c)]);
        let want = Formula::implies(
            Formula::or(pa("a"), Formula::and(pa("b"), Formula::not(pa("c")))),
            Formula::implies(pa("d"), pa("e")),
        );
        assert_eq!(f, want);
    }

    #[test]
    fn quantifier_scope_extends_right() {
        let f = parse_formula("forall X. P(X) -> Q(X,a)", &schema()).unwrap();
        assert!(matches!(f, Formula::Forall(_, ref b) if matches!(**b, Formula::Implies(..))));
    }

    #[test]
    fn inequality_sugar_and_positions() {
        let f = parse_formula("X != a", &Schema::new()).unwrap();
        assert_eq!(f, Formula::not(Formula::Eq(Term::var("X"), Term::constant("a"))));
        let e = parse_formula("P(a) &\n  & P(b)", &schema()).unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, col: 3, msg: "unexpected '&'".into() });
    }

    #[test]
    fn facts() {
        let v = parse_term_list("# c\nEmployee('J.Page', 5000).\n\nP(a).").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(&*v[0].1[0], "J.Page");
        assert_eq!(v[1].2, 4);
    }
}
