//! Parenthesized prefix syntax for formulas.
//!
//! ```text
//! f := (exists VAR f) | (forall VAR f) | (and f f+) | (or f f+)
//!    | (implies f f) | (not f) | (= t t) | (REL t+)
//! t := VAR | LABEL | NAT
//! ```
//!
//! A symbol is a variable when an enclosing quantifier binds it, otherwise
//! it must be a label constant of the signature. Quantifiers over a sort
//! other than objects are written `(exists (l Label) f)`.

use std::fmt;

use thiserror::Error;

use super::syntax::{Formula, Signature, Sort, Term, Var};
use crate::sexpr::{self, Pos, SExpr};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unknown relation `{name}` at {pos}")]
    UnknownRelation { name: String, pos: Pos },
    #[error("unknown label constant `{name}` at {pos}")]
    UnknownConstant { name: String, pos: Pos },
}

impl From<sexpr::SExprError> for ParseError {
    fn from(e: sexpr::SExprError) -> Self {
        ParseError::Syntax {
            pos: e.pos,
            message: e.message,
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        message: message.into(),
    }
}

/// Parses exactly one formula.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let exprs = sexpr::parse_all(text)?;
    match exprs.as_slice() {
        [e] => Converter { sig, scope: Vec::new() }.formula(e),
        [] => Err(syntax(Pos { line: 1, col: 1 }, "empty input")),
        [_, extra, ..] => Err(syntax(extra.pos(), "trailing input after formula")),
    }
}

/// Renders `formula` in the canonical single-line text form.
pub fn print_formula(formula: &Formula) -> String {
    formula.to_string()
}

struct Converter<'a> {
    sig: &'a Signature,
    scope: Vec<Var>,
}

impl Converter<'_> {
    fn formula(&mut self, e: &SExpr) -> Result<Formula, ParseError> {
        let items = match e {
            SExpr::List(items, _) => items,
            other => return Err(syntax(other.pos(), "expected a parenthesized formula")),
        };
        let (head, args) = match items.split_first() {
            Some((SExpr::Symbol(h, _), rest)) => (h.as_str(), rest),
            Some((other, _)) => return Err(syntax(other.pos(), "expected an operator")),
            None => return Err(syntax(e.pos(), "empty list")),
        };
        let arity = |n: usize, op: &str| {
            if args.len() == n {
                Ok(())
            } else {
                Err(syntax(
                    e.pos(),
                    format!("`{op}` takes {n} operands, found {}", args.len()),
                ))
            }
        };
        match head {
            "exists" | "forall" => {
                arity(2, head)?;
                let var = self.binder(&args[0])?;
                self.scope.push(var.clone());
                let body = self.formula(&args[1]);
                self.scope.pop();
                let body = Box::new(body?);
                Ok(if head == "exists" {
                    Formula::Exists(var, body)
                } else {
                    Formula::Forall(var, body)
                })
            }
            "and" | "or" => {
                if args.len() < 2 {
                    return Err(syntax(e.pos(), format!("`{head}` needs at least two operands")));
                }
                let fs = args.iter().map(|a| self.formula(a)).collect::<Result<_, _>>()?;
                Ok(if head == "and" {
                    Formula::And(fs)
                } else {
                    Formula::Or(fs)
                })
            }
            "implies" => {
                arity(2, head)?;
                Ok(Formula::implies(self.formula(&args[0])?, self.formula(&args[1])?))
            }
            "not" => {
                arity(1, head)?;
                Ok(Formula::not(self.formula(&args[0])?))
            }
            "=" => {
                arity(2, head)?;
                Ok(Formula::Eq(self.term(&args[0])?, self.term(&args[1])?))
            }
            rel => {
                if self.sig.relation(rel).is_none() {
                    return Err(ParseError::UnknownRelation {
                        name: rel.to_string(),
                        pos: items[0].pos(),
                    });
                }
                if args.is_empty() {
                    return Err(syntax(e.pos(), format!("relation `{rel}` needs arguments")));
                }
                let terms = args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?;
                Ok(Formula::atom(rel, terms))
            }
        }
    }

    fn binder(&self, e: &SExpr) -> Result<Var, ParseError> {
        match e {
            SExpr::Symbol(name, pos) => {
                check_var_name(name, *pos)?;
                Ok(Var::object(name.clone()))
            }
            SExpr::List(items, pos) => match items.as_slice() {
                [SExpr::Symbol(name, npos), SExpr::Symbol(sort, spos)] => {
                    check_var_name(name, *npos)?;
                    let sort = match sort.as_str() {
                        "Object" => Sort::Object,
                        "Label" => Sort::Label,
                        "Number" => Sort::Number,
                        other => return Err(syntax(*spos, format!("unknown sort `{other}`"))),
                    };
                    Ok(Var::new(name.clone(), sort))
                }
                _ => Err(syntax(*pos, "expected `(VAR SORT)`")),
            },
            SExpr::Str(_, pos) => Err(syntax(*pos, "expected a variable")),
        }
    }

    fn term(&self, e: &SExpr) -> Result<Term, ParseError> {
        let (sym, pos) = match e {
            SExpr::Symbol(s, p) => (s.as_str(), *p),
            other => return Err(syntax(other.pos(), "expected a term")),
        };
        if let Some(v) = self.scope.iter().rev().find(|v| v.name == sym) {
            return Ok(Term::Var(v.clone()));
        }
        if !sym.is_empty() && sym.bytes().all(|b| b.is_ascii_digit()) {
            return sym
                .parse()
                .map(Term::Nat)
                .map_err(|_| syntax(pos, format!("numeral `{sym}` out of range")));
        }
        if self.sig.has_label(sym) {
            return Ok(Term::Label(sym.to_string()));
        }
        Err(ParseError::UnknownConstant {
            name: sym.to_string(),
            pos,
        })
    }
}

fn check_var_name(name: &str, pos: Pos) -> Result<(), ParseError> {
    let mut cs = name.chars();
    let ok = cs.next().is_some_and(|c| c.is_ascii_lowercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(syntax(pos, format!("`{name}` is not a valid variable name")))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::Label(l) => f.write_str(l),
            Term::Nat(n) => write!(f, "{n}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, head: &str, fs: &[&Formula]| {
            write!(f, "({head}")?;
            for g in fs {
                write!(f, " {g}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Atom { rel, args } => {
                write!(f, "({rel}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) => list(f, "and", &gs.iter().collect::<Vec<_>>()),
            Formula::Or(gs) => list(f, "or", &gs.iter().collect::<Vec<_>>()),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let q = if matches!(self, Formula::Exists(..)) {
                    "exists"
                } else {
                    "forall"
                };
                if v.sort == Sort::Object {
                    write!(f, "({q} {} {g})", v.name)
                } else {
                    write!(f, "({q} ({} {}) {g})", v.name, v.sort)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::syntax::rel;

    fn sig() -> Signature {
        Signature::new(["cat", "dog", "sofa", "parking_meter"], 3)
    }

    #[test]
    fn duplicated_conjunct_is_preserved() {
        let f = parse_formula("(exists x (and (labelOf x cat) (labelOf x cat)))", &sig()).unwrap();
        assert_eq!(
            f,
            Formula::exists(
                "x",
                Formula::and(vec![Formula::label_of("x", "cat"), Formula::label_of("x", "cat")])
            )
        );
    }

    #[test]
    fn all_dogs_on_sofas() {
        let text = "(forall x (implies (labelOf x dog) (exists y (within x y))))";
        let f = parse_formula(text, &sig()).unwrap();
        assert_eq!(
            f,
            Formula::forall(
                "x",
                Formula::implies(
                    Formula::label_of("x", "dog"),
                    Formula::exists("y", Formula::binary(rel::WITHIN, "x", "y"))
                )
            )
        );
        assert_eq!(print_formula(&f), text);
    }

    #[test]
    fn malformed_input() {
        let err = parse_formula("(exists x", &sig()).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { pos: Pos { line: 1, .. }, .. }));
        assert!(parse_formula("", &sig()).is_err());
        assert!(parse_formula("(not)", &sig()).is_err());
        assert!(parse_formula("(and (labelOf x cat))", &sig()).is_err());
        assert!(parse_formula("(exists X (labelOf X cat))", &sig()).is_err());
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(
            parse_formula("(exists x (onTop x x))", &sig()),
            Err(ParseError::UnknownRelation { .. })
        ));
        let err = parse_formula("(exists x\n  (labelOf x zebra))", &sig()).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownConstant {
                name: "zebra".into(),
                pos: Pos { line: 2, col: 14 }
            }
        );
    }

    #[test]
    fn numerals_equality_and_sorted_binders() {
        let f = parse_formula("(exists x (and (count cat 2) (= x x)))", &sig()).unwrap();
        assert_eq!(f.to_string(), "(exists x (and (count cat 2) (= x x)))");
        let g = parse_formula("(exists (l Label) (count l 0))", &sig()).unwrap();
        assert_eq!(
            g,
            Formula::Exists(
                Var::new("l", Sort::Label),
                Box::new(Formula::atom(
                    rel::COUNT,
                    vec![Term::Var(Var::new("l", Sort::Label)), Term::nat(0)]
                ))
            )
        );
        assert_eq!(g.to_string(), "(exists (l Label) (count l 0))");
    }

    #[test]
    fn bound_variable_shadows_label() {
        let s = Signature::new(["x"], 1);
        let f = parse_formula("(and (exists x (same x x)) (exists y (labelOf y x)))", &s).unwrap();
        let Formula::And(parts) = f else { panic!() };
        assert_eq!(parts[1], Formula::exists("y", Formula::atom(rel::LABEL_OF, vec![Term::var("y"), Term::label("x")])));
    }
}
