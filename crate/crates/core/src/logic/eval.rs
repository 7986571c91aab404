//! Tarskian evaluation over finite models.

use std::collections::BTreeMap;

use thiserror::Error;

use super::model::{Element, Model};
use super::syntax::{Formula, Term, Var};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("free variable `{0}` has no value")]
    Unbound(String),
    #[error("variable `{name}` is assigned an element of the wrong sort")]
    SortMismatch { name: String },
}

/// Values for free variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<String, Element>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: impl Into<String>, value: Element) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<Element> {
        self.0.get(name).copied()
    }
}

/// Evaluates `formula` in `model`. Quantifiers range over the universe of the
/// bound variable's sort; label constants missing from the model make any
/// atom mentioning them false.
pub fn evaluate(model: &Model, formula: &Formula, assignment: &Assignment) -> Result<bool, EvalError> {
    let mut env = Env {
        model,
        outer: assignment,
        stack: Vec::new(),
    };
    env.eval(formula)
}

/// Shorthand for evaluating a sentence.
pub fn holds(model: &Model, sentence: &Formula) -> Result<bool, EvalError> {
    evaluate(model, sentence, &Assignment::new())
}

struct Env<'a> {
    model: &'a Model,
    outer: &'a Assignment,
    stack: Vec<(&'a str, Element)>,
}

impl<'a> Env<'a> {
    fn lookup(&self, v: &Var) -> Result<Element, EvalError> {
        let e = self
            .stack
            .iter()
            .rev()
            .find(|(n, _)| *n == v.name)
            .map(|(_, e)| *e)
            .or_else(|| self.outer.get(&v.name))
            .ok_or_else(|| EvalError::Unbound(v.name.clone()))?;
        if e.sort() != v.sort {
            return Err(EvalError::SortMismatch {
                name: v.name.clone(),
            });
        }
        Ok(e)
    }

    fn term(&self, t: &Term) -> Result<Option<Element>, EvalError> {
        Ok(match t {
            Term::Var(v) => Some(self.lookup(v)?),
            Term::Label(l) => self.model.label_index(l).map(Element::Label),
            Term::Nat(n) => (*n <= self.model.number_bound()).then_some(Element::Number(*n)),
        })
    }

    fn eval(&mut self, f: &'a Formula) -> Result<bool, EvalError> {
        Ok(match f {
            Formula::Atom { rel, args } => {
                let mut tuple = Vec::with_capacity(args.len());
                let mut present = true;
                for a in args {
                    match self.term(a)? {
                        Some(e) => tuple.push(e),
                        None => present = false,
                    }
                }
                present && self.model.holds(rel, &tuple)
            }
            Formula::Eq(a, b) => {
                let (a, b) = (self.term(a)?, self.term(b)?);
                a.is_some() && a == b
            }
            Formula::Not(g) => !self.eval(g)?,
            Formula::And(gs) => {
                for g in gs {
                    if !self.eval(g)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.eval(g)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !self.eval(a)? || self.eval(b)?,
            Formula::Exists(v, body) => self.quantify(v, body, true)?,
            Formula::Forall(v, body) => self.quantify(v, body, false)?,
        })
    }

    fn quantify(&mut self, v: &'a Var, body: &'a Formula, existential: bool) -> Result<bool, EvalError> {
        let n = self.model.universe_size(v.sort);
        for i in 0..n {
            self.stack.push((&v.name, self.model.element(v.sort, i)));
            let r = self.eval(body);
            self.stack.pop();
            if r? == existential {
                return Ok(existential);
            }
        }
        Ok(!existential)
    }
}

/// Whether a true sentence holds only vacuously in `model`.
///
/// Applies to sentences whose outermost quantifier is universal. Such a
/// sentence is vacuous when the object universe is empty, or when the matrix
/// under its leading quantifier chain is an implication whose antecedent (the
/// guard) is satisfied by no assignment of the chain's variables.
pub fn check_vacuous(model: &Model, formula: &Formula) -> Result<bool, EvalError> {
    let Formula::Forall(first, _) = formula else {
        return Ok(false);
    };
    if model.universe_size(first.sort) == 0 {
        return Ok(true);
    }
    let mut chain = Vec::new();
    let mut matrix = formula;
    while let Some((_, v, body)) = matrix.as_quantifier() {
        chain.push(v.clone());
        matrix = body;
    }
    let Formula::Implies(guard, _) = matrix else {
        return Ok(false);
    };
    let closed = chain
        .into_iter()
        .rev()
        .fold((**guard).clone(), |acc, v| Formula::Exists(v, Box::new(acc)));
    Ok(!holds(model, &closed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::model::ModelBuilder;
    use crate::logic::syntax::{rel, Sort};

    fn cats() -> Model {
        let mut b = ModelBuilder::new("m", ["cat", "couch", "dog"]);
        b.object("o1", &["cat"]);
        b.object("o2", &["cat"]);
        b.build().unwrap()
    }

    fn dog_on_sofa() -> Formula {
        Formula::forall(
            "x",
            Formula::implies(
                Formula::label_of("x", "dog"),
                Formula::exists("y", Formula::binary(rel::WITHIN, "x", "y")),
            ),
        )
    }

    #[test]
    fn existential_witness() {
        let f = Formula::exists("x", Formula::label_of("x", "cat"));
        assert_eq!(holds(&cats(), &f), Ok(true));
    }

    #[test]
    fn empty_domain_is_vacuous_for_forall() {
        let m = ModelBuilder::new("e", ["dog"]).build().unwrap();
        let f = Formula::forall("x", Formula::label_of("x", "dog"));
        assert_eq!(holds(&m, &f), Ok(true));
        assert_eq!(holds(&m, &Formula::exists("x", Formula::label_of("x", "dog"))), Ok(false));
        assert_eq!(check_vacuous(&m, &f), Ok(true));
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let f = Formula::label_of("x", "cat");
        assert_eq!(
            evaluate(&cats(), &f, &Assignment::new()),
            Err(EvalError::Unbound("x".into()))
        );
        let a = Assignment::new().bind("x", Element::Object(0));
        assert_eq!(evaluate(&cats(), &f, &a), Ok(true));
        let bad = Assignment::new().bind("x", Element::Label(0));
        assert!(matches!(evaluate(&cats(), &f, &bad), Err(EvalError::SortMismatch { .. })));
    }

    #[test]
    fn unknown_label_constant_is_false() {
        let f = Formula::exists("x", Formula::label_of("x", "zebra"));
        assert_eq!(holds(&cats(), &f), Ok(false));
    }

    #[test]
    fn label_and_number_quantifiers() {
        let l = Var::new("l", Sort::Label);
        let f = Formula::Exists(
            l.clone(),
            Box::new(Formula::atom(
                rel::COUNT,
                vec![Term::Var(l), Term::nat(2)],
            )),
        );
        assert_eq!(holds(&cats(), &f), Ok(true));
        let n = Var::new("n", Sort::Number);
        let g = Formula::Exists(
            n.clone(),
            Box::new(Formula::atom(
                rel::COUNT,
                vec![Term::label("dog"), Term::Var(n)],
            )),
        );
        assert_eq!(holds(&cats(), &g), Ok(true));
    }

    #[test]
    fn vacuity_of_guarded_universal() {
        assert_eq!(check_vacuous(&cats(), &dog_on_sofa()), Ok(true));

        let mut b = ModelBuilder::new("m", ["dog", "sofa"]);
        let d = b.object("d", &["dog"]);
        let s = b.object("s", &["sofa"]);
        b.relate(rel::WITHIN, &[d, s]);
        let m = b.build().unwrap();
        assert_eq!(holds(&m, &dog_on_sofa()), Ok(true));
        assert_eq!(check_vacuous(&m, &dog_on_sofa()), Ok(false));
    }

    #[test]
    fn level_oranges_not_vacuous() {
        let mut b = ModelBuilder::new("m", ["orange"]);
        for i in 0..3 {
            b.object(format!("o{i}"), &["orange"]);
        }
        let m = b.build().unwrap();
        let f = Formula::forall(
            "x",
            Formula::forall("y", Formula::not(Formula::binary(rel::BELOW, "x", "y"))),
        );
        assert_eq!(holds(&m, &f), Ok(true));
        assert_eq!(check_vacuous(&m, &f), Ok(false));
    }

    #[test]
    fn prenex_guard_with_inner_existential() {
        // forall x exists y (labelOf(x,dog) => within(x,y)): guard only needs a dog.
        let f = Formula::forall(
            "x",
            Formula::exists(
                "y",
                Formula::implies(
                    Formula::label_of("x", "dog"),
                    Formula::binary(rel::WITHIN, "x", "y"),
                ),
            ),
        );
        assert_eq!(check_vacuous(&cats(), &f), Ok(true));
    }
}
