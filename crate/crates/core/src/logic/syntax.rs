//! Multi-sorted first-order syntax: sorts, signatures, terms and formulas.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Built-in relation names.
pub mod rel {
    pub const LABEL_OF: &str = "labelOf";
    pub const SAME: &str = "same";
    pub const WITHIN: &str = "within";
    pub const TO_LEFT: &str = "toLeft";
    pub const TO_RIGHT: &str = "toRight";
    pub const ABOVE: &str = "above";
    pub const BELOW: &str = "below";
    pub const COUNT: &str = "count";
}

/// `Object` and `Label` are the foreground sorts, `Number` is the background
/// sort of naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sort {
    Object,
    Label,
    Number,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Object => "Object",
            Sort::Label => "Label",
            Sort::Number => "Number",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationDecl {
    pub name: String,
    pub args: Vec<Sort>,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("relation `{0}` declared twice")]
    DuplicateRelation(String),
    #[error("relation `{0}` must have arity of at least one")]
    NullaryRelation(String),
}

/// Relation symbols plus the label constants and the largest numeric literal
/// allowed in formulas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    relations: Vec<RelationDecl>,
    label_constants: BTreeSet<String>,
    numeric_literal_bound: u32,
}

impl Signature {
    /// The built-in signature over the given label vocabulary.
    pub fn new<I, S>(labels: I, numeric_literal_bound: u32) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        use Sort::*;
        let binary = |name: &str| RelationDecl {
            name: name.to_string(),
            args: vec![Object, Object],
        };
        let relations = vec![
            RelationDecl {
                name: rel::LABEL_OF.into(),
                args: vec![Object, Label],
            },
            binary(rel::SAME),
            binary(rel::WITHIN),
            binary(rel::TO_LEFT),
            binary(rel::TO_RIGHT),
            binary(rel::ABOVE),
            binary(rel::BELOW),
            RelationDecl {
                name: rel::COUNT.into(),
                args: vec![Label, Number],
            },
        ];
        Signature {
            relations,
            label_constants: labels.into_iter().map(Into::into).collect(),
            numeric_literal_bound,
        }
    }

    /// Adds a relation beyond the built-ins.
    pub fn with_relation(
        mut self,
        name: impl Into<String>,
        args: Vec<Sort>,
    ) -> Result<Self, SignatureError> {
        let name = name.into();
        if self.relation(&name).is_some() {
            return Err(SignatureError::DuplicateRelation(name));
        }
        if args.is_empty() {
            return Err(SignatureError::NullaryRelation(name));
        }
        self.relations.push(RelationDecl { name, args });
        Ok(self)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.relations
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.label_constants
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.label_constants.contains(label)
    }

    pub fn numeric_literal_bound(&self) -> u32 {
        self.numeric_literal_bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn object(name: impl Into<String>) -> Self {
        Var {
            name: name.into(),
            sort: Sort::Object,
        }
    }

    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var {
            name: name.into(),
            sort,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Label(String),
    Nat(u32),
}

impl Term {
    /// An object-sorted variable.
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(Var::object(name))
    }

    pub fn label(name: impl Into<String>) -> Self {
        Term::Label(name.into())
    }

    pub fn nat(n: u32) -> Self {
        Term::Nat(n)
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort,
            Term::Label(_) => Sort::Label,
            Term::Nat(_) => Sort::Number,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { rel: String, args: Vec<Term> },
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom {
            rel: rel.into(),
            args,
        }
    }

    /// `labelOf(var, label)`.
    pub fn label_of(var: &str, label: &str) -> Self {
        Formula::atom(rel::LABEL_OF, vec![Term::var(var), Term::label(label)])
    }

    /// A binary object relation over two object variables.
    pub fn binary(rel: &str, a: &str, b: &str) -> Self {
        Formula::atom(rel, vec![Term::var(a), Term::var(b)])
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Self {
        Formula::And(fs)
    }

    pub fn or(fs: Vec<Formula>) -> Self {
        Formula::Or(fs)
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Existential quantification over an object variable.
    pub fn exists(var: &str, body: Formula) -> Self {
        Formula::Exists(Var::object(var), Box::new(body))
    }

    /// Universal quantification over an object variable.
    pub fn forall(var: &str, body: Formula) -> Self {
        Formula::Forall(Var::object(var), Box::new(body))
    }

    pub fn quantified(q: Quantifier, var: Var, body: Formula) -> Self {
        match q {
            Quantifier::Exists => Formula::Exists(var, Box::new(body)),
            Quantifier::Forall => Formula::Forall(var, Box::new(body)),
        }
    }

    /// Splits off a leading quantifier.
    pub fn as_quantifier(&self) -> Option<(Quantifier, &Var, &Formula)> {
        match self {
            Formula::Exists(v, b) => Some((Quantifier::Exists, v, b)),
            Formula::Forall(v, b) => Some((Quantifier::Forall, v, b)),
            _ => None,
        }
    }

    /// Immediate subformulas, in order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom { .. } | Formula::Eq(..) => Vec::new(),
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => vec![f],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().collect(),
            Formula::Implies(a, b) => vec![a, b],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom { .. } | Formula::Eq(..))
    }

    pub fn is_label_atom(&self) -> bool {
        matches!(self, Formula::Atom { rel, .. } if rel == rel::LABEL_OF)
    }

    /// Number of relational atoms and equalities.
    pub fn atom_count(&self) -> usize {
        if self.is_atomic() {
            1
        } else {
            self.children().into_iter().map(Formula::atom_count).sum()
        }
    }

    /// Unbound variables. A binder shadows only within its own body.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Calls `f` on every node in pre-order.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }
}

fn collect_free<'a>(f: &'a Formula, bound: &mut Vec<&'a str>, out: &mut BTreeSet<Var>) {
    let mut term = |t: &Term, bound: &Vec<&str>| {
        if let Term::Var(v) = t {
            if !bound.contains(&v.name.as_str()) {
                out.insert(v.clone());
            }
        }
    };
    match f {
        Formula::Atom { args, .. } => args.iter().for_each(|t| term(t, bound)),
        Formula::Eq(a, b) => {
            term(a, bound);
            term(b, bound);
        }
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            bound.push(&v.name);
            collect_free(body, bound, out);
            bound.pop();
        }
        _ => {
            for c in f.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SortErrorKind {
    UnknownRelation(String),
    Arity { expected: usize, found: usize },
    ArgumentSort { position: usize, expected: Sort, found: Sort },
    EqualityNotObject,
    NonObjectQuantification(String),
    UnknownLabel(String),
    NumberOutOfBound(u32),
    TooFewOperands,
    SortConflict(String),
}

/// A sort diagnostic; `path` lists child indices from the root to the
/// offending node.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("at {}: {}", display_path(.path), display_kind(.kind))]
pub struct SortError {
    pub path: Vec<usize>,
    pub kind: SortErrorKind,
}

fn display_path(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn display_kind(kind: &SortErrorKind) -> String {
    match kind {
        SortErrorKind::UnknownRelation(r) => format!("unknown relation `{r}`"),
        SortErrorKind::Arity { expected, found } => {
            format!("expected {expected} arguments, found {found}")
        }
        SortErrorKind::ArgumentSort {
            position,
            expected,
            found,
        } => format!("argument {position} has sort {found}, expected {expected}"),
        SortErrorKind::EqualityNotObject => "equality is only allowed between objects".into(),
        SortErrorKind::NonObjectQuantification(v) => {
            format!("non-object quantification of `{v}`")
        }
        SortErrorKind::UnknownLabel(l) => format!("unknown label constant `{l}`"),
        SortErrorKind::NumberOutOfBound(n) => format!("numeric literal {n} exceeds bound"),
        SortErrorKind::TooFewOperands => "connective needs at least two operands".into(),
        SortErrorKind::SortConflict(v) => {
            format!("variable `{v}` used at a sort different from its binder")
        }
    }
}

/// Checks atoms against the signature, restricts equality to objects and,
/// with `dialect` on, rejects quantifiers over non-object sorts.
pub fn check_well_sorted(
    formula: &Formula,
    sig: &Signature,
    dialect: bool,
) -> Result<(), Vec<SortError>> {
    let mut errors = Vec::new();
    let mut path = Vec::new();
    let mut scope = Vec::new();
    check_node(formula, sig, dialect, &mut path, &mut scope, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn check_node<'a>(
    f: &'a Formula,
    sig: &Signature,
    dialect: bool,
    path: &mut Vec<usize>,
    scope: &mut Vec<&'a Var>,
    errors: &mut Vec<SortError>,
) {
    let mut err = |path: &Vec<usize>, kind| {
        errors.push(SortError {
            path: path.clone(),
            kind,
        })
    };
    let term = |t: &Term, scope: &Vec<&Var>, path: &Vec<usize>, errors: &mut Vec<SortError>| {
        let kind = match t {
            Term::Var(v) => scope
                .iter()
                .rev()
                .find(|b| b.name == v.name)
                .filter(|b| b.sort != v.sort)
                .map(|_| SortErrorKind::SortConflict(v.name.clone())),
            Term::Label(l) if !sig.has_label(l) => Some(SortErrorKind::UnknownLabel(l.clone())),
            Term::Nat(n) if *n > sig.numeric_literal_bound() => {
                Some(SortErrorKind::NumberOutOfBound(*n))
            }
            _ => None,
        };
        if let Some(kind) = kind {
            errors.push(SortError {
                path: path.clone(),
                kind,
            });
        }
    };
    match f {
        Formula::Atom { rel, args } => match sig.relation(rel) {
            None => err(path, SortErrorKind::UnknownRelation(rel.clone())),
            Some(decl) => {
                if decl.arity() != args.len() {
                    err(
                        path,
                        SortErrorKind::Arity {
                            expected: decl.arity(),
                            found: args.len(),
                        },
                    );
                    return;
                }
                for (i, (t, s)) in args.iter().zip(&decl.args).enumerate() {
                    if t.sort() != *s {
                        errors.push(SortError {
                            path: path.clone(),
                            kind: SortErrorKind::ArgumentSort {
                                position: i + 1,
                                expected: *s,
                                found: t.sort(),
                            },
                        });
                    } else {
                        term(t, scope, path, errors);
                    }
                }
            }
        },
        Formula::Eq(a, b) => {
            if a.sort() != Sort::Object || b.sort() != Sort::Object {
                err(path, SortErrorKind::EqualityNotObject);
            } else {
                term(a, scope, path, errors);
                term(b, scope, path, errors);
            }
        }
        Formula::And(fs) | Formula::Or(fs) => {
            if fs.len() < 2 {
                err(path, SortErrorKind::TooFewOperands);
            }
            for (i, c) in fs.iter().enumerate() {
                path.push(i);
                check_node(c, sig, dialect, path, scope, errors);
                path.pop();
            }
        }
        Formula::Not(c) => {
            path.push(0);
            check_node(c, sig, dialect, path, scope, errors);
            path.pop();
        }
        Formula::Implies(a, b) => {
            for (i, c) in [a, b].into_iter().enumerate() {
                path.push(i);
                check_node(c, sig, dialect, path, scope, errors);
                path.pop();
            }
        }
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            if dialect && v.sort != Sort::Object {
                err(path, SortErrorKind::NonObjectQuantification(v.name.clone()));
            }
            scope.push(v);
            path.push(0);
            check_node(body, sig, dialect, path, scope, errors);
            path.pop();
            scope.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::new(["cat", "couch", "dog"], 4)
    }

    #[test]
    fn builtins_present() {
        let s = sig();
        for r in [
            rel::LABEL_OF,
            rel::SAME,
            rel::WITHIN,
            rel::TO_LEFT,
            rel::TO_RIGHT,
            rel::ABOVE,
            rel::BELOW,
            rel::COUNT,
        ] {
            assert!(s.relation(r).is_some(), "{r}");
        }
        assert_eq!(
            s.relation(rel::COUNT).unwrap().args,
            vec![Sort::Label, Sort::Number]
        );
    }

    #[test]
    fn signature_rejects_duplicates_and_nullary() {
        assert_eq!(
            sig().with_relation("within", vec![Sort::Object]).unwrap_err(),
            SignatureError::DuplicateRelation("within".into())
        );
        assert!(sig().with_relation("p", vec![]).is_err());
        let s = sig().with_relation("near", vec![Sort::Object, Sort::Object]).unwrap();
        assert_eq!(s.relation("near").unwrap().arity(), 2);
    }

    #[test]
    fn well_sorted_label_atom() {
        let f = Formula::exists("x", Formula::label_of("x", "cat"));
        assert_eq!(check_well_sorted(&f, &sig(), true), Ok(()));
    }

    #[test]
    fn dialect_rejects_label_quantifier() {
        let l = Var::new("l", Sort::Label);
        let f = Formula::Exists(
            l.clone(),
            Box::new(Formula::atom(rel::LABEL_OF, vec![Term::var("x"), Term::Var(l)])),
        );
        let errs = check_well_sorted(&f, &sig(), true).unwrap_err();
        assert_eq!(
            errs[0].kind,
            SortErrorKind::NonObjectQuantification("l".into())
        );
        assert!(errs[0].to_string().contains("non-object quantification"));
        assert_eq!(check_well_sorted(&f, &sig(), false), Ok(()));
    }

    #[test]
    fn within_with_label_argument() {
        let f = Formula::atom(rel::WITHIN, vec![Term::var("x"), Term::label("cat")]);
        let errs = check_well_sorted(&f, &sig(), true).unwrap_err();
        assert_eq!(
            errs,
            vec![SortError {
                path: vec![],
                kind: SortErrorKind::ArgumentSort {
                    position: 2,
                    expected: Sort::Object,
                    found: Sort::Label
                }
            }]
        );
    }

    #[test]
    fn error_paths_point_into_the_tree() {
        let f = Formula::exists(
            "x",
            Formula::and(vec![
                Formula::label_of("x", "cat"),
                Formula::label_of("x", "zebra"),
            ]),
        );
        let errs = check_well_sorted(&f, &sig(), true).unwrap_err();
        assert_eq!(errs[0].path, vec![0, 1]);
        assert_eq!(errs[0].kind, SortErrorKind::UnknownLabel("zebra".into()));
    }

    #[test]
    fn equality_only_between_objects() {
        let f = Formula::eq(Term::label("cat"), Term::label("cat"));
        assert_eq!(
            check_well_sorted(&f, &sig(), false).unwrap_err()[0].kind,
            SortErrorKind::EqualityNotObject
        );
    }

    #[test]
    fn numeric_bound_and_arity() {
        let f = Formula::atom(rel::COUNT, vec![Term::label("cat"), Term::nat(5)]);
        assert_eq!(
            check_well_sorted(&f, &sig(), true).unwrap_err()[0].kind,
            SortErrorKind::NumberOutOfBound(5)
        );
        let g = Formula::atom(rel::SAME, vec![Term::var("x")]);
        assert!(matches!(
            check_well_sorted(&g, &sig(), true).unwrap_err()[0].kind,
            SortErrorKind::Arity { expected: 2, found: 1 }
        ));
    }

    #[test]
    fn free_vars_cases() {
        let f = Formula::exists("x", Formula::binary(rel::WITHIN, "x", "y"));
        assert_eq!(f.free_vars(), BTreeSet::from([Var::object("y")]));

        let closed = Formula::exists("x", Formula::label_of("x", "cat"));
        assert!(closed.free_vars().is_empty());
        assert!(closed.is_sentence());

        let shadow = Formula::and(vec![
            Formula::label_of("x", "cat"),
            Formula::exists("x", Formula::binary(rel::SAME, "x", "x")),
        ]);
        assert_eq!(shadow.free_vars(), BTreeSet::from([Var::object("x")]));
    }
}
