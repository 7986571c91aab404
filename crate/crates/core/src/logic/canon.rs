//! Canonical form used to deduplicate formulas.
//!
//! Nested And/Or of one kind are flattened, And/Or operands and equality
//! sides are sorted by their printed form, each run of same-kind quantifiers
//! is reordered to the permutation with the smallest printed form, and bound
//! variables are renamed `x0, x1, ...` in pre-order. Sorting keys print bound
//! variables by binding depth, so the result does not depend on the original
//! variable names.

use std::collections::BTreeSet;

use super::syntax::{Formula, Quantifier, Term, Var};

/// Quantifier runs longer than this keep their order.
const MAX_PERMUTED_RUN: usize = 6;

pub fn canonicalize(formula: &Formula) -> Formula {
    let flat = unshadow(&flatten(formula), &mut Vec::new(), &mut 0);
    let keyed = Keyer::default().node(&flat);
    let free: BTreeSet<String> = formula.free_vars().into_iter().map(|v| v.name).collect();
    let mut renamer = Renamer {
        free,
        next: 0,
        stack: Vec::new(),
    };
    renamer.node(&keyed)
}

/// Canonical text, the key used for deduplication and tie-breaking.
pub fn canonical_text(formula: &Formula) -> String {
    canonicalize(formula).to_string()
}

/// Merges nested And/Or of the same kind and unwraps single-operand And/Or.
pub fn flatten(f: &Formula) -> Formula {
    match f {
        Formula::And(gs) | Formula::Or(gs) => {
            let is_and = matches!(f, Formula::And(_));
            let mut out = Vec::with_capacity(gs.len());
            for g in gs {
                match (flatten(g), is_and) {
                    (Formula::And(hs), true) | (Formula::Or(hs), false) => out.extend(hs),
                    (h, _) => out.push(h),
                }
            }
            if out.len() == 1 {
                out.pop().unwrap()
            } else if is_and {
                Formula::And(out)
            } else {
                Formula::Or(out)
            }
        }
        Formula::Not(g) => Formula::not(flatten(g)),
        Formula::Implies(a, b) => Formula::implies(flatten(a), flatten(b)),
        Formula::Exists(v, g) => Formula::Exists(v.clone(), Box::new(flatten(g))),
        Formula::Forall(v, g) => Formula::Forall(v.clone(), Box::new(flatten(g))),
        atom => atom.clone(),
    }
}

/// Gives every binder a distinct name so shadowed runs can be permuted.
fn unshadow(f: &Formula, stack: &mut Vec<(String, String)>, next: &mut usize) -> Formula {
    let term = |stack: &Vec<(String, String)>, t: &Term| match t {
        Term::Var(v) => match stack.iter().rev().find(|(k, _)| *k == v.name) {
            Some((_, name)) => Term::Var(Var::new(name.clone(), v.sort)),
            None => t.clone(),
        },
        other => other.clone(),
    };
    match f {
        Formula::Atom { rel, args } => Formula::atom(rel.clone(), args.iter().map(|t| term(stack, t)).collect()),
        Formula::Eq(a, b) => Formula::Eq(term(stack, a), term(stack, b)),
        Formula::Not(g) => Formula::not(unshadow(g, stack, next)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| unshadow(g, stack, next)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| unshadow(g, stack, next)).collect()),
        Formula::Implies(a, b) => Formula::implies(unshadow(a, stack, next), unshadow(b, stack, next)),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            // `%` cannot start a parsed variable name either.
            let name = format!("%{next}");
            *next += 1;
            stack.push((v.name.clone(), name.clone()));
            let body = unshadow(g, stack, next);
            stack.pop();
            let (q, _, _) = f.as_quantifier().expect("quantifier");
            Formula::quantified(q, Var::new(name, v.sort), body)
        }
    }
}

fn depth_name(level: usize) -> String {
    // `#` cannot start a parsed variable name, so these never clash.
    format!("#{level}")
}

#[derive(Default)]
struct Keyer {
    scope: Vec<String>,
}

impl Keyer {
    fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.scope.iter().rposition(|n| *n == v.name) {
                Some(level) => Term::Var(Var::new(depth_name(level), v.sort)),
                None => t.clone(),
            },
            other => other.clone(),
        }
    }

    fn node(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Atom { rel, args } => Formula::atom(rel.clone(), args.iter().map(|t| self.term(t)).collect()),
            Formula::Eq(a, b) => {
                let (a, b) = (self.term(a), self.term(b));
                if b.to_string() < a.to_string() {
                    Formula::Eq(b, a)
                } else {
                    Formula::Eq(a, b)
                }
            }
            Formula::Not(g) => Formula::not(self.node(g)),
            Formula::And(gs) => Formula::And(self.sorted(gs)),
            Formula::Or(gs) => Formula::Or(self.sorted(gs)),
            Formula::Implies(a, b) => Formula::implies(self.node(a), self.node(b)),
            Formula::Exists(..) | Formula::Forall(..) => self.quantifier_run(f),
        }
    }

    fn sorted(&mut self, gs: &[Formula]) -> Vec<Formula> {
        let mut keyed: Vec<(String, Formula)> = gs
            .iter()
            .map(|g| {
                let k = self.node(g);
                (k.to_string(), k)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.into_iter().map(|(_, k)| k).collect()
    }

    fn quantifier_run(&mut self, f: &Formula) -> Formula {
        let (q, _, _) = f.as_quantifier().expect("quantifier");
        let mut vars: Vec<&Var> = Vec::new();
        let mut body = f;
        while let Some((q2, v, b)) = body.as_quantifier() {
            if q2 != q {
                break;
            }
            vars.push(v);
            body = b;
        }
        let distinct = vars.iter().map(|v| &v.name).collect::<BTreeSet<_>>().len() == vars.len();
        let orders = if distinct && vars.len() <= MAX_PERMUTED_RUN {
            permutations(vars.len())
        } else {
            vec![(0..vars.len()).collect()]
        };

        let mut best: Option<(String, Formula)> = None;
        for order in orders {
            let base = self.scope.len();
            for &i in &order {
                self.scope.push(vars[i].name.clone());
            }
            let mut g = self.node(body);
            for (offset, &i) in order.iter().enumerate().rev() {
                let v = Var::new(depth_name(base + offset), vars[i].sort);
                g = Formula::quantified(q, v, g);
            }
            self.scope.truncate(base);
            let key = g.to_string();
            if best.as_ref().map_or(true, |(k, _)| key < *k) {
                best = Some((key, g));
            }
        }
        best.expect("at least one order").1
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

struct Renamer {
    free: BTreeSet<String>,
    next: usize,
    stack: Vec<(String, String)>,
}

impl Renamer {
    fn fresh(&mut self) -> String {
        loop {
            let name = format!("x{}", self.next);
            self.next += 1;
            if !self.free.contains(&name) {
                return name;
            }
        }
    }

    fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => match self.stack.iter().rev().find(|(k, _)| *k == v.name) {
                Some((_, name)) => Term::Var(Var::new(name.clone(), v.sort)),
                None => t.clone(),
            },
            other => other.clone(),
        }
    }

    fn node(&mut self, f: &Formula) -> Formula {
        match f {
            Formula::Atom { rel, args } => Formula::atom(rel.clone(), args.iter().map(|t| self.term(t)).collect()),
            Formula::Eq(a, b) => Formula::Eq(self.term(a), self.term(b)),
            Formula::Not(g) => Formula::not(self.node(g)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| self.node(g)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| self.node(g)).collect()),
            Formula::Implies(a, b) => {
                let a = self.node(a);
                Formula::implies(a, self.node(b))
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let q = if matches!(f, Formula::Exists(..)) {
                    Quantifier::Exists
                } else {
                    Quantifier::Forall
                };
                let name = self.fresh();
                self.stack.push((v.name.clone(), name.clone()));
                let body = self.node(g);
                self.stack.pop();
                Formula::quantified(q, Var::new(name, v.sort), body)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::syntax::{rel, Signature};
    use crate::logic::text::parse_formula;

    fn sig() -> Signature {
        Signature::new(["tie", "person", "cat"], 3)
    }

    fn canon(text: &str) -> String {
        canonical_text(&parse_formula(text, &sig()).unwrap())
    }

    #[test]
    fn renames_and_sorts() {
        assert_eq!(
            canon("(exists b (exists a (and (labelOf a tie) (labelOf b person))))"),
            canon("(exists x (exists y (and (labelOf x person) (labelOf y tie))))"),
        );
        let c = canon("(exists b (exists a (and (labelOf a tie) (labelOf b person))))");
        assert!(c.starts_with("(exists x0 (exists x1 (and "), "{c}");
    }

    #[test]
    fn commuting_existentials_agree() {
        let a = canon("(exists x (exists y (and (labelOf x tie) (labelOf y person) (within x y))))");
        let b = canon("(exists y (exists x (and (labelOf x tie) (labelOf y person) (within x y))))");
        assert_eq!(a, b);
    }

    #[test]
    fn mixed_quantifiers_do_not_commute() {
        let a = canon("(exists x (forall y (within x y)))");
        let b = canon("(forall y (exists x (within x y)))");
        assert_ne!(a, b);
    }

    #[test]
    fn idempotent_on_nested_binders() {
        let f = parse_formula(
            "(and (exists z (labelOf z cat)) (forall y (or (within y y) (exists q (same q y)))))",
            &sig(),
        )
        .unwrap();
        let once = canonicalize(&f);
        assert_eq!(canonicalize(&once), once);
    }

    #[test]
    fn equality_sides_are_ordered() {
        assert_eq!(
            canon("(exists a (exists b (= b a)))"),
            canon("(exists a (exists b (= a b)))")
        );
    }

    #[test]
    fn flattening_and_singletons() {
        let f = Formula::and(vec![
            Formula::and(vec![Formula::label_of("x", "cat"), Formula::label_of("x", "tie")]),
            Formula::Or(vec![Formula::label_of("x", "person")]),
        ]);
        assert_eq!(
            flatten(&f),
            Formula::and(vec![
                Formula::label_of("x", "cat"),
                Formula::label_of("x", "tie"),
                Formula::label_of("x", "person")
            ])
        );
    }

    #[test]
    fn free_variables_are_kept_and_avoided() {
        let f = Formula::exists("y", Formula::binary(rel::WITHIN, "x0", "y"));
        let c = canonicalize(&f);
        assert_eq!(c.to_string(), "(exists x1 (within x0 x1))");
    }
}
