//! Atoms and prefixes of the prenex search space.

use crate::logic::{rel, Element, Formula, Model, Quantifier, Signature, Sort, Term};

/// Name of the `i`th quantified variable.
pub fn var_name(i: usize) -> String {
    format!("x{i}")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Var(usize),
    Label(String),
    Nat(u32),
}

/// A relational atom or an equality between two object variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSpec {
    /// `None` for equality.
    pub rel: Option<String>,
    pub args: Vec<Arg>,
}

impl AtomSpec {
    pub fn is_label_atom(&self) -> bool {
        self.rel.as_deref() == Some(rel::LABEL_OF)
    }

    pub fn formula(&self) -> Formula {
        let term = |a: &Arg| match a {
            Arg::Var(i) => Term::var(var_name(*i)),
            Arg::Label(l) => Term::label(l.clone()),
            Arg::Nat(n) => Term::nat(*n),
        };
        match &self.rel {
            None => Formula::eq(term(&self.args[0]), term(&self.args[1])),
            Some(r) => Formula::atom(r.clone(), self.args.iter().map(term).collect()),
        }
    }

    /// Truth under `env`, which maps variable `i` to object `env[i]`.
    pub fn holds(&self, model: &Model, env: &[u32]) -> bool {
        let Some(r) = &self.rel else {
            let (Arg::Var(a), Arg::Var(b)) = (&self.args[0], &self.args[1]) else {
                unreachable!("equality joins variables")
            };
            return env[*a] == env[*b];
        };
        let mut tuple = Vec::with_capacity(self.args.len());
        for a in &self.args {
            tuple.push(match a {
                Arg::Var(i) => Element::Object(env[*i]),
                Arg::Label(l) => match model.label_index(l) {
                    Some(i) => Element::Label(i),
                    None => return false,
                },
                Arg::Nat(n) if *n <= model.number_bound() => Element::Number(*n),
                Arg::Nat(_) => return false,
            });
        }
        model.holds(r, &tuple)
    }
}

/// Every atom over variables `x0..x{k-1}`, in signature order: relation
/// arguments range over the variables, the label constants and the numerals
/// up to the signature bound; equalities join `xi` and `xj` with `i < j`.
pub fn atoms(sig: &Signature, k: usize) -> Vec<AtomSpec> {
    let mut out = Vec::new();
    for decl in sig.relations() {
        let domains: Vec<Vec<Arg>> = decl
            .args
            .iter()
            .map(|s| match s {
                Sort::Object => (0..k).map(Arg::Var).collect(),
                Sort::Label => sig.labels().iter().cloned().map(Arg::Label).collect(),
                Sort::Number => (0..=sig.numeric_literal_bound()).map(Arg::Nat).collect(),
            })
            .collect();
        for args in product(&domains) {
            out.push(AtomSpec {
                rel: Some(decl.name.clone()),
                args,
            });
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            out.push(AtomSpec {
                rel: None,
                args: vec![Arg::Var(i), Arg::Var(j)],
            });
        }
    }
    out
}

fn product(domains: &[Vec<Arg>]) -> Vec<Vec<Arg>> {
    domains.iter().fold(vec![Vec::new()], |acc, d| {
        acc.iter()
            .flat_map(|prefix| {
                d.iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a.clone());
                    p
                })
            })
            .collect()
    })
}

/// The quantifier of variable `i` in prefix mask `mask` (bit set: forall).
pub fn prefix_quantifier(mask: usize, i: usize) -> Quantifier {
    if mask >> i & 1 == 1 {
        Quantifier::Forall
    } else {
        Quantifier::Exists
    }
}

/// Wraps `body` in the prefix `mask` over `x0..x{k-1}`, `x0` outermost.
pub fn close(body: Formula, k: usize, mask: usize) -> Formula {
    (0..k).rev().fold(body, |acc, i| {
        Formula::quantified(prefix_quantifier(mask, i), crate::logic::Var::object(var_name(i)), acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_inventory() {
        let sig = Signature::new(["cat", "dog"], 2);
        let a = atoms(&sig, 2);
        // labelOf 2*2, six binary relations 6*4, count 2*3, one equality
        assert_eq!(a.len(), 4 + 24 + 6 + 1);
        assert_eq!(a[0].formula().to_string(), "(labelOf x0 cat)");
        assert_eq!(a.last().unwrap().formula().to_string(), "(= x0 x1)");
        assert!(atoms(&sig, 1).iter().all(|a| a.rel.is_some()));
    }

    #[test]
    fn prefix_masks() {
        let f = close(Formula::binary(rel::WITHIN, "x0", "x1"), 2, 0b10);
        assert_eq!(f.to_string(), "(exists x0 (forall x1 (within x0 x1)))");
    }
}
