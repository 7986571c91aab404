//! Lexicographic formula cost used to order the search.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::syntax::Formula;

/// Compared field by field, in declaration order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 5]", into = "[u32; 5]")]
pub struct Cost {
    /// Number of quantifiers.
    pub variables: u32,
    /// Relational atoms plus equalities.
    pub atoms: u32,
    /// `#Not + #Implies + sum over Or nodes of (children - 1)`.
    pub connective_weight: u32,
    pub universals: u32,
    /// Number of Or and Implies nodes.
    pub disjunctions_implications: u32,
}

impl Cost {
    pub const fn new(v: u32, a: u32, w: u32, u: u32, d: u32) -> Self {
        Cost {
            variables: v,
            atoms: a,
            connective_weight: w,
            universals: u,
            disjunctions_implications: d,
        }
    }

    pub fn as_array(self) -> [u32; 5] {
        self.into()
    }
}

impl From<[u32; 5]> for Cost {
    fn from([v, a, w, u, d]: [u32; 5]) -> Self {
        Cost::new(v, a, w, u, d)
    }
}

impl From<Cost> for [u32; 5] {
    fn from(c: Cost) -> Self {
        [
            c.variables,
            c.atoms,
            c.connective_weight,
            c.universals,
            c.disjunctions_implications,
        ]
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [v, a, w, u, d] = self.as_array();
        write!(f, "({v},{a},{w},{u},{d})")
    }
}

/// Cost of the formula with nested And/Or of the same kind treated as one
/// n-ary node.
pub fn cost_of(formula: &Formula) -> Cost {
    let mut c = Cost::default();
    tally(formula, false, &mut c);
    c
}

fn tally(f: &Formula, under_or: bool, c: &mut Cost) {
    match f {
        Formula::Atom { .. } | Formula::Eq(..) => c.atoms += 1,
        Formula::Not(g) => {
            c.connective_weight += 1;
            tally(g, false, c);
        }
        Formula::And(gs) => gs.iter().for_each(|g| tally(g, false, c)),
        Formula::Or(gs) => {
            // A nested Or merges into its parent, which counts the node.
            if !under_or {
                c.disjunctions_implications += 1;
            }
            c.connective_weight += (gs.len() as u32).saturating_sub(1);
            gs.iter().for_each(|g| tally(g, true, c));
        }
        Formula::Implies(a, b) => {
            c.connective_weight += 1;
            c.disjunctions_implications += 1;
            tally(a, false, c);
            tally(b, false, c);
        }
        Formula::Exists(_, g) => {
            c.variables += 1;
            tally(g, false, c);
        }
        Formula::Forall(_, g) => {
            c.variables += 1;
            c.universals += 1;
            tally(g, false, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::syntax::rel;

    #[test]
    fn umbrella_cost() {
        let f = Formula::exists("x", Formula::label_of("x", "umbrella"));
        assert_eq!(cost_of(&f), Cost::new(1, 1, 0, 0, 0));
    }

    #[test]
    fn level_oranges_cost() {
        let f = Formula::forall(
            "x",
            Formula::forall("y", Formula::not(Formula::binary(rel::BELOW, "x", "y"))),
        );
        assert_eq!(cost_of(&f), Cost::new(2, 1, 1, 2, 0));
    }

    #[test]
    fn alpha_variants_cost_the_same() {
        let f = Formula::exists("x", Formula::forall("y", Formula::binary(rel::WITHIN, "x", "y")));
        let g = Formula::exists("a", Formula::forall("b", Formula::binary(rel::WITHIN, "a", "b")));
        assert_eq!(cost_of(&f), cost_of(&g));
    }

    #[test]
    fn or_is_stable_under_reassociation() {
        let a = || Formula::label_of("x", "a");
        let flat = Formula::or(vec![a(), a(), a()]);
        let nested = Formula::or(vec![Formula::or(vec![a(), a()]), a()]);
        assert_eq!(cost_of(&flat), Cost::new(0, 3, 2, 0, 1));
        assert_eq!(cost_of(&flat), cost_of(&nested));
    }

    #[test]
    fn order_is_lexicographic() {
        assert!(Cost::new(1, 5, 9, 1, 3) < Cost::new(2, 1, 0, 0, 0));
        assert!(Cost::new(2, 3, 0, 0, 0) < Cost::new(2, 3, 0, 1, 0));
    }

    #[test]
    fn serializes_as_array() {
        let c = Cost::new(2, 3, 0, 0, 0);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[2,3,0,0,0]");
        assert_eq!(serde_json::from_str::<Cost>("[2,3,0,0,0]").unwrap(), c);
    }
}
