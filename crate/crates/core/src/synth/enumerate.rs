//! The raw search space as an explicit, cost-ordered stream of sentences.
//!
//! Unlike the enumerative backend this keeps every syntactically distinct
//! sentence, so it is only practical for small bounds. It is the reference
//! against which the dialect rules are checked.

use std::collections::BTreeSet;

use super::space::{atoms, close};
use super::SynthesisConfig;
use crate::logic::{canonical_text, canonicalize, cost_of, Cost, Formula, Signature};

/// Every dialect-legal prenex sentence with at most `max_vars` quantifiers
/// and `max_atoms` atoms, in nondecreasing cost order with ties broken by
/// canonical text, once per canonical form. Each prefix length is
/// materialized when the stream reaches it.
pub fn enumerate_formulas(sig: &Signature, cfg: &SynthesisConfig) -> impl Iterator<Item = Formula> {
    let sig = sig.clone();
    let (max_vars, max_atoms, forbid) = (cfg.max_vars, cfg.max_atoms, cfg.forbid_negated_label_atoms);
    (1..=max_vars).flat_map(move |k| sentences(&sig, k, max_atoms, forbid))
}

fn sentences(sig: &Signature, k: usize, max_atoms: usize, forbid: bool) -> Vec<Formula> {
    let mut out: Vec<(Cost, String, Formula)> = Vec::new();
    let mut seen = BTreeSet::new();
    for body in bodies(sig, k, max_atoms, forbid) {
        for mask in 0..1usize << k {
            let f = canonicalize(&close(body.clone(), k, mask));
            let text = f.to_string();
            if seen.insert(text.clone()) {
                out.push((cost_of(&f), text, f));
            }
        }
    }
    out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    out.into_iter().map(|(_, _, f)| f).collect()
}

/// Quantifier-free bodies over `x0..x{k-1}`, deduplicated by canonical text.
/// Negation applies to atoms and binary connectives, never to a negation.
pub(crate) fn bodies(sig: &Signature, k: usize, max_atoms: usize, forbid: bool) -> Vec<Formula> {
    let mut seen = BTreeSet::new();
    let mut keep = |f: Formula, into: &mut Vec<Formula>| {
        if seen.insert(canonical_text(&f)) {
            into.push(f);
        }
    };
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new()];
    let mut first = Vec::new();
    for atom in atoms(sig, k) {
        let label = atom.is_label_atom();
        let f = atom.formula();
        keep(f.clone(), &mut first);
        if !(label && forbid) {
            keep(Formula::not(f), &mut first);
        }
    }
    by_size.push(first);
    for a in 2..=max_atoms {
        let mut level = Vec::new();
        for a1 in 1..a {
            for p in &by_size[a1] {
                for q in &by_size[a - a1] {
                    for f in [
                        Formula::and(vec![p.clone(), q.clone()]),
                        Formula::or(vec![p.clone(), q.clone()]),
                        Formula::implies(p.clone(), q.clone()),
                    ] {
                        keep(f.clone(), &mut level);
                        keep(Formula::not(f), &mut level);
                    }
                }
            }
        }
        by_size.push(level);
    }
    by_size.into_iter().flatten().collect()
}
