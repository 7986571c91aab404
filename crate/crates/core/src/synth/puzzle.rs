//! Puzzles and the discriminator check.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::logic::{holds, Element, Formula, Model, Signature};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("a puzzle needs at least one training model")]
    NoTrainingModels,
    #[error("a puzzle needs at least two candidates, found {0}")]
    TooFewCandidates(usize),
    #[error("model `{image}` has label universe {found:?}, expected {expected:?}")]
    LabelMismatch {
        image: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
}

/// Training models plus an ordered list of candidate models over one shared
/// signature.
#[derive(Clone, Debug, PartialEq)]
pub struct Puzzle {
    signature: Signature,
    train: Vec<Model>,
    candidates: Vec<Model>,
}

impl Puzzle {
    /// Builds the puzzle over the built-in signature. The numeric literal
    /// bound is the largest object universe among the models.
    pub fn new(train: Vec<Model>, candidates: Vec<Model>) -> Result<Self, PuzzleError> {
        let labels: BTreeSet<String> = train
            .first()
            .or(candidates.first())
            .map(|m| m.labels().iter().cloned().collect())
            .unwrap_or_default();
        let bound = train
            .iter()
            .chain(&candidates)
            .map(Model::object_count)
            .max()
            .unwrap_or(0) as u32;
        Self::with_signature(Signature::new(labels, bound), train, candidates)
    }

    /// Builds the puzzle over an explicit signature, for example one with
    /// relations beyond the built-ins.
    pub fn with_signature(
        signature: Signature,
        train: Vec<Model>,
        candidates: Vec<Model>,
    ) -> Result<Self, PuzzleError> {
        if train.is_empty() {
            return Err(PuzzleError::NoTrainingModels);
        }
        if candidates.len() < 2 {
            return Err(PuzzleError::TooFewCandidates(candidates.len()));
        }
        let expected: Vec<String> = signature.labels().iter().cloned().collect();
        let bound = signature.numeric_literal_bound();
        let lift = |m: Model| -> Result<Model, PuzzleError> {
            let found: BTreeSet<String> = m.labels().iter().cloned().collect();
            if found.iter().ne(expected.iter()) {
                return Err(PuzzleError::LabelMismatch {
                    image: m.image_id().to_string(),
                    expected: expected.clone(),
                    found: found.into_iter().collect(),
                });
            }
            Ok(m.with_number_bound(bound))
        };
        let train = train.into_iter().map(lift).collect::<Result<_, _>>()?;
        let candidates = candidates.into_iter().map(lift).collect::<Result<_, _>>()?;
        Ok(Puzzle {
            signature,
            train,
            candidates,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn train(&self) -> &[Model] {
        &self.train
    }

    pub fn candidates(&self) -> &[Model] {
        &self.candidates
    }

    /// Training models followed by candidates.
    pub fn models(&self) -> impl Iterator<Item = &Model> {
        self.train.iter().chain(&self.candidates)
    }

    /// Whether every candidate is isomorphic to some other candidate, in
    /// which case no sentence can single one out. Objects are permuted only
    /// for models of at most seven objects; larger ones must match exactly.
    pub fn candidates_indistinguishable(&self) -> bool {
        (0..self.candidates.len()).all(|i| {
            (0..self.candidates.len())
                .any(|j| i != j && isomorphic(&self.candidates[i], &self.candidates[j]))
        })
    }
}

/// The 0-based index of the single candidate on which `formula` holds, if it
/// also holds on every training model and on no other candidate.
pub fn is_discriminator(puzzle: &Puzzle, formula: &Formula) -> Option<usize> {
    let truth = |m: &Model| holds(m, formula).unwrap_or(false);
    if !puzzle.train.iter().all(truth) {
        return None;
    }
    let mut chosen = None;
    for (i, c) in puzzle.candidates.iter().enumerate() {
        if truth(c) {
            if chosen.is_some() {
                return None;
            }
            chosen = Some(i);
        }
    }
    chosen
}

fn isomorphic(a: &Model, b: &Model) -> bool {
    let n = a.object_count();
    if n != b.object_count() {
        return false;
    }
    let rels: BTreeSet<&str> = a.relation_names().chain(b.relation_names()).collect();
    let label_map: Vec<Option<u32>> = a.labels().iter().map(|l| b.label_index(l)).collect();
    let maps = |perm: &[u32]| {
        rels.iter().all(|r| {
            let ta = a.tuples(r).map_or(0, |t| t.len());
            let tb = b.tuples(r).map_or(0, |t| t.len());
            ta == tb
                && a.tuples(r).into_iter().flatten().all(|t| {
                    let image: Option<Vec<Element>> = t
                        .iter()
                        .map(|&e| match e {
                            Element::Object(o) => Some(Element::Object(perm[o as usize])),
                            Element::Label(l) => label_map[l as usize].map(Element::Label),
                            e => Some(e),
                        })
                        .collect();
                    image.is_some_and(|t| b.holds(r, &t))
                })
        })
    };
    let identity: Vec<u32> = (0..n as u32).collect();
    if n > 7 {
        return maps(&identity);
    }
    // Heap's algorithm over object permutations.
    let mut perm = identity;
    let mut c = vec![0usize; n];
    if maps(&perm) {
        return true;
    }
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if maps(&perm) {
                return true;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, ModelBuilder};

    fn scene(id: &str, objs: &[&str]) -> Model {
        let mut b = ModelBuilder::new(id, ["cat", "dog"]);
        for (i, l) in objs.iter().enumerate() {
            b.object(format!("o{i}"), &[l]);
        }
        b.build().unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(
            Puzzle::new(vec![], vec![scene("a", &[]), scene("b", &[])]),
            Err(PuzzleError::NoTrainingModels)
        );
        assert_eq!(
            Puzzle::new(vec![scene("a", &[])], vec![scene("b", &[])]),
            Err(PuzzleError::TooFewCandidates(1))
        );
        let odd = ModelBuilder::new("x", ["cat"]).build().unwrap();
        assert!(matches!(
            Puzzle::new(vec![odd], vec![scene("b", &[]), scene("c", &[])]),
            Err(PuzzleError::LabelMismatch { .. })
        ));
    }

    #[test]
    fn discriminator_picks_unique_candidate() {
        let p = Puzzle::new(
            vec![scene("t", &["cat"])],
            vec![scene("c1", &["dog"]), scene("c2", &["cat", "dog"])],
        )
        .unwrap();
        let f = parse_formula("(exists x (labelOf x cat))", p.signature()).unwrap();
        assert_eq!(is_discriminator(&p, &f), Some(1));
        let g = parse_formula("(exists x (labelOf x dog))", p.signature()).unwrap();
        assert_eq!(is_discriminator(&p, &g), None);
    }

    #[test]
    fn isomorphic_candidates() {
        let p = Puzzle::new(
            vec![scene("t", &["cat"])],
            vec![scene("c1", &["cat", "dog"]), scene("c2", &["dog", "cat"])],
        )
        .unwrap();
        assert!(p.candidates_indistinguishable());
        let q = Puzzle::new(
            vec![scene("t", &["cat"])],
            vec![scene("c1", &["cat", "dog"]), scene("c2", &["dog", "dog"])],
        )
        .unwrap();
        assert!(!q.candidates_indistinguishable());
    }
}
