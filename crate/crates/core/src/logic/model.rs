//! Finite multi-sorted structures, one per image.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::syntax::{rel, Signature, Sort};

/// A universe element. Objects and labels are indices into the model's
/// universes; numbers are naturals up to the model's number bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Object(u32),
    Label(u32),
    Number(u32),
}

impl Element {
    pub fn sort(self) -> Sort {
        match self {
            Element::Object(_) => Sort::Object,
            Element::Label(_) => Sort::Label,
            Element::Number(_) => Sort::Number,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("relation `{rel}`: element {element:?} is outside its universe")]
    OutOfUniverse { rel: String, element: Element },
    #[error("relation `{rel}`: tuple has sort {found:?}, expected {expected:?}")]
    TupleSort {
        rel: String,
        expected: Vec<Sort>,
        found: Vec<Sort>,
    },
    #[error("object `{0}` carries no label")]
    UnlabeledObject(String),
    #[error("`same` disagrees with shared labels on ({0}, {1})")]
    SameMismatch(String, String),
    #[error("count for label `{label}` is wrong or not unique")]
    CountMismatch { label: String },
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("malformed model document: {0}")]
    Malformed(String),
}

/// A finite first-order model.
///
/// Invariants (checked by every constructor): each object has at least one
/// label, `same` relates exactly the pairs of objects sharing a label, and
/// `count` holds for exactly one number per label, the number of objects
/// carrying it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    image_id: String,
    objects: Vec<String>,
    labels: Vec<String>,
    number_bound: u32,
    relations: BTreeMap<String, BTreeSet<Vec<Element>>>,
}

impl Model {
    /// Validates and assembles a model from explicit relation tuples.
    pub fn from_parts(
        image_id: impl Into<String>,
        objects: Vec<String>,
        labels: Vec<String>,
        number_bound: u32,
        relations: BTreeMap<String, BTreeSet<Vec<Element>>>,
    ) -> Result<Self, ModelError> {
        let model = Model {
            image_id: image_id.into(),
            objects,
            labels,
            number_bound,
            relations,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        unique("object", &self.objects)?;
        unique("label", &self.labels)?;
        if (self.number_bound as usize) < self.objects.len() {
            return Err(ModelError::Malformed(format!(
                "number bound {} is below the object count {}",
                self.number_bound,
                self.objects.len()
            )));
        }
        let builtin = Signature::new(Vec::<String>::new(), 0);
        for (name, tuples) in &self.relations {
            let sorts = builtin.relation(name).map(|d| d.args.clone());
            for t in tuples {
                for &e in t {
                    if !self.in_universe(e) {
                        return Err(ModelError::OutOfUniverse {
                            rel: name.clone(),
                            element: e,
                        });
                    }
                }
                if let Some(expected) = &sorts {
                    let found: Vec<Sort> = t.iter().map(|e| e.sort()).collect();
                    if &found != expected {
                        return Err(ModelError::TupleSort {
                            rel: name.clone(),
                            expected: expected.clone(),
                            found,
                        });
                    }
                }
            }
        }

        let labels_of = self.label_sets();
        for (o, ls) in labels_of.iter().enumerate() {
            if ls.is_empty() {
                return Err(ModelError::UnlabeledObject(self.objects[o].clone()));
            }
        }
        let same = self.tuples(rel::SAME);
        for a in 0..self.objects.len() {
            for b in 0..self.objects.len() {
                let shares = !labels_of[a].is_disjoint(&labels_of[b]);
                let holds = same.map_or(false, |s| {
                    s.contains(&vec![Element::Object(a as u32), Element::Object(b as u32)])
                });
                if shares != holds {
                    return Err(ModelError::SameMismatch(
                        self.objects[a].clone(),
                        self.objects[b].clone(),
                    ));
                }
            }
        }
        let counts = self.tuples(rel::COUNT);
        for (l, name) in self.labels.iter().enumerate() {
            let expected = labels_of.iter().filter(|ls| ls.contains(&(l as u32))).count() as u32;
            let found: Vec<u32> = counts
                .into_iter()
                .flatten()
                .filter(|t| t[0] == Element::Label(l as u32))
                .filter_map(|t| match t[1] {
                    Element::Number(n) => Some(n),
                    _ => None,
                })
                .collect();
            if found != [expected] {
                return Err(ModelError::CountMismatch { label: name.clone() });
            }
        }
        Ok(())
    }

    fn label_sets(&self) -> Vec<BTreeSet<u32>> {
        let mut out = vec![BTreeSet::new(); self.objects.len()];
        for t in self.tuples(rel::LABEL_OF).into_iter().flatten() {
            if let [Element::Object(o), Element::Label(l)] = t[..] {
                out[o as usize].insert(l);
            }
        }
        out
    }

    fn in_universe(&self, e: Element) -> bool {
        match e {
            Element::Object(o) => (o as usize) < self.objects.len(),
            Element::Label(l) => (l as usize) < self.labels.len(),
            Element::Number(n) => n <= self.number_bound,
        }
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    pub fn object_index(&self, id: &str) -> Option<u32> {
        self.objects.iter().position(|o| o == id).map(|i| i as u32)
    }

    /// Largest natural in the number universe.
    pub fn number_bound(&self) -> u32 {
        self.number_bound
    }

    /// Raises the number universe, e.g. to a puzzle-wide bound.
    pub fn with_number_bound(mut self, bound: u32) -> Self {
        self.number_bound = self.number_bound.max(bound);
        self
    }

    /// Size of the universe of `sort`.
    pub fn universe_size(&self, sort: Sort) -> usize {
        match sort {
            Sort::Object => self.objects.len(),
            Sort::Label => self.labels.len(),
            Sort::Number => self.number_bound as usize + 1,
        }
    }

    /// The `i`th element of the universe of `sort`.
    pub fn element(&self, sort: Sort, i: usize) -> Element {
        match sort {
            Sort::Object => Element::Object(i as u32),
            Sort::Label => Element::Label(i as u32),
            Sort::Number => Element::Number(i as u32),
        }
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub fn tuples(&self, rel: &str) -> Option<&BTreeSet<Vec<Element>>> {
        self.relations.get(rel)
    }

    pub fn holds(&self, rel: &str, args: &[Element]) -> bool {
        self.relations
            .get(rel)
            .map_or(false, |ts| ts.contains(args))
    }

    /// Labels carried by object `o`.
    pub fn labels_of(&self, o: u32) -> Vec<&str> {
        (0..self.labels.len() as u32)
            .filter(|&l| self.holds(rel::LABEL_OF, &[Element::Object(o), Element::Label(l)]))
            .map(|l| self.labels[l as usize].as_str())
            .collect()
    }

    /// The element's display name.
    pub fn element_name(&self, e: Element) -> String {
        match e {
            Element::Object(o) => self.objects[o as usize].clone(),
            Element::Label(l) => self.labels[l as usize].clone(),
            Element::Number(n) => n.to_string(),
        }
    }

    /// JSON document with relations as lists of tuples, elements by name.
    pub fn to_json(&self) -> Value {
        let relations: serde_json::Map<String, Value> = self
            .relations
            .iter()
            .map(|(name, tuples)| {
                let rows = tuples
                    .iter()
                    .map(|t| {
                        Value::Array(
                            t.iter()
                                .map(|&e| match e {
                                    Element::Number(n) => Value::from(n),
                                    _ => Value::from(self.element_name(e)),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                (name.clone(), Value::Array(rows))
            })
            .collect();
        serde_json::to_value(ModelDoc {
            image_id: self.image_id.clone(),
            objects: self.objects.clone(),
            labels: self.labels.clone(),
            number_bound: self.number_bound,
            relations,
        })
        .expect("model document serializes")
    }

    /// Inverse of [`Model::to_json`]. Strings resolve to objects first, then
    /// labels, unless `sig` declares the position's sort.
    pub fn from_json(doc: &Value, sig: Option<&Signature>) -> Result<Self, ModelError> {
        let doc: ModelDoc =
            serde_json::from_value(doc.clone()).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let builtin = Signature::new(Vec::<String>::new(), 0);
        let mut relations = BTreeMap::new();
        for (name, rows) in &doc.relations {
            let sorts = sig
                .and_then(|s| s.relation(name))
                .or_else(|| builtin.relation(name))
                .map(|d| d.args.clone());
            let rows = rows
                .as_array()
                .ok_or_else(|| ModelError::Malformed(format!("relation `{name}` is not a list")))?;
            let mut tuples = BTreeSet::new();
            for row in rows {
                let row = row
                    .as_array()
                    .ok_or_else(|| ModelError::Malformed(format!("tuple of `{name}` is not a list")))?;
                let mut tuple = Vec::with_capacity(row.len());
                for (i, v) in row.iter().enumerate() {
                    let hint = sorts.as_ref().and_then(|s| s.get(i)).copied();
                    tuple.push(decode_element(&doc, v, hint)?);
                }
                tuples.insert(tuple);
            }
            relations.insert(name.clone(), tuples);
        }
        Model::from_parts(doc.image_id, doc.objects, doc.labels, doc.number_bound, relations)
    }
}

fn unique(kind: &'static str, names: &[String]) -> Result<(), ModelError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(ModelError::DuplicateName {
                kind,
                name: n.clone(),
            });
        }
    }
    Ok(())
}

fn decode_element(doc: &ModelDoc, v: &Value, hint: Option<Sort>) -> Result<Element, ModelError> {
    let lookup = |kind: &'static str, names: &[String], s: &str| {
        names
            .iter()
            .position(|n| n == s)
            .map(|i| i as u32)
            .ok_or_else(|| ModelError::UnknownName {
                kind,
                name: s.to_string(),
            })
    };
    match (v, hint) {
        (Value::Number(n), None | Some(Sort::Number)) => n
            .as_u64()
            .map(|n| Element::Number(n as u32))
            .ok_or_else(|| ModelError::Malformed(format!("bad number {n}"))),
        (Value::String(s), Some(Sort::Object)) => Ok(Element::Object(lookup("object", &doc.objects, s)?)),
        (Value::String(s), Some(Sort::Label)) => Ok(Element::Label(lookup("label", &doc.labels, s)?)),
        (Value::String(s), None) => lookup("object", &doc.objects, s)
            .map(Element::Object)
            .or_else(|_| lookup("label", &doc.labels, s).map(Element::Label)),
        _ => Err(ModelError::Malformed(format!("unexpected tuple element {v}"))),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    image_id: String,
    objects: Vec<String>,
    labels: Vec<String>,
    number_bound: u32,
    relations: serde_json::Map<String, Value>,
}

/// Builds a model from labelled objects and object relations; `labelOf`,
/// `same` and `count` are derived.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    image_id: String,
    labels: Vec<String>,
    objects: Vec<(String, Vec<u32>)>,
    relations: BTreeMap<String, BTreeSet<Vec<Element>>>,
}

impl ModelBuilder {
    /// `labels` is the label universe; it is sorted and deduplicated.
    pub fn new<I, S>(image_id: impl Into<String>, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        ModelBuilder {
            image_id: image_id.into(),
            labels: labels.into_iter().collect(),
            objects: Vec::new(),
            relations: BTreeMap::new(),
        }
    }

    /// Adds an object. Panics if a label is outside the label universe.
    pub fn object(&mut self, id: impl Into<String>, labels: &[&str]) -> u32 {
        let ls = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .unwrap_or_else(|| panic!("label `{l}` not in vocabulary")) as u32
            })
            .collect();
        self.objects.push((id.into(), ls));
        (self.objects.len() - 1) as u32
    }

    /// Adds a tuple to an object relation.
    pub fn relate(&mut self, rel: &str, objects: &[u32]) -> &mut Self {
        self.relations
            .entry(rel.to_string())
            .or_default()
            .insert(objects.iter().map(|&o| Element::Object(o)).collect());
        self
    }

    pub fn build(&self) -> Result<Model, ModelError> {
        let mut relations = self.relations.clone();
        let n = self.objects.len();
        let label_of = relations.entry(rel::LABEL_OF.to_string()).or_default();
        for (o, (_, ls)) in self.objects.iter().enumerate() {
            for &l in ls {
                label_of.insert(vec![Element::Object(o as u32), Element::Label(l)]);
            }
        }
        let same = relations.entry(rel::SAME.to_string()).or_default();
        for a in 0..n {
            for b in 0..n {
                if self.objects[a].1.iter().any(|l| self.objects[b].1.contains(l)) {
                    same.insert(vec![Element::Object(a as u32), Element::Object(b as u32)]);
                }
            }
        }
        let count = relations.entry(rel::COUNT.to_string()).or_default();
        for l in 0..self.labels.len() as u32 {
            let k = self.objects.iter().filter(|(_, ls)| ls.contains(&l)).count() as u32;
            count.insert(vec![Element::Label(l), Element::Number(k)]);
        }
        Model::from_parts(
            self.image_id.clone(),
            self.objects.iter().map(|(id, _)| id.clone()).collect(),
            self.labels.clone(),
            n as u32,
            relations,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cats() -> Model {
        let mut b = ModelBuilder::new("a", ["cat", "couch", "dog"]);
        let c1 = b.object("c1", &["cat"]);
        let c2 = b.object("c2", &["cat"]);
        let k = b.object("k", &["couch"]);
        b.relate(rel::WITHIN, &[c1, k]).relate(rel::WITHIN, &[c2, k]);
        b.build().unwrap()
    }

    #[test]
    fn builder_derives_same_and_count() {
        let m = two_cats();
        assert!(m.holds(rel::SAME, &[Element::Object(0), Element::Object(1)]));
        assert!(m.holds(rel::SAME, &[Element::Object(2), Element::Object(2)]));
        assert!(!m.holds(rel::SAME, &[Element::Object(0), Element::Object(2)]));
        let cat = m.label_index("cat").unwrap();
        let dog = m.label_index("dog").unwrap();
        assert!(m.holds(rel::COUNT, &[Element::Label(cat), Element::Number(2)]));
        assert!(m.holds(rel::COUNT, &[Element::Label(dog), Element::Number(0)]));
        assert_eq!(m.labels_of(2), vec!["couch"]);
    }

    #[test]
    fn rejects_unlabelled_object() {
        let mut rels = BTreeMap::new();
        rels.insert(rel::COUNT.to_string(), BTreeSet::new());
        let err = Model::from_parts("x", vec!["o".into()], vec![], 1, rels).unwrap_err();
        assert_eq!(err, ModelError::UnlabeledObject("o".into()));
    }

    #[test]
    fn rejects_wrong_count() {
        let m = two_cats();
        let mut rels = m.relations.clone();
        let count = rels.get_mut(rel::COUNT).unwrap();
        count.remove(&vec![Element::Label(0), Element::Number(2)]);
        count.insert(vec![Element::Label(0), Element::Number(3)]);
        let err = Model::from_parts("a", m.objects.clone(), m.labels.clone(), 3, rels).unwrap_err();
        assert_eq!(err, ModelError::CountMismatch { label: "cat".into() });
    }

    #[test]
    fn rejects_asymmetric_same() {
        let m = two_cats();
        let mut rels = m.relations.clone();
        rels.get_mut(rel::SAME)
            .unwrap()
            .remove(&vec![Element::Object(1), Element::Object(0)]);
        assert!(matches!(
            Model::from_parts("a", m.objects.clone(), m.labels.clone(), 3, rels),
            Err(ModelError::SameMismatch(..))
        ));
    }

    #[test]
    fn rejects_out_of_universe() {
        let m = two_cats();
        let mut rels = m.relations.clone();
        rels.get_mut(rel::WITHIN)
            .unwrap()
            .insert(vec![Element::Object(0), Element::Object(7)]);
        assert!(matches!(
            Model::from_parts("a", m.objects.clone(), m.labels.clone(), 3, rels),
            Err(ModelError::OutOfUniverse { .. })
        ));
    }

    #[test]
    fn empty_model_is_legal() {
        let m = ModelBuilder::new("empty", ["dog"]).build().unwrap();
        assert_eq!(m.object_count(), 0);
        assert!(m.holds(rel::COUNT, &[Element::Label(0), Element::Number(0)]));
    }

    #[test]
    fn json_round_trip() {
        let m = two_cats().with_number_bound(5);
        let back = Model::from_json(&m.to_json(), None).unwrap();
        assert_eq!(back, m);
    }
}
