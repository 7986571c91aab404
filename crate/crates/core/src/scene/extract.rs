//! From detections to a finite first-order model.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::detections::{SceneDetections, SceneError};
use super::geometry::{geometric_relations, BBox};
use crate::logic::{rel, Model, ModelBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    /// Minimum score for a label to count.
    pub score_threshold: f64,
    /// Minimum fraction of a box inside another for `within`.
    pub containment_ratio: f64,
    /// Center offset margin for left/right/above/below, as a fraction of
    /// the image width or height.
    pub center_margin_fraction: f64,
    pub max_objects: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            score_threshold: 0.5,
            containment_ratio: 0.9,
            center_margin_fraction: 0.0,
            max_objects: 20,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(SceneError::Config("score_threshold must lie in [0, 1]".into()));
        }
        if !(self.containment_ratio > 0.0 && self.containment_ratio <= 1.0) {
            return Err(SceneError::Config("containment_ratio must lie in (0, 1]".into()));
        }
        if !(self.center_margin_fraction >= 0.0) {
            return Err(SceneError::Config("center_margin_fraction must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedModel {
    pub model: Model,
    /// Set when objects beyond `max_objects` were dropped.
    pub truncated: bool,
}

/// Labels of `scene` that clear the score threshold.
pub fn surviving_labels(scene: &SceneDetections, cfg: &ExtractionConfig) -> BTreeSet<String> {
    scene
        .detections
        .iter()
        .filter(|d| d.score >= cfg.score_threshold)
        .map(|d| d.label.clone())
        .collect()
}

struct Candidate {
    id: String,
    bbox: BBox,
    labels: BTreeSet<String>,
    score: f64,
}

/// Builds the model of one image over the shared label vocabulary.
///
/// An object is a box with at least one label scoring at or above the
/// threshold; detections sharing a `box_id` form one box (the first one's
/// geometry wins). When more than `max_objects` survive, the highest-scoring
/// ones are kept.
pub fn build_model(
    scene: &SceneDetections,
    vocab: &BTreeSet<String>,
    cfg: &ExtractionConfig,
) -> Result<ExtractedModel, SceneError> {
    cfg.validate()?;
    let mut groups: Vec<Candidate> = Vec::new();
    let mut by_box_id: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, d) in scene.detections.iter().enumerate() {
        let slot = match &d.box_id {
            Some(id) => *by_box_id.entry(id.as_str()).or_insert_with(|| {
                groups.push(Candidate {
                    id: id.clone(),
                    bbox: BBox::from_array(d.bbox),
                    labels: BTreeSet::new(),
                    score: 0.0,
                });
                groups.len() - 1
            }),
            None => {
                groups.push(Candidate {
                    id: format!("d{i}"),
                    bbox: BBox::from_array(d.bbox),
                    labels: BTreeSet::new(),
                    score: 0.0,
                });
                groups.len() - 1
            }
        };
        if d.score >= cfg.score_threshold {
            if !vocab.contains(&d.label) {
                return Err(SceneError::NotInVocabulary(d.label.clone()));
            }
            let g = &mut groups[slot];
            g.labels.insert(d.label.clone());
            g.score = g.score.max(d.score);
        }
    }
    let mut kept: Vec<(usize, Candidate)> = groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.labels.is_empty())
        .collect();
    let truncated = kept.len() > cfg.max_objects;
    if truncated {
        kept.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
        kept.truncate(cfg.max_objects);
        kept.sort_by_key(|(i, _)| *i);
    }

    let mut builder = ModelBuilder::new(scene.image_id.clone(), vocab.iter().cloned());
    let mut seen = BTreeSet::new();
    for (_, g) in &kept {
        let mut id = g.id.clone();
        while !seen.insert(id.clone()) {
            id.push('\'');
        }
        let labels: Vec<&str> = g.labels.iter().map(String::as_str).collect();
        builder.object(id, &labels);
    }
    let boxes: Vec<BBox> = kept.iter().map(|(_, g)| g.bbox).collect();
    let spatial = geometric_relations(&boxes, scene.width, scene.height, cfg);
    for (name, pairs) in [
        (rel::TO_LEFT, &spatial.to_left),
        (rel::TO_RIGHT, &spatial.to_right),
        (rel::ABOVE, &spatial.above),
        (rel::BELOW, &spatial.below),
        (rel::WITHIN, &spatial.within),
    ] {
        for &(a, b) in pairs {
            builder.relate(name, &[a as u32, b as u32]);
        }
    }
    let model = builder
        .build()
        .expect("extracted objects always carry a vocabulary label");
    Ok(ExtractedModel { model, truncated })
}
