//! The detection file: per-image detector output consumed by the solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed detection document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported schema_version `{0}` (expected {SCHEMA_VERSION})")]
    Version(String),
    #[error("image dimensions must be positive, found {width}x{height}")]
    Dimensions { width: u32, height: u32 },
    #[error("detection {index}: score {score} is outside [0, 1]")]
    Score { index: usize, score: f64 },
    #[error("detection {index}: bounding box needs positive width and height")]
    BoundingBox { index: usize },
    #[error("label `{0}` is not in the puzzle vocabulary")]
    NotInVocabulary(String),
    #[error("invalid extraction config: {0}")]
    Config(String),
}

/// One (label, score) prediction for a box, in pixels with a top-left
/// origin and y growing downward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    /// Detections sharing a box id describe one object with several labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_id: Option<String>,
    pub label: String,
    pub score: f64,
    /// `[x, y, w, h]`.
    pub bbox: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDetections {
    pub schema_version: String,
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub detections: Vec<Detection>,
}

impl SceneDetections {
    pub fn new(image_id: impl Into<String>, width: u32, height: u32, detections: Vec<Detection>) -> Self {
        SceneDetections {
            schema_version: SCHEMA_VERSION.to_string(),
            image_id: image_id.into(),
            width,
            height,
            detections,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SceneError::Version(self.schema_version.clone()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(SceneError::Dimensions {
                width: self.width,
                height: self.height,
            });
        }
        for (index, d) in self.detections.iter().enumerate() {
            if !(0.0..=1.0).contains(&d.score) {
                return Err(SceneError::Score { index, score: d.score });
            }
            let [x, y, w, h] = d.bbox;
            if !(w > 0.0 && h > 0.0 && x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
                return Err(SceneError::BoundingBox { index });
            }
        }
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("detections serialize");
        s.push('\n');
        s
    }
}

/// Parses and validates a detection document.
pub fn load_detections(contents: &str) -> Result<SceneDetections, SceneError> {
    let scene: SceneDetections = serde_json::from_str(contents)?;
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_detection_list() {
        let s = load_detections(
            r#"{"schema_version":"1.0","image_id":"a","width":640,"height":480,"detections":[]}"#,
        )
        .unwrap();
        assert!(s.detections.is_empty());
        assert_eq!(s.image_id, "a");
    }

    #[test]
    fn score_out_of_range() {
        let err = load_detections(
            r#"{"schema_version":"1.0","image_id":"a","width":10,"height":10,
                "detections":[{"label":"cat","score":1.3,"bbox":[0,0,1,1]}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::Score { index: 0, .. }));
    }

    #[test]
    fn duplicates_are_kept() {
        let d = r#"{"label":"cat","score":0.9,"bbox":[1,2,3,4]}"#;
        let s = load_detections(&format!(
            r#"{{"schema_version":"1.0","image_id":"a","width":10,"height":10,"detections":[{d},{d}]}}"#
        ))
        .unwrap();
        assert_eq!(s.detections.len(), 2);
        assert_eq!(s.detections[0], s.detections[1]);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        assert!(matches!(
            load_detections(r#"{"schema_version":"1.0","image_id":"a","width":1,"height":1,"detections":[],"extra":1}"#),
            Err(SceneError::Malformed(_))
        ));
        assert!(matches!(
            load_detections(r#"{"schema_version":"1.1","image_id":"a","width":1,"height":1,"detections":[]}"#),
            Err(SceneError::Version(v)) if v == "1.1"
        ));
        assert!(matches!(
            load_detections(r#"{"schema_version":"1.0","image_id":"a","width":0,"height":1,"detections":[]}"#),
            Err(SceneError::Dimensions { .. })
        ));
        assert!(matches!(
            load_detections(
                r#"{"schema_version":"1.0","image_id":"a","width":5,"height":5,
                    "detections":[{"label":"cat","score":0.5,"bbox":[0,0,0,3]}]}"#
            ),
            Err(SceneError::BoundingBox { index: 0 })
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let s = SceneDetections::new(
            "img",
            100,
            50,
            vec![Detection {
                box_id: Some("b1".into()),
                label: "tie".into(),
                score: 0.75,
                bbox: [1.0, 2.0, 3.0, 4.0],
            }],
        );
        assert_eq!(load_detections(&s.to_json_string()).unwrap(), s);
    }
}
