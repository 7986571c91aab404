//! Detection files and their translation into first-order models.

pub mod detections;
pub mod extract;
pub mod geometry;

pub use detections::{load_detections, Detection, SceneDetections, SceneError, SCHEMA_VERSION};
pub use extract::{build_model, surviving_labels, ExtractedModel, ExtractionConfig};
pub use geometry::{geometric_relations, BBox, SpatialRelations};
