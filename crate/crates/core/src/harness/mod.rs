//! Puzzle manifests, batch runs and synthetic puzzle generation.

pub mod dataset;
pub mod manifest;
pub mod planted;

use std::path::PathBuf;

use thiserror::Error;

pub use dataset::{concept_of, manifest_paths, run_dataset, ConceptRow, PuzzleRow, RunReport};
pub use manifest::{load_puzzle, load_puzzle_file, read_detections, read_manifest, LoadedPuzzle, PuzzleManifest};
pub use planted::{generate_synthetic_puzzle, GeneratedPuzzle, PlantedSpec, MAX_ATTEMPTS};

use crate::logic::ParseError;
use crate::scene::SceneError;
use crate::synth::PuzzleError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Scene { path: PathBuf, source: SceneError },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid planted spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error("invalid concept: {0}")]
    Concept(ParseError),
    #[error("concept is hard to plant: {0}")]
    HardToPlant(String),
}
