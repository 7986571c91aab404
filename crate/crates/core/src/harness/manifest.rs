//! Puzzle manifests: which detection files form the training and candidate
//! rows of a puzzle.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::logic::{parse_formula, Formula};
use crate::scene::{build_model, load_detections, surviving_labels, ExtractionConfig, SceneDetections, SCHEMA_VERSION};
use crate::synth::Puzzle;

pub const MAX_TRAIN: usize = 8;
pub const MAX_CANDIDATES: usize = 8;

/// Paths are relative to the manifest's directory. `expected_candidate` is
/// 1-based, as candidates are numbered in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuzzleManifest {
    pub schema_version: String,
    pub name: String,
    pub train: Vec<String>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_candidate: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_concept: Option<String>,
}

impl PuzzleManifest {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Manifest(format!("{}: {m}", self.name)));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version `{}` (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.name.is_empty() {
            return bad("name must not be empty".into());
        }
        if !(1..=MAX_TRAIN).contains(&self.train.len()) {
            return bad(format!("needs 1 to {MAX_TRAIN} training files, found {}", self.train.len()));
        }
        if !(2..=MAX_CANDIDATES).contains(&self.candidates.len()) {
            return bad(format!(
                "needs 2 to {MAX_CANDIDATES} candidate files, found {}",
                self.candidates.len()
            ));
        }
        if let Some(e) = self.expected_candidate {
            if !(1..=self.candidates.len()).contains(&e) {
                return bad(format!(
                    "expected_candidate {e} outside 1..={}",
                    self.candidates.len()
                ));
            }
        }
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Reads and validates a manifest. Returns it with the directory its paths
/// are relative to.
pub fn read_manifest(path: &Path) -> Result<(PuzzleManifest, PathBuf), HarnessError> {
    let text = read(path)?;
    let manifest: PuzzleManifest =
        serde_json::from_str(&text).map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
    manifest.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, base))
}

pub(crate) fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads one detection file.
pub fn read_detections(path: &Path) -> Result<SceneDetections, HarnessError> {
    load_detections(&read(path)?).map_err(|source| HarnessError::Scene {
        path: path.to_path_buf(),
        source,
    })
}

/// A puzzle built from a manifest.
#[derive(Clone, Debug)]
pub struct LoadedPuzzle {
    pub manifest: PuzzleManifest,
    pub puzzle: Puzzle,
    /// Some scene had more objects than the extraction limit.
    pub truncated: bool,
}

impl LoadedPuzzle {
    /// The manifest's target concept over the puzzle's signature.
    pub fn target_concept(&self) -> Result<Option<Formula>, HarnessError> {
        self.manifest
            .target_concept
            .as_deref()
            .map(|t| parse_formula(t, self.puzzle.signature()).map_err(HarnessError::Concept))
            .transpose()
    }
}

/// Builds the puzzle of a manifest. The label vocabulary is the union of
/// the labels surviving the score threshold in any of its files.
pub fn load_puzzle(
    manifest: &PuzzleManifest,
    base: &Path,
    cfg: &ExtractionConfig,
) -> Result<LoadedPuzzle, HarnessError> {
    manifest.validate()?;
    let load = |files: &[String]| -> Result<Vec<(PathBuf, SceneDetections)>, HarnessError> {
        files
            .iter()
            .map(|f| {
                let p = base.join(f);
                read_detections(&p).map(|s| (p, s))
            })
            .collect()
    };
    let train = load(&manifest.train)?;
    let candidates = load(&manifest.candidates)?;
    let vocab: BTreeSet<String> = train
        .iter()
        .chain(&candidates)
        .flat_map(|(_, s)| surviving_labels(s, cfg))
        .collect();
    let mut truncated = false;
    let mut build = |scenes: Vec<(PathBuf, SceneDetections)>| {
        scenes
            .into_iter()
            .map(|(path, s)| {
                let m = build_model(&s, &vocab, cfg).map_err(|source| HarnessError::Scene { path, source })?;
                truncated |= m.truncated;
                Ok(m.model)
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    };
    let train = build(train)?;
    let candidates = build(candidates)?;
    let puzzle = Puzzle::new(train, candidates)?;
    Ok(LoadedPuzzle {
        manifest: manifest.clone(),
        puzzle,
        truncated,
    })
}

/// [`read_manifest`] followed by [`load_puzzle`].
pub fn load_puzzle_file(path: &Path, cfg: &ExtractionConfig) -> Result<LoadedPuzzle, HarnessError> {
    let (manifest, base) = read_manifest(path)?;
    load_puzzle(&manifest, &base, cfg)
}
