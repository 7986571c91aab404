//! Synthetic puzzles with a planted concept, found by rejection sampling
//! random scenes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::{load_puzzle_file, PuzzleManifest, MAX_CANDIDATES, MAX_TRAIN};
use super::HarnessError;
use crate::logic::{holds, parse_formula, Formula, Signature, Sort};
use crate::scene::{build_model, Detection, ExtractionConfig, SceneDetections, SCHEMA_VERSION};
use crate::synth::is_discriminator;

/// Sampling attempts per scene before a concept counts as hard to plant.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub name: String,
    /// Sentence over the label pool, in the formula text syntax.
    pub concept: String,
    pub num_train: usize,
    pub num_candidates: usize,
    /// Inclusive `[min, max]` object count per scene.
    pub objects_per_scene: [usize; 2],
    pub label_pool: Vec<String>,
    pub seed: u64,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
}

fn default_width() -> u32 {
    640
}

fn default_height() -> u32 {
    480
}

impl PlantedSpec {
    /// The concept over the pool's signature, checked to be a sentence that
    /// quantifies over objects only.
    pub fn concept_formula(&self) -> Result<Formula, HarnessError> {
        self.validate()?;
        let sig = Signature::new(self.label_pool.iter().cloned(), self.objects_per_scene[1] as u32);
        let f = parse_formula(&self.concept, &sig).map_err(HarnessError::Concept)?;
        let mut object_only = true;
        f.visit(&mut |g| {
            if let Formula::Exists(v, _) | Formula::Forall(v, _) = g {
                object_only &= v.sort == Sort::Object;
            }
        });
        if !f.is_sentence() || !object_only {
            return Err(HarnessError::Spec(
                "concept must be a sentence quantifying over objects only".into(),
            ));
        }
        Ok(f)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.into()));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be a nonempty file name");
        }
        if !(1..=MAX_TRAIN).contains(&self.num_train) {
            return bad("num_train must lie in 1..=8");
        }
        if !(2..=MAX_CANDIDATES).contains(&self.num_candidates) {
            return bad("num_candidates must lie in 2..=8");
        }
        let [lo, hi] = self.objects_per_scene;
        if lo > hi || hi > 20 {
            return bad("objects_per_scene must be [min, max] with min <= max <= 20");
        }
        if self.label_pool.is_empty() {
            return bad("label_pool must not be empty");
        }
        if self.width < 64 || self.height < 64 {
            return bad("width and height must be at least 64");
        }
        Ok(())
    }
}

/// Where a generated puzzle was written.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedPuzzle {
    pub manifest_path: PathBuf,
    pub manifest: PuzzleManifest,
}

/// Writes `<out_dir>/<name>.json` and its detection files under
/// `<out_dir>/<name>/`. Output depends only on the spec.
pub fn generate_synthetic_puzzle(spec: &PlantedSpec, out_dir: &Path) -> Result<GeneratedPuzzle, HarnessError> {
    let concept = spec.concept_formula()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pool: BTreeSet<String> = spec.label_pool.iter().cloned().collect();
    let cfg = ExtractionConfig::default();
    let truth = |s: &SceneDetections| -> bool {
        let m = build_model(s, &pool, &cfg).expect("sampled labels come from the pool").model;
        holds(&m, &concept).unwrap_or(false)
    };
    let expected = rng.gen_range(0..spec.num_candidates);
    let wanted: Vec<bool> = std::iter::repeat(true)
        .take(spec.num_train)
        .chain((0..spec.num_candidates).map(|c| c == expected))
        .collect();
    let mut scenes = Vec::new();
    for (i, &want) in wanted.iter().enumerate() {
        let id = if i < spec.num_train {
            format!("train-{}", i + 1)
        } else {
            format!("candidate-{}", i - spec.num_train + 1)
        };
        let scene = (0..MAX_ATTEMPTS)
            .map(|_| random_scene(&mut rng, spec, &id))
            .find(|s| truth(s) == want)
            .ok_or_else(|| HarnessError::HardToPlant(spec.concept.clone()))?;
        scenes.push(scene);
    }

    let dir = out_dir.join(&spec.name);
    fs::create_dir_all(&dir).map_err(|source| HarnessError::Io { path: dir.clone(), source })?;
    let mut files = Vec::new();
    for s in &scenes {
        let rel = format!("{}/{}.json", spec.name, s.image_id);
        write(&out_dir.join(&rel), &s.to_json_string())?;
        files.push(rel);
    }
    let manifest = PuzzleManifest {
        schema_version: SCHEMA_VERSION.into(),
        name: spec.name.clone(),
        candidates: files.split_off(spec.num_train),
        train: files,
        expected_candidate: Some(expected + 1),
        target_concept: Some(concept.to_string()),
    };
    let manifest_path = out_dir.join(format!("{}.json", spec.name));
    write(&manifest_path, &manifest.to_json_string())?;

    // The written files are the product, so verify through them.
    let loaded = load_puzzle_file(&manifest_path, &cfg)?;
    let verified = loaded
        .target_concept()
        .ok()
        .flatten()
        .and_then(|f| is_discriminator(&loaded.puzzle, &f));
    if verified != Some(expected) {
        return Err(HarnessError::HardToPlant(format!(
            "{} (a concept label never survives in the sampled scenes)",
            spec.concept
        )));
    }
    Ok(GeneratedPuzzle { manifest_path, manifest })
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Integer boxes; about a third of the objects are placed inside an earlier
/// box so that `within` occurs.
fn random_scene(rng: &mut ChaCha8Rng, spec: &PlantedSpec, id: &str) -> SceneDetections {
    let [lo, hi] = spec.objects_per_scene;
    let n = rng.gen_range(lo..=hi);
    let (iw, ih) = (spec.width as f64, spec.height as f64);
    let mut boxes: Vec<[f64; 4]> = Vec::new();
    let mut detections = Vec::new();
    for _ in 0..n {
        let bbox = match boxes.last().copied() {
            Some([px, py, pw, ph]) if pw >= 16.0 && ph >= 16.0 && rng.gen_bool(0.35) => {
                let w = rng.gen_range(4.0..=pw / 2.0).floor();
                let h = rng.gen_range(4.0..=ph / 2.0).floor();
                let x = px + rng.gen_range(0.0..=pw - w).floor();
                let y = py + rng.gen_range(0.0..=ph - h).floor();
                [x, y, w, h]
            }
            _ => {
                let w = rng.gen_range(16.0..=iw / 3.0).floor();
                let h = rng.gen_range(16.0..=ih / 3.0).floor();
                let x = rng.gen_range(0.0..=iw - w).floor();
                let y = rng.gen_range(0.0..=ih - h).floor();
                [x, y, w, h]
            }
        };
        boxes.push(bbox);
        let label = spec.label_pool[rng.gen_range(0..spec.label_pool.len())].clone();
        detections.push(Detection {
            box_id: None,
            label,
            score: 0.9,
            bbox,
        });
    }
    SceneDetections::new(id, spec.width, spec.height, detections)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(concept: &str, seed: u64) -> PlantedSpec {
        PlantedSpec {
            name: "planted".into(),
            concept: concept.into(),
            num_train: 3,
            num_candidates: 4,
            objects_per_scene: [1, 4],
            label_pool: vec!["umbrella".into(), "person".into(), "dog".into()],
            seed,
            width: 640,
            height: 480,
        }
    }

    #[test]
    fn planted_concept_discriminates() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_synthetic_puzzle(&spec("(exists x (labelOf x umbrella))", 7), dir.path()).unwrap();
        let loaded = load_puzzle_file(&g.manifest_path, &ExtractionConfig::default()).unwrap();
        let f = loaded.target_concept().unwrap().unwrap();
        assert_eq!(
            is_discriminator(&loaded.puzzle, &f).map(|c| c + 1),
            g.manifest.expected_candidate
        );
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let s = spec("(exists x (exists y (within x y)))", 3);
        generate_synthetic_puzzle(&s, a.path()).unwrap();
        generate_synthetic_puzzle(&s, b.path()).unwrap();
        for f in ["planted.json", "planted/train-1.json", "planted/candidate-4.json"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn impossible_concept_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec("(exists x (labelOf x dog))", 1);
        s.label_pool = vec!["umbrella".into()];
        s.concept = "(exists x (and (labelOf x umbrella) (not (same x x))))".into();
        assert!(matches!(
            generate_synthetic_puzzle(&s, dir.path()),
            Err(HarnessError::HardToPlant(_))
        ));
    }

    #[test]
    fn rejects_free_variables() {
        assert!(spec("(labelOf x umbrella)", 0).concept_formula().is_err());
    }
}
