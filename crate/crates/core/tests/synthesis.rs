use std::fs;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdp_core::harness::{load_puzzle_file, read_manifest, HarnessError, PuzzleManifest};
use vdp_core::logic::{check_vacuous, cost_of, holds, rel, Cost, Formula, Model, ModelBuilder};
use vdp_core::scene::ExtractionConfig;
use vdp_core::synth::{enumerate_formulas, is_discriminator, synthesize, Puzzle, SynthesisConfig, SynthesisError};

const LABELS: [&str; 2] = ["cat", "dog"];
const GEOMETRIC: [&str; 5] = [rel::WITHIN, rel::TO_LEFT, rel::TO_RIGHT, rel::ABOVE, rel::BELOW];

fn random_model(rng: &mut ChaCha8Rng, id: String) -> Model {
    let n = rng.gen_range(1..=3);
    let mut b = ModelBuilder::new(id, LABELS);
    for i in 0..n {
        b.object(format!("o{i}"), &[LABELS[rng.gen_range(0..2)]]);
    }
    for r in GEOMETRIC {
        for a in 0..n {
            for c in 0..n {
                if a != c && rng.gen_bool(0.25) {
                    b.relate(r, &[a, c]);
                }
            }
        }
    }
    b.build().unwrap()
}

fn random_puzzle(seed: u64) -> Option<Puzzle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = (0..2).map(|i| random_model(&mut rng, format!("t{i}"))).collect();
    let candidates = (0..3).map(|i| random_model(&mut rng, format!("c{i}"))).collect();
    Puzzle::new(train, candidates).ok()
}

fn small_cfg() -> SynthesisConfig {
    SynthesisConfig {
        max_vars: 2,
        max_atoms: 2,
        top_k: 3,
        threads: 1,
        ..Default::default()
    }
}

/// Cheapest non-vacuous discriminator in the raw cost-ordered stream.
fn stream_minimum(p: &Puzzle, cfg: &SynthesisConfig) -> Option<Cost> {
    enumerate_formulas(p.signature(), cfg).find_map(|f| {
        let c = is_discriminator(p, &f)?;
        let mut positives = p.train().iter().chain([&p.candidates()[c]]);
        (!positives.any(|m| check_vacuous(m, &f).unwrap())).then(|| cost_of(&f))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_cost_matches_stream_minimum(seed in any::<u64>()) {
        let Some(p) = random_puzzle(seed) else { return Ok(()) };
        let cfg = small_cfg();
        let want = stream_minimum(&p, &cfg);
        match synthesize(&p, &cfg) {
            Ok(s) => prop_assert_eq!(Some(s.best().cost), want),
            Err(SynthesisError::SpaceExhausted) => prop_assert_eq!(want, None),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn every_result_discriminates(seed in any::<u64>()) {
        let Some(p) = random_puzzle(seed) else { return Ok(()) };
        let Ok(s) = synthesize(&p, &small_cfg()) else { return Ok(()) };
        let mut prev = None;
        for r in &s.results {
            prop_assert!(r.formula.is_sentence());
            prop_assert!(p.train().iter().all(|m| holds(m, &r.formula).unwrap()));
            let accepted: Vec<usize> =
                (0..p.candidates().len()).filter(|&i| holds(&p.candidates()[i], &r.formula).unwrap()).collect();
            prop_assert_eq!(accepted, vec![r.chosen_candidate]);
            prop_assert_eq!(r.cost, cost_of(&r.formula));
            prop_assert!(r.vacuity_flags.iter().all(|v| !v));
            prop_assert!(prev.map_or(true, |c| c <= r.cost));
            prev = Some(r.cost);
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    for seed in 0..20 {
        let Some(p) = random_puzzle(seed) else { continue };
        let run = |threads| {
            synthesize(&p, &SynthesisConfig { threads, ..small_cfg() })
                .ok()
                .map(|s| s.results.iter().map(|r| (r.formula.to_string(), r.chosen_candidate)).collect::<Vec<_>>())
        };
        assert_eq!(run(1), run(4), "seed {seed}");
    }
}

#[test]
fn negated_label_atoms_stay_out_of_results() {
    for seed in 0..20 {
        let Some(p) = random_puzzle(seed) else { continue };
        let cfg = SynthesisConfig { top_k: 50, ..small_cfg() };
        let Ok(s) = synthesize(&p, &cfg) else { continue };
        for r in &s.results {
            let mut negated = false;
            r.formula.visit(&mut |g| {
                if let Formula::Not(inner) = g {
                    negated |= inner.is_label_atom();
                }
            });
            assert!(!negated, "{}", r.formula);
        }
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let p = random_puzzle(1).unwrap();
    for cfg in [
        SynthesisConfig { max_vars: 0, ..small_cfg() },
        SynthesisConfig { max_vars: 7, ..small_cfg() },
        SynthesisConfig { max_atoms: 0, ..small_cfg() },
        SynthesisConfig { top_k: 0, ..small_cfg() },
        SynthesisConfig { time_budget_seconds: 0.0, ..small_cfg() },
    ] {
        assert!(matches!(synthesize(&p, &cfg), Err(SynthesisError::InvalidConfig(_))));
    }
}

fn manifest(train: usize, candidates: usize, expected: Option<usize>) -> PuzzleManifest {
    PuzzleManifest {
        schema_version: "1.0".into(),
        name: "m".into(),
        train: (0..train).map(|i| format!("t{i}.json")).collect(),
        candidates: (0..candidates).map(|i| format!("c{i}.json")).collect(),
        expected_candidate: expected,
        target_concept: None,
    }
}

#[test]
fn manifest_bounds_are_enforced() {
    assert!(manifest(1, 2, Some(2)).validate().is_ok());
    assert!(manifest(8, 8, None).validate().is_ok());
    for bad in [
        manifest(0, 2, None),
        manifest(9, 2, None),
        manifest(1, 1, None),
        manifest(1, 9, None),
        manifest(1, 3, Some(0)),
        manifest(1, 3, Some(4)),
        PuzzleManifest { schema_version: "2.0".into(), ..manifest(1, 2, None) },
    ] {
        assert!(matches!(bad.validate(), Err(HarnessError::Manifest(_))), "{bad:?}");
    }
}

#[test]
fn unknown_manifest_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let mut doc: serde_json::Value = serde_json::from_str(&manifest(1, 2, None).to_json_string()).unwrap();
    doc["extra"] = serde_json::json!(1);
    fs::write(&path, doc.to_string()).unwrap();
    assert!(read_manifest(&path).is_err());
}

#[test]
fn fixture_concepts_select_the_expected_candidate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/table1");
    let (mut seen, mut wrong) = (0, Vec::new());
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let loaded = load_puzzle_file(&path, &ExtractionConfig::default()).unwrap();
        let concept = loaded.target_concept().unwrap().expect("fixture has a concept");
        let expected = loaded.manifest.expected_candidate.unwrap() - 1;
        if is_discriminator(&loaded.puzzle, &concept) != Some(expected) {
            wrong.push(loaded.manifest.name);
        }
        seen += 1;
    }
    assert_eq!(seen, 19);
    assert!(wrong.is_empty(), "{wrong:?}");
}
