use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vdp_core::logic::{holds, parse_formula, Model, Signature};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn vdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_two_cats_picks_second_candidate() {
    let manifest = fixtures().join("table1/two-cats-on-couch-01.json");
    let o = vdp(&["solve", "--puzzle", path(&manifest), "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("puzzle: two-cats-on-couch-01\nchosen candidate: #2\n"), "{out}");
    assert!(out.contains("\n1. #2 cost ("), "{out}");
}

#[test]
fn identical_candidates_exit_one() {
    let manifest = fixtures().join("misc/identical-candidates.json");
    let o = vdp(&["solve", "--puzzle", path(&manifest)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
}

#[test]
fn malformed_manifest_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.json");
    fs::write(&manifest, r#"{"schema_version": "1.0", "name": "bad", "train": [], "candidates": ["x.json"]}"#).unwrap();
    let o = vdp(&["solve", "--puzzle", path(&manifest)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn missing_manifest_exits_two() {
    let o = vdp(&["solve", "--puzzle", "/nonexistent/puzzle.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_search_bounds_exit_two() {
    let manifest = fixtures().join("table1/two-cats-on-couch-01.json");
    let o = vdp(&["solve", "--puzzle", path(&manifest), "--max-vars", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_formula_on_cat_scene() {
    let scene = fixtures().join("table1/two-cats-on-couch-01/train-1.json");
    let run = |f: &str| {
        let o = vdp(&["eval-formula", "--formula", f, "--detections", path(&scene)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    assert_eq!(run("(exists x (labelOf x cat))"), "true\n");
    assert_eq!(run("(exists x (labelOf x giraffe))"), "false\n");
    assert_eq!(run("(count cat 2)"), "true\n");
}

#[test]
fn eval_formula_rejects_free_variables() {
    let scene = fixtures().join("table1/two-cats-on-couch-01/train-1.json");
    let o = vdp(&["eval-formula", "--formula", "(labelOf x cat)", "--detections", path(&scene)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn extracted_model_round_trips() {
    let scene = fixtures().join("table1/two-cats-on-couch-01/train-1.json");
    let o = vdp(&["extract-model", "--detections", path(&scene)]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let model = Model::from_json(&doc, None).unwrap();
    assert_eq!(model.object_count(), 3);
    let sig = Signature::new(model.labels().to_vec(), model.number_bound());
    for text in [
        "(exists x (forall y (exists z (and (within z x) (not (= z y))))))",
        "(forall x (labelOf x cat))",
        "(exists x (exists y (and (labelOf x cat) (toLeft x y))))",
    ] {
        let f = parse_formula(text, &sig).unwrap();
        let o = vdp(&["eval-formula", "--formula", text, "--detections", path(&scene)]);
        assert_eq!(stdout(&o).trim(), holds(&model, &f).unwrap().to_string(), "{text}");
    }
}

#[test]
fn generate_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"name": "planted-cat", "concept": "(exists x (labelOf x cat))", "num_train": 3,
            "num_candidates": 3, "objects_per_scene": [1, 3], "label_pool": ["cat", "dog"], "seed": 7}"#,
    )
    .unwrap();
    let o = vdp(&["generate", "--spec", path(&spec)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let expected = out.lines().find_map(|l| l.strip_prefix("expected candidate: ")).unwrap().to_string();
    let manifest = dir.path().join("planted-cat.json");
    assert!(manifest.exists());
    let o = vdp(&["solve", "--puzzle", path(&manifest), "--max-vars", "2", "--max-atoms", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(&format!("chosen candidate: {expected}\n")), "{}", stdout(&o));
}

#[test]
fn generate_unplantable_concept_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(
        &spec,
        r#"{"name": "never", "concept": "(exists x (and (labelOf x cat) (not (labelOf x cat))))", "num_train": 2,
            "num_candidates": 2, "objects_per_scene": [1, 2], "label_pool": ["cat"], "seed": 1}"#,
    )
    .unwrap();
    let o = vdp(&["generate", "--spec", path(&spec), "--out-dir", path(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn batch_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = vdp(&["batch", "--dir", path(&fixtures().join("misc")), "--out", path(&report), "--max-vars", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let rows = doc["puzzles"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(stdout(&o).contains("vacuous-guard"));
}
