//! Batch runs over a directory of puzzle manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::manifest::load_puzzle_file;
use super::HarnessError;
use crate::scene::ExtractionConfig;
use crate::synth::{synthesize, SynthesisConfig, SynthesisError};

/// One solved (or failed) puzzle. Candidates are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuzzleRow {
    pub name: String,
    pub chosen: Option<usize>,
    pub expected: Option<usize>,
    pub matched: bool,
    /// Ranked discriminators in canonical text.
    pub formulas: Vec<String>,
    /// Cost of each formula.
    pub cost: Vec<[u32; 5]>,
    /// Diagnostics: `ambiguous`, `budget_exhausted`, `space_exhausted`,
    /// `truncated`, or `error: ..`.
    pub flags: Vec<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptRow {
    pub name: String,
    pub total: usize,
    /// Puzzles whose top-1 discriminator selects `expected_candidate`.
    pub matched: usize,
    /// Most frequent top-1 formula, ties broken by text.
    pub discriminator: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Sorted by manifest file name.
    pub puzzles: Vec<PuzzleRow>,
    /// Sorted by concept name.
    pub concepts: Vec<ConceptRow>,
}

/// Concept group of a puzzle: its name without a trailing `-<digits>`.
pub fn concept_of(name: &str) -> &str {
    match name.rsplit_once('-') {
        Some((head, tail)) if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => head,
        _ => name,
    }
}

/// Manifests of a dataset directory: its top-level `*.json` files, sorted
/// by file name. Detection files live in subdirectories.
pub fn manifest_paths(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Solves every manifest in `dir`. A puzzle that fails to load or solve is
/// recorded with an error flag and the run continues.
pub fn run_dataset(
    dir: &Path,
    cfg: &SynthesisConfig,
    extraction: &ExtractionConfig,
) -> Result<RunReport, HarnessError> {
    let mut puzzles = Vec::new();
    for path in manifest_paths(dir)? {
        puzzles.push(solve_row(&path, cfg, extraction));
    }
    Ok(RunReport::from_rows(puzzles))
}

fn solve_row(path: &Path, cfg: &SynthesisConfig, extraction: &ExtractionConfig) -> PuzzleRow {
    let start = Instant::now();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut row = PuzzleRow {
        name: stem,
        chosen: None,
        expected: None,
        matched: false,
        formulas: Vec::new(),
        cost: Vec::new(),
        flags: Vec::new(),
        seconds: 0.0,
    };
    let loaded = match load_puzzle_file(path, extraction) {
        Ok(l) => l,
        Err(e) => {
            row.flags.push(format!("error: {e}"));
            row.seconds = start.elapsed().as_secs_f64();
            return row;
        }
    };
    row.name = loaded.manifest.name.clone();
    row.expected = loaded.manifest.expected_candidate;
    if loaded.truncated {
        row.flags.push("truncated".into());
    }
    match synthesize(&loaded.puzzle, cfg) {
        Ok(s) => {
            row.chosen = Some(s.best().chosen_candidate + 1);
            row.formulas = s.results.iter().map(|r| r.formula.to_string()).collect();
            row.cost = s.results.iter().map(|r| r.cost.as_array()).collect();
            if s.ambiguous {
                row.flags.push("ambiguous".into());
            }
            if s.budget_exhausted {
                row.flags.push("budget_exhausted".into());
            }
        }
        Err(SynthesisError::SpaceExhausted) => row.flags.push("space_exhausted".into()),
        Err(SynthesisError::BudgetExhausted) => row.flags.push("budget_exhausted".into()),
        Err(e) => row.flags.push(format!("error: {e}")),
    }
    row.matched = row.expected.is_some() && row.chosen == row.expected;
    row.seconds = start.elapsed().as_secs_f64();
    row
}

impl RunReport {
    /// Sorts rows by name and aggregates them per concept.
    pub fn from_rows(mut puzzles: Vec<PuzzleRow>) -> Self {
        puzzles.sort_by(|a, b| a.name.cmp(&b.name));
        let mut groups: BTreeMap<&str, Vec<&PuzzleRow>> = BTreeMap::new();
        for p in &puzzles {
            groups.entry(concept_of(&p.name)).or_default().push(p);
        }
        let concepts = groups
            .into_iter()
            .map(|(name, rows)| {
                let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
                for r in &rows {
                    if let Some(f) = r.formulas.first() {
                        *freq.entry(f).or_default() += 1;
                    }
                }
                // BTreeMap order makes the first maximum the smallest text.
                let discriminator = freq
                    .iter()
                    .fold(None::<(&str, usize)>, |best, (&f, &n)| match best {
                        Some((_, m)) if m >= n => best,
                        _ => Some((f, n)),
                    })
                    .map(|(f, _)| f.to_string());
                ConceptRow {
                    name: name.to_string(),
                    total: rows.len(),
                    matched: rows.iter().filter(|r| r.matched).count(),
                    discriminator,
                }
            })
            .collect();
        RunReport { puzzles, concepts }
    }

    pub fn matched(&self) -> usize {
        self.concepts.iter().map(|c| c.matched).sum()
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned per-concept table. Wall times are left out so the text is
    /// reproducible.
    pub fn to_table(&self) -> String {
        let header = ["concept", "#puzzles", "most common discriminator", "#matches"];
        let rows: Vec<[String; 4]> = self
            .concepts
            .iter()
            .map(|c| {
                [
                    c.name.clone(),
                    c.total.to_string(),
                    c.discriminator.clone().unwrap_or_else(|| "-".into()),
                    c.matched.to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        writeln!(
            out,
            "# matches count puzzles whose top-1 discriminator selects expected_candidate"
        )
        .unwrap();
        let line = |cells: [&str; 4], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
        };
        line(header, &mut out);
        for r in &rows {
            line([&r[0], &r[1], &r[2], &r[3]], &mut out);
        }
        let total: usize = self.concepts.iter().map(|c| c.total).sum();
        writeln!(out, "total: {}/{} matched", self.matched(), total).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concept_names() {
        assert_eq!(concept_of("umbrella-01"), "umbrella");
        assert_eq!(concept_of("two-cats"), "two-cats");
        assert_eq!(concept_of("x-"), "x-");
        assert_eq!(concept_of("-7"), "-7");
    }

    fn row(name: &str, formula: &str, matched: bool) -> PuzzleRow {
        PuzzleRow {
            name: name.into(),
            chosen: Some(1),
            expected: Some(if matched { 1 } else { 2 }),
            matched,
            formulas: vec![formula.into()],
            cost: vec![[1, 1, 0, 0, 0]],
            flags: vec![],
            seconds: 0.0,
        }
    }

    #[test]
    fn aggregation_is_consistent_and_sorted() {
        let r = RunReport::from_rows(vec![row("b-2", "f", true), row("a-1", "g", false), row("b-1", "e", true), row("b-3", "f", false)]);
        let names: Vec<&str> = r.puzzles.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["a-1", "b-1", "b-2", "b-3"]);
        assert_eq!(r.concepts.len(), 2);
        assert_eq!((r.concepts[1].total, r.concepts[1].matched), (3, 2));
        assert_eq!(r.concepts[1].discriminator.as_deref(), Some("f"));
        assert_eq!(r.matched(), r.puzzles.iter().filter(|p| p.matched).count());
    }

    #[test]
    fn empty_directory_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_dataset(dir.path(), &SynthesisConfig::default(), &ExtractionConfig::default()).unwrap();
        assert_eq!(r, RunReport::default());
        assert!(r.to_table().contains("total: 0/0"));
    }
}
