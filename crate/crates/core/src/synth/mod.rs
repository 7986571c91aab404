//! Cost-ordered search for discriminating sentences.

pub mod config;
mod engine;
pub mod enumerate;
pub mod puzzle;
pub mod smtlib;
pub mod space;
pub mod template;

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

pub use config::{Backend, SynthesisConfig};
pub use enumerate::enumerate_formulas;
pub use puzzle::{is_discriminator, Puzzle, PuzzleError};
pub use smtlib::{decode_assignment, encode_smtlib, run_solver, solve_template, SolverOutcome};
pub use template::{template_discriminators, templates, Connective, Filling, Skeleton, Template};

use crate::logic::{Cost, Formula};

#[derive(Debug, Error, PartialEq)]
pub enum SynthesisError {
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),
    #[error("time budget exhausted before any discriminator was found")]
    BudgetExhausted,
    #[error("no discriminator exists within the search bounds")]
    SpaceExhausted,
    #[error("template exceeds the configured bounds: {0}")]
    TemplateOutOfBounds(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no assignment: the solver reported unsat")]
    NoAssignment,
    #[error("cannot decode solver output: {0}")]
    Decode(String),
}

/// One discriminator found by the search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscriminatorResult {
    /// Canonical form.
    #[serde(serialize_with = "as_text")]
    pub formula: Formula,
    /// 0-based index into the puzzle's candidates.
    pub chosen_candidate: usize,
    pub cost: Cost,
    /// Vacuity of the formula on each training model, then on the chosen
    /// candidate.
    pub vacuity_flags: Vec<bool>,
    /// Time from the start of the search until this result was known.
    pub wall_time: Duration,
}

fn as_text<S: serde::Serializer>(f: &Formula, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&f.to_string())
}

/// Ranked discriminators with diagnostic flags.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Synthesis {
    /// Sorted by cost, then canonical text; at most `top_k` entries.
    pub results: Vec<DiscriminatorResult>,
    /// Discriminators of the minimal cost select different candidates.
    pub ambiguous: bool,
    /// The time budget ran out; `results` may be incomplete.
    pub budget_exhausted: bool,
}

impl Synthesis {
    pub fn best(&self) -> &DiscriminatorResult {
        &self.results[0]
    }
}

/// Searches the bounded space in cost order and returns up to `top_k`
/// discriminators. Output is identical for any thread count.
pub fn synthesize(puzzle: &Puzzle, cfg: &SynthesisConfig) -> Result<Synthesis, SynthesisError> {
    cfg.validate()?;
    let start = Instant::now();
    let search = match cfg.backend {
        Backend::Enumerative => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| SynthesisError::InvalidConfig(e.to_string()))?;
            engine::search(puzzle, cfg, &pool, start)
        }
        Backend::Constraint => smtlib::search(puzzle, cfg, start)?,
    };
    if search.results.is_empty() {
        return Err(if search.budget_exhausted {
            SynthesisError::BudgetExhausted
        } else {
            SynthesisError::SpaceExhausted
        });
    }
    Ok(Synthesis {
        results: search.results,
        ambiguous: search.ambiguous,
        budget_exhausted: search.budget_exhausted,
    })
}
