//! Search bounds, dialect flags and backend selection.

use serde::{Deserialize, Serialize};

use super::SynthesisError;

/// Largest supported quantifier prefix.
pub const MAX_VARS_LIMIT: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Bottom-up enumeration with observational-equivalence pruning.
    #[default]
    Enumerative,
    /// SMT-LIB queries answered by an external solver process.
    Constraint,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enumerative" => Ok(Backend::Enumerative),
            "constraint" => Ok(Backend::Constraint),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub max_vars: usize,
    pub max_atoms: usize,
    pub top_k: usize,
    pub time_budget_seconds: f64,
    /// No `not` directly above a `labelOf` atom.
    pub forbid_negated_label_atoms: bool,
    /// Only object variables may be quantified. The search only ever
    /// quantifies objects; the flag governs validation of given formulas.
    pub object_only_quantification: bool,
    /// Drop formulas that hold vacuously on a training model or on the
    /// chosen candidate.
    pub exclude_vacuous: bool,
    pub backend: Backend,
    pub seed: u64,
    /// Worker threads; 0 picks the number of available cores.
    pub threads: usize,
    /// Command line of the external solver for the constraint backend. It
    /// reads an SMT-LIB script on standard input.
    pub solver_command: Vec<String>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            max_vars: 3,
            max_atoms: 5,
            top_k: 5,
            time_budget_seconds: 300.0,
            forbid_negated_label_atoms: true,
            object_only_quantification: true,
            exclude_vacuous: true,
            backend: Backend::Enumerative,
            seed: 0,
            threads: 0,
            solver_command: vec!["z3".into(), "-in".into(), "-smt2".into()],
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        let bad = |m: &str| Err(SynthesisError::InvalidConfig(m.to_string()));
        if self.max_vars == 0 || self.max_vars > MAX_VARS_LIMIT {
            return bad("max_vars must lie in 1..=6");
        }
        if self.max_atoms == 0 {
            return bad("max_atoms must be at least 1");
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1");
        }
        if !(self.time_budget_seconds > 0.0) {
            return bad("time_budget_seconds must be positive");
        }
        if !self.object_only_quantification {
            return bad("only object quantification is supported");
        }
        if self.backend == Backend::Constraint && self.solver_command.is_empty() {
            return bad("solver_command is empty");
        }
        Ok(())
    }
}
