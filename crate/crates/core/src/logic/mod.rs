//! First-order syntax, finite models and evaluation.

pub mod canon;
pub mod cost;
pub mod eval;
pub mod model;
pub mod syntax;
pub mod text;

pub use canon::{canonical_text, canonicalize, flatten};
pub use cost::{cost_of, Cost};
pub use eval::{check_vacuous, evaluate, holds, Assignment, EvalError};
pub use model::{Element, Model, ModelBuilder, ModelError};
pub use syntax::{check_well_sorted, rel, Formula, Quantifier, Signature, Sort, SortError, Term, Var};
pub use text::{parse_formula, print_formula, ParseError};
