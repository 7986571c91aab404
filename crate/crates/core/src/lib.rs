//! Synthesis of first-order discriminators for visual discrimination puzzles.
//!
//! Object detections become finite first-order models ([`scene`]); the
//! [`synth`] module searches cost-ordered first-order sentences that hold on
//! every training model and on exactly one candidate; [`harness`] loads
//! puzzle manifests, runs datasets and plants synthetic puzzles.

pub mod harness;
pub mod logic;
pub mod scene;
pub mod sexpr;
pub mod synth;
