//! Combinatorial fusion of classifier score tables.
//!
//! The pipeline: parse score files ([`ingest`]), min-max normalize on the
//! training ranges, derive ranks and rank-score characteristic profiles
//! ([`ranking`]), measure cognitive diversity and diversity strength
//! ([`diversity`]), combine systems by score or rank under equal,
//! performance or diversity weights ([`fusion`]), and evaluate the fused
//! classifier ([`evaluate`]). [`synth`] generates seeded fixtures and
//! [`oracle`] recomputes any cell by brute force for cross-checking.

pub mod diversity;
pub mod error;
pub mod evaluate;
pub mod fusion;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod ranking;
pub mod synth;

pub use error::{CfaError, Result};
pub use model::{select_systems, validate_table, FusionSpec, Method, ScoreTable, SplitTag};
