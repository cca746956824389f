//! Staging and classification of Alzheimer's disease from cerebrospinal-fluid
//! biomarkers alone.
//!
//! The crate covers the whole pipeline: ingestion and merging of the biomarker
//! and assessment tables ([`cohort`]), group statistics ([`stats`]), the
//! classical base classifiers ([`learners`]), CART and the tree ensembles
//! ([`ensembles`]), cross-validated evaluation ([`eval`]), a synthetic cohort
//! generator ([`synth`]) and the command-line front end ([`cli`]).

pub mod cli;
pub mod cohort;
pub mod ensembles;
mod error;
pub mod eval;
pub mod learners;
mod matrix;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Shortest round-trip decimal form of `v`, switching to exponent notation
/// for very large or small magnitudes; infinities are `inf`/`-inf` and NaN is `NA`.
pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        serde_json::to_string(&v).expect("finite f64 serializes")
    }
}
