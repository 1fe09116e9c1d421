//! Instance-level counterfactual explanations for univariate time series
//! classifiers: discriminative shapelet intervals are replaced with segments
//! cropped from GAN-generated instances of the opposing class, and the
//! resulting explanations are scored with four explainability metrics.

pub mod autodiff;
pub mod cfgen;
pub mod classifiers;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod shapelets;
pub mod timegan;
pub mod series;

pub use error::{Error, Result};
