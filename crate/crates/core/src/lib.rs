//! Cross-layer heterogeneous transfer learning.
//!
//! Two stacked autoencoders of independently chosen depth are trained on
//! paired (co-occurrence) samples from a source and a target domain. A set
//! of matched layer pairs is coupled through canonical correlation analysis
//! while training, the matching with the lowest joint objective is kept, and
//! a linear SVM trained on projected labeled source data classifies projected
//! target data in the shared canonical subspace.
//!
//! Module map:
//!
//! - [`data`]: dataset loading, standardization and trial splits.
//! - [`sae`]: stacked autoencoder forward pass, loss and coupled gradient steps.
//! - [`cca`]: covariance assembly, regularized CCA and projections.
//! - [`matcher`]: layer-matching enumeration, joint training and selection.
//! - [`classify`]: linear soft-margin SVM and accuracy aggregation.
//! - [`harness`]: experiment configuration, trial repetition and reports.

pub mod cca;
pub mod classify;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matcher;
pub mod sae;

pub use error::{Error, Result};

/// Dense row-major-by-convention matrix: rows are samples, columns features.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;

/// Deterministic child seed from a base seed and a path of integers
/// (splitmix64 finalizer folded over the parts).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
