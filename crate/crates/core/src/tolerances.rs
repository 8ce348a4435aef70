//! Numerical tolerances shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max entry of `U^H U - I` accepted for a unitary.
    pub unitary: f64,
    /// Max entry of `M - M^H` accepted for a Hermitian matrix.
    pub hermitian: f64,
    /// Polynomial residual, relative to the largest coefficient.
    pub root_residual: f64,
    /// Entrywise Gram / inner-product agreement.
    pub gram: f64,
    /// Smallest admissible Gram eigenvalue for an ensemble.
    pub independence: f64,
    /// Unit-norm tolerance for stored states.
    pub norm: f64,
    /// Input states within this distance of unit norm are renormalized.
    pub renormalize: f64,
    /// `c` or `d` below this selects a closed-form branch for the last amplitude pair.
    pub degenerate_branch: f64,
    /// Conclusive probabilities at or below this are treated as zero.
    pub zero_probability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: 1e-10,
            hermitian: 1e-10,
            root_residual: 1e-7,
            gram: 1e-8,
            independence: 1e-8,
            norm: 1e-8,
            renormalize: 1e-6,
            degenerate_branch: 1e-9,
            zero_probability: 1e-10,
        }
    }
}
