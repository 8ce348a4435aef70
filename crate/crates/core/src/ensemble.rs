//! Problem instances: N pure states in a d-dimensional space with priors.
//!
//! States are renormalized when they are already close to unit norm, and
//! gauge-fixed so that the first nonzero component of each is real positive.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gram_matrix, hermitian_min_eigenvalue, norm, ComplexMatrix};
use crate::tolerances::Tolerances;

/// Components below this modulus are skipped when fixing the global phase.
const GAUGE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    states: Vec<Vec<Complex64>>,
    priors: Vec<f64>,
}

impl Ensemble {
    /// Validates and normalizes an ensemble with the default tolerances.
    pub fn new(dim: usize, states: Vec<Vec<Complex64>>, priors: Vec<f64>) -> Result<Self> {
        Self::with_tolerances(dim, states, priors, &Tolerances::default())
    }

    pub fn with_tolerances(
        dim: usize,
        states: Vec<Vec<Complex64>>,
        priors: Vec<f64>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let n = states.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 states, got {n}")));
        }
        if dim < n {
            return Err(Error::InvalidInput(format!(
                "dimension {dim} is smaller than the number of states {n}"
            )));
        }
        if priors.len() != n {
            return Err(Error::InvalidPriors(format!("{} priors for {n} states", priors.len())));
        }
        if let Some(bad) = priors.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPriors(format!(
                "prior {bad} is not a non-negative number"
            )));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > tol.norm {
            return Err(Error::InvalidPriors(format!("priors sum to {total}, expected 1")));
        }

        let mut fixed = Vec::with_capacity(n);
        for (index, state) in states.into_iter().enumerate() {
            if state.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "state {index} has {} components, expected {dim}",
                    state.len()
                )));
            }
            if state.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("state {index} has a non-finite component")));
            }
            let nrm = norm(&state);
            if (nrm - 1.0).abs() > tol.renormalize {
                return Err(Error::InvalidState { index, norm: nrm });
            }
            let phase = state
                .iter()
                .find(|z| z.norm() > GAUGE_THRESHOLD)
                .map(|z| (z / z.norm()).conj())
                .unwrap_or(Complex64::new(1.0, 0.0));
            fixed.push(state.iter().map(|z| z * phase / nrm).collect::<Vec<_>>());
        }

        let ensemble = Self {
            dim,
            states: fixed,
            priors,
        };
        let min_eigenvalue = hermitian_min_eigenvalue(&ensemble.gram())?;
        if min_eigenvalue <= tol.independence {
            return Err(Error::LinearlyDependent { min_eigenvalue });
        }
        Ok(ensemble)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<Complex64>] {
        &self.states
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// The d x N matrix whose columns are the states.
    pub fn states_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.states).expect("states share the ensemble dimension")
    }

    /// `G[i][j] = <Q_i|Q_j>`.
    pub fn gram(&self) -> ComplexMatrix {
        gram_matrix(&self.states_matrix()).expect("validated states are finite")
    }

    pub fn to_document(&self) -> EnsembleDocument {
        EnsembleDocument {
            dimension: self.dim,
            states: self
                .states
                .iter()
                .map(|s| s.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            priors: self.priors.clone(),
            product_states: None,
        }
    }
}

/// On-disk form of an ensemble. Complex numbers are `[re, im]` pairs.
/// `product_states` rows are expanded as Kronecker products of single-qubit
/// labels and appended after `states`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDocument {
    pub dimension: usize,
    #[serde(default)]
    pub states: Vec<Vec<[f64; 2]>>,
    pub priors: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_states: Option<Vec<Vec<String>>>,
}

impl EnsembleDocument {
    pub fn into_ensemble(self, tol: &Tolerances) -> Result<Ensemble> {
        let mut states: Vec<Vec<Complex64>> = self
            .states
            .iter()
            .map(|s| s.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
            .collect();
        for labels in self.product_states.iter().flatten() {
            let factors = labels
                .iter()
                .map(|l| l.parse::<QubitLabel>().map(QubitLabel::amplitudes))
                .collect::<Result<Vec<_>>>()?;
            states.push(build_product_state(&factors)?);
        }
        Ensemble::with_tolerances(self.dimension, states, self.priors, tol)
    }
}

/// Parses and validates an ensemble document.
pub fn load_ensemble(document: &str) -> Result<Ensemble> {
    load_ensemble_with(document, &Tolerances::default())
}

pub fn load_ensemble_with(document: &str, tol: &Tolerances) -> Result<Ensemble> {
    let doc: EnsembleDocument = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_ensemble(tol)
}

/// Single-qubit polarization labels accepted in `product_states`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitLabel {
    /// `(|0> + |1>)/sqrt 2`
    DiagonalPlus,
    /// `(|0> - |1>)/sqrt 2`
    DiagonalMinus,
    /// `(|0> + i|1>)/sqrt 2`
    CircularPlus,
    /// `(|0> - i|1>)/sqrt 2`
    CircularMinus,
    Zero,
    One,
}

impl QubitLabel {
    pub fn amplitudes(self) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = Complex64::new;
        match self {
            QubitLabel::DiagonalPlus => [c(s, 0.0), c(s, 0.0)],
            QubitLabel::DiagonalMinus => [c(s, 0.0), c(-s, 0.0)],
            QubitLabel::CircularPlus => [c(s, 0.0), c(0.0, s)],
            QubitLabel::CircularMinus => [c(s, 0.0), c(0.0, -s)],
            QubitLabel::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
            QubitLabel::One => [c(0.0, 0.0), c(1.0, 0.0)],
        }
    }
}

impl FromStr for QubitLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d+" => Ok(QubitLabel::DiagonalPlus),
            "d-" => Ok(QubitLabel::DiagonalMinus),
            "c+" => Ok(QubitLabel::CircularPlus),
            "c-" => Ok(QubitLabel::CircularMinus),
            "0" => Ok(QubitLabel::Zero),
            "1" => Ok(QubitLabel::One),
            other => Err(Error::Parse(format!(
                "unknown qubit label {other:?} (expected d+, d-, c+, c-, 0 or 1)"
            ))),
        }
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QubitLabel::DiagonalPlus => "d+",
            QubitLabel::DiagonalMinus => "d-",
            QubitLabel::CircularPlus => "c+",
            QubitLabel::CircularMinus => "c-",
            QubitLabel::Zero => "0",
            QubitLabel::One => "1",
        };
        f.write_str(s)
    }
}

/// Kronecker product of single-qubit states, first factor most significant.
pub fn build_product_state(factors: &[[Complex64; 2]]) -> Result<Vec<Complex64>> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("product state needs at least one factor".into()));
    }
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for (i, f) in factors.iter().enumerate() {
        let nrm = norm(f);
        if (nrm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("factor {i} has norm {nrm}, expected 1")));
        }
        out = out.iter().flat_map(|&a| [a * f[0], a * f[1]]).collect();
    }
    Ok(out)
}
