//! Unitary synthesis: `U1` maps the ladder states onto the final
//! configuration (the closest unitary to `A' = sum_j |Q_jf><c_j|` in
//! Frobenius norm), and `U = U1 (U0 + I)` acts on the original states.
//!
//! `A'` vanishes outside the first N columns, so the closest unitary is
//! fixed only on that span: there it is the polar factor of the N nonzero
//! columns. The remaining columns complete it with the standard basis
//! vectors taken greedily and orthonormalized, which keeps `U1` free of
//! rounding noise from an arbitrary null-space basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::final_config::FinalConfiguration;
use crate::ladder::LadderForm;
use crate::numerics::{complete_basis, svd, zero_pad, ComplexMatrix, ZERO};

/// Residuals above this mean the final configuration is not an isometric
/// image of the ladder states.
const MAX_SYNTHESIS_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// `sum_j |Q_jf><c_j|`, ext_dim x ext_dim.
    pub a_prime: ComplexMatrix,
    pub u1: ComplexMatrix,
    /// `U1 (U0 + I)`, with `U0` embedded in the extended space.
    pub u_total: ComplexMatrix,
    /// `sum_j |U1 c_j - Q_jf|^2`, evaluated through the trace of `A' U1^H`.
    pub residual: f64,
}

pub fn synthesize_u1(ladder: &LadderForm, fc: &FinalConfiguration) -> Result<SynthesisResult> {
    let n = ladder.n();
    let ext = fc.ext_dim;
    let d = ladder.u0.rows();
    if fc.n != n || fc.states_f.len() != n {
        return Err(Error::InvalidInput(format!(
            "final configuration has {} states, ladder has {n}",
            fc.n
        )));
    }
    if ext < d {
        return Err(Error::InvalidInput(format!(
            "extended dimension {ext} is below the state dimension {d}"
        )));
    }

    let mut a_prime = ComplexMatrix::zeros(ext, ext);
    let mut norms = 0.0;
    for (j, f) in fc.states_f.iter().enumerate() {
        let c = zero_pad(&ladder.coeffs.column(j), ext);
        norms += f.iter().chain(&c).map(|z| z.norm_sqr()).sum::<f64>();
        for r in 0..ext {
            if f[r] == ZERO {
                continue;
            }
            for s in 0..n {
                a_prime[(r, s)] += f[r] * c[s].conj();
            }
        }
    }

    let span = ComplexMatrix::from_fn(ext, n, |r, s| a_prime[(r, s)]);
    let dec = svd(&span)?;
    let thin_u = ComplexMatrix::from_fn(ext, n, |r, s| dec.u[(r, s)]);
    let polar = &thin_u * &dec.v.adjoint();
    let mut columns = polar.columns();
    complete_basis(&mut columns, ext);
    let u1 = ComplexMatrix::from_columns(&columns)?;
    let trace: Complex64 = (&a_prime * &u1.adjoint()).trace();
    let residual = norms - 2.0 * trace.re;
    if !(residual <= MAX_SYNTHESIS_RESIDUAL) {
        return Err(Error::SynthesisFailure { residual });
    }
    let u_total = &u1 * &ladder.u0.embed(ext);
    Ok(SynthesisResult {
        a_prime,
        u1,
        u_total,
        residual,
    })
}

/// Outcome distribution `|<k|Q_if>|^2` over the extended basis for state `i`
/// (zero-based).
pub fn simulate_measurement(fc: &FinalConfiguration, state_index: usize) -> Result<Vec<f64>> {
    let state = fc.states_f.get(state_index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "state index {state_index} out of range for {} states",
            fc.states_f.len()
        ))
    })?;
    Ok(state.iter().map(|z| z.norm_sqr()).collect())
}

/// Largest `|u x_j - y_j|` over the pairs, with `x_j` zero-padded to the
/// size of `u`.
pub fn state_map_error(u: &ComplexMatrix, inputs: &[Vec<Complex64>], targets: &[Vec<Complex64>]) -> f64 {
    inputs
        .iter()
        .zip(targets)
        .map(|(x, y)| {
            let image = u.mul_vec(&zero_pad(x, u.cols()));
            image.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{load_ensemble, Ensemble};
    use crate::final_config::{build_final_configuration, neumark_dimension};
    use crate::sdp::{reciprocal_states, solve_usd};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn run(e: &Ensemble) -> (LadderForm, FinalConfiguration, SynthesisResult) {
        let lf = LadderForm::new(e).unwrap();
        let rec = reciprocal_states(&lf.coeffs).unwrap();
        let sol = solve_usd(e, &rec).unwrap();
        let fc = build_final_configuration(&lf.coeffs, &sol, neumark_dimension(e.n(), e.dim())).unwrap();
        let syn = synthesize_u1(&lf, &fc).unwrap();
        (lf, fc, syn)
    }

    fn bb84() -> Ensemble {
        load_ensemble(
            r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
                "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn bb84_u1_action_and_entries() {
        let e = bb84();
        let (lf, fc, syn) = run(&e);
        assert!(syn.u1.unitarity_error() < 1e-10);
        assert!(syn.u_total.unitarity_error() < 1e-10);
        assert!(syn.residual.abs() < 1e-8);
        let ladder_cols: Vec<_> = (0..4).map(|j| lf.coeffs.column(j)).collect();
        assert!(state_map_error(&syn.u1, &ladder_cols, &fc.states_f) < 1e-7);
        assert!(state_map_error(&syn.u_total, e.states(), &fc.states_f) < 1e-7);
        assert!((syn.u1[(0, 0)] - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((syn.u1[(4, 0)] - c(-0.3536, 0.3536)).norm() < 1e-4);
        assert!((syn.u1[(4, 1)] - c(-0.3536, -0.3536)).norm() < 1e-4);
    }

    #[test]
    fn bb84_measurement() {
        let (_, fc, _) = run(&bb84());
        let probs = simulate_measurement(&fc, 0).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-8);
        assert!(probs[1..4].iter().all(|&q| q <= 1e-10));
        assert!((probs[4] - 0.25).abs() < 1e-8 && (probs[5] - 0.25).abs() < 1e-8);
        assert!(matches!(simulate_measurement(&fc, 4), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn orthonormal_ensemble_gives_identity_on_span() {
        let e = Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![ZERO, c(1.0, 0.0)]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (_, fc, syn) = run(&e);
        for j in 0..2 {
            let col = syn.u1.column(j);
            assert!((col[j] - c(1.0, 0.0)).norm() < 1e-6);
            assert!((simulate_measurement(&fc, j).unwrap()[j] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn two_state_measurement() {
        let s: f64 = 0.6;
        let e = Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![c(s, 0.0), c((1.0 - s * s).sqrt(), 0.0)]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let (_, fc, syn) = run(&e);
        let trace = (&syn.a_prime * &syn.u1.adjoint()).trace();
        assert!((trace - c(2.0, 0.0)).norm() < 1e-8);
        for i in 0..2 {
            let probs = simulate_measurement(&fc, i).unwrap();
            assert!((probs[i] - 0.4).abs() < 1e-5);
            assert!((probs[2..].iter().sum::<f64>() - 0.6).abs() < 1e-5);
        }
    }

    #[test]
    fn inconsistent_configuration_fails() {
        let e = bb84();
        let (lf, fc, _) = run(&e);
        let mut g = fc.g.clone();
        g[0] = c(0.9, 0.0);
        let bad = FinalConfiguration::from_amplitudes(fc.n, fc.ext_dim, g).unwrap();
        assert!(matches!(synthesize_u1(&lf, &bad), Err(Error::SynthesisFailure { .. })));
    }
}
