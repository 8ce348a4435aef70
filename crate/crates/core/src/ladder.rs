//! Ladder form of an ensemble: state j expanded on the first j basis kets
//! with a real positive leading coefficient, plus the unitary `U0` that maps
//! each input state onto its ladder column.

use num_complex::Complex64;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::numerics::{svd, zero_pad, ComplexMatrix, ZERO};

/// Maximum `|U0 Q_j - c_j|` tolerated when building `U0`.
const U0_RESIDUAL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LadderForm {
    /// Upper-triangular N x N matrix; column j holds state j in the ladder basis.
    pub coeffs: ComplexMatrix,
    /// d x d unitary with `u0 * Q_j = c_j` (zero-padded).
    pub u0: ComplexMatrix,
}

impl LadderForm {
    pub fn new(e: &Ensemble) -> Result<Self> {
        let coeffs = ladder_coefficients(e)?;
        let u0 = build_u0(e, &coeffs)?;
        Ok(Self { coeffs, u0 })
    }

    pub fn n(&self) -> usize {
        self.coeffs.cols()
    }

    /// Ladder column j, zero-padded to `len`.
    pub fn column_padded(&self, j: usize, len: usize) -> Vec<Complex64> {
        zero_pad(&self.coeffs.column(j), len)
    }
}

/// Gram-Schmidt recursion on the Gram matrix, giving the upper-triangular
/// coefficients `c_ij` with `c^H c = G` and real positive diagonal.
pub fn ladder_coefficients(e: &Ensemble) -> Result<ComplexMatrix> {
    let g = e.gram();
    let n = e.n();
    let mut c = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let mut s = g[(i, j)];
            for x in 0..i {
                s -= c[(x, i)].conj() * c[(x, j)];
            }
            c[(i, j)] = s / c[(i, i)];
        }
        let mut diag = g[(j, j)].re;
        for x in 0..j {
            diag -= c[(x, j)].norm_sqr();
        }
        if diag <= 1e-8 {
            return Err(Error::LinearlyDependent { min_eigenvalue: diag });
        }
        c[(j, j)] = Complex64::new(diag.sqrt(), 0.0);
    }
    Ok(c)
}

/// `U0 = V W^H` from the SVD of `A0 = sum_j c_j Q_j^H`.
pub fn build_u0(e: &Ensemble, coeffs: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = e.dim();
    let mut a0 = ComplexMatrix::zeros(d, d);
    for (j, q) in e.states().iter().enumerate() {
        let c = zero_pad(&coeffs.column(j), d);
        for r in 0..d {
            if c[r] == ZERO {
                continue;
            }
            for s in 0..d {
                a0[(r, s)] += c[r] * q[s].conj();
            }
        }
    }
    let dec = svd(&a0)?;
    let u0 = &dec.u * &dec.v.adjoint();

    let residual = e
        .states()
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let image = u0.mul_vec(q);
            let target = zero_pad(&coeffs.column(j), d);
            image
                .iter()
                .zip(&target)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    if residual > U0_RESIDUAL_LIMIT {
        return Err(Error::SynthesisFailure { residual });
    }
    Ok(u0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::load_ensemble;
    use crate::numerics::gram_matrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bb84() -> Ensemble {
        load_ensemble(
            r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
                "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn bb84_third_column_and_first_row_of_u0() {
        let e = bb84();
        let lf = LadderForm::new(&e).unwrap();
        let col = lf.coeffs.column(2);
        assert!((col[0] - c(-0.25, 0.25)).norm() < 1e-4);
        assert!((col[1] - c(-0.25, -0.25)).norm() < 1e-4);
        assert!((col[2] - c(0.8660, 0.0)).norm() < 1e-4);
        assert!(col[3].norm() < 1e-15);
        for s in 0..8 {
            assert!((lf.u0[(0, s)] - c(0.3536, 0.0)).norm() < 1e-4);
        }
        assert!(lf.u0.unitarity_error() < 1e-10);
    }

    #[test]
    fn orthonormal_states_give_identity() {
        let e = Ensemble::new(
            3,
            vec![
                vec![c(1.0, 0.0), ZERO, ZERO],
                vec![ZERO, c(1.0, 0.0), ZERO],
                vec![ZERO, ZERO, c(1.0, 0.0)],
            ],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let lf = LadderForm::new(&e).unwrap();
        assert!(lf.coeffs.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(lf.u0.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn two_real_states_hand_oracle() {
        let theta: f64 = 0.7;
        let e = Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let coeffs = ladder_coefficients(&e).unwrap();
        assert!((coeffs[(0, 1)].re - theta.cos()).abs() < 1e-14);
        assert!((coeffs[(1, 1)].re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn ladder_form_input_is_a_fixed_point() {
        let s = 0.6;
        let e = Ensemble::new(
            3,
            vec![
                vec![c(1.0, 0.0), ZERO, ZERO],
                vec![c(s, 0.0), c(0.8, 0.0), ZERO],
                vec![c(0.3, 0.0), c(0.0, 0.4), c((1.0f64 - 0.09 - 0.16).sqrt(), 0.0)],
            ],
            vec![0.3, 0.3, 0.4],
        )
        .unwrap();
        let lf = LadderForm::new(&e).unwrap();
        for q in e.states() {
            let image = lf.u0.mul_vec(q);
            assert!(image.iter().zip(q).all(|(a, b)| (a - b).norm() < 1e-8));
        }
        let g = gram_matrix(&lf.coeffs).unwrap();
        assert!(g.max_abs_diff(&e.gram()) < 1e-12);
    }
}
