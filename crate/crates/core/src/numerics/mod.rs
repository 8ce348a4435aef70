//! Dense complex linear algebra for the small matrices the pipeline handles:
//! a row-major matrix type, Jacobi SVD and Hermitian eigensolvers,
//! Cholesky helpers, and roots of even degree-8 polynomials.

mod eigen;
mod matrix;
mod poly;
mod svd;

pub use eigen::{hermitian_eigen, hermitian_eigenvalues, hermitian_max_eigenvalue, hermitian_min_eigenvalue};
pub use matrix::{inner, norm, outer, zero_pad, ComplexMatrix, ONE, ZERO};
pub use poly::{eval_even_polynomial, real_even_polynomial_roots};
pub use svd::{svd, SvdResult};

pub(crate) use svd::complete_basis;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `G = Psi^H Psi` for the columns of `psi`.
pub fn gram_matrix(columns: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !columns.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let cols = columns.columns();
    let n = cols.len();
    let mut g = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = inner(&cols[i], &cols[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)].im = 0.0;
    }
    Ok(g)
}

/// Lower Cholesky factor `L` with `m = L L^H`, or `None` if `m` is not
/// numerically positive definite.
pub fn cholesky(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    if !m.is_square() {
        return None;
    }
    let n = m.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Inverse of a Hermitian positive definite matrix through its Cholesky factor.
pub fn hpd_inverse(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    let l = cholesky(m)?;
    let n = m.rows();
    // Solve L Y = I, then L^H X = Y.
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let mut y = vec![ZERO; n];
        for i in 0..n {
            let mut s = if i == col { ONE } else { ZERO };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![ZERO; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        inv.set_column(col, &x);
    }
    for i in 0..n {
        for j in i + 1..n {
            let avg = (inv[(i, j)] + inv[(j, i)].conj()) * 0.5;
            inv[(i, j)] = avg;
            inv[(j, i)] = avg.conj();
        }
        inv[(i, i)].im = 0.0;
    }
    Some(inv)
}
