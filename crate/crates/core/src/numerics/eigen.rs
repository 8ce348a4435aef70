use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Unitary 2x2 rotation `K` (columns p, q) that diagonalizes the Hermitian
/// block `[[alpha, gamma], [conj(gamma), beta]]` as `K^H B K`.
///
/// Returns `None` when `gamma` is already zero.
pub(crate) fn jacobi_rotation(alpha: f64, beta: f64, gamma: Complex64) -> Option<[[Complex64; 2]; 2]> {
    let g = gamma.norm();
    if g == 0.0 {
        return None;
    }
    let phase = gamma / g;
    let zeta = (beta - alpha) / (2.0 * g);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // D = diag(1, conj(phase)) makes the block real, then a real rotation.
    let ph = phase.conj();
    Some([[Complex64::new(c, 0.0), Complex64::new(s, 0.0)], [-ph * s, ph * c]])
}

/// Right-multiplies columns `p`, `q` of `m` by the 2x2 matrix `k`.
pub(crate) fn rotate_columns(m: &mut ComplexMatrix, p: usize, q: usize, k: &[[Complex64; 2]; 2]) {
    for i in 0..m.rows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = x * k[0][0] + y * k[1][0];
        m[(i, q)] = x * k[0][1] + y * k[1][1];
    }
}

/// Left-multiplies rows `p`, `q` of `m` by `k^H`.
fn rotate_rows_adjoint(m: &mut ComplexMatrix, p: usize, q: usize, k: &[[Complex64; 2]; 2]) {
    for j in 0..m.cols() {
        let (x, y) = (m[(p, j)], m[(q, j)]);
        m[(p, j)] = k[0][0].conj() * x + k[1][0].conj() * y;
        m[(q, j)] = k[0][1].conj() * x + k[1][1].conj() * y;
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let deviation = m.hermiticity_error();
    if deviation > 1e-10 {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.
///
/// Returns eigenvalues in ascending order and the unitary whose columns are
/// the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    check_hermitian(m)?;
    let n = m.rows();
    let half = m.adjoint();
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (m[(i, j)] + half[(i, j)]) * 0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let Some(k) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, a[(p, q)]) else {
                    continue;
                };
                rotate_columns(&mut a, p, q, &k);
                rotate_rows_adjoint(&mut a, p, q, &k);
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                rotate_columns(&mut v, p, q, &k);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|(values, _)| values)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(values.first().copied().unwrap_or(0.0))
}

pub fn hermitian_max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(values.last().copied().unwrap_or(0.0))
}
