use num_complex::Complex64;

use super::eigen::{jacobi_rotation, rotate_columns};
use super::matrix::{inner, ComplexMatrix, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `input = u * diag(sigma) * v^H`, with `u` (m x m) and `v` (n x n) unitary
/// and `sigma` (length min(m, n)) non-negative and descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    /// Rebuilds `u * diag(sigma) * v^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let mut us = ComplexMatrix::zeros(m, n);
        for (j, &s) in self.sigma.iter().enumerate() {
            for i in 0..m {
                us[(i, j)] = self.u[(i, j)] * s;
            }
        }
        &us * &self.v.adjoint()
    }
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi.
///
/// Each column of `u` has its largest-modulus entry (first one on ties)
/// real non-negative; the matching column of `v` absorbs the phase.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    if m.rows() < m.cols() {
        let t = svd_tall(&m.adjoint());
        let mut out = SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_phases(&mut out);
        return Ok(out);
    }
    let mut out = svd_tall(m);
    fix_phases(&mut out);
    Ok(out)
}

fn svd_tall(m: &ComplexMatrix) -> SvdResult {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(cols);
    // Columns below this squared norm are numerically zero; rotating them
    // with subnormal entries would cost V its unitarity.
    let negligible = (f64::EPSILON * m.frobenius_norm()).powi(2);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let ap = a.column(p);
                let aq = a.column(q);
                let alpha: f64 = ap.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = aq.iter().map(|z| z.norm_sqr()).sum();
                if alpha.min(beta) <= negligible {
                    continue;
                }
                let gamma = inner(&ap, &aq);
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                if let Some(k) = jacobi_rotation(alpha, beta, gamma) {
                    rotate_columns(&mut a, p, q, &k);
                    rotate_columns(&mut v, p, q, &k);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols)
        .map(|j| a.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted = ComplexMatrix::from_fn(cols, cols, |i, j| v[(i, order[j])]);

    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(rows);
    for (&j, &s) in order.iter().zip(&sigma) {
        if s > cutoff && s > 0.0 {
            basis.push(a.column(j).iter().map(|z| z / s).collect());
        } else {
            break;
        }
    }
    complete_basis(&mut basis, rows);
    let u = ComplexMatrix::from_columns(&basis).expect("basis vectors share a length");

    SvdResult { u, sigma, v: v_sorted }
}

/// Extends an orthonormal set to a basis of C^n, greedily taking the
/// standard basis vector with the largest component outside the span.
pub(crate) fn complete_basis(basis: &mut Vec<Vec<Complex64>>, n: usize) {
    while basis.len() < n {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for k in 0..n {
            let mut e = vec![ZERO; n];
            e[k] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in basis.iter() {
                    let proj = inner(b, &e);
                    for (ei, bi) in e.iter_mut().zip(b) {
                        *ei -= proj * bi;
                    }
                }
            }
            let r = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(br, _)| r > *br) {
                best = Some((r, e));
            }
        }
        let (r, e) = best.expect("n > 0 whenever the basis is incomplete");
        basis.push(e.into_iter().map(|z| z / r).collect());
    }
}

fn fix_phases(out: &mut SvdResult) {
    let rows = out.u.rows();
    for j in 0..out.u.cols() {
        let mut pivot = ZERO;
        for i in 0..rows {
            if out.u[(i, j)].norm() > pivot.norm() + 1e-14 {
                pivot = out.u[(i, j)];
            }
        }
        if pivot.norm() == 0.0 {
            continue;
        }
        let phase = (pivot / pivot.norm()).conj();
        for i in 0..rows {
            out.u[(i, j)] *= phase;
        }
        if j < out.sigma.len() {
            for i in 0..out.v.rows() {
                out.v[(i, j)] *= phase;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn check(m: &ComplexMatrix) -> SvdResult {
        let s = svd(m).unwrap();
        assert!(s.u.unitarity_error() < 1e-12, "u not unitary");
        assert!(s.v.unitarity_error() < 1e-12, "v not unitary");
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.sigma.iter().all(|&x| x >= 0.0));
        assert!(s.reconstruct().max_abs_diff(m) < 1e-12);
        s
    }

    #[test]
    fn identity() {
        let s = check(&ComplexMatrix::identity(3));
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
        assert!(s.u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        assert!(s.v.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn rank_deficient_keeps_factors_unitary() {
        // Rank 3 in C^5.
        let x = [c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.1, -0.4), c(0.0, 0.2)];
        let y = [c(0.5, 0.0), c(0.1, 0.3), c(-0.6, 0.2), c(0.2, 0.2), c(0.3, -0.1)];
        let m = ComplexMatrix::from_fn(5, 5, |i, j| {
            x[i] * y[j].conj() + y[i] * x[(j + 2) % 5].conj() + x[(i + 1) % 5] * x[j].conj()
        });
        let s = check(&m);
        assert!(s.sigma[3] < 1e-14 && s.sigma[4] < 1e-14);
    }

    #[test]
    fn diagonal_with_zero() {
        let s = check(&ComplexMatrix::from_real_diagonal(&[2.0, 0.0]));
        assert_eq!(s.sigma, vec![2.0, 0.0]);
    }

    #[test]
    fn rectangular_both_ways() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 2.0), c(0.0, -1.0), c(0.5, 0.0)],
            vec![c(-1.0, 0.0), c(3.0, 1.0), c(0.0, 0.25)],
        ])
        .unwrap();
        let wide = check(&m);
        let tall = check(&m.adjoint());
        for (a, b) in wide.sigma.iter().zip(&tall.sigma) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_convention_makes_pivot_real() {
        let m = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), c(1.0, 1.0)], vec![c(2.0, -1.0), c(0.0, 3.0)]]).unwrap();
        let s = check(&m);
        for j in 0..2 {
            let col = s.u.column(j);
            let pivot = col
                .iter()
                .fold(ZERO, |acc, &z| if z.norm() > acc.norm() + 1e-14 { z } else { acc });
            assert!(pivot.im.abs() < 1e-14 && pivot.re >= 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(svd(&m), Err(Error::InvalidMatrix(_))));
    }
}
