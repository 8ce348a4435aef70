//! Optimal conclusive probabilities.
//!
//! Maximizes `sum mu_i p_i` subject to `I - sum p_i |Q~_i><Q~_i| >= 0` and
//! `p >= 0`, where `Q~_i` are the reciprocal states. The main solver is a
//! logarithmic-barrier Newton method; [`oracle_usd`] is an exhaustive grid
//! search used to cross-check it on small instances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, hermitian_eigenvalues, hermitian_max_eigenvalue, hpd_inverse, inner, ComplexMatrix};

/// Largest accepted condition number of the Gram matrix.
const MAX_CONDITION: f64 = 1e12;
/// Newton decrement (halved) below which a centering step is done.
const CENTERING_TOLERANCE: f64 = 1e-12;
const ARMIJO_FRACTION: f64 = 0.25;
const MAX_BACKTRACKS: usize = 80;
const MAX_CENTERING_STEPS: usize = 50;
/// Oracle feasibility threshold on the smallest eigenvalue of `M(p)`.
const ORACLE_FEASIBILITY: f64 = 1e-10;

/// Reciprocal states in the ladder basis: the columns of `C G^-1`.
#[derive(Debug, Clone)]
pub struct ReciprocalSet {
    pub tilde_states: Vec<Vec<Complex64>>,
}

impl ReciprocalSet {
    pub fn n(&self) -> usize {
        self.tilde_states.len()
    }

    /// `sum_i p_i |Q~_i><Q~_i|`.
    pub fn weighted_sum(&self, p: &[f64]) -> ComplexMatrix {
        let n = self.tilde_states[0].len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (q, &pi) in self.tilde_states.iter().zip(p) {
            for r in 0..n {
                for s in 0..n {
                    m[(r, s)] += q[r] * q[s].conj() * pi;
                }
            }
        }
        m
    }

    /// `M(p) = I - sum_i p_i |Q~_i><Q~_i|`.
    pub fn inconclusive_operator(&self, p: &[f64]) -> ComplexMatrix {
        &ComplexMatrix::identity(self.tilde_states[0].len()) - &self.weighted_sum(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsdSolution {
    /// Conclusive detection probability of each state.
    pub p: Vec<f64>,
    /// `sum_i mu_i p_i`.
    pub total_pd: f64,
    /// Barrier gap bound `2N / t` at exit (grid step for the oracle).
    pub duality_gap: f64,
    /// Newton steps taken (feasibility evaluations for the oracle).
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Target for the barrier gap `2N / t`.
    pub gap_tolerance: f64,
    /// Geometric increase of `t` between centering steps.
    pub t_growth: f64,
    /// Probabilities at or below this are reported as zero.
    pub zero_probability: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gap_tolerance: 1e-9,
            t_growth: 10.0,
            zero_probability: 1e-10,
        }
    }
}

/// Reciprocal states `C (C^H C)^-1` of the ladder columns.
pub fn reciprocal_states(coeffs: &ComplexMatrix) -> Result<ReciprocalSet> {
    if !coeffs.is_square() {
        return Err(Error::InvalidMatrix(format!(
            "ladder coefficients must be square, got {}x{}",
            coeffs.rows(),
            coeffs.cols()
        )));
    }
    let gram = &coeffs.adjoint() * coeffs;
    let eig = hermitian_eigenvalues(&gram)?;
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let inv = hpd_inverse(&gram).ok_or(Error::IllConditioned { condition })?;
    let tilde = coeffs * &inv;
    Ok(ReciprocalSet {
        tilde_states: tilde.columns(),
    })
}

pub fn solve_usd(e: &Ensemble, rec: &ReciprocalSet) -> Result<UsdSolution> {
    solve_usd_with(e, rec, &SolverOptions::default())
}

fn log_det_pd(m: &ComplexMatrix) -> Option<f64> {
    let l = cholesky(m)?;
    Some((0..m.rows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0)
}

/// Solves `h x = b` for a real symmetric positive definite `h`.
fn solve_spd(h: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = h[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 0.0) {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            let mut s = h[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

pub fn solve_usd_with(e: &Ensemble, rec: &ReciprocalSet, opts: &SolverOptions) -> Result<UsdSolution> {
    let n = rec.n();
    if n != e.n() {
        return Err(Error::InvalidInput(format!(
            "{} reciprocal states for an ensemble of {}",
            n,
            e.n()
        )));
    }
    let mu = e.priors();
    let objective = |p: &[f64], t: f64| -> f64 {
        if p.iter().any(|&x| !(x > 0.0)) {
            return f64::INFINITY;
        }
        match log_det_pd(&rec.inconclusive_operator(p)) {
            Some(ld) => {
                -t * mu.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - ld - p.iter().map(|x| x.ln()).sum::<f64>()
            }
            None => f64::INFINITY,
        }
    };

    let lambda_max = hermitian_max_eigenvalue(&rec.weighted_sum(&vec![1.0; n]))?;
    let mut p = vec![0.5 / (n as f64 * lambda_max); n];
    if !objective(&p, 1.0).is_finite() {
        return Err(Error::Infeasible);
    }

    let mut t = 1.0;
    let mut iterations = 0;
    loop {
        for _ in 0..MAX_CENTERING_STEPS {
            let m = rec.inconclusive_operator(&p);
            let minv = hpd_inverse(&m).ok_or(Error::Infeasible)?;
            let x: Vec<Vec<Complex64>> = rec
                .tilde_states
                .iter()
                .map(|qi| {
                    let mq = minv.mul_vec(qi);
                    rec.tilde_states.iter().map(|qj| inner(&mq, qj)).collect()
                })
                .collect();
            let grad: Vec<f64> = (0..n).map(|i| -t * mu[i] + x[i][i].re - 1.0 / p[i]).collect();
            let hess: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| x[i][j].norm_sqr() + if i == j { 1.0 / (p[i] * p[i]) } else { 0.0 })
                        .collect()
                })
                .collect();
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let step = solve_spd(&hess, &neg).ok_or(Error::SolverStalled { iterations })?;
            let slope: f64 = grad.iter().zip(&step).map(|(a, b)| a * b).sum();
            iterations += 1;
            if -slope / 2.0 < CENTERING_TOLERANCE {
                break;
            }
            if iterations >= opts.max_iterations {
                return Err(Error::SolverStalled { iterations });
            }
            let f0 = objective(&p, t);
            let mut s = 1.0;
            let mut decrease = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                let f1 = objective(&trial, t);
                if f1 <= f0 + ARMIJO_FRACTION * s * slope {
                    p = trial;
                    decrease = Some(f0 - f1);
                    break;
                }
                s *= 0.5;
            }
            // Stop once progress is below the rounding level of the objective.
            match decrease {
                Some(d) if d > 4.0 * f64::EPSILON * f0.abs().max(1.0) => {}
                _ => break,
            }
        }
        if 2.0 * n as f64 / t <= opts.gap_tolerance {
            break;
        }
        t *= opts.t_growth;
    }

    // Scale onto the boundary of the feasible cone, where the optimum lies.
    let top = hermitian_max_eigenvalue(&rec.weighted_sum(&p))?;
    if top > 0.0 {
        for x in p.iter_mut() {
            *x /= top;
        }
    }
    for x in p.iter_mut() {
        if *x <= opts.zero_probability {
            *x = 0.0;
        } else if *x > 1.0 {
            *x = 1.0;
        }
    }
    let total_pd = mu.iter().zip(&p).map(|(a, b)| a * b).sum();
    Ok(UsdSolution {
        p,
        total_pd,
        duality_gap: 2.0 * n as f64 / t,
        iterations,
    })
}

/// Exhaustive grid search over `p in {0, step, 2 step, ...}^N` for N <= 3.
///
/// The feasible set is closed under decreasing any `p_i`, so for each prefix
/// the largest feasible last coordinate is found by a pointer that only moves
/// down as the prefix grows.
pub fn oracle_usd(e: &Ensemble, rec: &ReciprocalSet, grid_step: f64) -> Result<UsdSolution> {
    let n = rec.n();
    if n > 3 {
        return Err(Error::OracleTooLarge { n });
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidInput(format!("grid step {grid_step} must lie in (0, 1]")));
    }
    let k_max = (1.0 / grid_step + 1e-9).floor() as usize;
    let mu = e.priors();
    let mut evaluations = 0usize;

    let dim = rec.tilde_states[0].len();
    let projectors: Vec<ComplexMatrix> = rec
        .tilde_states
        .iter()
        .map(|q| ComplexMatrix::from_fn(dim, dim, |r, s| q[r] * q[s].conj()))
        .collect();
    let mut feasible = |k: &[usize]| -> bool {
        evaluations += 1;
        let mut m = ComplexMatrix::identity(dim);
        for r in 0..dim {
            m[(r, r)] += Complex64::new(ORACLE_FEASIBILITY, 0.0);
        }
        for (proj, &ki) in projectors.iter().zip(k) {
            let pi = ki as f64 * grid_step;
            for r in 0..dim {
                for s in 0..dim {
                    m[(r, s)] -= proj[(r, s)] * pi;
                }
            }
        }
        cholesky(&m).is_some()
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |k: Vec<usize>| {
        let value: f64 = k.iter().zip(mu).map(|(&ki, m)| ki as f64 * grid_step * m).sum();
        if best.as_ref().is_none_or(|(b, _)| value > *b + 1e-15) {
            best = Some((value, k));
        }
    };

    match n {
        2 => {
            let mut j = k_max;
            for i in 0..=k_max {
                while !feasible(&[i, j]) {
                    if j == 0 {
                        break;
                    }
                    j -= 1;
                }
                if j == 0 && !feasible(&[i, 0]) {
                    break;
                }
                consider(vec![i, j]);
            }
        }
        3 => {
            let mut j_start = k_max;
            'outer: for i in 0..=k_max {
                let mut l = j_start;
                let mut first = true;
                for j in 0..=k_max {
                    while !feasible(&[i, j, l]) {
                        if l == 0 {
                            break;
                        }
                        l -= 1;
                    }
                    if l == 0 && !feasible(&[i, j, 0]) {
                        if j == 0 {
                            break 'outer;
                        }
                        break;
                    }
                    if first {
                        j_start = l;
                        first = false;
                    }
                    consider(vec![i, j, l]);
                }
            }
        }
        _ => {
            let mut j = 0;
            while j < k_max && feasible(&[j + 1]) {
                j += 1;
            }
            consider(vec![j]);
        }
    }

    let (total_pd, k) = best.ok_or(Error::Infeasible)?;
    Ok(UsdSolution {
        p: k.iter().map(|&ki| ki as f64 * grid_step).collect(),
        total_pd,
        duality_gap: grid_step,
        iterations: evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::load_ensemble;
    use crate::ladder::ladder_coefficients;
    use crate::numerics::{hermitian_min_eigenvalue, ZERO};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_state(s: f64, mu: [f64; 2]) -> Ensemble {
        Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![c(s, 0.0), c((1.0 - s * s).sqrt(), 0.0)]],
            mu.to_vec(),
        )
        .unwrap()
    }

    fn solve(e: &Ensemble) -> (ReciprocalSet, UsdSolution) {
        let rec = reciprocal_states(&ladder_coefficients(e).unwrap()).unwrap();
        let sol = solve_usd(e, &rec).unwrap();
        (rec, sol)
    }

    #[test]
    fn reciprocal_biorthogonality_hand_oracle() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let coeffs = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(r, 0.0)], vec![ZERO, c(r, 0.0)]]).unwrap();
        let rec = reciprocal_states(&coeffs).unwrap();
        // G^-1 for [[1, r], [r, 1]] is [[2, -2r], [-2r, 2]].
        assert!((inner(&rec.tilde_states[0], &coeffs.column(1))).norm() < 1e-10);
        assert!((inner(&rec.tilde_states[0], &coeffs.column(0)) - c(1.0, 0.0)).norm() < 1e-10);
        assert!((rec.tilde_states[0][1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn orthonormal_reciprocals_are_the_states() {
        let rec = reciprocal_states(&ComplexMatrix::identity(3)).unwrap();
        for (i, q) in rec.tilde_states.iter().enumerate() {
            assert!(q
                .iter()
                .enumerate()
                .all(|(k, z)| (z - if k == i { c(1.0, 0.0) } else { ZERO }).norm() < 1e-15));
        }
    }

    #[test]
    fn ill_conditioned_is_rejected() {
        let coeffs = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![ZERO, c(1e-7, 0.0)]]).unwrap();
        assert!(matches!(reciprocal_states(&coeffs), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn two_state_law() {
        let (_, sol) = solve(&two_state(0.6, [0.5, 0.5]));
        assert!((sol.p[0] - 0.4).abs() < 1e-5 && (sol.p[1] - 0.4).abs() < 1e-5);
        assert!((sol.total_pd - 0.4).abs() < 1e-5);
    }

    #[test]
    fn orthonormal_ensemble_is_fully_detected() {
        let e = Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![ZERO, c(0.0, 1.0)]],
            vec![0.3, 0.7],
        )
        .unwrap();
        let (_, sol) = solve(&e);
        assert!(sol.p.iter().all(|p| (p - 1.0).abs() < 1e-8), "{:?}", sol.p);
        assert!((sol.total_pd - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bb84_equal_probabilities() {
        let e = load_ensemble(
            r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
                "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#,
        )
        .unwrap();
        let (rec, sol) = solve(&e);
        for p in &sol.p {
            assert!((p - 0.5).abs() < 1e-4);
        }
        assert!(hermitian_min_eigenvalue(&rec.inconclusive_operator(&[0.5; 4])).unwrap() >= -1e-8);
        assert!(hermitian_min_eigenvalue(&rec.inconclusive_operator(&sol.p)).unwrap() >= -1e-8);
    }

    #[test]
    fn zero_prior_state_is_pushed_to_zero() {
        // With all weight on state 1 the optimum is p = (1 - s^2, 0).
        let (rec, sol) = solve(&two_state(0.5, [1.0, 0.0]));
        assert!((sol.p[0] - 0.75).abs() < 1e-6, "{:?}", sol.p);
        assert!(sol.p[1] < 1e-6);
        assert!(hermitian_min_eigenvalue(&rec.inconclusive_operator(&sol.p)).unwrap() >= -1e-8);
    }

    #[test]
    fn oracle_matches_analytic_two_state() {
        let e = two_state(0.5, [0.5, 0.5]);
        let rec = reciprocal_states(&ladder_coefficients(&e).unwrap()).unwrap();
        let o = oracle_usd(&e, &rec, 1e-3).unwrap();
        assert!((o.total_pd - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn oracle_orthogonal_coarse_grid() {
        let e = Ensemble::new(
            2,
            vec![vec![c(1.0, 0.0), ZERO], vec![ZERO, c(1.0, 0.0)]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let rec = reciprocal_states(&ladder_coefficients(&e).unwrap()).unwrap();
        let o = oracle_usd(&e, &rec, 0.25).unwrap();
        assert_eq!(o.p, vec![1.0, 1.0]);
    }

    #[test]
    fn oracle_refuses_large_ensembles() {
        let e = Ensemble::new(
            4,
            (0..4)
                .map(|i| (0..4).map(|k| if k == i { c(1.0, 0.0) } else { ZERO }).collect())
                .collect(),
            vec![0.25; 4],
        )
        .unwrap();
        let rec = reciprocal_states(&ladder_coefficients(&e).unwrap()).unwrap();
        assert_eq!(oracle_usd(&e, &rec, 0.1), Err(Error::OracleTooLarge { n: 4 }));
    }
}
