//! Final configuration in the extended space.
//!
//! State `s` keeps a conclusive amplitude `sqrt(p_s)` on ket `s` and carries
//! its inconclusive mass on ancilla kets `N, N+1, ...`: state 0 on `N - 1`
//! ancillas, state `s >= 1` on `N - s` of them. The amplitudes are fixed
//! backwards from the last state so that every pairwise overlap of the input
//! ensemble is preserved. The last shared ancilla of states 0 and 1 needs a
//! coupled solve, done through an even degree-8 polynomial in the imaginary
//! part of state 0's amplitude.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{real_even_polynomial_roots, ComplexMatrix, ZERO};
use crate::sdp::UsdSolution;
use crate::tolerances::Tolerances;

/// Normalization remainders at or below this give a zero pivot amplitude.
const ZERO_PIVOT_REMAINDER: f64 = 1e-14;
/// Slack when testing `x^2 <= a` and `y^2 <= b` for polynomial roots.
const ADMISSIBLE_SLACK: f64 = 1e-9;
/// Largest imaginary part of a polynomial root still treated as real.
const REAL_ROOT_IMAG: f64 = 1e-6;

/// Amplitude count `N(N+3)/2 - 1` of the final configuration.
pub fn amplitude_count(n: usize) -> usize {
    n * (n + 3) / 2 - 1
}

/// Dimension of the extended space: the original one if it already holds
/// `2N - 1` kets, otherwise `2N - 1`.
pub fn neumark_dimension(n: usize, d: usize) -> usize {
    d.max(2 * n - 1)
}

/// Where one state's amplitudes live in `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    /// Index into `g` of the conclusive amplitude, which sits on ket `state`.
    pub conclusive: usize,
    /// Indices into `g` of the inconclusive amplitudes, on kets `N, N+1, ...`.
    pub inconclusive: Vec<usize>,
}

/// Layout of all states for an ensemble of `n`.
pub fn layout(n: usize) -> Vec<StateLayout> {
    let mut next = n;
    (0..n)
        .map(|s| {
            let count = if s == 0 { n - 1 } else { n - s };
            let inconclusive = (next..next + count).collect();
            next += count;
            StateLayout {
                conclusive: s,
                inconclusive,
            }
        })
        .collect()
}

/// Which closed form or root path fixed the last amplitude pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairBranch {
    /// Two states: the pair follows from normalization and one overlap.
    TwoState,
    /// Real residual overlap (`d = 0`).
    RealOverlap,
    /// Imaginary residual overlap (`c = 0`).
    ImaginaryOverlap,
    /// A real root of the degree-8 polynomial.
    Polynomial,
    /// No admissible root; the pair was anchored on the larger norm.
    ClosedForm,
}

/// Data of the coupled system for the last amplitude pair `x` (state 0) and
/// `y` (state 1): `|x|^2 = a`, `|y|^2 = b`, `conj(x) y = c + i d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialData {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Relative phase `arg c_13 - arg c_03` of the third ladder column, in radians.
    pub theta: f64,
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub coeff_c: f64,
    pub coeff_d: f64,
    pub coeff_e: f64,
}

impl PolynomialData {
    /// Fills in the polynomial coefficients for the given pair data.
    pub fn from_parameters(a: f64, b: f64, c: f64, d: f64, theta: f64) -> Self {
        let [coeff_a, coeff_b, coeff_c, coeff_d, coeff_e] = polynomial_coefficients(a, b, c, d);
        Self {
            a,
            b,
            c,
            d,
            theta,
            coeff_a,
            coeff_b,
            coeff_c,
            coeff_d,
            coeff_e,
        }
    }

    pub fn coefficients(&self) -> [f64; 5] {
        [self.coeff_a, self.coeff_b, self.coeff_c, self.coeff_d, self.coeff_e]
    }

    pub fn overlap(&self) -> Complex64 {
        Complex64::new(self.c, self.d)
    }
}

/// Coefficients `[A, B, C, D, E]` of `A x^8 + B x^6 + C x^4 + D x^2 + E`
/// whose real roots give the imaginary part `x` of state 0's amplitude.
pub fn polynomial_coefficients(a: f64, b: f64, c: f64, d: f64) -> [f64; 5] {
    let (a2, c2, d2) = (a * a, c * c, d * d);
    let s = c2 - a * b;
    let big_a = ((4.0 * d2 - 4.0 * a * b) * s - 4.0 * c2 * d2).powi(2);
    let big_b = ((4.0 * d2 - 4.0 * a * b) * s + 4.0 * c2 * d2) * (8.0 * a2 * b * (s - d2))
        - 64.0 * c2 * d2 * s * (2.0 * a2 * b);
    let k = a2 * d2 * d2 + a2 * s * s - 2.0 * d2 * a2 * s;
    let big_c = k * ((4.0 * d2 - 4.0 * a * b) * s + 4.0 * c2 * d2)
        + (4.0 * a2 * b * (s - d2)).powi(2)
        + 64.0 * c2 * d2 * s * (d2 + a * b) * a2;
    let big_d = k * (4.0 * a2 * b * (s - d2));
    let big_e = k * k;
    [big_a, big_b, big_c, big_d, big_e]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalConfiguration {
    pub n: usize,
    pub ext_dim: usize,
    /// All amplitudes: the N conclusive ones first, then the inconclusive
    /// ones state by state.
    pub g: Vec<Complex64>,
    pub layout: Vec<StateLayout>,
    /// The final states, each of length `ext_dim`.
    pub states_f: Vec<Vec<Complex64>>,
    /// Pair data; `None` for two states.
    pub polynomial: Option<PolynomialData>,
    pub branch: PairBranch,
}

impl FinalConfiguration {
    /// Assembles a configuration from raw amplitudes without checking any
    /// overlap or normalization constraint.
    pub fn from_amplitudes(n: usize, ext_dim: usize, g: Vec<Complex64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 states, got {n}")));
        }
        if ext_dim < 2 * n - 1 {
            return Err(Error::InvalidInput(format!(
                "extended dimension {ext_dim} is below 2N - 1 = {}",
                2 * n - 1
            )));
        }
        if g.len() != amplitude_count(n) {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes given, expected {}",
                g.len(),
                amplitude_count(n)
            )));
        }
        let layout = layout(n);
        let states_f = layout
            .iter()
            .enumerate()
            .map(|(s, l)| {
                let mut v = vec![ZERO; ext_dim];
                v[s] = g[l.conclusive];
                for (m, &idx) in l.inconclusive.iter().enumerate() {
                    v[n + m] = g[idx];
                }
                v
            })
            .collect();
        Ok(Self {
            n,
            ext_dim,
            g,
            layout,
            states_f,
            polynomial: None,
            branch: if n == 2 {
                PairBranch::TwoState
            } else {
                PairBranch::Polynomial
            },
        })
    }

    /// Inconclusive amplitudes of state `s`, in ancilla order.
    pub fn inconclusive(&self, s: usize) -> Vec<Complex64> {
        self.layout[s].inconclusive.iter().map(|&i| self.g[i]).collect()
    }

    /// Gram matrix of the final states.
    pub fn gram(&self) -> ComplexMatrix {
        crate::numerics::gram_matrix(&ComplexMatrix::from_columns(&self.states_f).expect("final states share ext_dim"))
            .expect("finite amplitudes")
    }
}

pub fn build_final_configuration(
    coeffs: &ComplexMatrix,
    sol: &UsdSolution,
    ext_dim: usize,
) -> Result<FinalConfiguration> {
    build_final_configuration_with(coeffs, sol, ext_dim, &Tolerances::default())
}

fn remainder_check(value: f64, what: impl FnOnce() -> String, tol: &Tolerances) -> Result<f64> {
    if value < -tol.gram {
        return Err(Error::InconsistentAmplitudes(format!("{} is {value:.3e}", what())));
    }
    // Rounding-level remainders would otherwise leave ~1e-8 amplitudes.
    Ok(if value <= ZERO_PIVOT_REMAINDER { 0.0 } else { value })
}

pub fn build_final_configuration_with(
    coeffs: &ComplexMatrix,
    sol: &UsdSolution,
    ext_dim: usize,
    tol: &Tolerances,
) -> Result<FinalConfiguration> {
    let n = coeffs.cols();
    if !coeffs.is_square() || sol.p.len() != n || n < 2 {
        return Err(Error::InvalidInput(format!(
            "{} probabilities for a {}x{} ladder matrix",
            sol.p.len(),
            coeffs.rows(),
            coeffs.cols()
        )));
    }
    if ext_dim < 2 * n - 1 {
        return Err(Error::InvalidInput(format!(
            "extended dimension {ext_dim} is below 2N - 1 = {}",
            2 * n - 1
        )));
    }
    let p = &sol.p;
    if let Some((index, &pi)) = p.iter().enumerate().find(|(_, &pi)| pi <= tol.zero_probability) {
        return Err(Error::DegenerateConclusiveAmplitude { index, p: pi });
    }
    let gram = &coeffs.adjoint() * coeffs;

    // h[s][m]: amplitude of state s on ancilla m.
    let mut h: Vec<Vec<Complex64>> = (0..n).map(|s| vec![ZERO; if s == 0 { n - 1 } else { n - s }]).collect();
    let remainder = |s: usize, upto: usize, h: &[Vec<Complex64>]| -> f64 {
        gram[(s, s)].re - p[s] - h[s][..upto].iter().map(|z| z.norm_sqr()).sum::<f64>()
    };

    if n >= 3 {
        let r = remainder_check(
            remainder(n - 1, 0, &h),
            || format!("normalization remainder of state {}", n - 1),
            tol,
        )?;
        h[n - 1][0] = Complex64::new(r.sqrt(), 0.0);
        for j in (2..n).rev() {
            let m = n - 1 - j;
            let pivot = h[j][m].re;
            for k in 0..j {
                let mut num = gram[(j, k)];
                for q in 0..m {
                    num -= h[j][q].conj() * h[k][q];
                }
                h[k][m] = if pivot * pivot <= ZERO_PIVOT_REMAINDER {
                    if num.norm() > tol.gram {
                        return Err(Error::RecursionBreakdown {
                            state: k,
                            ancilla: m,
                            detail: format!(
                                "pivot amplitude of state {j} is {pivot:.3e} but the residual overlap is {:.3e}",
                                num.norm()
                            ),
                        });
                    }
                    ZERO
                } else {
                    num / pivot
                };
            }
            if j > 2 {
                let r = remainder_check(
                    remainder(j - 1, m + 1, &h),
                    || format!("normalization remainder of state {}", j - 1),
                    tol,
                )?;
                h[j - 1][m + 1] = Complex64::new(r.sqrt(), 0.0);
            }
        }
    }

    let last = n - 2;
    let a = remainder_check(remainder(0, last, &h), || "pair parameter a".into(), tol)?;
    let b = remainder_check(remainder(1, last, &h), || "pair parameter b".into(), tol)?;
    let mut z = gram[(0, 1)];
    for q in 0..last {
        z -= h[0][q].conj() * h[1][q];
    }

    let (x, y, branch, polynomial) = if n == 2 {
        let (x, y) = anchored_pair(a, b, z, tol).ok_or_else(|| {
            Error::InconsistentAmplitudes(format!(
                "two-state pair has |x|^2 = {a:.6e}, |y|^2 = {b:.6e} but |overlap|^2 = {:.6e}",
                z.norm_sqr()
            ))
        })?;
        (x, y, PairBranch::TwoState, None)
    } else {
        let data = PolynomialData::from_parameters(a, b, z.re, z.im, ladder_theta(coeffs));
        let (x, y, branch) = solve_final_pair(&data, tol)?;
        (x, y, branch, Some(data))
    };
    h[0][last] = x;
    h[1][last] = y;

    let mut g = Vec::with_capacity(amplitude_count(n));
    g.extend(p.iter().map(|&pi| Complex64::new(pi.sqrt(), 0.0)));
    for hs in &h {
        g.extend_from_slice(hs);
    }
    let mut fc = FinalConfiguration::from_amplitudes(n, ext_dim, g)?;
    fc.polynomial = polynomial;
    fc.branch = branch;
    Ok(fc)
}

fn ladder_theta(coeffs: &ComplexMatrix) -> f64 {
    if coeffs.cols() < 3 {
        return 0.0;
    }
    let t = coeffs[(1, 2)].arg() - coeffs[(0, 2)].arg();
    let two_pi = 2.0 * std::f64::consts::PI;
    let wrapped = t.rem_euclid(two_pi);
    if wrapped > std::f64::consts::PI {
        wrapped - two_pi
    } else {
        wrapped
    }
}

/// Recomputes the pair data from partial amplitudes `g` (the last pair's
/// entries are ignored) and the ladder coefficients.
pub fn compute_polynomial_data(coeffs: &ComplexMatrix, g: &[Complex64]) -> Result<PolynomialData> {
    let n = coeffs.cols();
    if n < 2 || g.len() != amplitude_count(n) {
        return Err(Error::InvalidInput(format!(
            "{} amplitudes for {n} states, expected {}",
            g.len(),
            amplitude_count(n.max(2))
        )));
    }
    let gram = &coeffs.adjoint() * coeffs;
    let lay = layout(n);
    let last = n - 2;
    let h0: Vec<Complex64> = lay[0].inconclusive[..last].iter().map(|&i| g[i]).collect();
    let h1: Vec<Complex64> = lay[1].inconclusive[..last].iter().map(|&i| g[i]).collect();
    let a = gram[(0, 0)].re - g[0].norm_sqr() - h0.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let b = gram[(1, 1)].re - g[1].norm_sqr() - h1.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let tol = Tolerances::default();
    let a = remainder_check(a, || "pair parameter a".into(), &tol)?;
    let b = remainder_check(b, || "pair parameter b".into(), &tol)?;
    let mut z = gram[(0, 1)];
    for (x, y) in h0.iter().zip(&h1) {
        z -= x.conj() * y;
    }
    Ok(PolynomialData::from_parameters(a, b, z.re, z.im, ladder_theta(coeffs)))
}

fn pair_residual(x: Complex64, y: Complex64, z: Complex64) -> f64 {
    (x.conj() * y - z).norm()
}

/// `x = sqrt(a)`, `y = z / sqrt(a)` (or the mirror anchored on `b`),
/// accepted only when the unanchored norm also holds.
fn anchored_pair(a: f64, b: f64, z: Complex64, tol: &Tolerances) -> Option<(Complex64, Complex64)> {
    let (x, y) = if a <= tol.gram && b <= tol.gram {
        (ZERO, ZERO)
    } else if a >= b {
        let x = Complex64::new(a.sqrt(), 0.0);
        (x, z / a.sqrt())
    } else {
        let y = Complex64::new(b.sqrt(), 0.0);
        (z.conj() / b.sqrt(), y)
    };
    let ok = (x.norm_sqr() - a).abs() <= tol.gram
        && (y.norm_sqr() - b).abs() <= tol.gram
        && pair_residual(x, y, z) <= tol.gram;
    ok.then_some((x, y))
}

/// Solves `|x|^2 = a`, `|y|^2 = b`, `conj(x) y = c + i d`.
fn solve_final_pair(data: &PolynomialData, tol: &Tolerances) -> Result<(Complex64, Complex64, PairBranch)> {
    let (a, b, c, d) = (data.a, data.b, data.c, data.d);
    let z = data.overlap();
    let no_root = || Error::NoRealRoot { a, b, c, d };
    let sa = a.sqrt();
    let sb = b.sqrt();

    if d.abs() <= tol.degenerate_branch {
        let x = Complex64::new(sa, 0.0);
        if let Some(y) = [1.0, -1.0]
            .into_iter()
            .map(|s| Complex64::new(s * sb, 0.0))
            .find(|&y| pair_residual(x, y, z) <= tol.gram)
        {
            return Ok((x, y, PairBranch::RealOverlap));
        }
    } else if c.abs() <= tol.degenerate_branch {
        let y = Complex64::new(sb, 0.0);
        if let Some(x) = [1.0, -1.0]
            .into_iter()
            .map(|s| Complex64::new(0.0, s * sa))
            .find(|&x| pair_residual(x, y, z) <= tol.gram)
        {
            return Ok((x, y, PairBranch::ImaginaryOverlap));
        }
    } else if let Some((x, y)) = polynomial_pair(data, tol) {
        return Ok((x, y, PairBranch::Polynomial));
    }
    anchored_pair(a, b, z, tol)
        .map(|(x, y)| (x, y, PairBranch::ClosedForm))
        .ok_or_else(no_root)
}

fn polynomial_pair(data: &PolynomialData, tol: &Tolerances) -> Option<(Complex64, Complex64)> {
    let (a, b, c) = (data.a, data.b, data.c);
    let z = data.overlap();
    let roots = real_even_polynomial_roots(data.coefficients()).ok()?;
    let mut candidates: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() <= REAL_ROOT_IMAG * r.norm().max(1.0))
        .map(|r| r.re)
        .filter(|x| x * x <= a + ADMISSIBLE_SLACK)
        .collect();
    candidates.sort_by(|p, q| (p * p).total_cmp(&(q * q)).then(q.total_cmp(p)));

    for xi in candidates {
        let disc = (2.0 * c * xi).powi(2) - 4.0 * a * (b * xi * xi + c * c - a * b);
        let disc = if disc < 0.0 && disc > -ADMISSIBLE_SLACK {
            0.0
        } else {
            disc
        };
        if disc < 0.0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let yi = (2.0 * c * xi + sign * disc.sqrt()) / (2.0 * a);
            if yi * yi > b + ADMISSIBLE_SLACK {
                continue;
            }
            let xr = (a - xi * xi).max(0.0).sqrt();
            let yr = (b - yi * yi).max(0.0).sqrt();
            for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let x = Complex64::new(s1 * xr, xi);
                let y = Complex64::new(s2 * yr, yi);
                if pair_residual(x, y, z) <= tol.gram {
                    return Some((x, y));
                }
            }
        }
    }
    None
}
