use num_complex::Complex64;

use crate::error::{Error, Result};

/// Leading coefficients at or below this fraction of the largest one are
/// dropped before building the companion matrix.
const TRIM_RELATIVE: f64 = 1e-13;
const MAX_QR_ITERATIONS: usize = 200;

/// Roots of `A x^8 + B x^6 + C x^4 + D x^2 + E` given `coeffs = [A, B, C, D, E]`.
///
/// Solves the quartic in `y = x^2` through the eigenvalues of its companion
/// matrix and returns `+sqrt(y)` and `-sqrt(y)` for each root `y`. When the
/// leading coefficients vanish the quartic degree drops, so the result has
/// `2 * degree` entries rather than always eight.
pub fn real_even_polynomial_roots(coeffs: [f64; 5]) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite polynomial coefficient".into()));
    }
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::DegeneratePolynomial);
    }
    let start = coeffs
        .iter()
        .position(|c| c.abs() > TRIM_RELATIVE * scale)
        .expect("the largest coefficient survives trimming");
    let quartic = &coeffs[start..];
    let degree = quartic.len() - 1;

    let ys = if degree == 0 {
        Vec::new()
    } else {
        let lead = quartic[0];
        let mut h = vec![vec![Complex64::new(0.0, 0.0); degree]; degree];
        for (j, &c) in quartic[1..].iter().enumerate() {
            h[0][j] = Complex64::new(-c / lead, 0.0);
        }
        for i in 1..degree {
            h[i][i - 1] = Complex64::new(1.0, 0.0);
        }
        hessenberg_eigenvalues(h)?
            .into_iter()
            .map(|y| polish(quartic, y))
            .collect()
    };

    let mut roots = Vec::with_capacity(2 * ys.len());
    for y in ys {
        let x = y.sqrt();
        roots.push(x);
        roots.push(-x);
    }
    Ok(roots)
}

/// Evaluates `A x^8 + B x^6 + C x^4 + D x^2 + E`.
pub fn eval_even_polynomial(coeffs: [f64; 5], x: Complex64) -> Complex64 {
    let y = x * x;
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * y + c)
}

fn horner(poly: &[f64], y: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut derivative = Complex64::new(0.0, 0.0);
    for &c in poly {
        derivative = derivative * y + value;
        value = value * y + c;
    }
    (value, derivative)
}

/// A couple of Newton steps, kept only while they reduce the residual.
fn polish(poly: &[f64], mut y: Complex64) -> Complex64 {
    let (mut value, mut derivative) = horner(poly, y);
    for _ in 0..3 {
        if derivative.norm() == 0.0 {
            break;
        }
        let candidate = y - value / derivative;
        let (v, d) = horner(poly, candidate);
        if v.norm() >= value.norm() {
            break;
        }
        y = candidate;
        value = v;
        derivative = d;
    }
    y
}

/// Givens rotation `[[c, s], [-conj(s), c]]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, y.conj() / y.norm());
    }
    let c = x.norm() / r;
    let s = (x / x.norm()) * y.conj() / r;
    (c, s)
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_trace = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_trace * half_trace - det).sqrt();
    let l1 = half_trace + disc;
    let l2 = half_trace - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of a complex upper Hessenberg matrix by shifted QR with deflation.
fn hessenberg_eigenvalues(mut h: Vec<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let n = h.len();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut hi = n;
    let mut iterations = 0;
    while hi > 0 {
        let end = hi - 1;
        if end == 0 {
            eigenvalues.push(h[0][0]);
            break;
        }
        let mut lo = end;
        while lo > 0 {
            let sub = h[lo][lo - 1].norm();
            let diag = h[lo - 1][lo - 1].norm() + h[lo][lo].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                h[lo][lo - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == end {
            eigenvalues.push(h[end][end]);
            hi -= 1;
            iterations = 0;
            continue;
        }
        iterations += 1;
        if iterations > MAX_QR_ITERATIONS {
            return Err(Error::InvalidMatrix("companion QR iteration did not converge".into()));
        }
        let mu = if iterations % 11 == 0 {
            // Exceptional shift to break cycles.
            h[end][end] + Complex64::new(h[end][end - 1].norm(), 0.0)
        } else {
            wilkinson_shift(h[end - 1][end - 1], h[end - 1][end], h[end][end - 1], h[end][end])
        };
        for i in lo..=end {
            h[i][i] -= mu;
        }
        let mut rotations = Vec::with_capacity(end - lo);
        for k in lo..end {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in lo..=end {
                let (x, y) = (h[k][j], h[k + 1][j]);
                h[k][j] = x * c + s * y;
                h[k + 1][j] = -s.conj() * x + y * c;
            }
            rotations.push((k, c, s));
        }
        for &(k, c, s) in &rotations {
            for i in lo..=end {
                let (x, y) = (h[i][k], h[i][k + 1]);
                h[i][k] = x * c + y * s.conj();
                h[i][k + 1] = -x * s + y * c;
            }
        }
        for i in lo..=end {
            h[i][i] += mu;
        }
    }
    Ok(eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_ok(coeffs: [f64; 5], roots: &[Complex64]) {
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        for &r in roots {
            let v = eval_even_polynomial(coeffs, r);
            assert!(v.norm() <= 1e-7 * scale, "residual {} at root {r}", v.norm());
        }
    }

    #[test]
    fn perfect_square() {
        let coeffs = [0.0, 0.0, 1.0, 0.0, -1.0];
        let roots = real_even_polynomial_roots(coeffs).unwrap();
        assert_eq!(roots.len(), 4);
        residual_ok(coeffs, &roots);

        let coeffs = [1.0, 0.0, -2.0, 0.0, 1.0];
        let roots = real_even_polynomial_roots(coeffs).unwrap();
        assert_eq!(roots.len(), 8);
        residual_ok(coeffs, &roots);
    }

    #[test]
    fn pure_monomial_has_zero_roots() {
        let roots = real_even_polynomial_roots([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(roots.len(), 8);
        assert!(roots.iter().all(|r| r.norm() < 1e-12));
    }

    #[test]
    fn all_zero_is_degenerate() {
        assert_eq!(real_even_polynomial_roots([0.0; 5]), Err(Error::DegeneratePolynomial));
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(real_even_polynomial_roots([0.0, 0.0, 0.0, 0.0, 3.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn known_real_roots() {
        // (y - 1)(y - 4)(y - 9)(y - 16) in y = x^2.
        let coeffs = [1.0, -30.0, 273.0, -820.0, 576.0];
        let roots = real_even_polynomial_roots(coeffs).unwrap();
        residual_ok(coeffs, &roots);
        let mut pos: Vec<f64> = roots.iter().filter(|r| r.re > 0.0).map(|r| r.re).collect();
        pos.sort_by(f64::total_cmp);
        for (got, want) in pos.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_roots() {
        // y^2 + 1 = 0 gives x = e^{i pi/4} rotations.
        let coeffs = [0.0, 0.0, 1.0, 0.0, 1.0];
        let roots = real_even_polynomial_roots(coeffs).unwrap();
        residual_ok(coeffs, &roots);
        assert!(roots.iter().all(|r| (r.norm() - 1.0).abs() < 1e-12));
    }
}
