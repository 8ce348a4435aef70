//! Reck decomposition of a unitary into two-level rotations and the Euler
//! form of each rotation.
//!
//! Rotations `R_kl` are applied in lexicographic order `(0,1), (0,2), ...`
//! so that `R_last ... R_1 U = I`, hence `U = R_1^H R_2^H ... R_last^H`.
//! Each `R_kl^H` restricted to kets `k, l` is written as
//! `e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)` with
//! `Rz(t) = diag(e^{-it/2}, e^{it/2})` and
//! `Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ONE, ZERO};

/// Largest matrix size accepted by [`decompose`].
pub const MAX_DIMENSION: usize = 32;
/// Unitarity tolerance for the input of [`decompose`].
const INPUT_UNITARITY: f64 = 1e-8;
/// Frobenius reconstruction error above which the decomposition fails.
const MAX_RECONSTRUCTION_ERROR: f64 = 1e-7;
/// Target entries at or below this modulus give an identity-like step.
const TRIVIAL_ENTRY: f64 = 1e-13;
/// Entries of `W` at or below this modulus count as zero when picking angles.
const DEGENERATE_ENTRY: f64 = 1e-12;
/// Round-trip tolerance for an Euler angle branch.
const EULER_TOLERANCE: f64 = 1e-8;

pub type Block = [[Complex64; 2]; 2];

/// Euler angles in degrees. `gamma` is the full angle; tables usually show
/// `gamma / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl EulerAngles {
    pub fn half_gamma(&self) -> f64 {
        self.gamma / 2.0
    }

    /// `e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)` as a 2x2 block.
    pub fn block(&self) -> Block {
        let (a, b, g, d) = (
            self.alpha.to_radians(),
            self.beta.to_radians(),
            self.gamma.to_radians(),
            self.delta.to_radians(),
        );
        let (s, c) = (g / 2.0).sin_cos();
        let phase = Complex64::from_polar(1.0, a);
        let e = |t: f64| Complex64::from_polar(1.0, t);
        [
            [phase * e(-(b + d) / 2.0) * c, -phase * e(-(b - d) / 2.0) * s],
            [phase * e((b - d) / 2.0) * s, phase * e((b + d) / 2.0) * c],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationStep {
    pub k: usize,
    pub l: usize,
    /// Full-size two-level matrix `R_kl` (identity outside rows/cols k, l).
    pub matrix: ComplexMatrix,
    /// Euler angles of `R_kl^H`.
    pub angles: EulerAngles,
}

impl RotationStep {
    /// The (k, l) block of `R_kl`.
    pub fn block(&self) -> Block {
        let m = &self.matrix;
        [
            [m[(self.k, self.k)], m[(self.k, self.l)]],
            [m[(self.l, self.k)], m[(self.l, self.l)]],
        ]
    }

    /// The (k, l) block of `R_kl^H`, which the Euler angles describe.
    pub fn dagger_block(&self) -> Block {
        adjoint_block(&self.block())
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.max_abs_diff(&ComplexMatrix::identity(self.matrix.rows())) <= 1e-12
    }

    /// Max entrywise difference between the Euler reconstruction and `R_kl^H`.
    pub fn euler_round_trip_error(&self) -> f64 {
        block_diff(&self.angles.block(), &self.dagger_block())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationSequence {
    pub steps: Vec<RotationStep>,
    /// `|prod_i R_i^H - U|_F`.
    pub reconstruction_error: f64,
}

impl RotationSequence {
    /// `R_1^H R_2^H ... R_last^H`.
    pub fn product(&self, n: usize) -> ComplexMatrix {
        product_of_daggers(&self.steps, n)
    }
}

fn product_of_daggers(steps: &[RotationStep], n: usize) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(n);
    for step in steps {
        // acc <- acc * R^H, touching only columns k and l.
        let b = step.dagger_block();
        for i in 0..n {
            let (x, y) = (acc[(i, step.k)], acc[(i, step.l)]);
            acc[(i, step.k)] = x * b[0][0] + y * b[1][0];
            acc[(i, step.l)] = x * b[0][1] + y * b[1][1];
        }
    }
    acc
}

fn adjoint_block(b: &Block) -> Block {
    [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]]
}

fn block_diff(x: &Block, y: &Block) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((x[i][j] - y[i][j]).norm());
        }
    }
    m
}

fn embed_block(n: usize, k: usize, l: usize, b: &Block) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(n);
    m[(k, k)] = b[0][0];
    m[(k, l)] = b[0][1];
    m[(l, k)] = b[1][0];
    m[(l, l)] = b[1][1];
    m
}

/// Left-multiplies rows `k`, `l` of `w` by the block.
fn apply_rows(w: &mut ComplexMatrix, k: usize, l: usize, b: &Block) {
    for j in 0..w.cols() {
        let (x, y) = (w[(k, j)], w[(l, j)]);
        w[(k, j)] = b[0][0] * x + b[0][1] * y;
        w[(l, j)] = b[1][0] * x + b[1][1] * y;
    }
}

/// Decomposes a unitary into `n (n - 1) / 2` two-level rotations.
pub fn decompose(u: &ComplexMatrix) -> Result<RotationSequence> {
    if !u.is_square() || u.rows() < 2 || u.rows() > MAX_DIMENSION {
        return Err(Error::InvalidInput(format!(
            "decomposition needs a square matrix of size 2..={MAX_DIMENSION}, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let deviation = u.unitarity_error();
    if !(deviation <= INPUT_UNITARITY) {
        return Err(Error::NotUnitary { deviation });
    }
    let n = u.rows();
    let mut w = u.clone();
    let mut steps = Vec::with_capacity(n * (n - 1) / 2);
    for k in 0..n - 1 {
        for l in k + 1..n {
            let block = if k == n - 2 {
                // The trailing block is all that is left; undo it exactly.
                adjoint_block(&[[w[(k, k)], w[(k, l)]], [w[(l, k)], w[(l, l)]]])
            } else {
                let (x, y) = (w[(k, k)], w[(l, k)]);
                if y.norm() <= TRIVIAL_ENTRY {
                    let phase = if x.norm() > 0.0 { (x / x.norm()).conj() } else { ONE };
                    [[phase, ZERO], [ZERO, ONE]]
                } else {
                    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
                    let (a, b) = (x / r, y / r);
                    [[a.conj(), b.conj()], [b, -a]]
                }
            };
            apply_rows(&mut w, k, l, &block);
            let matrix = embed_block(n, k, l, &block);
            let angles = euler_angles_of_block(&adjoint_block(&block), k, l)?;
            steps.push(RotationStep { k, l, matrix, angles });
        }
    }
    let reconstruction_error = product_of_daggers(&steps, n).frobenius_diff(u);
    if !(reconstruction_error <= MAX_RECONSTRUCTION_ERROR) {
        return Err(Error::DecompositionFailure {
            error: reconstruction_error,
        });
    }
    Ok(RotationSequence {
        steps,
        reconstruction_error,
    })
}

/// Euler angles of `step.matrix^H` restricted to its (k, l) block.
pub fn euler_angles(step: &RotationStep) -> Result<EulerAngles> {
    euler_angles_of_block(&step.dagger_block(), step.k, step.l)
}

/// Wraps degrees into (-180, 180].
fn wrap180(x: f64) -> f64 {
    let y = x.rem_euclid(360.0);
    if y > 180.0 {
        y - 360.0
    } else {
        y
    }
}

/// Angles with `gamma / 2` in [0, 90] and `alpha, beta, delta` in (-180, 180].
pub fn euler_angles_of_block(b: &Block, k: usize, l: usize) -> Result<EulerAngles> {
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let alpha0 = det.arg().to_degrees() / 2.0;
    for alpha in [alpha0, alpha0 + 180.0] {
        let phase = Complex64::from_polar(1.0, -alpha.to_radians());
        let w00 = b[0][0] * phase;
        let w10 = b[1][0] * phase;
        let half_gamma = w10.norm().atan2(w00.norm()).to_degrees();
        let (beta, delta) = if w10.norm() <= DEGENERATE_ENTRY {
            (0.0, -2.0 * w00.arg().to_degrees())
        } else if w00.norm() <= DEGENERATE_ENTRY {
            (0.0, -2.0 * w10.arg().to_degrees())
        } else {
            let (p00, p10) = (w00.arg().to_degrees(), w10.arg().to_degrees());
            (p10 - p00, -p00 - p10)
        };
        // Shifting beta or delta by 360 degrees flips the sign of the SU(2)
        // factor, which alpha absorbs.
        let mut alpha = alpha;
        let wb = wrap180(beta);
        if ((wb - beta) / 360.0).round() as i64 % 2 != 0 {
            alpha += 180.0;
        }
        let wd = wrap180(delta);
        if ((wd - delta) / 360.0).round() as i64 % 2 != 0 {
            alpha += 180.0;
        }
        let angles = EulerAngles {
            alpha: wrap180(alpha),
            beta: wb,
            gamma: 2.0 * half_gamma,
            delta: wd,
        };
        if block_diff(&angles.block(), b) <= EULER_TOLERANCE {
            return Ok(angles);
        }
    }
    Err(Error::AngleExtractionFailure { k, l })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &EulerAngles, want: [f64; 4]) -> bool {
        let got = [a.alpha, a.beta, a.half_gamma(), a.delta];
        got.iter().zip(want).all(|(g, w)| (g - w).abs() < 0.01)
    }

    #[test]
    fn identity_gives_identity_steps() {
        let seq = decompose(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(seq.steps.len(), 6);
        assert!(seq.steps.iter().all(RotationStep::is_identity));
        assert_eq!(seq.reconstruction_error, 0.0);
        for s in &seq.steps {
            assert_eq!(
                [s.angles.alpha, s.angles.beta, s.angles.gamma, s.angles.delta],
                [0.0, 0.0, 0.0, 0.0]
            );
        }
    }

    #[test]
    fn hadamard_like_block_angles() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let b = [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]];
        let a = euler_angles_of_block(&b, 0, 1).unwrap();
        assert!(close(&a, [90.0, 0.0, 45.0, 180.0]), "{a:?}");
    }

    #[test]
    fn angle_ranges_and_round_trip() {
        let blocks = [
            [[c(0.0, 1.0), ZERO], [ZERO, c(0.0, -1.0)]],
            [[ZERO, c(0.0, 1.0)], [c(0.0, 1.0), ZERO]],
            [[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]],
            [[c(-1.0, 0.0), ZERO], [ZERO, c(-1.0, 0.0)]],
        ];
        for b in &blocks {
            let a = euler_angles_of_block(b, 0, 1).unwrap();
            assert!(block_diff(&a.block(), b) < 1e-12);
            for x in [a.alpha, a.beta, a.delta] {
                assert!(x > -180.0 && x <= 180.0);
            }
            assert!((0.0..=180.0).contains(&a.gamma));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut m = ComplexMatrix::identity(3);
        m[(0, 0)] = c(1.001, 0.0);
        assert!(matches!(decompose(&m), Err(Error::NotUnitary { .. })));
        assert!(matches!(
            decompose(&ComplexMatrix::identity(1)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            decompose(&ComplexMatrix::identity(33)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn two_by_two_is_a_single_step() {
        let u = ComplexMatrix::from_rows(&[vec![c(0.0, 0.6), c(0.8, 0.0)], vec![c(0.8, 0.0), c(0.0, 0.6)]]).unwrap();
        let seq = decompose(&u).unwrap();
        assert_eq!(seq.steps.len(), 1);
        assert!(seq.reconstruction_error < 1e-14);
    }
}
