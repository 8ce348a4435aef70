//! Seeded random ensembles and unitaries shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use neumark::ensemble::Ensemble;
use neumark::numerics::ComplexMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut TestRng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / 2f64.sqrt()
}

pub fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_nalgebra(m: &DMatrix<Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Haar unitary from the QR of a complex Gaussian matrix with the phases of
/// R's diagonal divided out (nalgebra QR, independent of the crate's SVD).
pub fn haar_unitary(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    let z = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] = q[(i, j)] * phase;
        }
    }
    from_nalgebra(&u)
}

/// Priors drawn from a symmetric Dirichlet(shape) distribution.
pub fn dirichlet(rng: &mut TestRng, n: usize, shape: f64) -> Vec<f64> {
    let g = Gamma::new(shape, 1.0).unwrap();
    let x: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let r = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / r).collect()
}

/// `n` Haar-random states in dimension `d` with Dirichlet(1) priors.
pub fn haar_ensemble(rng: &mut TestRng, n: usize, d: usize) -> Ensemble {
    let states = (0..n)
        .map(|_| normalized((0..d).map(|_| gaussian(rng)).collect()))
        .collect();
    Ensemble::new(d, states, dirichlet(rng, n, 1.0)).unwrap()
}

/// Random ensemble whose states are `W (e_j + eps g_j)` normalized, with `W`
/// Haar and `g_j` complex Gaussian. Moderate `eps` keeps every optimal
/// conclusive probability strictly positive.
pub fn near_orthogonal_ensemble(rng: &mut TestRng, n: usize, d: usize, eps: f64) -> Ensemble {
    let w = haar_unitary(rng, d);
    let states = (0..n)
        .map(|j| {
            let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng) * (eps / (d as f64).sqrt())).collect();
            v[j] += 1.0;
            normalized(w.mul_vec(&v))
        })
        .collect();
    Ensemble::new(d, states, dirichlet(rng, n, 4.0)).unwrap()
}

/// Draws a pipeline-ready ensemble: N in {2, 3, 4}, d = N + {0, 1, 2},
/// eps in [0.2, 0.7].
pub fn pipeline_ensemble(rng: &mut TestRng) -> Ensemble {
    let n = rng.random_range(2..=4);
    let d = n + rng.random_range(0..=2);
    let eps = rng.random_range(0.2..0.7);
    near_orthogonal_ensemble(rng, n, d, eps)
}

pub fn bb84_document() -> &'static str {
    r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
        "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#
}

/// Two equal-prior real states with overlap `s`.
pub fn two_state(s: f64) -> Ensemble {
    let c = |x: f64| Complex64::new(x, 0.0);
    Ensemble::new(
        2,
        vec![vec![c(1.0), c(0.0)], vec![c(s), c((1.0 - s * s).sqrt())]],
        vec![0.5, 0.5],
    )
    .unwrap()
}
