//! Pipeline report: a serializable snapshot of every stage plus a check
//! suite that recomputes the invariants from the stored matrices alone.
//!
//! Complex numbers are stored as `[re, im]`. Indices in the report (states,
//! kets, amplitudes, rotation planes) are one-based.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleDocument;
use crate::error::{Error, Result};
use crate::final_config::{FinalConfiguration, PairBranch, PolynomialData};
use crate::numerics::{gram_matrix, hermitian_min_eigenvalue, zero_pad, ComplexMatrix};
use crate::pipeline::PipelineOutput;
use crate::rotations::EulerAngles;
use crate::sdp::UsdSolution;
use crate::tolerances::Tolerances;

pub type ComplexPair = [f64; 2];
pub type MatrixRows = Vec<Vec<ComplexPair>>;

/// Tolerance for `|U Q_i - Q_if|`.
pub const ACTION_TOLERANCE: f64 = 1e-7;
/// Tolerance for conclusive outcomes of the wrong state.
pub const CROSS_PROBABILITY_TOLERANCE: f64 = 1e-10;
/// Tolerance for the correct-state conclusive probability against `p_i`.
pub const CONCLUSIVE_PROBABILITY_TOLERANCE: f64 = 1e-8;
/// Frobenius tolerance for the rotation product and per-step Euler round trip.
pub const ROTATION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ReportStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    /// Upper-triangular N x N coefficients, column j = state j.
    pub coefficients: MatrixRows,
    pub u0: MatrixRows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    /// One-based amplitude index `g_index`.
    pub index: usize,
    pub state: usize,
    pub ket: usize,
    pub conclusive: bool,
    pub value: ComplexPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalConfigReport {
    pub ext_dim: usize,
    pub branch: PairBranch,
    pub amplitudes: Vec<AmplitudeEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub polynomial: Option<PolynomialData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub u1: MatrixRows,
    pub u: MatrixRows,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    pub k: usize,
    pub l: usize,
    /// The (k, l) block of `R_kl`.
    pub block: [[ComplexPair; 2]; 2],
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub half_gamma: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationsReport {
    pub reconstruction_error: f64,
    pub steps: Vec<RotationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub status: ReportStatus,
    pub failed_checks: Vec<String>,
    pub tolerances: Tolerances,
    pub ensemble: EnsembleDocument,
    pub ladder: LadderReport,
    pub solution: UsdSolution,
    pub final_configuration: FinalConfigReport,
    pub synthesis: SynthesisReport,
    pub rotations: RotationsReport,
    pub checks: Vec<Check>,
}

fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

fn complex(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn rows(m: &ComplexMatrix) -> MatrixRows {
    m.to_rows()
        .iter()
        .map(|r| r.iter().copied().map(pair).collect())
        .collect()
}

fn matrix(name: &str, r: &MatrixRows) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<Complex64>> = r.iter().map(|row| row.iter().copied().map(complex).collect()).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| Error::Parse(format!("{name}: {e}")))
}

impl PipelineReport {
    /// Builds the report and runs the check suite on it.
    pub fn from_output(out: &PipelineOutput) -> Result<Self> {
        let fc = &out.final_config;
        let mut amplitudes = Vec::with_capacity(fc.g.len());
        for (s, lay) in fc.layout.iter().enumerate() {
            amplitudes.push(AmplitudeEntry {
                index: lay.conclusive + 1,
                state: s + 1,
                ket: s + 1,
                conclusive: true,
                value: pair(fc.g[lay.conclusive]),
            });
            for (m, &idx) in lay.inconclusive.iter().enumerate() {
                amplitudes.push(AmplitudeEntry {
                    index: idx + 1,
                    state: s + 1,
                    ket: fc.n + m + 1,
                    conclusive: false,
                    value: pair(fc.g[idx]),
                });
            }
        }
        amplitudes.sort_by_key(|a| a.index);
        let steps = out
            .rotations
            .steps
            .iter()
            .map(|s| {
                let b = s.block();
                RotationReport {
                    k: s.k + 1,
                    l: s.l + 1,
                    block: [[pair(b[0][0]), pair(b[0][1])], [pair(b[1][0]), pair(b[1][1])]],
                    alpha: s.angles.alpha,
                    beta: s.angles.beta,
                    gamma: s.angles.gamma,
                    half_gamma: s.angles.half_gamma(),
                    delta: s.angles.delta,
                }
            })
            .collect();
        let mut report = PipelineReport {
            status: ReportStatus::Ok,
            failed_checks: Vec::new(),
            tolerances: out.tolerances,
            ensemble: out.ensemble.to_document(),
            ladder: LadderReport {
                coefficients: rows(&out.ladder.coeffs),
                u0: rows(&out.ladder.u0),
            },
            solution: out.solution.clone(),
            final_configuration: FinalConfigReport {
                ext_dim: fc.ext_dim,
                branch: fc.branch,
                amplitudes,
                polynomial: fc.polynomial,
            },
            synthesis: SynthesisReport {
                u1: rows(&out.synthesis.u1),
                u: rows(&out.synthesis.u_total),
                residual: out.synthesis.residual,
            },
            rotations: RotationsReport {
                reconstruction_error: out.rotations.reconstruction_error,
                steps,
            },
            checks: Vec::new(),
        };
        report.checks = run_checks(&report)?;
        report.failed_checks = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect();
        if !report.failed_checks.is_empty() {
            report.status = ReportStatus::Failed;
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn check(name: &str, value: f64, tolerance: f64) -> Check {
    Check {
        name: name.to_string(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn max_vec_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Recomputes every invariant from the matrices stored in the report.
/// Returns an error only when the report is structurally unusable.
pub fn run_checks(r: &PipelineReport) -> Result<Vec<Check>> {
    let tol = &r.tolerances;
    let d = r.ensemble.dimension;
    let states: Vec<Vec<Complex64>> = r
        .ensemble
        .states
        .iter()
        .map(|s| s.iter().copied().map(complex).collect())
        .collect();
    let n = states.len();
    let ext = r.final_configuration.ext_dim;
    let coeffs = matrix("ladder.coefficients", &r.ladder.coefficients)?;
    let u0 = matrix("ladder.u0", &r.ladder.u0)?;
    let u1 = matrix("synthesis.u1", &r.synthesis.u1)?;
    let u = matrix("synthesis.u", &r.synthesis.u)?;
    let p = &r.solution.p;
    let shapes_ok = n >= 2
        && states.iter().all(|s| s.len() == d)
        && r.ensemble.priors.len() == n
        && p.len() == n
        && coeffs.rows() == n
        && coeffs.cols() == n
        && u0.rows() == d
        && u0.is_square()
        && u1.rows() == ext
        && u1.is_square()
        && u.rows() == ext
        && u.is_square()
        && ext >= d;
    if !shapes_ok {
        return Err(Error::Parse("report matrices have inconsistent shapes".into()));
    }
    let mut g = vec![Complex64::new(0.0, 0.0); r.final_configuration.amplitudes.len()];
    for a in &r.final_configuration.amplitudes {
        let slot = a
            .index
            .checked_sub(1)
            .and_then(|i| g.get_mut(i))
            .ok_or_else(|| Error::Parse(format!("amplitude index {} out of range", a.index)))?;
        *slot = complex(a.value);
    }
    let fc = FinalConfiguration::from_amplitudes(n, ext, g)?;
    let input_gram = gram_matrix(&ComplexMatrix::from_columns(&states)?)?;

    let mut checks = vec![
        check("u0_unitarity", u0.unitarity_error(), tol.unitary),
        check("u1_unitarity", u1.unitarity_error(), tol.unitary),
        check("u_unitarity", u.unitarity_error(), tol.unitary),
        check("composition", (&u1 * &u0.embed(ext)).max_abs_diff(&u), tol.unitary),
    ];

    let ladder_map = states
        .iter()
        .enumerate()
        .map(|(j, q)| max_vec_diff(&u0.mul_vec(q), &zero_pad(&coeffs.column(j), d)))
        .fold(0.0, f64::max);
    let ladder_gram = gram_matrix(&coeffs)?.max_abs_diff(&input_gram);
    checks.push(check("ladder", ladder_map.max(ladder_gram), tol.gram));

    let mut m = input_gram.clone();
    for (i, &pi) in p.iter().enumerate() {
        m[(i, i)] -= pi;
    }
    let mut feasibility = (-hermitian_min_eigenvalue(&m)?).max(0.0);
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        feasibility = f64::INFINITY;
    }
    let total: f64 = r.ensemble.priors.iter().zip(p).map(|(mu, pi)| mu * pi).sum();
    feasibility = feasibility.max((total - r.solution.total_pd).abs());
    checks.push(check("feasibility", feasibility, tol.gram));

    let conclusive = fc
        .layout
        .iter()
        .zip(p)
        .map(|(lay, &pi)| (fc.g[lay.conclusive].norm_sqr() - pi).abs())
        .fold(0.0, f64::max);
    checks.push(check("conclusive_amplitudes", conclusive, tol.gram));
    checks.push(check("gram", fc.gram().max_abs_diff(&input_gram), tol.gram));

    let images: Vec<Vec<Complex64>> = states.iter().map(|q| u.mul_vec(&zero_pad(q, ext))).collect();
    let action = images
        .iter()
        .zip(&fc.states_f)
        .map(|(x, f)| max_vec_diff(x, f))
        .fold(0.0, f64::max);
    checks.push(check("action", action, ACTION_TOLERANCE));

    let (mut cross, mut correct) = (0.0_f64, 0.0_f64);
    for (i, image) in images.iter().enumerate() {
        for (k, z) in image.iter().take(n).enumerate() {
            if k == i {
                correct = correct.max((z.norm_sqr() - p[i]).abs());
            } else {
                cross = cross.max(z.norm_sqr());
            }
        }
    }
    checks.push(check("measurement_cross", cross, CROSS_PROBABILITY_TOLERANCE));
    checks.push(check(
        "measurement_conclusive",
        correct,
        CONCLUSIVE_PROBABILITY_TOLERANCE,
    ));

    let steps = &r.rotations.steps;
    let mut order_ok = steps.len() == ext * (ext - 1) / 2;
    let mut expected = (1..ext).flat_map(|k| (k + 1..=ext).map(move |l| (k, l)));
    let mut product = ComplexMatrix::identity(ext);
    let (mut block_unitarity, mut round_trip) = (0.0_f64, 0.0_f64);
    for s in steps {
        if expected.next() != Some((s.k, s.l)) {
            order_ok = false;
            break;
        }
        let b = s.block.map(|row| row.map(complex));
        let dagger = [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]];
        let block = ComplexMatrix::from_rows(&[b[0].to_vec(), b[1].to_vec()])?;
        block_unitarity = block_unitarity.max(block.unitarity_error());
        let euler = EulerAngles {
            alpha: s.alpha,
            beta: s.beta,
            gamma: s.gamma,
            delta: s.delta,
        }
        .block();
        for i in 0..2 {
            for j in 0..2 {
                round_trip = round_trip.max((euler[i][j] - dagger[i][j]).norm());
            }
        }
        let (k, l) = (s.k - 1, s.l - 1);
        for i in 0..ext {
            let (x, y) = (product[(i, k)], product[(i, l)]);
            product[(i, k)] = x * dagger[0][0] + y * dagger[1][0];
            product[(i, l)] = x * dagger[0][1] + y * dagger[1][1];
        }
    }
    checks.push(check("rotation_sequence", if order_ok { 0.0 } else { 1.0 }, 0.0));
    checks.push(check("rotation_unitarity", block_unitarity, tol.unitary));
    let reconstruction = if order_ok {
        product.frobenius_diff(&u)
    } else {
        f64::INFINITY
    };
    checks.push(check("rotation_reconstruction", reconstruction, ROTATION_TOLERANCE));
    checks.push(check("euler_round_trip", round_trip, ROTATION_TOLERANCE));
    Ok(checks)
}

fn fmt_c(z: ComplexPair) -> String {
    // Avoid printing "-0.0000".
    let clean = |x: f64| if x.abs() < 5e-5 { 0.0 } else { x };
    format!("{:+.4}{:+.4}i", clean(z[0]), clean(z[1]))
}

fn fmt_r(x: f64) -> String {
    format!("{:.4}", if x.abs() < 5e-5 { 0.0 } else { x })
}

fn write_matrix(out: &mut String, title: &str, m: &MatrixRows) {
    let _ = writeln!(out, "{title}:");
    for row in m {
        let cells: Vec<String> = row.iter().copied().map(fmt_c).collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
}

/// Fixed four-decimal rendering; angles in degrees with `gamma / 2`.
pub fn render_text(r: &PipelineReport) -> String {
    let mut out = String::new();
    let status = match r.status {
        ReportStatus::Ok => "OK",
        ReportStatus::Failed => "FAILED",
    };
    let _ = writeln!(out, "status: {status}");
    if !r.failed_checks.is_empty() {
        let _ = writeln!(out, "failed checks: {}", r.failed_checks.join(", "));
    }
    let n = r.solution.p.len();
    let _ = writeln!(
        out,
        "states: {n}, dimension: {}, extended dimension: {}",
        r.ensemble.dimension, r.final_configuration.ext_dim
    );
    let priors: Vec<String> = r.ensemble.priors.iter().copied().map(fmt_r).collect();
    let _ = writeln!(out, "priors: {}", priors.join(" "));
    let probs: Vec<String> = r.solution.p.iter().copied().map(fmt_r).collect();
    let _ = writeln!(out, "detection probabilities: {}", probs.join(" "));
    let _ = writeln!(out, "total detection probability: {}", fmt_r(r.solution.total_pd));
    let _ = writeln!(out);
    write_matrix(&mut out, "ladder coefficients", &r.ladder.coefficients);
    write_matrix(&mut out, "U0", &r.ladder.u0);
    let _ = writeln!(out);
    let _ = writeln!(out, "amplitudes (branch {:?}):", r.final_configuration.branch);
    for a in &r.final_configuration.amplitudes {
        let kind = if a.conclusive { "conclusive" } else { "inconclusive" };
        let _ = writeln!(
            out,
            "  g{:<3} state {:<2} ket {:<3} {:<12} {}",
            a.index,
            a.state,
            a.ket,
            kind,
            fmt_c(a.value)
        );
    }
    let _ = writeln!(out);
    write_matrix(&mut out, "U1", &r.synthesis.u1);
    write_matrix(&mut out, "U", &r.synthesis.u);
    let _ = writeln!(out);
    let _ = writeln!(out, "rotations (degrees):");
    let _ = writeln!(
        out,
        "  {:<8} {:>10} {:>10} {:>10} {:>10}",
        "step", "alpha", "beta", "gamma/2", "delta"
    );
    for s in &r.rotations.steps {
        let _ = writeln!(
            out,
            "  {:<8} {:>10} {:>10} {:>10} {:>10}",
            format!("R{},{}", s.k, s.l),
            fmt_r(s.alpha),
            fmt_r(s.beta),
            fmt_r(s.half_gamma),
            fmt_r(s.delta)
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "checks:");
    for c in &r.checks {
        let _ = writeln!(
            out,
            "  {:<24} {:>10.3e} <= {:<8.1e} {}",
            c.name,
            c.value,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::load_ensemble;
    use crate::pipeline::run_pipeline;

    fn bb84_report() -> PipelineReport {
        let e = load_ensemble(
            r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
                "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#,
        )
        .unwrap();
        PipelineReport::from_output(&run_pipeline(&e, &Tolerances::default()).unwrap()).unwrap()
    }

    fn failed(r: &PipelineReport) -> Vec<String> {
        run_checks(r)
            .unwrap()
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    #[test]
    fn fresh_report_passes_and_round_trips() {
        let r = bb84_report();
        assert_eq!(r.status, ReportStatus::Ok, "{:?}", r.failed_checks);
        assert_eq!(r.rotations.steps.len(), 28);
        let again = PipelineReport::from_json(&r.to_json()).unwrap();
        assert_eq!(again, r);
        assert!(failed(&again).is_empty());
    }

    #[test]
    fn perturbed_u_is_caught() {
        let mut r = bb84_report();
        r.synthesis.u[2][3][0] += 1e-3;
        assert!(failed(&r).contains(&"u_unitarity".to_string()));
    }

    #[test]
    fn perturbed_conclusive_amplitude_is_caught() {
        let mut r = bb84_report();
        r.final_configuration.amplitudes[0].value = [0.9, 0.0];
        let f = failed(&r);
        assert!(f.contains(&"gram".to_string()), "{f:?}");
    }

    #[test]
    fn text_has_table_rows() {
        let text = render_text(&bb84_report());
        assert!(text.contains("total detection probability: 0.5000"));
        let row = text.lines().find(|l| l.trim_start().starts_with("R1,2 ")).unwrap();
        assert_eq!(
            row.split_whitespace().collect::<Vec<_>>(),
            ["R1,2", "90.0000", "0.0000", "45.0000", "180.0000"]
        );
        assert_eq!(text.lines().filter(|l| l.trim_start().starts_with('R')).count(), 28);
    }
}
