//! End-to-end run: ladder form, reciprocal states, optimal detection
//! probabilities, final configuration, synthesis and rotation decomposition.

use std::fmt;

use crate::ensemble::Ensemble;
use crate::error::Error;
use crate::final_config::{build_final_configuration_with, neumark_dimension, FinalConfiguration};
use crate::ladder::LadderForm;
use crate::rotations::{decompose, RotationSequence};
use crate::sdp::{reciprocal_states, solve_usd_with, ReciprocalSet, SolverOptions, UsdSolution};
use crate::synthesis::{synthesize_u1, SynthesisResult};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ensemble,
    Ladder,
    Reciprocal,
    Sdp,
    FinalConfig,
    Synthesis,
    Rotations,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ensemble => "ensemble",
            Stage::Ladder => "ladder",
            Stage::Reciprocal => "reciprocal",
            Stage::Sdp => "usd_sdp",
            Stage::FinalConfig => "final_config",
            Stage::Synthesis => "synthesis",
            Stage::Rotations => "rotations",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A pipeline error tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage}: {error}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub error: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T, Error> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub ensemble: Ensemble,
    pub tolerances: Tolerances,
    pub ladder: LadderForm,
    pub reciprocal: ReciprocalSet,
    pub solution: UsdSolution,
    pub final_config: FinalConfiguration,
    pub synthesis: SynthesisResult,
    pub rotations: RotationSequence,
}

impl PipelineOutput {
    pub fn ext_dim(&self) -> usize {
        self.final_config.ext_dim
    }
}

pub fn run_pipeline(e: &Ensemble, tol: &Tolerances) -> Result<PipelineOutput, StageError> {
    let ladder = LadderForm::new(e).at(Stage::Ladder)?;
    let reciprocal = reciprocal_states(&ladder.coeffs).at(Stage::Reciprocal)?;
    let opts = SolverOptions {
        zero_probability: tol.zero_probability,
        ..SolverOptions::default()
    };
    let solution = solve_usd_with(e, &reciprocal, &opts).at(Stage::Sdp)?;
    let ext_dim = neumark_dimension(e.n(), e.dim());
    let final_config =
        build_final_configuration_with(&ladder.coeffs, &solution, ext_dim, tol).at(Stage::FinalConfig)?;
    let synthesis = synthesize_u1(&ladder, &final_config).at(Stage::Synthesis)?;
    let rotations = decompose(&synthesis.u_total).at(Stage::Rotations)?;
    Ok(PipelineOutput {
        ensemble: e.clone(),
        tolerances: *tol,
        ladder,
        reciprocal,
        solution,
        final_config,
        synthesis,
        rotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::load_ensemble;
    use crate::synthesis::state_map_error;
    use num_complex::Complex64;

    fn bb84() -> Ensemble {
        load_ensemble(
            r#"{"dimension": 8, "priors": [0.25, 0.25, 0.25, 0.25],
                "product_states": [["d+","d+","d+"], ["d-","d-","d-"], ["c+","c+","c+"], ["c-","c-","c-"]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn bb84_rotation_table() {
        let out = run_pipeline(&bb84(), &Tolerances::default()).unwrap();
        let steps = &out.rotations.steps;
        assert_eq!(steps.len(), 28);
        assert!(out.rotations.reconstruction_error < 1e-8);
        let want = [
            (0, 1, [90.0, 0.0, 45.0, 180.0]),
            (0, 2, [90.0, 0.0, 35.26, 180.0]),
            (0, 3, [90.0, 0.0, 30.0, 180.0]),
        ];
        for (k, l, angles) in want {
            let s = steps.iter().find(|s| s.k == k && s.l == l).unwrap();
            let got = [s.angles.alpha, s.angles.beta, s.angles.half_gamma(), s.angles.delta];
            for (g, w) in got.iter().zip(angles) {
                assert!((g - w).abs() < 0.01, "R{}{}: {got:?}", k + 1, l + 1);
            }
        }
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let b = steps[0].dagger_block();
        let expect = [[r, r], [r, -r]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[i][j] - Complex64::new(expect[i][j], 0.0)).norm() < 1e-4);
            }
        }
        for s in &steps[3..7] {
            assert!(s.is_identity(), "R{}{}", s.k + 1, s.l + 1);
        }
        for s in steps {
            assert!(s.euler_round_trip_error() < 1e-8);
        }
        assert!(
            state_map_error(
                &out.synthesis.u_total,
                out.ensemble.states(),
                &out.final_config.states_f
            ) < 1e-7
        );
    }

    #[test]
    fn duplicated_state_fails_at_ladder() {
        let s = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let e = Ensemble::new(2, vec![s.clone(), s], vec![0.5, 0.5]);
        // Independence is already enforced when the ensemble is built.
        assert!(matches!(e, Err(Error::LinearlyDependent { .. })));
    }
}
