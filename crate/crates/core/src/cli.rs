//! Command-line front end: `solve`, `verify` and `oracle`.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 numerical failure,
//! 4 verification failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::ensemble::load_ensemble_with;
use crate::error::{Error, ErrorClass};
use crate::ladder::ladder_coefficients;
use crate::pipeline::{run_pipeline, Stage, StageError};
use crate::report::{render_text, run_checks, PipelineReport, ReportStatus};
use crate::sdp::{oracle_usd, reciprocal_states, solve_usd};
use crate::tolerances::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "neumark",
    version,
    about = "Optimal unambiguous state discrimination via a Neumark extension"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write a report.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        tol_unitary: Option<f64>,
        #[arg(long)]
        tol_gram: Option<f64>,
    },
    /// Recompute every check from a JSON report.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
    /// Compare the barrier solver with the grid oracle (at most 3 states).
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        grid_step: f64,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Validation => EXIT_VALIDATION,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

fn report_error(err: &mut dyn Write, stage: Stage, e: &Error) -> i32 {
    let _ = writeln!(err, "error [{stage}] {}: {e}", e.code());
    exit_code(e)
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Solve {
            input,
            output,
            format,
            tol_unitary,
            tol_gram,
        } => {
            let mut tol = Tolerances::default();
            for (name, value, slot) in [
                ("--tol-unitary", tol_unitary, &mut tol.unitary),
                ("--tol-gram", tol_gram, &mut tol.gram),
            ] {
                if let Some(v) = value {
                    if !(v.is_finite() && v > 0.0) {
                        let e = Error::InvalidInput(format!("{name} must be positive and finite, got {v}"));
                        return report_error(err, Stage::Ensemble, &e);
                    }
                    *slot = v;
                }
            }
            cmd_solve(&input, &output, format, &tol, out, err)
        }
        Command::Verify { report } => cmd_verify(&report, out, err),
        Command::Oracle { input, grid_step } => cmd_oracle(&input, grid_step, out, err),
    }
}

pub fn cmd_solve(
    input: &Path,
    output: &Path,
    format: Format,
    tol: &Tolerances,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let ensemble = match read(input).and_then(|text| load_ensemble_with(&text, tol)) {
        Ok(e) => e,
        Err(e) => return report_error(err, Stage::Ensemble, &e),
    };
    let result = match run_pipeline(&ensemble, tol) {
        Ok(r) => r,
        Err(StageError { stage, error }) => return report_error(err, stage, &error),
    };
    let report = match PipelineReport::from_output(&result) {
        Ok(r) => r,
        Err(e) => return report_error(err, Stage::Rotations, &e),
    };
    let body = match format {
        Format::Json => report.to_json(),
        Format::Text => render_text(&report),
    };
    if let Err(e) = fs::write(output, body) {
        let e = Error::Io(format!("{}: {e}", output.display()));
        return report_error(err, Stage::Ensemble, &e);
    }
    let _ = writeln!(
        out,
        "total detection probability {:.6} ({} states, extended dimension {})",
        report.solution.total_pd,
        ensemble.n(),
        result.ext_dim()
    );
    if report.status == ReportStatus::Failed {
        let _ = writeln!(err, "report FAILED: {}", report.failed_checks.join(", "));
        return EXIT_VERIFICATION;
    }
    EXIT_OK
}

pub fn cmd_verify(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let checks = match read(path)
        .and_then(|text| PipelineReport::from_json(&text))
        .and_then(|r| run_checks(&r))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error [verify] {}: {e}", e.code());
            return EXIT_VALIDATION;
        }
    };
    let mut failed = Vec::new();
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{verdict} {} {:.3e} (tolerance {:.1e})",
            c.name, c.value, c.tolerance
        );
        if !c.passed {
            failed.push(c.name.as_str());
        }
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "verification failed: {}", failed.join(", "));
        EXIT_VERIFICATION
    }
}

pub fn cmd_oracle(input: &Path, grid_step: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let ensemble = match read(input).and_then(|text| load_ensemble_with(&text, &Tolerances::default())) {
        Ok(e) => e,
        Err(e) => return report_error(err, Stage::Ensemble, &e),
    };
    let rec = match ladder_coefficients(&ensemble).and_then(|c| reciprocal_states(&c)) {
        Ok(r) => r,
        Err(e) => return report_error(err, Stage::Reciprocal, &e),
    };
    let grid = match oracle_usd(&ensemble, &rec, grid_step) {
        Ok(s) => s,
        Err(e) => return report_error(err, Stage::Sdp, &e),
    };
    let solved = match solve_usd(&ensemble, &rec) {
        Ok(s) => s,
        Err(e) => return report_error(err, Stage::Sdp, &e),
    };
    let fmt = |p: &[f64]| p.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "solve_usd  total_pd {:.6}  p {}", solved.total_pd, fmt(&solved.p));
    let _ = writeln!(out, "oracle_usd total_pd {:.6}  p {}", grid.total_pd, fmt(&grid.p));
    let _ = writeln!(
        out,
        "gap {:.6e} (grid step {grid_step})",
        (solved.total_pd - grid.total_pd).abs()
    );
    EXIT_OK
}
