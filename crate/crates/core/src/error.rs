use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can report. Each variant maps to a stable
/// code string (see [`Error::code`]) and a process exit class.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not Hermitian (max |m - m^H| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("polynomial has all-zero coefficients")]
    DegeneratePolynomial,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state {index} has norm {norm:.9}, expected 1")]
    InvalidState { index: usize, norm: f64 },

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("states are linearly dependent (Gram min eigenvalue {min_eigenvalue:.3e})")]
    LinearlyDependent { min_eigenvalue: f64 },

    #[error("Gram matrix is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("no strictly feasible starting point for the detection probabilities")]
    Infeasible,

    #[error("barrier solver did not converge within {iterations} Newton iterations")]
    SolverStalled { iterations: usize },

    #[error("grid oracle supports at most 3 states, got {n}")]
    OracleTooLarge { n: usize },

    #[error("state {index} has conclusive probability {p:.3e}; no final configuration is synthesized")]
    DegenerateConclusiveAmplitude { index: usize, p: f64 },

    #[error(
        "no admissible real root for the last amplitude pair \
         (a={a:.6e}, b={b:.6e}, c={c:.6e}, d={d:.6e}); check input states, \
         they may be nearly linearly dependent"
    )]
    NoRealRoot { a: f64, b: f64, c: f64, d: f64 },

    #[error("amplitude recursion broke down at state {state}, ancilla {ancilla}: {detail}")]
    RecursionBreakdown {
        state: usize,
        ancilla: usize,
        detail: String,
    },

    #[error("inconsistent amplitudes: {0}")]
    InconsistentAmplitudes(String),

    #[error("synthesis failed (residual {residual:.3e})")]
    SynthesisFailure { residual: f64 },

    #[error("matrix is not unitary (max |U^H U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("rotation product does not reproduce the unitary (error {error:.3e})")]
    DecompositionFailure { error: f64 },

    #[error("no Euler angle branch reproduces rotation ({k},{l})")]
    AngleExtractionFailure { k: usize, l: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
}

impl Error {
    /// Stable identifier for the variant, used in reports and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::DegeneratePolynomial => "DegeneratePolynomial",
            Error::Parse(_) => "ParseError",
            Error::InvalidInput(_) => "InvalidInput",
            Error::InvalidState { .. } => "InvalidState",
            Error::InvalidPriors(_) => "InvalidPriors",
            Error::LinearlyDependent { .. } => "LinearlyDependent",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::Infeasible => "Infeasible",
            Error::SolverStalled { .. } => "SolverStalled",
            Error::OracleTooLarge { .. } => "OracleTooLarge",
            Error::DegenerateConclusiveAmplitude { .. } => "DegenerateConclusiveAmplitude",
            Error::NoRealRoot { .. } => "NoRealRoot",
            Error::RecursionBreakdown { .. } => "RecursionBreakdown",
            Error::InconsistentAmplitudes(_) => "InconsistentAmplitudes",
            Error::SynthesisFailure { .. } => "SynthesisFailure",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::DecompositionFailure { .. } => "DecompositionFailure",
            Error::AngleExtractionFailure { .. } => "AngleExtractionFailure",
            Error::Io(_) => "IoError",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse(_)
            | Error::InvalidInput(_)
            | Error::InvalidState { .. }
            | Error::InvalidPriors(_)
            | Error::LinearlyDependent { .. }
            | Error::OracleTooLarge { .. }
            | Error::Io(_) => ErrorClass::Validation,
            _ => ErrorClass::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
