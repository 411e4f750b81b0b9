use thiserror::Error;

/// Errors surfaced by the solver modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("matrix is not Hermitian (max |m[i][j] - conj(m[j][i])| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace deviates from 1 by {deviation:.3e}")]
    TraceDeviation { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("generator matrix violates {0}")]
    GeneratorStructure(String),

    #[error(
        "steady state is not unique: constrained system is numerically singular \
         (1-norm condition estimate {condition:.3e})"
    )]
    DegenerateSteadyState { condition: f64 },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("matrix exponential scaling failed: squaring depth {squarings} exceeds limit for scaled norm {norm:.3e}")]
    ScalingFailure { norm: f64, squarings: u32 },

    #[error("adaptive integrator step size underflowed at t = {t:.6e} for parameters {params}")]
    StiffIntegration { t: f64, params: String },

    #[error("Hermiticity drift {drift:.3e} along trajectory exceeds 1e-8")]
    HermiticityDrift { drift: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimes(String),

    #[error("steady-state population of the {transition} emitting level is below {floor:.1e}; normalization undefined")]
    VanishingNormalization { transition: &'static str, floor: f64 },

    #[error("correlation value {value:.3e} at tau = {tau} is negative beyond round-off")]
    NegativeCorrelation { tau: f64, value: f64 },

    #[error("detuning grid does not cover the required span: {0}")]
    GridCoverage(String),

    #[error("trajectory input: {0}")]
    TrajectoryInput(String),

    #[error("steady-state solve failed at delta_p = {delta_p}: {source}")]
    SweepPoint {
        delta_p: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
