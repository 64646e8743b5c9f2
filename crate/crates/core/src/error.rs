use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mass matrix: {0}")]
    InvalidMass(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver failed: {message}")]
    Solver { message: String, log: Vec<String> },

    #[error("shifted matrix is singular at shift {shift}")]
    ShiftSingular { shift: f64 },

    #[error("invalid weight: {detail}")]
    InvalidWeight { detail: String, h: Option<f64> },

    #[error("minimization ambiguous: {message}")]
    MinimizationAmbiguous {
        message: String,
        table: Vec<(f64, f64)>,
    },

    #[error("degenerate chart at ({0}, {1})")]
    DegenerateChart(f64, f64),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("closest-point projection failed for {point:?}")]
    ProjectionFailed { point: [f64; 3] },

    #[error("collar depth {delta} exceeds focal bound (max principal curvature {max_curvature})")]
    CollarTooDeep { delta: f64, max_curvature: f64 },

    #[error("vector potential inconsistent with field: curl mismatch {mismatch:e}")]
    PotentialInconsistent { mismatch: f64 },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("quadrature did not converge: last relative change {last_change:e}")]
    Quadrature { last_change: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("mode window exhausted after {} modes", table.len())]
    WindowExhausted { table: Vec<(i64, f64)> },

    #[error("ill-conditioned fit (condition number {condition:e})")]
    FitConditioning { condition: f64 },

    #[error("extrapolation unsafe: non-monotone convergence (finest value {finest})")]
    ExtrapolationUnsafe { finest: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("transverse solve failed at y' = ({y1}, {y2}): {source}")]
    AtChartPoint {
        y1: f64,
        y2: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors raised by numerical solvers rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Solver { .. }
            | Error::ShiftSingular { .. }
            | Error::MinimizationAmbiguous { .. }
            | Error::ProjectionFailed { .. }
            | Error::Quadrature { .. }
            | Error::WindowExhausted { .. }
            | Error::FitConditioning { .. }
            | Error::ExtrapolationUnsafe { .. }
            | Error::Assembly(_) => true,
            Error::AtChartPoint { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
