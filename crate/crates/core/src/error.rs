use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {theta} outside domain [{lo}, {hi}]")]
    Domain { theta: f64, lo: f64, hi: f64 },

    #[error("derivative order {0} not supported (maximum is 4)")]
    Order(usize),

    #[error("degenerate parameterization at θ = {theta}: speed {speed:e}")]
    Degenerate { theta: f64, speed: f64 },

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("Frenet-Serret frame undefined at θ = {theta} (vanishing curvature)")]
    FsfSingularity { theta: f64 },

    #[error("exponential step too large: |ω|·Δθ = {0} is not below π")]
    StepTooLarge(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("curve is C{available} but order {required} continuity is required")]
    Continuity { required: usize, available: usize },

    #[error("closest-point search did not converge (guess ξ = {guess})")]
    NonConvergence { guess: f64 },

    #[error("stationary point at ξ = {xi} is not a local minimum of the distance")]
    Saddle { xi: f64 },

    #[error("closest point clamps to the domain end ξ = {xi}")]
    Clamped { xi: f64 },

    #[error("point outside the tube of validity (rate denominator {denominator:e})")]
    TubeOfValidity { denominator: f64 },

    #[error("LP solver failure: {message}")]
    Solver { message: String, trace: Vec<String> },

    #[error("corridor invalid at ξ = {xi}: {reason}")]
    CorridorInvalid { xi: f64, reason: String },

    #[error("corridor generation failed: {0}")]
    Generation(String),

    #[error("stalled progress: ξ̇ = {0:e} is below the floor")]
    Stall(f64),

    #[error("transcription failed: {0}")]
    Transcription(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad input data rather than numerical breakdown.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::Order(_)
                | Error::Construction(_)
                | Error::Precondition(_)
                | Error::Continuity { .. }
                | Error::Io(_)
                | Error::Parse(_)
                | Error::Transcription(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
