use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:.3e} below threshold {threshold:.3e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("quadrature did not converge on [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("energy {energy} sits at the threshold of line {line} (U = {potential})")]
    AtThreshold {
        line: usize,
        energy: f64,
        potential: f64,
    },

    #[error("incoming line {0} is a closed channel")]
    ClosedIncomingChannel(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid band: drain potential V = {v} must lie below U = {u}")]
    InvalidBand { u: f64, v: f64 },

    #[error("no half-maximum band: {0}")]
    NoBand(String),

    #[error("no second-sheet pole: {0}")]
    NoPole(String),

    #[error("compound graph system is singular at E = {energy} (discrete resonance of the finite structure)")]
    SingularSystem { energy: f64 },
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to inputs
    /// that violate a precondition.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::NoConvergence { .. }
                | Error::NoSignChange { .. }
                | Error::AtThreshold { .. }
                | Error::SingularSystem { .. }
        )
    }
}
