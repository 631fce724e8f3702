use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("number of battery units must be at least 1")]
    ZeroUnits,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("frequencies {0:?} are not commensurate within tolerance (denominator bound 64)")]
    IncommensurateFrequencies(Vec<f64>),

    #[error("harmonic multipliers {multipliers:?} inconsistent with base frequency {base}")]
    InconsistentMultipliers { base: f64, multipliers: [u32; 3] },

    #[error("integration did not converge: final saturation moved by {change:e} (tolerance {tol:e})")]
    NonConvergence { change: f64, tol: f64 },

    #[error("regulating equation has no sign change on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("truncation order {n_max} below largest harmonic {needed}")]
    TruncationTooSmall { n_max: usize, needed: usize },

    #[error("band selection ambiguous: {0}")]
    BandSelectionAmbiguous(String),

    #[error("mode matrix is singular (condition number {condition:e})")]
    SingularModeMatrix { condition: f64 },

    #[error("stroboscopic law requires a single unit, got n_units = {0}")]
    WrongN(usize),

    #[error("row {row} of sweep failed: {source}")]
    SweepRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Errors caused by user input, as opposed to numerical or model failures.
    pub fn is_input_error(&self) -> bool {
        if let Error::SweepRow { source, .. } = self {
            return source.is_input_error();
        }
        matches!(
            self,
            Error::ZeroUnits
                | Error::DimensionMismatch { .. }
                | Error::Domain { .. }
                | Error::InvalidConfig(_)
                | Error::InconsistentMultipliers { .. }
                | Error::TruncationTooSmall { .. }
                | Error::WrongN(_)
        )
    }

    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { what, detail: detail.into() }
    }
}
