use thiserror::Error;

use crate::sequences::Family;
use crate::spectra::SetKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectral sets of different kinds ({0:?} vs {1:?})")]
    KindMismatch(SetKind, SetKind),

    #[error("operation requires a nonempty set")]
    EmptySet,

    #[error("distance is undefined for sets carrying an unbounded (±∞) flag")]
    Unbounded,

    #[error("negative stream index {0}")]
    Index(i64),

    #[error("scenario family mismatch: expected {expected:?}, got {got:?}")]
    FamilyMismatch { expected: Family, got: Family },

    #[error("|alpha| = {0} lies outside the closed unit disk")]
    Domain(f64),

    #[error("root bracketing failed at scan resolution {resolution}: {detail}")]
    Bracketing { resolution: usize, detail: String },

    #[error("zero finder located {found} of {expected} zeros at grid size {grid}")]
    Resolution { found: usize, expected: usize, grid: usize },

    #[error("window [{lo}, {hi}] is not covered by the table [{table_lo}, {table_hi}]")]
    Window { lo: i64, hi: i64, table_lo: i64, table_hi: i64 },

    #[error("raw window has {got} sites, at least {need} are required")]
    TooSmallWindow { got: usize, need: usize },

    #[error("scenario class `{0}` has no structural right-limit description; use detect_right_limits")]
    UnsupportedClass(String),

    #[error("trial vector support touches the window edge")]
    Support,

    #[error("every localized piece j_alpha * phi vanishes")]
    DegenerateSupport,

    #[error("power iteration did not converge after {iterations} steps")]
    NonConvergence { iterations: usize, history: Vec<f64> },

    #[error("periodic Verblunsky coefficient {0} is unimodular")]
    DegeneratePeriod(usize),

    #[error("malformed block: {0}")]
    Structure(String),

    #[error("unknown theorem tag `{tag}`; known tags: {known}")]
    Registry { tag: String, known: String },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by malformed input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Scenario(_)
                | Error::InvalidArgument(_)
                | Error::Registry { .. }
                | Error::Json(_)
                | Error::FamilyMismatch { .. }
                | Error::UnsupportedClass(_)
                | Error::Index(_)
        )
    }
}
