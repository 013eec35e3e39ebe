use thiserror::Error;

use crate::ring::PolMode;

/// Errors raised by the ring, optics, modulation, link and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible linewidth: fwhm {fwhm_hz} Hz cannot be realised with fsr {fsr_hz} Hz ({reason})")]
    InfeasibleLinewidth {
        fwhm_hz: f64,
        fsr_hz: f64,
        reason: &'static str,
    },

    #[error("{freq_hz} Hz is not a {pol} resonance")]
    NotResonant { freq_hz: f64, pol: PolMode },

    #[error("band [{lo_hz}, {hi_hz}] Hz contains no {pol} resonance")]
    MissingComb { lo_hz: f64, hi_hz: f64, pol: PolMode },

    #[error("modulator expects a single-carrier input, got {lines} lines")]
    MultiLineInput { lines: usize },

    #[error("ratio `{0}` is undefined: denominator power is zero")]
    UndefinedRatio(&'static str),

    #[error("cot^2 diverges at theta = 0 (carrier-only limit)")]
    CotangentDivergence,

    #[error("rf grid is empty")]
    EmptyGrid,

    #[error("rf grid must be strictly increasing and positive (index {index})")]
    InvalidGrid { index: usize },

    #[error("passbands are not resolvable: TE and TM passbands centred at {te_hz} Hz and {tm_hz} Hz")]
    UnresolvablePassbands { te_hz: f64, tm_hz: f64 },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("no resolvable resonance extremum in trace")]
    NoExtremum,

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("thermal regression for {pol} is rank deficient: {reason}")]
    RankDeficient { pol: PolMode, reason: &'static str },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
