//! Library-wide error type.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Exact and float values mixed inside one container.
    ModeMismatch,
    /// Matrix or polynomial dimensions do not line up.
    ShapeMismatch(String),
    /// A division that had to be exact left a remainder.
    InexactDivision,
    /// Newton polygon has no interior: collinear or empty support.
    DegenerateCurve,
    /// Root iteration failed; carries per-root residual diagnostics.
    NoConvergence(String),
    /// Class parameters out of range (size, band offsets, or power count).
    InvalidClass(String),
    /// Characteristic data does not match any monodromy class.
    NotInFamily(String),
    /// Closed-form classification and the explicit product pattern disagree.
    ClassifyDisagreement(String),
    /// No verified gauge recipe covers this class; the general construction
    /// is conjectural and is not assumed here.
    UnsupportedGauge(String),
    /// The sampled or supplied point is too degenerate for the requested
    /// operation (singular gauge, vanishing denominator, multiple root).
    NonGenericPoint(String),
    /// Period out of range for the requested structure.
    InvalidPeriod(String),
    /// Request exceeds the supported symbolic size; refused rather than
    /// attempted.
    CapExceeded(String),
    /// An internal invariant failed; indicates a bug, not bad input.
    Internal(String),
    /// Coefficients degenerate: genus of the sampled curve disagrees with
    /// the class value.
    DegenerateCoefficients(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ModeMismatch => write!(f, "mixed exact/float arithmetic modes"),
            Error::ShapeMismatch(s) => write!(f, "shape mismatch: {}", s),
            Error::InexactDivision => write!(f, "polynomial division left a remainder"),
            Error::DegenerateCurve => {
                write!(f, "curve is rational or reducible; genus test unavailable")
            }
            Error::NoConvergence(s) => write!(f, "root finding did not converge: {}", s),
            Error::InvalidClass(s) => write!(f, "invalid class: {}", s),
            Error::NotInFamily(s) => write!(f, "not in the monodromy family: {}", s),
            Error::ClassifyDisagreement(s) => {
                write!(f, "class formula disagrees with product pattern: {}", s)
            }
            Error::UnsupportedGauge(s) => write!(
                f,
                "no verified gauge recipe for {}; existence of such a gauge is conjectural",
                s
            ),
            Error::NonGenericPoint(s) => write!(f, "non-generic point: {}", s),
            Error::InvalidPeriod(s) => write!(f, "invalid period: {}", s),
            Error::CapExceeded(s) => write!(f, "size cap exceeded: {}", s),
            Error::Internal(s) => write!(f, "internal consistency failure: {}", s),
            Error::DegenerateCoefficients(s) => write!(f, "degenerate coefficients: {}", s),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
