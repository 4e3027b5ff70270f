//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

use crate::words::Word;

/// Errors raised by constructions and checks.
///
/// Mathematical violations carry the witness that triggered them so a
/// failing invariant can always be named together with a concrete word.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands live on different alphabets.
    AlphabetMismatch,
    /// A symbol index is out of range for its alphabet.
    SymbolOutOfRange { index: usize, size: usize },
    /// A distribution had a negative entry.
    NegativeMass { index: usize },
    /// A distribution's total differs from 1 beyond tolerance.
    TotalNotOne { total: String },
    /// A sub-measure exceeded total mass 1.
    TotalAboveOne { total: String },
    /// A word measure is not stationary (left/right marginals differ).
    NotStationary { discrepancy: String },
    /// A coupling's marginals do not match the required conditionals.
    CouplingMarginalMismatch { word: Word },
    /// The queried word is shorter than the operation requires.
    WordTooShort { needed: usize, got: usize },
    /// `depth < k` in a variation or ratio query.
    DepthBelowAgreement { depth: usize, agree: usize },
    /// The chain has no unique invariant measure.
    NotIrreducible,
    /// A conditional was requested at a zero-probability past.
    ZeroProbabilityPast { word: Word },
    /// Deterministic-table invariant violated: more than one positive
    /// symbol (or a value outside {0,1} after normalisation).
    NotDeterministic { lookback: u64, word: Word },
    /// A table lookup hit a word the table does not cover.
    TableUndefinedAt { lookback: u64, word: Word },
    /// Subtracting tables from the conditional law went negative.
    InconsistentTables { word: Word, symbol: usize },
    /// The level mass `p_k` came out non-positive with mass still left:
    /// the model is not a uniform martingale at this resolution.
    NotUniformMartingaleAtResolution { level: usize },
    /// Declared variation bounds do not sum: variant (b) precondition.
    VariationsNotSummable,
    /// Berbee coefficients do not decay below a required threshold
    /// within the probe range.
    CannotCertifyRatioDecay { level: usize, threshold: String },
    /// A tau measure came out negative: level thresholds were violated.
    TauNegative { level: usize, word: Word, symbol: usize },
    /// Mass sequence for the ratio construction is not positive / not ≤ 1.
    BadMassSequence,
    /// The alphabet does not fit the index function's arity (`|A| > 2^n`).
    AlphabetTooLarge { size: usize, capacity: usize },
    /// Determinization needs a complete base representation.
    IncompleteRepresentation { residual: String },
    /// An index-function value overflowed the machine range.
    IndexOverflow,
    /// Simulation burn-in shorter than the deepest look-back.
    BurnInTooShort { needed: u64, got: u64 },
    /// Unknown catalog example name.
    UnknownExample { name: String },
    /// A truncation parameter too small to represent the structure.
    TruncationTooSmall { name: String, minimum: usize },
    /// A named check failed; carries the invariant and its witness.
    CheckFailed { invariant: String, witness: Word },
    /// Digit expansion input outside [0, 1].
    ValueOutsideUnitInterval,
    /// Anything the caller declared impossible.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AlphabetMismatch => write!(f, "alphabet mismatch"),
            Error::SymbolOutOfRange { index, size } => {
                write!(f, "symbol index {index} out of range for alphabet of size {size}")
            }
            Error::NegativeMass { index } => {
                write!(f, "negative mass at symbol index {index}")
            }
            Error::TotalNotOne { total } => {
                write!(f, "distribution total {total} differs from 1 beyond tolerance")
            }
            Error::TotalAboveOne { total } => {
                write!(f, "sub-measure total {total} exceeds 1")
            }
            Error::NotStationary { discrepancy } => {
                write!(f, "word measure is not stationary (marginal discrepancy {discrepancy})")
            }
            Error::CouplingMarginalMismatch { word } => {
                write!(f, "coupling marginals mismatch at middle word {word}")
            }
            Error::WordTooShort { needed, got } => {
                write!(f, "word of length {got} where {needed} is required")
            }
            Error::DepthBelowAgreement { depth, agree } => {
                write!(f, "probe depth {depth} below agreement length {agree}")
            }
            Error::NotIrreducible => {
                write!(f, "chain is reducible: no unique invariant measure")
            }
            Error::ZeroProbabilityPast { word } => {
                write!(f, "conditional requested at zero-probability past {word}")
            }
            Error::NotDeterministic { lookback, word } => {
                write!(f, "table at look-back {lookback} is not deterministic at word {word}")
            }
            Error::TableUndefinedAt { lookback, word } => {
                write!(f, "table at look-back {lookback} undefined at word {word}")
            }
            Error::InconsistentTables { word, symbol } => {
                write!(f, "tables overdraw the conditional law at word {word}, symbol {symbol}")
            }
            Error::NotUniformMartingaleAtResolution { level } => {
                write!(f, "level {level}: non-positive level mass with residual left; not a uniform martingale at this resolution")
            }
            Error::VariationsNotSummable => {
                write!(f, "declared variation bounds are not summable")
            }
            Error::CannotCertifyRatioDecay { level, threshold } => {
                write!(f, "ratio coefficients do not fall below {threshold} for level {level} within the probe range")
            }
            Error::TauNegative { level, word, symbol } => {
                write!(f, "tau measure negative at level {level}, word {word}, symbol {symbol}")
            }
            Error::BadMassSequence => {
                write!(f, "mass sequence must be positive with total at most 1")
            }
            Error::AlphabetTooLarge { size, capacity } => {
                write!(f, "alphabet of size {size} exceeds index-function capacity {capacity}")
            }
            Error::IncompleteRepresentation { residual } => {
                write!(f, "base representation incomplete (residual {residual})")
            }
            Error::IndexOverflow => write!(f, "index-function value overflowed"),
            Error::BurnInTooShort { needed, got } => {
                write!(f, "burn-in {got} shorter than deepest look-back {needed}")
            }
            Error::UnknownExample { name } => write!(f, "unknown example `{name}`"),
            Error::TruncationTooSmall { name, minimum } => {
                write!(f, "truncation too small for `{name}` (minimum {minimum})")
            }
            Error::CheckFailed { invariant, witness } => {
                write!(f, "check `{invariant}` failed at witness {witness}")
            }
            Error::ValueOutsideUnitInterval => write!(f, "value outside [0, 1]"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

#[cfg(test)]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
