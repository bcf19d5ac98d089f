use alloc::string::String;

use crate::C64;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate lift: the zero vector has no projective class")]
    DegenerateLift,
    #[error("degenerate parameter {0}: the lift has vanishing resultant")]
    DegenerateParameter(C64),
    #[error("incorrect critical marking: {0}")]
    IncorrectMarking(String),
    #[error("operation requires a fully marked family")]
    NotFullyMarked,
    #[error("critical index {index} out of range (family has {count} marked points)")]
    CriticalIndex { index: usize, count: usize },
    #[error("green function did not settle within {0} iterations")]
    GreenNonConvergence(usize),
    #[error("root finder failure: {0}")]
    RootFinder(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("dynatomic factor for the divisor m = {0} vanishes")]
    VanishingDenominator(usize),
    #[error("exact polynomial division left a nonzero remainder")]
    InexactDivision,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("subrectangle must stay at least two cells inside the grid")]
    BoundaryViolation,
    #[error("cycle classification mismatch: {0}")]
    Classification(String),
}
