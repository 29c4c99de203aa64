use thiserror::Error;

use crate::grid::ElementIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {field} {reason}")]
    InvalidScenario { field: &'static str, reason: String },

    /// Some element column sits at or beyond the trajectory axis, so its
    /// orbit radius would degenerate.
    #[error("element column p={p} does not lie strictly outside the trajectory axis (offset {offset} m)")]
    AxisCrossing { p: usize, offset: f64 },

    #[error("reference element {index} outside the {p_count}x{q_count} grid")]
    ReferenceOutOfRange {
        index: ElementIndex,
        p_count: usize,
        q_count: usize,
    },

    #[error("station-element distance {distance} m below the {min} m guard")]
    DegenerateDistance { distance: f64, min: f64 },

    #[error("element {index}: {source}")]
    Element {
        index: ElementIndex,
        #[source]
        source: Box<Error>,
    },

    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("time mismatch: snapshot at {snapshot} s, phases at {assignment} s")]
    TimeMismatch { snapshot: f64, assignment: f64 },

    #[error("phase {value} rad at element {index} is outside [0, 2pi)")]
    PhaseOutOfRange { index: ElementIndex, value: f64 },

    #[error("reference phase {0} rad is outside [0, 2pi]")]
    ReferencePhaseOutOfRange(f64),

    #[error("closed-form delay-spread bound requires zeta terms built with zero reference phase (got {0} rad)")]
    NonzeroReferencePhase(f64),

    #[error("phase rates are only defined for the proposed and reversed strategies")]
    RateUnavailable,

    #[error("exhaustive search over {elements} elements with {levels} levels exceeds the guard (at most {max_elements} elements, 1..={max_levels} levels)")]
    OracleGuard {
        elements: usize,
        levels: usize,
        max_elements: usize,
        max_levels: usize,
    },

    #[error("finite-difference step must be positive (got {0})")]
    InvalidStep(f64),

    #[error("element {index} crosses a phase wrap inside the difference window")]
    WrapInWindow { index: ElementIndex },
}

impl Error {
    pub(crate) fn at(self, index: ElementIndex) -> Self {
        Error::Element {
            index,
            source: Box::new(self),
        }
    }
}
