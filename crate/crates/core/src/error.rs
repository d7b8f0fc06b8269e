use thiserror::Error;

/// Errors surfaced by model construction, exact evolution, and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter landed outside its admissible range.
    #[error("invalid {name}: {value} (expected {expected})")]
    InvalidParameter {
        /// Name of the offending field, e.g. "theta".
        name: &'static str,
        /// The rejected value.
        value: f64,
        /// Human-readable description of the admissible range.
        expected: &'static str,
    },

    /// Full-space enumeration was requested for a cube too large to tabulate.
    #[error("dimension n = {n} exceeds the full-enumeration cap of {cap}")]
    DimensionTooLarge {
        /// Requested dimension.
        n: usize,
        /// Largest dimension for which 2^n tables are allowed.
        cap: usize,
    },

    /// A coordinate index fell outside 0..n.
    #[error("coordinate {index} out of range for dimension {n}")]
    CoordinateOutOfRange {
        /// The rejected index.
        index: usize,
        /// Dimension of the cube.
        n: usize,
    },

    /// Two objects built over different state spaces were combined.
    #[error("mismatched state spaces: {left} vs {right}")]
    DimensionMismatch {
        /// Description of the left operand's space.
        left: String,
        /// Description of the right operand's space.
        right: String,
    },

    /// A level pair or lattice point violates parity or range constraints.
    #[error("invalid lattice point: {detail}")]
    InvalidLatticePoint {
        /// What failed and for which values.
        detail: String,
    },

    /// The operation is only defined for the half-lazy chain.
    #[error("operation requires laziness q = 1/2, got q = {q}")]
    RequiresHalfLazy {
        /// The laziness actually configured.
        q: f64,
    },

    /// Accumulated mass drift exceeded the evolution guard.
    #[error("probability mass drifted by {drift:e} after {steps} steps (guard {guard:e})")]
    MassDrift {
        /// Total absolute drift absorbed by renormalization so far.
        drift: f64,
        /// Number of kernel applications performed.
        steps: u64,
        /// The configured abort threshold.
        guard: f64,
    },

    /// A threshold was not crossed inside the computed horizon.
    #[error("target {target} not reached by t = {last_t} (last value {last_value})")]
    Unresolved {
        /// The threshold that was being chased.
        target: f64,
        /// Largest time examined.
        last_t: u64,
        /// Value at that time.
        last_value: f64,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
