//! Layered orthogonal lattice detection for two-antenna MIMO links.
//!
//! The crate covers the full signal path of a 2-transmit-antenna spatial
//! multiplexing link: Gray-labeled square QAM ([`constellation`]), the real
//! lattice form of the complex channel ([`lattice`]), the closed-form
//! orthogonal triangularization that drives the layered search
//! ([`preprocess`]), exact maximum-likelihood hard detection with an
//! `M * M` candidate scan ([`detect`]), exact max-log bit LLRs from two
//! complementary layer orderings ([`softbits`]), a bit-interleaved coded
//! modulation chain ([`bicm`]), and a Monte Carlo link simulator with
//! deterministic parallel execution ([`simkit`]).
//!
//! Conventions used throughout:
//!
//! * The transmit vector carries unit average energy per complex symbol, and
//!   the channel input is scaled by `sqrt(es / 2)` so that `es` is the total
//!   transmit energy per channel use across both antennas.
//! * Complex noise has total variance `n0` per receive antenna (`n0 / 2` per
//!   real dimension).
//! * Bit LLRs are `ln P(bit = 1 | y) - ln P(bit = 0 | y)`: positive values
//!   favor a transmitted `1`.

pub mod bicm;
pub mod constellation;
pub mod cost;
pub mod detect;
pub mod lattice;
pub mod preprocess;
pub mod simkit;
pub mod softbits;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported QAM order {0}: expected 4, 16, or 64")]
    UnsupportedOrder(usize),
    #[error("{context}: value must be finite")]
    NonFinite { context: &'static str },
    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },
    #[error("component {value} does not lie on the constellation grid")]
    OffGrid { value: f64 },
    #[error("channel must have at least 2 receive rows, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("energy per channel use must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("noise density must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("degenerate channel: effective cross term {r3:.3e} below threshold for scale {scale:.3e}")]
    DegenerateChannel { r3: f64, scale: f64 },
    #[error("rank-deficient channel: normal-equation determinant {0:.3e}")]
    RankDeficient(f64),
    #[error("frame of {bits} bits does not split into {per_use}-bit channel uses")]
    FrameSplit { bits: usize, per_use: usize },
    #[error("interleaver expects {expected} entries, got {got}")]
    InterleaverSize { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
