//! Source-side sliding-window encoder and sink-side decoder.

mod decoder;
mod encoder;
pub mod rate;

use rand::Rng;
use thiserror::Error;

pub use decoder::Decoder;
pub use encoder::{Encoder, EncoderConfig};
pub use rate::{CodeRate, RateError, RateSchedule, SlotRole};

use crate::wire::WireError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("expected source packet {expected}, got {got}")]
    NonContiguous { expected: u64, got: u64 },
    #[error("source index {0} does not fit the 16-bit window opening")]
    IndexOverflow(u64),
    #[error("coding window is full")]
    WindowFull,
    #[error("coding window is empty")]
    EmptyWindow,
    #[error("window capacity must be at least 1")]
    ZeroWindow,
    #[error("payload is {got} bytes, flow uses {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// What to do when a push would exceed the window capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    /// Refuse new packets and keep sending repairs over the full window.
    #[default]
    HoldAndRepair,
    /// Evict the lowest index to keep the window sliding.
    DropOldest,
}

impl std::str::FromStr for OverflowPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "hold" | "hold-and-repair" => Ok(Self::HoldAndRepair),
            "drop-oldest" | "drop" => Ok(Self::DropOldest),
            other => Err(format!("unknown overflow policy {other:?}")),
        }
    }
}

impl std::fmt::Display for OverflowPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HoldAndRepair => "hold-and-repair",
            Self::DropOldest => "drop-oldest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePacket {
    pub index: u64,
    pub payload: Vec<u8>,
}

impl SourcePacket {
    pub fn new(index: u64, payload: Vec<u8>) -> Self {
        Self { index, payload }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsumeOutcome {
    /// The packet raised the rank; lists source indices decoded by it.
    Innovative { newly_decoded: Vec<u64> },
    Redundant,
}

impl ConsumeOutcome {
    pub fn is_innovative(&self) -> bool {
        matches!(self, Self::Innovative { .. })
    }
}

/// Uniform coefficients, except position `nonzero_at` which is drawn from the
/// nonzero elements only.
pub(crate) fn draw_coefficients<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    nonzero_at: usize,
) -> Vec<u8> {
    (0..len)
        .map(|i| {
            if i == nonzero_at {
                rng.gen_range(1..=255)
            } else {
                rng.gen()
            }
        })
        .collect()
}
