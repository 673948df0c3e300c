use super::{CodecError, ConsumeOutcome};
use crate::linalg::{Combination, Echelon};
use crate::wire::{CodedPacket, FeedbackPacket};

/// Sink-side Gaussian-elimination decoder over global source indices.
///
/// Rows are kept in reduced row-echelon form, so a source packet is decoded
/// exactly when its pivot row has no other nonzero coefficient.
#[derive(Debug, Clone)]
pub struct Decoder {
    payload_len: usize,
    basis: Echelon,
    decoded: Vec<bool>,
    decoded_count: u64,
    fully_decoded: u64,
    consumed: u64,
}

impl Decoder {
    pub fn new(payload_len: usize) -> Self {
        Self {
            payload_len,
            basis: Echelon::new(),
            decoded: Vec::new(),
            decoded_count: 0,
            fully_decoded: 0,
            consumed: 0,
        }
    }

    pub fn consume(&mut self, packet: &CodedPacket) -> Result<ConsumeOutcome, CodecError> {
        packet.validate()?;
        if packet.payload.len() != self.payload_len {
            return Err(CodecError::PayloadLength {
                expected: self.payload_len,
                got: packet.payload.len(),
            });
        }
        self.consumed += 1;
        let row = Combination::new(
            packet.header.window_opening as u64,
            packet.window_coefficients().to_vec(),
            packet.payload.clone(),
        );
        let Some(inserted) = self.basis.insert(row) else {
            return Ok(ConsumeOutcome::Redundant);
        };

        let mut newly = Vec::new();
        for pivot in std::iter::once(inserted.pivot).chain(inserted.touched) {
            if self.basis.row(pivot).is_some_and(Combination::is_unit) && self.mark_decoded(pivot) {
                newly.push(pivot);
            }
        }
        newly.sort_unstable();
        while self.is_decoded(self.fully_decoded) {
            self.fully_decoded += 1;
        }
        Ok(ConsumeOutcome::Innovative {
            newly_decoded: newly,
        })
    }

    fn mark_decoded(&mut self, index: u64) -> bool {
        let i = index as usize;
        if self.decoded.len() <= i {
            self.decoded.resize(i + 1, false);
        }
        if self.decoded[i] {
            return false;
        }
        self.decoded[i] = true;
        self.decoded_count += 1;
        true
    }

    pub fn is_decoded(&self, index: u64) -> bool {
        self.decoded.get(index as usize).copied().unwrap_or(false)
    }

    /// The recovered payload of source packet `index`, once decoded.
    pub fn payload(&self, index: u64) -> Option<&[u8]> {
        if !self.is_decoded(index) {
            return None;
        }
        self.basis.row(index).map(Combination::payload)
    }

    pub fn rank(&self) -> u64 {
        self.basis.rank() as u64
    }

    /// Length of the contiguous decoded prefix.
    pub fn fully_decoded(&self) -> u64 {
        self.fully_decoded
    }

    /// Number of individually decoded packets, prefix or not.
    pub fn decoded_count(&self) -> u64 {
        self.decoded_count
    }

    pub fn partial_rank(&self) -> u64 {
        self.rank() - self.fully_decoded
    }

    pub fn packets_consumed(&self) -> u64 {
        self.consumed
    }

    pub fn feedback(&self) -> FeedbackPacket {
        FeedbackPacket::new(self.fully_decoded, self.partial_rank())
    }
}
