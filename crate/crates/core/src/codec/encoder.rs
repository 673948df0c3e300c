use std::collections::VecDeque;

use rand::Rng;

use super::rate::{CodeRate, RateSchedule, SlotRole};
use super::{draw_coefficients, CodecError, OverflowPolicy, SourcePacket};
use crate::gf256::{self, Gf256};
use crate::wire::{CodedPacket, CodingHeader, FeedbackPacket};

#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub rate: CodeRate,
    /// Window capacity; also the flow-wide coefficient count on the wire.
    pub max_window: u8,
    pub overflow: OverflowPolicy,
    pub payload_len: usize,
}

/// Source-side sliding-window encoder.
///
/// Data emissions code over the whole window, including the packet pushed
/// since the previous emission. Repairs code over the same window without a
/// fresh packet. The window opening only moves forward, either through
/// feedback or the drop-oldest overflow policy.
#[derive(Debug, Clone)]
pub struct Encoder {
    config: EncoderConfig,
    window: VecDeque<SourcePacket>,
    next_index: u64,
    schedule: RateSchedule,
    fresh: bool,
}

impl Encoder {
    pub fn new(config: EncoderConfig) -> Result<Self, CodecError> {
        if config.max_window == 0 {
            return Err(CodecError::ZeroWindow);
        }
        Ok(Self {
            schedule: RateSchedule::new(config.rate),
            config,
            window: VecDeque::new(),
            next_index: 0,
            fresh: false,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn window(&self) -> impl ExactSizeIterator<Item = &SourcePacket> {
        self.window.iter()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn is_window_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// `(opening, closing)` of the current window.
    pub fn window_bounds(&self) -> Option<(u64, u64)> {
        Some((self.window.front()?.index, self.window.back()?.index))
    }

    pub fn is_full(&self) -> bool {
        self.window.len() >= self.config.max_window as usize
    }

    pub fn next_role(&self) -> SlotRole {
        self.schedule.role()
    }

    pub fn push(&mut self, packet: SourcePacket) -> Result<(), CodecError> {
        if packet.index != self.next_index {
            return Err(CodecError::NonContiguous {
                expected: self.next_index,
                got: packet.index,
            });
        }
        if packet.index > u16::MAX as u64 {
            return Err(CodecError::IndexOverflow(packet.index));
        }
        if packet.payload.len() != self.config.payload_len {
            return Err(CodecError::PayloadLength {
                expected: self.config.payload_len,
                got: packet.payload.len(),
            });
        }
        if self.is_full() {
            match self.config.overflow {
                OverflowPolicy::HoldAndRepair => return Err(CodecError::WindowFull),
                OverflowPolicy::DropOldest => {
                    self.window.pop_front();
                }
            }
        }
        self.window.push_back(packet);
        self.next_index += 1;
        self.fresh = true;
        Ok(())
    }

    /// Emits one coded packet and advances the schedule. The emission is a
    /// data packet only if the schedule is in its data phase and a packet was
    /// pushed since the last emission; otherwise it is a repair.
    pub fn emit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CodedPacket, CodecError> {
        let (opening, _) = self.window_bounds().ok_or(CodecError::EmptyWindow)?;
        let is_data = self.schedule.role() == SlotRole::Data && self.fresh;
        self.schedule.advance();
        self.fresh = false;

        let coeffs = draw_coefficients(rng, self.window.len(), self.window.len() - 1);
        let mut payload = vec![0u8; self.config.payload_len];
        for (packet, &c) in self.window.iter().zip(&coeffs) {
            gf256::mul_add_slice(&mut payload, &packet.payload, Gf256(c));
        }
        let header = CodingHeader::new(
            self.window.len() as u64,
            opening,
            self.config.max_window as u64,
            !is_data,
            !is_data,
        )?;
        let mut coefficients = coeffs;
        coefficients.resize(self.config.max_window as usize, 0);
        Ok(CodedPacket {
            header,
            coefficients,
            payload,
        })
    }

    /// Lets a transmit opportunity pass without sending.
    pub fn skip(&mut self) {
        self.schedule.idle();
    }

    /// Slides the window past the fully decoded prefix reported by `feedback`.
    pub fn apply_feedback(&mut self, feedback: &FeedbackPacket) {
        let target = feedback.fully_decoded.min(self.next_index);
        while self.window.front().is_some_and(|p| p.index < target) {
            self.window.pop_front();
        }
    }
}
