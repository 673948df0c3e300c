//! On-the-fly sliding-window recoder for an intermediate node.
//!
//! Incoming coded packets are kept only if they raise the rank of the buffer.
//! At each transmit opportunity the recoder mixes the rows of its recoding
//! window with fresh local coefficients, applying the same combination to the
//! stored coefficient vectors and the stored payloads. The outgoing window runs
//! from the opening of the first row in the recoding window to the closing of
//! the last, so the coefficient count on the wire never grows.
//!
//! On a data opportunity the next buffered row that is not yet part of the
//! recoding window is appended to it; repair opportunities reuse the current
//! window. Feedback carrying the sink's decoded prefix prunes every row whose
//! window closes below that prefix. From then on, columns below the prefix are
//! treated as known when testing innovation.

use rand::Rng;

use crate::codec::{draw_coefficients, CodeRate, CodecError, OverflowPolicy, RateSchedule, SlotRole};
use crate::linalg::{Combination, Echelon};
use crate::wire::{CodedPacket, CodingHeader, FeedbackPacket};

#[derive(Debug, Clone)]
pub struct RecoderConfig {
    pub rate: CodeRate,
    /// Flow-wide coefficient count (the source's maximum window).
    pub coefficient_count: u8,
    pub payload_len: usize,
    /// Maximum number of buffered rows.
    pub max_buffer: usize,
    pub overflow: OverflowPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoderOutcome {
    Stored,
    /// Not innovative with respect to the buffer.
    Discarded,
    /// Innovative, but the buffer is full under the hold policy.
    Refused,
}

#[derive(Debug, Clone)]
struct BufferedRow {
    arrival: u64,
    opening: u64,
    closing: u64,
    combination: Combination,
    windowed: bool,
}

impl BufferedRow {
    fn order_key(&self) -> (u64, u64) {
        (self.opening, self.arrival)
    }
}

#[derive(Debug, Clone)]
pub struct Recoder {
    config: RecoderConfig,
    /// Sorted by `(opening, arrival)`.
    rows: Vec<BufferedRow>,
    rank: Echelon,
    /// Columns below this are decoded at the sink.
    floor: u64,
    schedule: RateSchedule,
    arrivals: u64,
}

impl Recoder {
    pub fn new(config: RecoderConfig) -> Result<Self, CodecError> {
        if config.coefficient_count == 0 || config.max_buffer == 0 {
            return Err(CodecError::ZeroWindow);
        }
        Ok(Self {
            schedule: RateSchedule::new(config.rate),
            config,
            rows: Vec::new(),
            rank: Echelon::new(),
            floor: 0,
            arrivals: 0,
        })
    }

    pub fn config(&self) -> &RecoderConfig {
        &self.config
    }

    pub fn consume(&mut self, packet: &CodedPacket) -> Result<RecoderOutcome, CodecError> {
        packet.check_flow(self.config.coefficient_count, self.config.payload_len)?;
        let opening = packet.header.window_opening as u64;
        let coeffs = packet.window_coefficients().to_vec();

        let mut projected = Combination::new(opening, coeffs.clone(), Vec::new());
        projected.project_from(self.floor);
        if !self.rank.is_innovative(&projected) {
            return Ok(RecoderOutcome::Discarded);
        }
        if self.rows.len() >= self.config.max_buffer {
            match self.config.overflow {
                OverflowPolicy::HoldAndRepair => return Ok(RecoderOutcome::Refused),
                OverflowPolicy::DropOldest => {
                    self.rows.remove(0);
                    self.rebuild_rank();
                    if !self.rank.is_innovative(&projected) {
                        return Ok(RecoderOutcome::Discarded);
                    }
                }
            }
        }
        self.rank.insert(projected);

        let row = BufferedRow {
            arrival: self.arrivals,
            opening,
            closing: packet.header.window_closing(),
            combination: Combination::new(opening, coeffs, packet.payload.clone()),
            windowed: false,
        };
        self.arrivals += 1;
        let at = self.rows.partition_point(|r| r.order_key() <= row.order_key());
        self.rows.insert(at, row);
        Ok(RecoderOutcome::Stored)
    }

    pub fn next_role(&self) -> SlotRole {
        self.schedule.role()
    }

    /// A buffered row is waiting to join the recoding window.
    pub fn has_unwindowed(&self) -> bool {
        self.rows.iter().any(|r| !r.windowed)
    }

    pub fn window_len(&self) -> usize {
        self.rows.iter().filter(|r| r.windowed).count()
    }

    pub fn buffered(&self) -> usize {
        self.rows.len()
    }

    pub fn rank(&self) -> usize {
        self.rank.rank()
    }

    pub fn floor(&self) -> u64 {
        self.floor
    }

    /// `(opening, closing)` of every buffered row, in window order.
    pub fn row_windows(&self) -> Vec<(u64, u64)> {
        self.rows.iter().map(|r| (r.opening, r.closing)).collect()
    }

    /// `(opening, closing)` an emission would carry right now.
    pub fn window_bounds(&self) -> Option<(u64, u64)> {
        let mut windowed = self.rows.iter().filter(|r| r.windowed);
        let first = windowed.next()?;
        let closing = std::iter::once(first)
            .chain(windowed)
            .map(|r| r.closing)
            .max()?;
        Some((first.opening, closing))
    }

    /// Could the next transmit opportunity be used, per the schedule?
    pub fn can_emit(&self) -> bool {
        match self.schedule.role() {
            SlotRole::Data => self.has_unwindowed(),
            SlotRole::Repair => self.rows.iter().any(|r| r.windowed),
        }
    }

    /// Builds one recoded packet and advances the schedule.
    ///
    /// On a data opportunity the next unwindowed row joins the recoding window
    /// and the packet is flagged as data; otherwise the current window is
    /// re-mixed as a local repair.
    pub fn emit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CodedPacket, CodecError> {
        let added = match self.schedule.role() {
            SlotRole::Data => self.rows.iter().position(|r| !r.windowed),
            SlotRole::Repair => None,
        };
        if added.is_none() && !self.rows.iter().any(|r| r.windowed) {
            return Err(CodecError::EmptyWindow);
        }
        let mut added_arrival = None;
        if let Some(i) = added {
            self.rows[i].windowed = true;
            added_arrival = Some(self.rows[i].arrival);
        }
        self.schedule.advance();
        self.fit_window_span();

        let members: Vec<&BufferedRow> = self.rows.iter().filter(|r| r.windowed).collect();
        if members.is_empty() {
            return Err(CodecError::EmptyWindow);
        }
        let opening = members[0].opening;
        let closing = members.iter().map(|r| r.closing).max().unwrap_or(opening);
        let newest = added_arrival
            .and_then(|a| members.iter().position(|r| r.arrival == a))
            .unwrap_or(members.len() - 1);
        let coeffs = draw_coefficients(rng, members.len(), newest);

        let mut mixed = Combination::new(opening, Vec::new(), vec![0; self.config.payload_len]);
        for (row, &c) in members.iter().zip(&coeffs) {
            mixed.add_scaled(&row.combination, crate::gf256::Gf256(c));
        }
        let count = self.config.coefficient_count as usize;
        let coefficients = mixed
            .aligned(opening, count)
            .expect("recoding window span fits the coefficient count");
        let mut payload = mixed.into_payload();
        payload.resize(self.config.payload_len, 0);

        let header = CodingHeader::new(
            closing - opening + 1,
            opening,
            count as u64,
            false,
            added_arrival.is_none(),
        )?;
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

    /// Prunes rows whose window closes below the sink's decoded prefix.
    pub fn apply_feedback(&mut self, feedback: &FeedbackPacket) {
        if feedback.fully_decoded <= self.floor {
            return;
        }
        self.floor = feedback.fully_decoded;
        let floor = self.floor;
        self.rows.retain(|r| r.closing >= floor);
        self.rebuild_rank();
    }

    /// The outgoing span must fit the wire's coefficient vector; the oldest
    /// windowed rows are evicted until it does.
    fn fit_window_span(&mut self) {
        let count = self.config.coefficient_count as u64;
        let mut evicted = false;
        while let Some((opening, closing)) = self.window_bounds() {
            if closing - opening < count {
                break;
            }
            let oldest = self.rows.iter().position(|r| r.windowed).expect("window is non-empty");
            self.rows.remove(oldest);
            evicted = true;
        }
        if evicted {
            self.rebuild_rank();
        }
    }

    /// Recomputes the rank structure under the current floor, dropping rows
    /// that no longer carry anything the sink lacks.
    fn rebuild_rank(&mut self) {
        self.rank.clear();
        let floor = self.floor;
        let rank = &mut self.rank;
        self.rows.retain(|r| {
            let mut projected =
                Combination::new(r.combination.start(), r.combination.coeffs().to_vec(), Vec::new());
            projected.project_from(floor);
            rank.insert(projected).is_some()
        });
    }
}
