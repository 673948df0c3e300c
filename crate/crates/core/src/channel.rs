//! Slotted substrate: binary erasure channels with fixed forward delay and a
//! slot-ordered event queue.
//!
//! Loss traces are plain text, one slot number per line, grouped under a
//! section header per channel:
//!
//! ```text
//! # source -> relay
//! [channel1]
//! 8
//! [channel2]
//! 4
//! ```

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("erasure probability {0} is outside [0, 1]")]
    Epsilon(f64),
    #[error("forward delay must be at least one slot")]
    ZeroDelay,
    #[error("loss trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

#[derive(Debug, Clone)]
pub enum LossModel {
    /// Independent losses drawn from the channel's own generator.
    Bernoulli { epsilon: f64, rng: ChaCha8Rng },
    /// Transmissions sent in exactly these slots are lost.
    Scripted(BTreeSet<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendOutcome {
    Delivered { at: u64 },
    Lost,
}

#[derive(Debug, Clone)]
pub struct ErasureChannel {
    forward_delay: u64,
    loss: LossModel,
    sent: u64,
    lost: u64,
}

impl ErasureChannel {
    pub fn bernoulli(epsilon: f64, forward_delay: u64, rng: ChaCha8Rng) -> Result<Self, ChannelError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ChannelError::Epsilon(epsilon));
        }
        Self::with_model(LossModel::Bernoulli { epsilon, rng }, forward_delay)
    }

    pub fn scripted(
        lost_slots: impl IntoIterator<Item = u64>,
        forward_delay: u64,
    ) -> Result<Self, ChannelError> {
        Self::with_model(LossModel::Scripted(lost_slots.into_iter().collect()), forward_delay)
    }

    fn with_model(loss: LossModel, forward_delay: u64) -> Result<Self, ChannelError> {
        if forward_delay == 0 {
            return Err(ChannelError::ZeroDelay);
        }
        Ok(Self {
            forward_delay,
            loss,
            sent: 0,
            lost: 0,
        })
    }

    pub fn forward_delay(&self) -> u64 {
        self.forward_delay
    }

    /// Decides the fate of one transmission made in `slot`.
    pub fn send(&mut self, slot: u64) -> SendOutcome {
        self.sent += 1;
        let lost = match &mut self.loss {
            LossModel::Bernoulli { epsilon, rng } => rng.gen::<f64>() < *epsilon,
            LossModel::Scripted(slots) => slots.contains(&slot),
        };
        if lost {
            self.lost += 1;
            SendOutcome::Lost
        } else {
            SendOutcome::Delivered {
                at: slot + self.forward_delay,
            }
        }
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn lost(&self) -> u64 {
        self.lost
    }
}

/// Slot-ordered event queue. Events due in the same slot come out in the order
/// they were scheduled.
#[derive(Debug, Clone)]
pub struct SlotScheduler<E> {
    current: u64,
    pending: BTreeMap<u64, Vec<E>>,
}

impl<E> SlotScheduler<E> {
    pub fn new(start: u64) -> Self {
        Self {
            current: start,
            pending: BTreeMap::new(),
        }
    }

    pub fn current_slot(&self) -> u64 {
        self.current
    }

    /// Queues `event` for slot `at`; events for past slots fire on the next step.
    pub fn schedule(&mut self, at: u64, event: E) {
        let at = at.max(self.current + 1);
        self.pending.entry(at).or_default().push(event);
    }

    /// Advances one slot and returns everything due in it.
    pub fn step(&mut self) -> Vec<E> {
        self.current += 1;
        self.take_due()
    }

    /// Returns everything due at or before the current slot without advancing.
    pub fn take_due(&mut self) -> Vec<E> {
        let later = self.pending.split_off(&(self.current + 1));
        let due = std::mem::replace(&mut self.pending, later);
        due.into_values().flatten().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }
}

/// Scripted losses for the two links of a two-hop path.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LossTrace {
    pub channel1: BTreeSet<u64>,
    pub channel2: BTreeSet<u64>,
}

impl LossTrace {
    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut trace = LossTrace::default();
        let mut section: Option<&mut BTreeSet<u64>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ChannelError::Trace { line: i + 1, message };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "channel1" | "link1" => &mut trace.channel1,
                    "channel2" | "link2" => &mut trace.channel2,
                    other => return Err(err(format!("unknown section {other:?}"))),
                });
                continue;
            }
            let slot: u64 = line
                .parse()
                .map_err(|_| err(format!("expected a slot number, got {line:?}")))?;
            section
                .as_deref_mut()
                .ok_or_else(|| err("slot listed before any [channelN] section".into()))?
                .insert(slot);
        }
        Ok(trace)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("[channel1]\n");
        for s in &self.channel1 {
            out.push_str(&format!("{s}\n"));
        }
        out.push_str("[channel2]\n");
        for s in &self.channel2 {
            out.push_str(&format!("{s}\n"));
        }
        out
    }
}
