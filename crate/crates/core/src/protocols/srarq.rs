//! Selective-repeat ARQ over two hops with a store-and-forward relay.
//!
//! Each hop runs its own sender/receiver pair. A receiver acknowledges every
//! data reception with its cumulative ack, the highest sequence seen and the
//! gaps below it. Senders retransmit NACKed frames ahead of new ones, and a
//! fixed timer covers losses at the tail of the stream, where no later
//! reception can expose the gap. The relay queues each new frame for the
//! second hop and forwards the sink's acknowledgments to the source.

use std::collections::{BTreeSet, VecDeque};

use super::{Event, EventKind, Link, Node, PacketDesc, ProtocolError, ReceiveOutcome, RunReport, ScenarioConfig};
use crate::channel::{SendOutcome, SlotScheduler};
use crate::metrics::RunMetrics;

#[derive(Debug, Clone)]
struct Ack {
    generated_at: u64,
    cumulative: u64,
    highest: Option<u64>,
    nacks: Vec<u64>,
}

#[derive(Debug, Clone)]
struct Frame {
    seq: u64,
    retransmission: bool,
    payload: Vec<u8>,
}

#[derive(Debug, Default)]
struct Receiver {
    received: Vec<bool>,
    payloads: Vec<Option<Vec<u8>>>,
    cumulative: u64,
    highest: Option<u64>,
}

impl Receiver {
    fn new(n: u64) -> Self {
        Self {
            received: vec![false; n as usize],
            payloads: vec![None; n as usize],
            ..Self::default()
        }
    }

    /// Records a frame; true if it was new.
    fn accept(&mut self, frame: &Frame) -> bool {
        let seq = frame.seq;
        let slot = &mut self.received[seq as usize];
        if *slot {
            return false;
        }
        *slot = true;
        self.payloads[seq as usize] = Some(frame.payload.clone());
        self.highest = Some(self.highest.map_or(seq, |h| h.max(seq)));
        while self.received.get(self.cumulative as usize) == Some(&true) {
            self.cumulative += 1;
        }
        true
    }

    fn ack(&self, now: u64) -> Ack {
        let nacks = match self.highest {
            Some(h) if h >= self.cumulative => (self.cumulative..h)
                .filter(|&s| !self.received[s as usize])
                .collect(),
            _ => Vec::new(),
        };
        Ack {
            generated_at: now,
            cumulative: self.cumulative,
            highest: self.highest,
            nacks,
        }
    }
}

#[derive(Debug)]
struct Sender {
    /// Frames handed to this sender and not yet sent once.
    fresh: VecDeque<u64>,
    payloads: Vec<Option<Vec<u8>>>,
    last_sent: Vec<Option<u64>>,
    acked: Vec<bool>,
    retransmit: BTreeSet<u64>,
    forward_delay: u64,
    timeout: u64,
}

impl Sender {
    fn new(n: u64, forward_delay: u64, timeout: u64) -> Self {
        Self {
            fresh: VecDeque::new(),
            payloads: vec![None; n as usize],
            last_sent: vec![None; n as usize],
            acked: vec![false; n as usize],
            retransmit: BTreeSet::new(),
            forward_delay,
            timeout,
        }
    }

    fn apply(&mut self, ack: &Ack) {
        for s in 0..ack.cumulative.min(self.acked.len() as u64) {
            self.acked[s as usize] = true;
        }
        if let Some(h) = ack.highest {
            let gaps: BTreeSet<u64> = ack.nacks.iter().copied().collect();
            for s in ack.cumulative..=h {
                if !gaps.contains(&s) {
                    self.acked[s as usize] = true;
                }
            }
        }
        self.retransmit.retain(|&s| !self.acked[s as usize]);
        for &s in &ack.nacks {
            let arrived_by = self.last_sent[s as usize].map(|t| t + self.forward_delay);
            if arrived_by.is_some_and(|t| t <= ack.generated_at) {
                self.retransmit.insert(s);
            }
        }
    }

    fn hand_over(&mut self, seq: u64, payload: Vec<u8>) {
        self.payloads[seq as usize] = Some(payload);
        self.fresh.push_back(seq);
    }

    fn next(&mut self, now: u64) -> Option<Frame> {
        for (s, sent) in self.last_sent.iter().enumerate() {
            if let Some(t) = sent {
                if !self.acked[s] && t + self.timeout <= now {
                    self.retransmit.insert(s as u64);
                }
            }
        }
        let (seq, retransmission) = match self.retransmit.pop_first() {
            Some(seq) => (seq, true),
            None => (self.fresh.pop_front()?, false),
        };
        self.last_sent[seq as usize] = Some(now);
        Some(Frame {
            seq,
            retransmission,
            payload: self.payloads[seq as usize].clone()?,
        })
    }
}

pub(super) fn run(cfg: &ScenarioConfig) -> Result<RunReport, ProtocolError> {
    let n = cfg.num_packets;
    let fwd = cfg.forward_delay;
    let fb = cfg.feedback_delay();
    let timeout = 2 * cfg.rtt_slots;
    let payloads = cfg.source_payloads();
    let (mut ch1, mut ch2) = cfg.channels()?;

    let mut source = Sender::new(n, fwd, timeout);
    for (seq, payload) in payloads.iter().enumerate() {
        source.hand_over(seq as u64, payload.clone());
    }
    let mut relay_rx = Receiver::new(n);
    let mut relay_tx = Sender::new(n, fwd, timeout);
    let mut sink = Receiver::new(n);

    let mut to_relay: SlotScheduler<Frame> = SlotScheduler::new(0);
    let mut to_sink: SlotScheduler<Frame> = SlotScheduler::new(0);
    let mut ack_to_source: SlotScheduler<Ack> = SlotScheduler::new(0);
    let mut ack_to_relay: SlotScheduler<Ack> = SlotScheduler::new(0);
    // Sink acks relayed onward, used only for completion.
    let mut e2e_to_relay: SlotScheduler<Ack> = SlotScheduler::new(0);
    let mut e2e_to_source: SlotScheduler<Ack> = SlotScheduler::new(0);

    let mut events = Vec::new();
    let mut slot = 0;
    let desc = |f: &Frame| PacketDesc::Frame {
        seq: f.seq,
        retransmission: f.retransmission,
    };

    while slot < cfg.slot_cap {
        slot += 1;
        let mut log = |kind| events.push(Event { slot, kind });

        for ack in ack_to_relay.step() {
            relay_tx.apply(&ack);
            log(EventKind::Ack {
                at: Node::Relay,
                cumulative: ack.cumulative,
                nacks: ack.nacks.len(),
            });
        }
        for ack in e2e_to_relay.step() {
            e2e_to_source.schedule(slot + fb, ack);
        }
        for ack in ack_to_source.step() {
            source.apply(&ack);
            log(EventKind::Ack {
                at: Node::Source,
                cumulative: ack.cumulative,
                nacks: ack.nacks.len(),
            });
        }
        if e2e_to_source.step().iter().any(|a| a.cumulative >= n) {
            log(EventKind::Completed);
            break;
        }

        for frame in to_relay.step() {
            let new = relay_rx.accept(&frame);
            log(EventKind::Receive {
                at: Node::Relay,
                packet: desc(&frame),
                outcome: if new {
                    ReceiveOutcome::Queued
                } else {
                    ReceiveOutcome::Redundant
                },
            });
            ack_to_source.schedule(slot + fb, relay_rx.ack(slot));
            if new {
                relay_tx.hand_over(frame.seq, frame.payload);
            }
        }
        for frame in to_sink.step() {
            let new = sink.accept(&frame);
            log(EventKind::Receive {
                at: Node::Sink,
                packet: desc(&frame),
                outcome: if new {
                    ReceiveOutcome::Innovative
                } else {
                    ReceiveOutcome::Redundant
                },
            });
            if new {
                log(EventKind::SinkDecoded { index: frame.seq });
            }
            let ack = sink.ack(slot);
            ack_to_relay.schedule(slot + fb, ack.clone());
            e2e_to_relay.schedule(slot + fb, ack);
        }

        for (sender, channel, queue, link, from) in [
            (&mut source, &mut ch1, &mut to_relay, Link::One, Node::Source),
            (&mut relay_tx, &mut ch2, &mut to_sink, Link::Two, Node::Relay),
        ] {
            let Some(frame) = sender.next(slot) else {
                continue;
            };
            let packet = desc(&frame);
            let outcome = channel.send(slot);
            if let SendOutcome::Delivered { at } = outcome {
                queue.schedule(at, frame);
            }
            log(EventKind::Transmit {
                link,
                from,
                packet,
                lost: outcome == SendOutcome::Lost,
            });
        }
    }

    let sink_payloads = sink.payloads;
    Ok(RunReport {
        config: cfg.clone(),
        metrics: RunMetrics::collect(&events, cfg.slot_cap),
        events,
        source_payloads: payloads,
        sink_payloads,
    })
}
