//! Sliding-window coding over two hops, with the intermediate node either
//! repeating packets verbatim or recoding them.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use super::{
    Event, EventKind, Link, Node, PacketDesc, ProtocolError, ReceiveOutcome, RunReport, Scenario,
    ScenarioConfig, Stream,
};
use crate::channel::{ErasureChannel, SendOutcome, SlotScheduler};
use crate::codec::{
    CodecError, ConsumeOutcome, Decoder, Encoder, EncoderConfig, SlotRole, SourcePacket,
};
use crate::metrics::RunMetrics;
use crate::recoder::{Recoder, RecoderConfig, RecoderOutcome};
use crate::wire::{CodedPacket, FeedbackPacket};

enum Middle {
    Relay(VecDeque<CodedPacket>),
    Recoder { recoder: Recoder, rng: ChaCha8Rng },
}

impl Middle {
    fn node(&self) -> Node {
        match self {
            Middle::Relay(_) => Node::Relay,
            Middle::Recoder { .. } => Node::Recoder,
        }
    }
}

fn describe(p: &CodedPacket) -> PacketDesc {
    PacketDesc::Coded {
        opening: p.header.window_opening as u64,
        closing: p.header.window_closing(),
        repair: p.header.is_repair(),
    }
}

struct Sim {
    n: u64,
    fb_delay: u64,
    payloads: Vec<Vec<u8>>,
    encoder: Encoder,
    source_rng: ChaCha8Rng,
    middle: Middle,
    decoder: Decoder,
    ch1: ErasureChannel,
    ch2: ErasureChannel,
    to_middle: SlotScheduler<CodedPacket>,
    to_sink: SlotScheduler<CodedPacket>,
    to_middle_fb: SlotScheduler<FeedbackPacket>,
    to_source_fb: SlotScheduler<FeedbackPacket>,
    events: Vec<Event>,
    slot: u64,
}

impl Sim {
    fn log(&mut self, kind: EventKind) {
        self.events.push(Event {
            slot: self.slot,
            kind,
        });
    }

    fn step(&mut self) -> Result<bool, ProtocolError> {
        self.slot += 1;
        let fb_mid = self.to_middle_fb.step();
        let fb_src = self.to_source_fb.step();
        let at_middle = self.to_middle.step();
        let at_sink = self.to_sink.step();

        for fb in fb_mid {
            if let Middle::Recoder { recoder, .. } = &mut self.middle {
                recoder.apply_feedback(&fb);
            }
            let node = self.middle.node();
            self.log(EventKind::FeedbackApplied {
                at: node,
                fully: fb.fully_decoded,
            });
            self.to_source_fb.schedule(self.slot + self.fb_delay, fb);
        }
        let mut completed = false;
        for fb in fb_src {
            self.encoder.apply_feedback(&fb);
            self.log(EventKind::FeedbackApplied {
                at: Node::Source,
                fully: fb.fully_decoded,
            });
            completed |= fb.fully_decoded >= self.n;
        }
        if completed {
            self.log(EventKind::Completed);
            return Ok(true);
        }

        for packet in at_middle {
            let desc = describe(&packet);
            let outcome = match &mut self.middle {
                Middle::Relay(queue) => {
                    queue.push_back(packet);
                    ReceiveOutcome::Queued
                }
                Middle::Recoder { recoder, .. } => match recoder.consume(&packet)? {
                    RecoderOutcome::Stored => ReceiveOutcome::Innovative,
                    RecoderOutcome::Discarded => ReceiveOutcome::Redundant,
                    RecoderOutcome::Refused => ReceiveOutcome::Refused,
                },
            };
            let at = self.middle.node();
            self.log(EventKind::Receive {
                at,
                packet: desc,
                outcome,
            });
        }
        for packet in at_sink {
            let desc = describe(&packet);
            let (outcome, newly) = match self.decoder.consume(&packet)? {
                ConsumeOutcome::Innovative { newly_decoded } => {
                    (ReceiveOutcome::Innovative, newly_decoded)
                }
                ConsumeOutcome::Redundant => (ReceiveOutcome::Redundant, Vec::new()),
            };
            self.log(EventKind::Receive {
                at: Node::Sink,
                packet: desc,
                outcome,
            });
            for index in newly {
                self.log(EventKind::SinkDecoded { index });
            }
            let fb = self.decoder.feedback();
            self.log(EventKind::Feedback {
                fully: fb.fully_decoded,
                partial: fb.partially_decoded,
            });
            self.to_middle_fb.schedule(self.slot + self.fb_delay, fb);
        }

        if let Some(packet) = self.source_transmit()? {
            self.send(Link::One, Node::Source, packet);
        }
        if let Some(packet) = self.middle_transmit()? {
            let node = self.middle.node();
            self.send(Link::Two, node, packet);
        }
        Ok(false)
    }

    fn send(&mut self, link: Link, from: Node, packet: CodedPacket) {
        let (channel, queue) = match link {
            Link::One => (&mut self.ch1, &mut self.to_middle),
            Link::Two => (&mut self.ch2, &mut self.to_sink),
        };
        let outcome = channel.send(self.slot);
        let lost = outcome == SendOutcome::Lost;
        let desc = describe(&packet);
        if let SendOutcome::Delivered { at } = outcome {
            queue.schedule(at, packet);
        }
        self.log(EventKind::Transmit {
            link,
            from,
            packet: desc,
            lost,
        });
    }

    fn source_transmit(&mut self) -> Result<Option<CodedPacket>, ProtocolError> {
        let next = self.encoder.next_index();
        match self.encoder.next_role() {
            SlotRole::Data if next < self.n => {
                let packet = SourcePacket::new(next, self.payloads[next as usize].clone());
                match self.encoder.push(packet) {
                    Ok(()) | Err(CodecError::WindowFull) => {}
                    Err(e) => return Err(e.into()),
                }
                Ok(Some(self.encoder.emit(&mut self.source_rng)?))
            }
            SlotRole::Repair if !self.encoder.is_window_empty() => {
                Ok(Some(self.encoder.emit(&mut self.source_rng)?))
            }
            _ => {
                self.encoder.skip();
                Ok(None)
            }
        }
    }

    fn middle_transmit(&mut self) -> Result<Option<CodedPacket>, ProtocolError> {
        match &mut self.middle {
            Middle::Relay(queue) => Ok(queue.pop_front()),
            Middle::Recoder { recoder, rng } => {
                if recoder.can_emit() {
                    Ok(Some(recoder.emit(rng)?))
                } else {
                    recoder.skip();
                    Ok(None)
                }
            }
        }
    }
}

pub(super) fn run(cfg: &ScenarioConfig) -> Result<RunReport, ProtocolError> {
    let payloads = cfg.source_payloads();
    let (ch1, ch2) = cfg.channels()?;
    let encoder = Encoder::new(EncoderConfig {
        rate: cfg.source_rate()?,
        max_window: cfg.max_window,
        overflow: cfg.overflow,
        payload_len: cfg.payload_bytes,
    })?;
    let middle = match cfg.scenario {
        Scenario::SwncRecoder => Middle::Recoder {
            recoder: Recoder::new(RecoderConfig {
                rate: cfg.recoder_rate()?,
                coefficient_count: cfg.max_window,
                payload_len: cfg.payload_bytes,
                max_buffer: cfg.max_window as usize,
                overflow: cfg.overflow,
            })?,
            rng: cfg.rng(Stream::RecoderCoefficients),
        },
        _ => Middle::Relay(VecDeque::new()),
    };
    let mut sim = Sim {
        n: cfg.num_packets,
        fb_delay: cfg.feedback_delay(),
        payloads,
        encoder,
        source_rng: cfg.rng(Stream::SourceCoefficients),
        middle,
        decoder: Decoder::new(cfg.payload_bytes),
        ch1,
        ch2,
        to_middle: SlotScheduler::new(0),
        to_sink: SlotScheduler::new(0),
        to_middle_fb: SlotScheduler::new(0),
        to_source_fb: SlotScheduler::new(0),
        events: Vec::new(),
        slot: 0,
    };
    while sim.slot < cfg.slot_cap {
        if sim.step()? {
            break;
        }
    }
    let sink_payloads = (0..cfg.num_packets)
        .map(|i| sim.decoder.payload(i).map(<[u8]>::to_vec))
        .collect();
    Ok(RunReport {
        config: cfg.clone(),
        metrics: RunMetrics::collect(&sim.events, cfg.slot_cap),
        events: sim.events,
        source_payloads: sim.payloads,
        sink_payloads,
    })
}
