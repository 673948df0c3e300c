//! End-to-end protocol state machines over a two-hop path:
//! selective-repeat ARQ through a store-and-forward relay, sliding-window
//! coding end to end through a plain relay, and sliding-window coding with a
//! recoder at the intermediate node.
//!
//! Every run is single-threaded and fully determined by its configuration and
//! seed. Slots are numbered from 1. Within a slot, due feedback is delivered
//! first, then due data, then each node gets at most one forward transmission.

mod event;
mod srarq;
mod swnc;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use event::{Event, EventKind, Link, Node, PacketDesc, ReceiveOutcome};

use crate::channel::{ChannelError, ErasureChannel, LossTrace};
use crate::codec::{CodeRate, CodecError, OverflowPolicy, RateError};
use crate::metrics::{combined_loss, RunMetrics};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    SrArq,
    SwncEndToEnd,
    SwncRecoder,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::SrArq, Scenario::SwncEndToEnd, Scenario::SwncRecoder];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SrArq => "sr-arq",
            Scenario::SwncEndToEnd => "swnc-e2e",
            Scenario::SwncRecoder => "swnc-recoder",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sr-arq" | "srarq" | "arq" | "a" => Ok(Scenario::SrArq),
            "swnc-e2e" | "e2e" | "swnc-end-to-end" | "b" => Ok(Scenario::SwncEndToEnd),
            "swnc-recoder" | "recoder" | "c" => Ok(Scenario::SwncRecoder),
            other => Err(format!(
                "unknown scenario {other:?}; expected sr-arq, swnc-e2e or swnc-recoder"
            )),
        }
    }
}

/// Parameters of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub eps1: f64,
    pub eps2: f64,
    /// Per-link round trip: forward delay plus feedback delay.
    pub rtt_slots: u64,
    pub forward_delay: u64,
    pub num_packets: u64,
    pub payload_bytes: usize,
    /// Source code rate; picked from the loss it must cover when absent.
    pub rate_src: Option<CodeRate>,
    /// Recoder code rate; picked from `eps2` when absent.
    pub rate_recoder: Option<CodeRate>,
    pub gamma: f64,
    /// Encoder window capacity and flow-wide coefficient count.
    pub max_window: u8,
    pub overflow: OverflowPolicy,
    pub slot_cap: u64,
    pub seed: u64,
    /// Scripted losses replace the Bernoulli channels when present.
    pub loss_trace: Option<LossTrace>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::SwncRecoder,
            eps1: 0.05,
            eps2: 0.15,
            rtt_slots: 20,
            forward_delay: 1,
            num_packets: 100,
            payload_bytes: 100,
            rate_src: None,
            rate_recoder: None,
            gamma: 0.03,
            max_window: 255,
            overflow: OverflowPolicy::HoldAndRepair,
            slot_cap: 500,
            seed: 0,
            loss_trace: None,
        }
    }
}

/// Independent generator streams derived from the run seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Payloads = 0,
    SourceCoefficients = 1,
    RecoderCoefficients = 2,
    Channel1 = 3,
    Channel2 = 4,
}

impl ScenarioConfig {
    pub fn feedback_delay(&self) -> u64 {
        self.rtt_slots.saturating_sub(self.forward_delay)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(0.0..1.0).contains(&eps) {
                return bad(format!("{name} = {eps} must lie in [0, 1)"));
            }
        }
        if self.forward_delay == 0 {
            return bad("forward delay must be at least 1 slot".into());
        }
        if self.rtt_slots <= self.forward_delay {
            return bad(format!(
                "rtt {} must exceed the forward delay {}",
                self.rtt_slots, self.forward_delay
            ));
        }
        if self.num_packets == 0 || self.num_packets > u16::MAX as u64 {
            return bad(format!("packets = {} must lie in 1..=65535", self.num_packets));
        }
        if self.payload_bytes == 0 {
            return bad("payload size must be at least 1 byte".into());
        }
        if self.max_window == 0 {
            return bad("max window must be at least 1".into());
        }
        if self.slot_cap == 0 {
            return bad("slot cap must be at least 1".into());
        }
        self.source_rate()?;
        self.recoder_rate()?;
        Ok(())
    }

    /// Code rate used by the source: it covers the cascaded loss when coding
    /// end to end, and only the first hop when a recoder sits in between.
    pub fn source_rate(&self) -> Result<CodeRate, RateError> {
        if let Some(r) = self.rate_src {
            return Ok(r);
        }
        let loss = match self.scenario {
            Scenario::SwncEndToEnd => combined_loss(self.eps1, self.eps2),
            _ => self.eps1,
        };
        CodeRate::select(loss, self.gamma)
    }

    pub fn recoder_rate(&self) -> Result<CodeRate, RateError> {
        match self.rate_recoder {
            Some(r) => Ok(r),
            None => CodeRate::select(self.eps2, self.gamma),
        }
    }

    pub(crate) fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng
    }

    pub(crate) fn source_payloads(&self) -> Vec<Vec<u8>> {
        let mut rng = self.rng(Stream::Payloads);
        (0..self.num_packets)
            .map(|_| {
                let mut p = vec![0u8; self.payload_bytes];
                rng.fill_bytes(&mut p);
                p
            })
            .collect()
    }

    pub(crate) fn channels(&self) -> Result<(ErasureChannel, ErasureChannel), ChannelError> {
        Ok(match &self.loss_trace {
            Some(trace) => (
                ErasureChannel::scripted(trace.channel1.iter().copied(), self.forward_delay)?,
                ErasureChannel::scripted(trace.channel2.iter().copied(), self.forward_delay)?,
            ),
            None => (
                ErasureChannel::bernoulli(self.eps1, self.forward_delay, self.rng(Stream::Channel1))?,
                ErasureChannel::bernoulli(self.eps2, self.forward_delay, self.rng(Stream::Channel2))?,
            ),
        })
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub metrics: RunMetrics,
    pub events: Vec<Event>,
    pub source_payloads: Vec<Vec<u8>>,
    /// What the sink recovered, by source index.
    pub sink_payloads: Vec<Option<Vec<u8>>>,
}

impl RunReport {
    /// Every packet the sink recovered equals the original.
    pub fn delivered_intact(&self) -> bool {
        self.sink_payloads
            .iter()
            .zip(&self.source_payloads)
            .all(|(got, want)| got.as_ref().is_none_or(|g| g == want))
    }

    pub fn all_delivered(&self) -> bool {
        self.sink_payloads.iter().all(Option::is_some) && self.delivered_intact()
    }

    pub fn render_log(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&ev.to_string());
            out.push('\n');
        }
        out
    }
}

/// The reference two-hop recoding example: eight packets, source rate 4/5,
/// recoder rate 3/4, one-slot forward delay, three-slot feedback delay. The
/// recoder's emission in slot 4 is lost on link 2 and the source's emission
/// in slot 8 is lost on link 1.
pub fn golden_trace_config() -> ScenarioConfig {
    ScenarioConfig {
        scenario: Scenario::SwncRecoder,
        eps1: 0.0,
        eps2: 0.0,
        rtt_slots: 4,
        forward_delay: 1,
        num_packets: 8,
        payload_bytes: 16,
        rate_src: Some(CodeRate::new(4, 5).expect("valid rate")),
        rate_recoder: Some(CodeRate::new(3, 4).expect("valid rate")),
        slot_cap: 100,
        loss_trace: Some(LossTrace {
            channel1: [8].into(),
            channel2: [4].into(),
        }),
        ..ScenarioConfig::default()
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport, ProtocolError> {
    config.validate()?;
    match config.scenario {
        Scenario::SrArq => srarq::run(config),
        Scenario::SwncEndToEnd | Scenario::SwncRecoder => swnc::run(config),
    }
}
