//! Code rates and the fixed data/repair emission schedule they imply.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest denominator considered when picking a rate automatically.
pub const MAX_SELECT_DENOMINATOR: u32 = 16;

const RATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("code rate must satisfy 1 <= k <= n <= 255, got {k}/{n}")]
    Invalid { k: u32, n: u32 },
    #[error("cannot parse code rate {0:?}; expected k/n")]
    Parse(String),
    #[error("no rate k/n with n <= {max_n} fits below target {target:.4}")]
    Unreachable { target: f64, max_n: u32 },
}

/// `k` data emissions followed by `n - k` repair emissions per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeRate {
    k: u32,
    n: u32,
}

impl CodeRate {
    pub const UNIT: CodeRate = CodeRate { k: 1, n: 1 };

    pub fn new(k: u32, n: u32) -> Result<Self, RateError> {
        if k == 0 || k > n || n > 255 {
            return Err(RateError::Invalid { k, n });
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Redundancy margin `(1 - loss) - k/n`; negative means the rate cannot
    /// keep up with the expected erasures.
    pub fn gamma(&self, loss: f64) -> f64 {
        (1.0 - loss) - self.value()
    }

    /// Largest `k/n` with `n <= 16` not above `(1 - loss) - gamma`; among
    /// equal values the smallest denominator wins.
    pub fn select(loss: f64, gamma: f64) -> Result<Self, RateError> {
        let target = (1.0 - loss) - gamma;
        let mut best: Option<CodeRate> = None;
        for n in 1..=MAX_SELECT_DENOMINATOR {
            for k in 1..=n {
                let v = k as f64 / n as f64;
                if v > target + RATE_SLACK {
                    break;
                }
                if best.is_none_or(|b| v > b.value() + RATE_SLACK) {
                    best = Some(CodeRate { k, n });
                }
            }
        }
        best.ok_or(RateError::Unreachable {
            target,
            max_n: MAX_SELECT_DENOMINATOR,
        })
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.k, self.n)
    }
}

impl FromStr for CodeRate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RateError::Parse(s.to_string());
        let (k, n) = s.trim().split_once('/').ok_or_else(bad)?;
        let k = k.trim().parse().map_err(|_| bad())?;
        let n = n.trim().parse().map_err(|_| bad())?;
        CodeRate::new(k, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    Data,
    Repair,
}

/// Position within the `k` data / `n - k` repair cycle.
///
/// The cycle starts at a node's first emission and from then on advances once
/// per transmit opportunity, whether or not the node actually sends.
#[derive(Debug, Clone)]
pub struct RateSchedule {
    rate: CodeRate,
    position: u32,
    started: bool,
}

impl RateSchedule {
    pub fn new(rate: CodeRate) -> Self {
        Self {
            rate,
            position: 0,
            started: false,
        }
    }

    pub fn rate(&self) -> CodeRate {
        self.rate
    }

    pub fn position(&self) -> u32 {
        self.position
    }

    pub fn role(&self) -> SlotRole {
        if self.position < self.rate.k {
            SlotRole::Data
        } else {
            SlotRole::Repair
        }
    }

    /// Consumes the current slot with an emission.
    pub fn advance(&mut self) {
        self.started = true;
        self.position = (self.position + 1) % self.rate.n;
    }

    /// Consumes the current slot without an emission.
    pub fn idle(&mut self) {
        if self.started {
            self.position = (self.position + 1) % self.rate.n;
        }
    }
}
