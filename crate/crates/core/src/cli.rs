//! Experiment driver: flag and config-file parsing, sweep expansion, parallel
//! execution, CSV output and the golden-trace replay.
//!
//! The config file is TOML with one `key = value` line per flag, using the
//! flag names without the leading dashes. Flags given on the command line
//! override the file.
//!
//! ```toml
//! scenario = "all"
//! eps1 = 0.05
//! eps2 = [0.05, 0.10, 0.15]
//! rtt = 20
//! seeds = "0..100"
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, LossTrace};
use crate::codec::{CodeRate, OverflowPolicy};
use crate::metrics::{combined_loss, theoretical_success_ratio};
use crate::protocols::{golden_trace_config, run_scenario, ProtocolError, RunReport, Scenario, ScenarioConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Output(#[from] std::io::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Trace(#[from] ChannelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Simulate sliding-window network coding and SR-ARQ over a two-hop erasure path.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "swnc", version)]
pub struct Args {
    /// TOML file with `flag = value` lines; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sr-arq, swnc-e2e, swnc-recoder, a comma list, or all.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Link-1 erasure probability: a value, a comma list, or start:stop:step.
    #[arg(long)]
    pub eps1: Option<String>,
    /// Link-2 erasure probability: a value, a comma list, or start:stop:step.
    #[arg(long)]
    pub eps2: Option<String>,
    /// Per-link round trip in slots: a value or a comma list.
    #[arg(long)]
    pub rtt: Option<String>,
    /// Source packets per flow (default 100)
    #[arg(long)]
    pub packets: Option<u64>,
    /// Bytes per source packet (default 100)
    #[arg(long)]
    pub payload_bytes: Option<usize>,
    /// Source code rate as k/n or a decimal; chosen from the loss when absent.
    #[arg(long)]
    pub rate_src: Option<String>,
    /// Recoder code rate as k/n or a decimal; chosen from eps2 when absent.
    #[arg(long)]
    pub rate_recoder: Option<String>,
    /// Redundancy margin used when choosing rates.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// A seed, a comma list, or a half-open range such as 0..100.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Slots after which an unfinished run is cut off (default 500)
    #[arg(long)]
    pub slot_cap: Option<u64>,
    /// Encoder window capacity (coefficient count on the wire).
    #[arg(long)]
    pub max_window: Option<u64>,
    /// Window overflow policy: hold or drop-oldest.
    #[arg(long)]
    pub policy: Option<String>,
    /// Scripted losses replacing the random channels.
    #[arg(long)]
    pub loss_trace: Option<PathBuf>,
    /// Replay the reference two-hop recoding example and print its event log.
    #[arg(long)]
    pub golden_trace: bool,
    /// Check the configuration and print the report without running.
    #[arg(long)]
    pub validate: bool,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the per-point summary on standard error.
    #[arg(long)]
    pub quiet: bool,
}

const FILE_KEYS: &[&str] = &[
    "scenario",
    "eps1",
    "eps2",
    "rtt",
    "packets",
    "payload-bytes",
    "rate-src",
    "rate-recoder",
    "gamma",
    "seeds",
    "slot-cap",
    "max-window",
    "policy",
    "loss-trace",
    "golden-trace",
    "out",
    "quiet",
];

/// Renders a TOML scalar or array the way the matching flag would be written.
fn flag_text(key: &str, v: &toml::Value) -> Result<String, CliError> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => items
            .iter()
            .map(|i| flag_text(key, i))
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| parts.join(",")),
        other => Err(config_err(format!("{key}: unsupported value {other}"))),
    }
}

impl Args {
    /// Fills every flag not given on the command line from a TOML table.
    pub fn merge_file(&mut self, text: &str) -> Result<(), CliError> {
        let table: toml::Table = toml::from_str(text)?;
        for (raw_key, value) in &table {
            let key = raw_key.replace('_', "-");
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(config_err(format!("unknown config key {raw_key:?}")));
            }
            let text = flag_text(&key, value)?;
            let num = |t: &str| -> Result<u64, CliError> {
                t.parse()
                    .map_err(|_| config_err(format!("{key}: expected an integer, got {t:?}")))
            };
            let flag = |t: &str| -> Result<bool, CliError> {
                t.parse()
                    .map_err(|_| config_err(format!("{key}: expected true or false, got {t:?}")))
            };
            match key.as_str() {
                "scenario" => fill(&mut self.scenario, text),
                "eps1" => fill(&mut self.eps1, text),
                "eps2" => fill(&mut self.eps2, text),
                "rtt" => fill(&mut self.rtt, text),
                "packets" => fill(&mut self.packets, num(&text)?),
                "payload-bytes" => fill(&mut self.payload_bytes, num(&text)? as usize),
                "rate-src" => fill(&mut self.rate_src, text),
                "rate-recoder" => fill(&mut self.rate_recoder, text),
                "gamma" => fill(
                    &mut self.gamma,
                    text.parse()
                        .map_err(|_| config_err(format!("gamma: expected a number, got {text:?}")))?,
                ),
                "seeds" => fill(&mut self.seeds, text),
                "slot-cap" => fill(&mut self.slot_cap, num(&text)?),
                "max-window" => fill(&mut self.max_window, num(&text)?),
                "policy" => fill(&mut self.policy, text),
                "loss-trace" => fill(&mut self.loss_trace, PathBuf::from(text)),
                "golden-trace" => self.golden_trace |= flag(&text)?,
                "out" => fill(&mut self.out, PathBuf::from(text)),
                "quiet" => self.quiet |= flag(&text)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        Ok(())
    }
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

pub fn parse_scenarios(s: &str) -> Result<Vec<Scenario>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(Scenario::ALL);
        } else {
            out.push(part.parse().map_err(config_err)?);
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(config_err("no scenario given"));
    }
    Ok(out)
}

/// A value, a comma list, or an inclusive `start:stop:step` range.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || config_err(format!("cannot parse number list {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as u64;
        // Rounded so that 0.05:0.30:0.05 yields 0.1, not 0.10000000000000002.
        return Ok((0..=count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect());
    }
    let out = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(num)
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || config_err(format!("cannot parse integer list {s:?}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if b <= a {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    let out = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(num)
        .collect::<Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// `k/n`, or a decimal matched exactly by some `k/n` with `n <= 255`.
pub fn parse_rate(s: &str) -> Result<CodeRate, CliError> {
    if s.contains('/') {
        return s.parse().map_err(|e| config_err(format!("{e}")));
    }
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| config_err(format!("cannot parse code rate {s:?}")))?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(config_err(format!("code rate {v} is outside (0, 1]")));
    }
    (1..=255u32)
        .find_map(|n| {
            let k = (v * n as f64).round() as u32;
            ((k as f64 / n as f64 - v).abs() < 1e-9 && k >= 1).then_some((k, n))
        })
        .map(|(k, n)| CodeRate::new(k, n).expect("k <= n <= 255"))
        .ok_or_else(|| config_err(format!("code rate {v} is not k/n with n <= 255")))
}

/// A fully parsed sweep: the Cartesian product of its axes.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub scenarios: Vec<Scenario>,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
    pub rtt: Vec<u64>,
    pub seeds: Vec<u64>,
    /// Window capacity as requested, before narrowing to the header field.
    pub max_window: u64,
    pub base: ScenarioConfig,
}

impl Sweep {
    pub fn from_args(args: &Args) -> Result<Self, CliError> {
        let d = ScenarioConfig::default();
        let loss_trace = match &args.loss_trace {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                Some(LossTrace::parse(&text)?)
            }
            None => None,
        };
        let max_window = args.max_window.unwrap_or(d.max_window as u64);
        let base = ScenarioConfig {
            num_packets: args.packets.unwrap_or(d.num_packets),
            payload_bytes: args.payload_bytes.unwrap_or(d.payload_bytes),
            rate_src: args.rate_src.as_deref().map(parse_rate).transpose()?,
            rate_recoder: args.rate_recoder.as_deref().map(parse_rate).transpose()?,
            gamma: args.gamma.unwrap_or(d.gamma),
            max_window: max_window.min(255) as u8,
            overflow: match &args.policy {
                Some(p) => p.parse::<OverflowPolicy>().map_err(config_err)?,
                None => d.overflow,
            },
            slot_cap: args.slot_cap.unwrap_or(d.slot_cap),
            loss_trace,
            ..d.clone()
        };
        Ok(Self {
            scenarios: match &args.scenario {
                Some(s) => parse_scenarios(s)?,
                None => Scenario::ALL.to_vec(),
            },
            eps1: args.eps1.as_deref().map_or(Ok(vec![d.eps1]), parse_f64_list)?,
            eps2: args.eps2.as_deref().map_or(Ok(vec![d.eps2]), parse_f64_list)?,
            rtt: args.rtt.as_deref().map_or(Ok(vec![d.rtt_slots]), parse_u64_list)?,
            seeds: args.seeds.as_deref().map_or(Ok(vec![d.seed]), parse_u64_list)?,
            max_window,
            base,
        })
    }

    /// Every run in output order: scenario, eps1, eps2, rtt, then seed.
    pub fn points(&self) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for &scenario in &self.scenarios {
            for &eps1 in &self.eps1 {
                for &eps2 in &self.eps2 {
                    for &rtt in &self.rtt {
                        for &seed in &self.seeds {
                            out.push(ScenarioConfig {
                                scenario,
                                eps1,
                                eps2,
                                rtt_slots: rtt,
                                seed,
                                ..self.base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Report-only consistency check of a sweep. An empty report means the
/// configuration is well formed.
pub fn validate(sweep: &Sweep) -> Vec<Diagnostic> {
    let mut report = Vec::new();
    let mut push = |severity, message: String| {
        let d = Diagnostic { severity, message };
        if !report.contains(&d) {
            report.push(d);
        }
    };
    if sweep.max_window == 0 || sweep.max_window > 255 {
        push(
            Severity::Error,
            format!(
                "max window {} does not fit the 1-byte header field (1..=255)",
                sweep.max_window
            ),
        );
    }
    let base = &sweep.base;
    if base.num_packets == 0 || base.num_packets > u16::MAX as u64 {
        push(
            Severity::Error,
            format!(
                "{} packets exceed the 16-bit window opening and feedback counters",
                base.num_packets
            ),
        );
    }
    if base.payload_bytes == 0 {
        push(Severity::Error, "payload size must be at least 1 byte".into());
    }
    if base.slot_cap == 0 {
        push(Severity::Error, "slot cap must be at least 1".into());
    }
    for &rtt in &sweep.rtt {
        if rtt <= base.forward_delay {
            push(
                Severity::Error,
                format!("rtt {rtt} must exceed the forward delay of {} slot", base.forward_delay),
            );
        }
    }
    for (name, list) in [("eps1", &sweep.eps1), ("eps2", &sweep.eps2)] {
        for &e in list {
            if !(0.0..1.0).contains(&e) {
                push(Severity::Error, format!("{name} = {e} is outside [0, 1)"));
            }
        }
    }
    if base.gamma < 0.0 {
        push(
            Severity::Warning,
            format!("gamma {} is negative: selected rates exceed the link capacity", base.gamma),
        );
    }
    for &scenario in &sweep.scenarios {
        if scenario == Scenario::SrArq {
            continue;
        }
        for &eps1 in &sweep.eps1 {
            for &eps2 in &sweep.eps2 {
                let src_loss = match scenario {
                    Scenario::SwncEndToEnd => combined_loss(eps1, eps2),
                    _ => eps1,
                };
                let cfg = ScenarioConfig {
                    scenario,
                    eps1,
                    eps2,
                    ..base.clone()
                };
                match cfg.source_rate() {
                    Ok(r) if r.gamma(src_loss) < -1e-12 => push(
                        Severity::Warning,
                        format!(
                            "{scenario}: source rate {r} exceeds 1 - loss = {:.4} (negative gamma)",
                            1.0 - src_loss
                        ),
                    ),
                    Ok(_) => {}
                    Err(e) => push(Severity::Error, format!("{scenario}: source rate: {e}")),
                }
                if scenario == Scenario::SwncRecoder {
                    match cfg.recoder_rate() {
                        Ok(r) if r.gamma(eps2) < -1e-12 => push(
                            Severity::Warning,
                            format!(
                                "{scenario}: recoder rate {r} exceeds 1 - eps2 = {:.4} (negative gamma)",
                                1.0 - eps2
                            ),
                        ),
                        Ok(_) => {}
                        Err(e) => push(Severity::Error, format!("{scenario}: recoder rate: {e}")),
                    }
                }
            }
        }
    }
    report
}

/// One output line. Column order is part of the interface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub scenario: String,
    pub eps1: f64,
    pub eps2: f64,
    pub rtt: u64,
    pub seed: u64,
    pub completed: bool,
    pub completion_slots: u64,
    pub total_transmissions: u64,
    pub tx_link1: u64,
    pub tx_link2: u64,
    pub success_ratio: f64,
    pub theoretical_bound: f64,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "scenario",
    "eps1",
    "eps2",
    "rtt",
    "seed",
    "completed",
    "completion_slots",
    "total_transmissions",
    "tx_link1",
    "tx_link2",
    "success_ratio",
    "theoretical_bound",
];

impl CsvRow {
    pub fn from_report(report: &RunReport) -> Self {
        let c = &report.config;
        let m = &report.metrics;
        Self {
            scenario: c.scenario.to_string(),
            eps1: c.eps1,
            eps2: c.eps2,
            rtt: c.rtt_slots,
            seed: c.seed,
            completed: m.completed,
            completion_slots: m.completion_slots,
            total_transmissions: m.total_transmissions,
            tx_link1: m.tx_link1,
            tx_link2: m.tx_link2,
            success_ratio: m.success_ratio,
            theoretical_bound: theoretical_success_ratio(c.scenario, c.eps1, c.eps2),
        }
    }
}

/// Runs every point in parallel; rows come back in input order.
pub fn run_points(points: &[ScenarioConfig]) -> Result<Vec<CsvRow>, ProtocolError> {
    points
        .par_iter()
        .map(|cfg| run_scenario(cfg).map(|r| CsvRow::from_report(&r)))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-point means over seeds, one line per (scenario, eps1, eps2, rtt).
pub fn summarize(rows: &[CsvRow]) -> String {
    #[derive(Default)]
    struct Acc {
        runs: u64,
        completed: u64,
        slots: f64,
        tx: f64,
        ratio: f64,
        bound: f64,
    }
    let mut groups: BTreeMap<(String, String, String, u64), Acc> = BTreeMap::new();
    for r in rows {
        let key = (r.scenario.clone(), r.eps1.to_string(), r.eps2.to_string(), r.rtt);
        let a = groups.entry(key).or_default();
        a.runs += 1;
        a.completed += r.completed as u64;
        a.slots += r.completion_slots as f64;
        a.tx += r.total_transmissions as f64;
        a.ratio += r.success_ratio;
        a.bound = r.theoretical_bound;
    }
    let mut out = format!(
        "{:<13} {:>5} {:>5} {:>4} {:>9} {:>10} {:>8} {:>7} {:>6}\n",
        "scenario", "eps1", "eps2", "rtt", "completed", "mean_slots", "mean_tx", "ratio", "bound"
    );
    for ((s, e1, e2, rtt), a) in groups {
        let n = a.runs as f64;
        out.push_str(&format!(
            "{:<13} {:>5} {:>5} {:>4} {:>4}/{:<4} {:>10.1} {:>8.1} {:>7.4} {:>6.4}\n",
            s,
            e1,
            e2,
            rtt,
            a.completed,
            a.runs,
            a.slots / n,
            a.tx / n,
            a.ratio / n,
            a.bound
        ));
    }
    out
}

/// Executes the command line. CSV goes to `--out` if given, else to `stdout`.
pub fn run<W: Write>(args: &Args, stdout: &mut W) -> Result<ExitCode, CliError> {
    let mut args = args.clone();
    if let Some(path) = args.config.clone() {
        let text = fs::read_to_string(&path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        args.merge_file(&text)?;
    }

    if args.golden_trace {
        let report = run_scenario(&golden_trace_config())?;
        write!(stdout, "{}", report.render_log())?;
        let rows = [CsvRow::from_report(&report)];
        match &args.out {
            Some(path) => write_csv(&rows, create(path)?)?,
            None => {
                writeln!(stdout)?;
                write_csv(&rows, &mut *stdout)?;
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    let sweep = Sweep::from_args(&args)?;
    let report = validate(&sweep);
    let failed = report.iter().any(|d| d.severity == Severity::Error);
    if args.validate {
        for d in &report {
            writeln!(stdout, "{d}")?;
        }
        if report.is_empty() {
            writeln!(stdout, "configuration ok")?;
        }
        return Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS });
    }
    for d in &report {
        eprintln!("{d}");
    }
    if failed {
        return Ok(ExitCode::FAILURE);
    }

    let rows = run_points(&sweep.points())?;
    match &args.out {
        Some(path) => write_csv(&rows, create(path)?)?,
        None => write_csv(&rows, &mut *stdout)?,
    }
    if !args.quiet {
        eprint!("{}", summarize(&rows));
    }
    Ok(ExitCode::SUCCESS)
}

fn create(path: &PathBuf) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
