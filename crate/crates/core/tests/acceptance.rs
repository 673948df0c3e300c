//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swnc::channel::LossTrace;
use swnc::cli::{self, Args};
use swnc::codec::CodeRate;
use swnc::gf256::{self, Gf256};
use swnc::metrics::{combined_loss, theoretical_success_ratio};
use swnc::protocols::{
    golden_trace_config, run_scenario, EventKind, Node, ReceiveOutcome,
    RunReport, Scenario, ScenarioConfig,
};
use swnc::wire::{CodedPacket, CodingHeader, FeedbackPacket, ParseMode, HEADER_LEN};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("took {:.2?}, limit {:.0?}", elapsed, limit),
    )
}

fn shift_and_reduce(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1D;
        }
        b >>= 1;
    }
    p
}

fn field_oracle() -> Outcome {
    let start = Instant::now();
    for a in 0..=255u8 {
        for b in 0..=255u8 {
            let got = gf256::mul(Gf256(a), Gf256(b)).0;
            check(got == shift_and_reduce(a, b), format!("mul({a:#04x}, {b:#04x}) = {got:#04x}"))?;
        }
    }
    check(gf256::inv(Gf256(0)).is_err(), "inv(0) must fail")?;
    for a in 1..=255u8 {
        let i = gf256::inv(Gf256(a)).map_err(|e| e.to_string())?.0;
        check(shift_and_reduce(a, i) == 1, format!("inv({a:#04x}) = {i:#04x}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("65536 products and 255 inverses in {:.1?}", start.elapsed()))
}

fn wire_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let count: u64 = rng.gen_range(1..=255);
        let size = rng.gen_range(1..=count);
        let header = CodingHeader::new(size, rng.gen_range(0..=65535), count, rng.gen(), rng.gen())
            .map_err(|e| e.to_string())?;
        let bytes = header.encode().map_err(|e| e.to_string())?;
        check(bytes.len() == HEADER_LEN, "header is not 5 bytes")?;
        check(bytes[4] & 0x3F == 0, "reserved bits set")?;
        check(
            CodingHeader::decode(&bytes, ParseMode::Strict) == Ok(header),
            format!("header {header:?}"),
        )?;

        let mut coefficients = vec![0u8; count as usize];
        rng.fill(&mut coefficients[..size as usize]);
        let payload: Vec<u8> = (0..rng.gen_range(0..200)).map(|_| rng.gen()).collect();
        let packet = CodedPacket {
            header,
            coefficients,
            payload,
        };
        let bytes = packet.encode().map_err(|e| e.to_string())?;
        check(
            bytes.len() == HEADER_LEN + count as usize + packet.payload.len(),
            "packet length",
        )?;
        check(
            CodedPacket::decode(&bytes, ParseMode::Strict).as_ref() == Ok(&packet),
            "packet round trip",
        )?;

        let fb = FeedbackPacket::new(rng.gen_range(0..=65535), rng.gen_range(0..=65535));
        let bytes = fb.encode().map_err(|e| e.to_string())?;
        check(FeedbackPacket::decode(&bytes) == Ok(fb), format!("feedback {fb:?}"))?;
    }
    Ok("10000 header, packet and feedback round trips".into())
}

fn sink_state_at(r: &RunReport, slot: u64) -> Option<(u64, u64)> {
    r.events
        .iter()
        .rev()
        .filter(|e| e.slot == slot)
        .filter_map(|e| match e.kind {
            EventKind::Feedback { fully, partial } => Some((fully, partial)),
            _ => None,
        })
        .next()
}

fn recoder_discards_at(r: &RunReport, slot: u64) -> bool {
    r.events.iter().any(|e| {
        e.slot == slot
            && matches!(
                e.kind,
                EventKind::Receive {
                    at: Node::Recoder,
                    outcome: ReceiveOutcome::Redundant,
                    ..
                }
            )
    })
}

fn golden_trace() -> Outcome {
    let start = Instant::now();
    let cfg = golden_trace_config();
    let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
    check(recoder_discards_at(&r, 6), "no recoder discard at slot 6")?;
    let state = sink_state_at(&r, 11);
    check(state == Some((6, 1)), format!("sink state at slot 11 is {state:?}"))?;
    check(r.all_delivered(), "golden run did not deliver every packet")?;
    within(start.elapsed(), Duration::from_secs(1))?;

    // The same run with channel-1 losses listed at send slots 7 and 9.
    let literal = ScenarioConfig {
        loss_trace: Some(LossTrace {
            channel1: [7, 9].into(),
            channel2: [4].into(),
        }),
        ..cfg
    };
    let lr = run_scenario(&literal).map_err(|e| e.to_string())?;
    Ok(format!(
        "slot-6 discard, sink {{6, 1}} at slot 11 (link-2 loss at send slot 4, link-1 loss at send slot 8); \
         with link-1 losses at send slots 7 and 9 instead: discard={}, sink {:?} at slot 11",
        recoder_discards_at(&lr, 6),
        sink_state_at(&lr, 11).unwrap_or_default()
    ))
}

fn random_config(rng: &mut ChaCha8Rng, scenario: Scenario) -> ScenarioConfig {
    let eps1 = rng.gen_range(0.0..=0.3);
    let eps2 = rng.gen_range(0.0..=0.3);
    let gamma = rng.gen_range(0.02..=0.15);
    let rtt = rng.gen_range(2..=30);
    let n = rng.gen_range(1..=200);
    let mut cfg = ScenarioConfig {
        scenario,
        eps1,
        eps2,
        rtt_slots: rtt,
        num_packets: n,
        payload_bytes: rng.gen_range(1..=64),
        gamma,
        max_window: rng.gen_range(8..=255),
        slot_cap: 40 * n + 20 * rtt + 500,
        seed: rng.gen(),
        ..ScenarioConfig::default()
    };
    // Half the runs use explicit rates drawn below each hop's capacity.
    if rng.gen_bool(0.5) {
        let pick = |rng: &mut ChaCha8Rng, loss: f64| {
            let n = rng.gen_range(1..=16u32);
            let k = ((((1.0 - loss) - 0.02) * n as f64).floor() as u32).max(1);
            CodeRate::new(k.min(n), n).ok()
        };
        let src_loss = if scenario == Scenario::SwncEndToEnd {
            combined_loss(eps1, eps2)
        } else {
            eps1
        };
        cfg.rate_src = pick(rng, src_loss);
        cfg.rate_recoder = pick(rng, eps2);
    }
    cfg
}

fn end_to_end_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut summary = Vec::new();
    for scenario in Scenario::ALL {
        let (mut completed, mut attempted) = (0, 0);
        while completed < 1000 {
            attempted += 1;
            check(attempted <= 2000, format!("{scenario}: too many incomplete runs"))?;
            let cfg = random_config(&mut rng, scenario);
            let r = run_scenario(&cfg).map_err(|e| format!("{cfg:?}: {e}"))?;
            check(r.delivered_intact(), format!("payload mismatch: {cfg:?}"))?;
            if r.metrics.completed {
                check(r.all_delivered(), format!("completed without delivery: {cfg:?}"))?;
                completed += 1;
            }
        }
        summary.push(format!("{scenario} {completed}/{attempted}"));
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!(
        "byte-identical delivery in every completed run ({}) in {:.1?}",
        summary.join(", "),
        start.elapsed()
    ))
}

fn reference_runs(scenario: Scenario) -> Vec<RunReport> {
    (0..100)
        .map(|seed| {
            run_scenario(&ScenarioConfig {
                scenario,
                seed,
                ..ScenarioConfig::default()
            })
            .expect("reference configuration is valid")
        })
        .collect()
}

fn mean(runs: &[RunReport], f: impl Fn(&RunReport) -> f64) -> f64 {
    runs.iter().map(f).sum::<f64>() / runs.len() as f64
}

fn capacity_ordering() -> Outcome {
    let start = Instant::now();
    let arq = reference_runs(Scenario::SrArq);
    let e2e = reference_runs(Scenario::SwncEndToEnd);
    let rec = reference_runs(Scenario::SwncRecoder);
    let slots = |r: &[RunReport]| mean(r, |x| x.metrics.completion_slots as f64);
    let tx = |r: &[RunReport]| mean(r, |x| x.metrics.total_transmissions as f64);
    let (c_rec, c_e2e) = (slots(&rec), slots(&e2e));
    let (t_arq, t_rec, t_e2e) = (tx(&arq), tx(&rec), tx(&e2e));
    check(c_rec < c_e2e, format!("completion recoder {c_rec:.1} vs e2e {c_e2e:.1}"))?;
    check(
        t_arq <= t_rec && t_rec <= t_e2e,
        format!("transmissions arq {t_arq:.1}, recoder {t_rec:.1}, e2e {t_e2e:.1}"),
    )?;
    for (name, runs) in [("swnc-e2e", &e2e), ("swnc-recoder", &rec)] {
        let done = runs.iter().filter(|r| r.metrics.completed).count();
        check(done == runs.len(), format!("{name}: {done}/100 completed"))?;
    }
    let arq_done = arq.iter().filter(|r| r.metrics.completed).count();
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "completion recoder {c_rec:.1} < e2e {c_e2e:.1}; transmissions arq {t_arq:.1} <= recoder {t_rec:.1} <= e2e {t_e2e:.1}; \
         coding 200/200 completed, arq {arq_done}/100"
    ))
}

fn success_ratio_bound() -> Outcome {
    let start = Instant::now();
    let bound = theoretical_success_ratio(Scenario::SwncRecoder, 0.05, 0.15);
    check((bound - 0.85).abs() < 1e-12, format!("bound {bound}"))?;

    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut points = Vec::new();
    for scenario in Scenario::ALL {
        for eps2 in [0.05, 0.1, 0.15, 0.2, 0.25, 0.3] {
            for rtt in [4, 20] {
                for seed in 0..10 {
                    points.push(ScenarioConfig {
                        scenario,
                        eps2,
                        rtt_slots: rtt,
                        seed,
                        slot_cap: 2000,
                        ..ScenarioConfig::default()
                    });
                }
            }
        }
    }
    let large: Vec<ScenarioConfig> = (0..20)
        .map(|seed| ScenarioConfig {
            num_packets: 1600,
            rtt_slots: 4,
            slot_cap: 5000,
            seed,
            ..ScenarioConfig::default()
        })
        .collect();
    points.extend(large.iter().cloned());

    let mut large_ratios = Vec::new();
    let mut over = Vec::new();
    for cfg in &points {
        let r = run_scenario(cfg).map_err(|e| e.to_string())?;
        let b = theoretical_success_ratio(cfg.scenario, cfg.eps1, cfg.eps2);
        let excess = r.metrics.success_ratio - b;
        if excess > 0.02 {
            over.push(format!(
                "{} eps2={} rtt={} seed={}: {:.4} vs {b:.2}",
                cfg.scenario, cfg.eps2, cfg.rtt_slots, cfg.seed, r.metrics.success_ratio
            ));
        }
        worst = worst.max(excess);
        checked += 1;
        if cfg.num_packets == 1600 {
            check(r.metrics.completed, format!("N=1600 seed {} incomplete", cfg.seed))?;
            large_ratios.push(r.metrics.success_ratio);
        }
    }
    let large_mean = large_ratios.iter().sum::<f64>() / large_ratios.len() as f64;
    let summary = format!(
        "{checked} runs, max ratio - bound = {worst:+.4}; recoder mean at N=1600, RTT=4: {large_mean:.4} vs 0.85"
    );
    check(
        over.is_empty(),
        format!("{summary}; {} runs above bound + 0.02: {}", over.len(), over.join("; ")),
    )?;
    check(
        (bound - large_mean).abs() <= 0.05,
        format!("mean ratio at N=1600, RTT=4 is {large_mean:.4}, bound {bound}"),
    )?;
    within(start.elapsed(), Duration::from_secs(120))?;
    Ok(summary)
}

fn recoder_rate_adaptation() -> Outcome {
    let mut lines = Vec::new();
    for (eps1, eps2) in [(0.05, 0.15), (0.0, 0.1), (0.1, 0.3), (0.02, 0.25)] {
        let cfg = ScenarioConfig {
            eps1,
            eps2,
            ..ScenarioConfig::default()
        };
        let (src, rec) = (
            cfg.source_rate().map_err(|e| e.to_string())?,
            cfg.recoder_rate().map_err(|e| e.to_string())?,
        );
        check(
            rec.value() < src.value(),
            format!("({eps1}, {eps2}): recoder {rec} not below source {src}"),
        )?;
        let r = run_scenario(&cfg).map_err(|e| e.to_string())?;
        check(
            r.metrics.completed && r.all_delivered(),
            format!("({eps1}, {eps2}) did not complete"),
        )?;
        lines.push(format!("({eps1}, {eps2}) {src} > {rec}"));
    }
    Ok(lines.join(", "))
}

fn csv_for(args: &Args) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    cli::run(args, &mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "scenario = \"all\"\neps1 = 0.05\neps2 = [0.1, 0.2]\nrtt = [4, 20]\nseeds = \"0..5\"\nquiet = true\n",
    )
    .map_err(|e| e.to_string())?;
    let args = Args {
        config: Some(config),
        ..Args::default()
    };
    let a = csv_for(&args)?;
    let b = csv_for(&args)?;
    check(a == b, "CSV differs between identical runs")?;
    let rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
    check(rows == 3 * 2 * 2 * 5, format!("{rows} rows"))?;

    let single = Args {
        scenario: Some("swnc-recoder".into()),
        seeds: Some("17".into()),
        quiet: true,
        ..Args::default()
    };
    check(csv_for(&single)? == csv_for(&single)?, "single run differs")?;
    Ok(format!("{rows}-row sweep and single run reproduce byte for byte"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("field oracle", field_oracle),
        ("wire round trip", wire_round_trip),
        ("golden trace", golden_trace),
        ("end-to-end correctness", end_to_end_correctness),
        ("capacity ordering", capacity_ordering),
        ("success-ratio bound", success_ratio_bound),
        ("recoder rate adaptation", recoder_rate_adaptation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
