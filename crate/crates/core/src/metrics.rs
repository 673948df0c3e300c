//! Run metrics (completion time, forward transmissions, success ratio) and
//! the capacity bounds they are compared against.

use serde::Serialize;

use crate::protocols::{Event, EventKind, Link, Scenario};

/// Loss of the cascade of two independent erasure channels.
pub fn combined_loss(eps1: f64, eps2: f64) -> f64 {
    1.0 - (1.0 - eps1) * (1.0 - eps2)
}

/// Best achievable success ratio for a scenario.
///
/// Coding end-to-end through a plain relay is limited by the cascaded channel.
/// A recoder, or a store-and-forward relay that retransmits per hop, reaches
/// the min-cut of the path.
pub fn theoretical_success_ratio(scenario: Scenario, eps1: f64, eps2: f64) -> f64 {
    match scenario {
        Scenario::SwncEndToEnd => 1.0 - combined_loss(eps1, eps2),
        Scenario::SwncRecoder | Scenario::SrArq => (1.0 - eps1).min(1.0 - eps2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub completed: bool,
    /// Slot in which the source saw every packet acknowledged, or the slot cap.
    pub completion_slots: u64,
    pub total_transmissions: u64,
    pub tx_link1: u64,
    pub tx_link2: u64,
    /// Distinct source packets decoded at the sink.
    pub useful_packets: u64,
    pub success_ratio: f64,
}

impl RunMetrics {
    /// Aggregates a run's event log. `slot_cap` is the horizon used when the
    /// log has no completion event.
    pub fn collect(events: &[Event], slot_cap: u64) -> Self {
        let mut tx = [0u64; 2];
        let mut useful = 0;
        let mut completion = None;
        for ev in events {
            match &ev.kind {
                EventKind::Transmit { link, .. } => match link {
                    Link::One => tx[0] += 1,
                    Link::Two => tx[1] += 1,
                },
                EventKind::SinkDecoded { .. } => useful += 1,
                EventKind::Completed => {
                    completion.get_or_insert(ev.slot);
                }
                _ => {}
            }
        }
        let completion_slots = completion.unwrap_or(slot_cap);
        let success_ratio = if completion_slots == 0 {
            0.0
        } else {
            useful as f64 / completion_slots as f64
        };
        Self {
            completed: completion.is_some(),
            completion_slots,
            total_transmissions: tx[0] + tx[1],
            tx_link1: tx[0],
            tx_link2: tx[1],
            useful_packets: useful,
            success_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{Node, PacketDesc};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn bounds_at_reference_point() {
        assert!(close(theoretical_success_ratio(Scenario::SwncRecoder, 0.05, 0.15), 0.85));
        assert!(close(theoretical_success_ratio(Scenario::SwncEndToEnd, 0.05, 0.15), 0.8075));
        assert!(close(theoretical_success_ratio(Scenario::SwncRecoder, 0.0, 0.0), 1.0));
    }

    #[test]
    fn combined_loss_examples() {
        assert!(close(combined_loss(0.0, 0.3), 0.3));
        assert!(close(combined_loss(0.05, 0.15), 0.1925));
        for x in [0.0, 0.2, 0.7, 0.99] {
            assert!(combined_loss(0.9, x) >= 0.9);
        }
    }

    fn tx(slot: u64, link: Link) -> Event {
        Event {
            slot,
            kind: EventKind::Transmit {
                link,
                from: Node::Source,
                packet: PacketDesc::Frame {
                    seq: 0,
                    retransmission: false,
                },
                lost: false,
            },
        }
    }

    #[test]
    fn collect_counts_links_and_completion() {
        let mut events = vec![tx(1, Link::One), tx(2, Link::One), tx(2, Link::Two)];
        events.push(Event {
            slot: 3,
            kind: EventKind::SinkDecoded { index: 0 },
        });
        events.push(Event {
            slot: 4,
            kind: EventKind::Completed,
        });
        let m = RunMetrics::collect(&events, 500);
        assert!(m.completed);
        assert_eq!((m.tx_link1, m.tx_link2, m.total_transmissions), (2, 1, 3));
        assert_eq!(m.completion_slots, 4);
        assert!(close(m.success_ratio, 0.25));
    }

    #[test]
    fn incomplete_run_reports_the_cap() {
        let m = RunMetrics::collect(&[tx(1, Link::One)], 500);
        assert!(!m.completed);
        assert_eq!(m.completion_slots, 500);
        assert_eq!(m.success_ratio, 0.0);
    }
}
