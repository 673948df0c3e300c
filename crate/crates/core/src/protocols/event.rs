use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    /// Source to intermediate node.
    One,
    /// Intermediate node to sink.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Source,
    Relay,
    Recoder,
    Sink,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Node::Source => "source",
            Node::Relay => "relay",
            Node::Recoder => "recoder",
            Node::Sink => "sink",
        })
    }
}

/// Summary of a forward packet, enough to read a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketDesc {
    Coded { opening: u64, closing: u64, repair: bool },
    Frame { seq: u64, retransmission: bool },
}

impl fmt::Display for PacketDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PacketDesc::Coded {
                opening,
                closing,
                repair,
            } => {
                let kind = if repair { "repair" } else { "data" };
                write!(f, "{kind}[{opening}..{closing}]")
            }
            PacketDesc::Frame {
                seq,
                retransmission,
            } => {
                write!(f, "frame {seq}")?;
                if retransmission {
                    f.write_str(" (rtx)")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// Increased the receiver's rank or was a new frame.
    Innovative,
    /// Carried nothing new.
    Redundant,
    /// Innovative, but no buffer space.
    Refused,
    /// Queued verbatim for the next hop.
    Queued,
}

impl fmt::Display for ReceiveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiveOutcome::Innovative => "innovative",
            ReceiveOutcome::Redundant => "discarded",
            ReceiveOutcome::Refused => "refused",
            ReceiveOutcome::Queued => "queued",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Transmit {
        link: Link,
        from: Node,
        packet: PacketDesc,
        lost: bool,
    },
    Receive {
        at: Node,
        packet: PacketDesc,
        outcome: ReceiveOutcome,
    },
    /// Sink state reported after a reception.
    Feedback { fully: u64, partial: u64 },
    /// Coding feedback applied at a node.
    FeedbackApplied { at: Node, fully: u64 },
    /// ARQ acknowledgment applied at a sender.
    Ack {
        at: Node,
        cumulative: u64,
        nacks: usize,
    },
    SinkDecoded { index: u64 },
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub slot: u64,
    pub kind: EventKind,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "slot {:>4}  ", self.slot)?;
        match &self.kind {
            EventKind::Transmit {
                link,
                from,
                packet,
                lost,
            } => {
                let hop = match link {
                    Link::One => 1,
                    Link::Two => 2,
                };
                write!(f, "{from} sends {packet} on link {hop}")?;
                if *lost {
                    f.write_str(" -- LOST")?;
                }
                Ok(())
            }
            EventKind::Receive {
                at,
                packet,
                outcome,
            } => write!(f, "{at} receives {packet}: {outcome}"),
            EventKind::Feedback { fully, partial } => {
                write!(f, "sink state {{{fully}, {partial}}}")
            }
            EventKind::FeedbackApplied { at, fully } => {
                write!(f, "{at} learns fully decoded = {fully}")
            }
            EventKind::Ack {
                at,
                cumulative,
                nacks,
            } => write!(f, "{at} ack cumulative {cumulative}, {nacks} nack(s)"),
            EventKind::SinkDecoded { index } => write!(f, "sink decodes packet {index}"),
            EventKind::Completed => f.write_str("source observes full acknowledgment"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_readable() {
        let ev = Event {
            slot: 6,
            kind: EventKind::Receive {
                at: Node::Recoder,
                packet: PacketDesc::Coded {
                    opening: 0,
                    closing: 3,
                    repair: true,
                },
                outcome: ReceiveOutcome::Redundant,
            },
        };
        assert_eq!(ev.to_string(), "slot    6  recoder receives repair[0..3]: discarded");
        let ev = Event {
            slot: 11,
            kind: EventKind::Feedback { fully: 6, partial: 1 },
        };
        assert_eq!(ev.to_string(), "slot   11  sink state {6, 1}");
    }
}
