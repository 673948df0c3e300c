//! Wire formats: the 5-byte coding header, coded packets with coefficients
//! carried in front of the payload, and the 4-byte feedback packet.
//!
//! Coding header layout (all multi-byte fields big-endian):
//!
//! ```text
//!  byte 0      window_size        (1..=255)
//!  bytes 1-2   window_opening     (0..=65535)
//!  byte 3      coefficient_count  (1..=255)
//!  byte 4      flags: bit7 source FEC, bit6 last FEC, bits5-0 reserved (zero)
//! ```
//!
//! A coded packet is `header || coefficients[coefficient_count] || payload`.
//! Coefficient `j` multiplies source packet `window_opening + j`; positions at
//! or beyond `window_size` are zero padding. The feedback packet is two
//! big-endian `u16` counters: fully decoded, then partially decoded.

use thiserror::Error;

pub const HEADER_LEN: usize = 5;
pub const FEEDBACK_LEN: usize = 4;

const SOURCE_FEC_BIT: u8 = 0x80;
const LAST_FEC_BIT: u8 = 0x40;
const RESERVED_MASK: u8 = 0x3F;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("{field} = {value} is outside {min}..={max}")]
    OutOfRange {
        field: &'static str,
        value: u64,
        min: u64,
        max: u64,
    },
    #[error("buffer too short: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("reserved flag bits set: {0:#04x}")]
    ReservedBits(u8),
    #[error("window_size {window_size} exceeds coefficient_count {coefficient_count}")]
    WindowExceedsCoefficients { window_size: u8, coefficient_count: u8 },
    #[error("coefficient vector has {got} entries, header says {expected}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("nonzero coefficient at padding position {0}")]
    NonzeroPadding(usize),
    #[error("payload is {got} bytes, flow uses {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("feedback packet must be exactly {FEEDBACK_LEN} bytes, got {0}")]
    FeedbackLength(usize),
}

/// How strictly to treat reserved header bits on decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Reject any packet with reserved bits set.
    #[default]
    Strict,
    /// Ignore reserved bits.
    Tolerant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingHeader {
    /// Span of source indices covered, `closing - opening + 1`.
    pub window_size: u8,
    pub window_opening: u16,
    pub coefficient_count: u8,
    pub source_fec: bool,
    /// Set by whichever node generated this packet when it is a repair.
    /// A packet carries new innovative data iff this is clear.
    pub last_fec: bool,
}

impl CodingHeader {
    /// Builds a header after checking every field against its wire width.
    pub fn new(
        window_size: u64,
        window_opening: u64,
        coefficient_count: u64,
        source_fec: bool,
        last_fec: bool,
    ) -> Result<Self, WireError> {
        check_range("window_size", window_size, 1, u8::MAX as u64)?;
        check_range("window_opening", window_opening, 0, u16::MAX as u64)?;
        check_range("coefficient_count", coefficient_count, 1, u8::MAX as u64)?;
        if window_size > coefficient_count {
            return Err(WireError::WindowExceedsCoefficients {
                window_size: window_size as u8,
                coefficient_count: coefficient_count as u8,
            });
        }
        Ok(Self {
            window_size: window_size as u8,
            window_opening: window_opening as u16,
            coefficient_count: coefficient_count as u8,
            source_fec,
            last_fec,
        })
    }

    /// Global index of the last source packet in the window.
    pub fn window_closing(&self) -> u64 {
        self.window_opening as u64 + self.window_size as u64 - 1
    }

    pub fn is_repair(&self) -> bool {
        self.last_fec
    }

    pub fn encode(&self) -> Result<[u8; HEADER_LEN], WireError> {
        self.validate()?;
        let [hi, lo] = self.window_opening.to_be_bytes();
        let mut flags = 0u8;
        if self.source_fec {
            flags |= SOURCE_FEC_BIT;
        }
        if self.last_fec {
            flags |= LAST_FEC_BIT;
        }
        Ok([self.window_size, hi, lo, self.coefficient_count, flags])
    }

    pub fn decode(bytes: &[u8], mode: ParseMode) -> Result<Self, WireError> {
        if bytes.len() < HEADER_LEN {
            return Err(WireError::Truncated {
                need: HEADER_LEN,
                have: bytes.len(),
            });
        }
        let flags = bytes[4];
        if mode == ParseMode::Strict && flags & RESERVED_MASK != 0 {
            return Err(WireError::ReservedBits(flags & RESERVED_MASK));
        }
        let header = Self {
            window_size: bytes[0],
            window_opening: u16::from_be_bytes([bytes[1], bytes[2]]),
            coefficient_count: bytes[3],
            source_fec: flags & SOURCE_FEC_BIT != 0,
            last_fec: flags & LAST_FEC_BIT != 0,
        };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<(), WireError> {
        check_range("window_size", self.window_size as u64, 1, 255)?;
        check_range("coefficient_count", self.coefficient_count as u64, 1, 255)?;
        if self.window_size > self.coefficient_count {
            return Err(WireError::WindowExceedsCoefficients {
                window_size: self.window_size,
                coefficient_count: self.coefficient_count,
            });
        }
        Ok(())
    }
}

fn check_range(field: &'static str, value: u64, min: u64, max: u64) -> Result<(), WireError> {
    if value < min || value > max {
        return Err(WireError::OutOfRange {
            field,
            value,
            min,
            max,
        });
    }
    Ok(())
}

pub fn encode_header(h: &CodingHeader) -> Result<[u8; HEADER_LEN], WireError> {
    h.encode()
}

pub fn decode_header(bytes: &[u8], mode: ParseMode) -> Result<CodingHeader, WireError> {
    CodingHeader::decode(bytes, mode)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPacket {
    pub header: CodingHeader,
    /// Exactly `header.coefficient_count` entries.
    pub coefficients: Vec<u8>,
    pub payload: Vec<u8>,
}

impl CodedPacket {
    /// Checks the coefficient vector against the header. Payload length is a
    /// per-flow property and is checked by [`CodedPacket::check_flow`].
    pub fn validate(&self) -> Result<(), WireError> {
        self.header.validate()?;
        let expected = self.header.coefficient_count as usize;
        if self.coefficients.len() != expected {
            return Err(WireError::CoefficientCount {
                expected,
                got: self.coefficients.len(),
            });
        }
        let ws = self.header.window_size as usize;
        if let Some(pos) = self.coefficients[ws..].iter().position(|&c| c != 0) {
            return Err(WireError::NonzeroPadding(ws + pos));
        }
        Ok(())
    }

    pub fn check_flow(&self, coefficient_count: u8, payload_len: usize) -> Result<(), WireError> {
        self.validate()?;
        if self.header.coefficient_count != coefficient_count {
            return Err(WireError::CoefficientCount {
                expected: coefficient_count as usize,
                got: self.header.coefficient_count as usize,
            });
        }
        if self.payload.len() != payload_len {
            return Err(WireError::PayloadLength {
                expected: payload_len,
                got: self.payload.len(),
            });
        }
        Ok(())
    }

    /// Coefficients over the window proper, without padding.
    pub fn window_coefficients(&self) -> &[u8] {
        &self.coefficients[..self.header.window_size as usize]
    }

    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.coefficients.len() + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.header.encode()?);
        out.extend_from_slice(&self.coefficients);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(bytes: &[u8], mode: ParseMode) -> Result<Self, WireError> {
        let header = CodingHeader::decode(bytes, mode)?;
        let coeff_end = HEADER_LEN + header.coefficient_count as usize;
        if bytes.len() < coeff_end {
            return Err(WireError::Truncated {
                need: coeff_end,
                have: bytes.len(),
            });
        }
        let packet = Self {
            header,
            coefficients: bytes[HEADER_LEN..coeff_end].to_vec(),
            payload: bytes[coeff_end..].to_vec(),
        };
        packet.validate()?;
        Ok(packet)
    }

    /// Decodes and checks the result against the flow's fixed sizes, so a
    /// truncated payload is caught.
    pub fn decode_for_flow(
        bytes: &[u8],
        coefficient_count: u8,
        payload_len: usize,
        mode: ParseMode,
    ) -> Result<Self, WireError> {
        let need = HEADER_LEN + coefficient_count as usize + payload_len;
        if bytes.len() < need {
            return Err(WireError::Truncated {
                need,
                have: bytes.len(),
            });
        }
        let packet = Self::decode(bytes, mode)?;
        packet.check_flow(coefficient_count, payload_len)?;
        Ok(packet)
    }
}

pub fn encode_packet(p: &CodedPacket) -> Result<Vec<u8>, WireError> {
    p.encode()
}

pub fn decode_packet(bytes: &[u8], mode: ParseMode) -> Result<CodedPacket, WireError> {
    CodedPacket::decode(bytes, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeedbackPacket {
    /// Length of the contiguous decoded prefix.
    pub fully_decoded: u64,
    /// Innovative degrees of freedom not yet part of that prefix.
    pub partially_decoded: u64,
}

impl FeedbackPacket {
    pub fn new(fully_decoded: u64, partially_decoded: u64) -> Self {
        Self {
            fully_decoded,
            partially_decoded,
        }
    }

    pub fn rank(&self) -> u64 {
        self.fully_decoded + self.partially_decoded
    }

    pub fn encode(&self) -> Result<[u8; FEEDBACK_LEN], WireError> {
        check_range("fully_decoded", self.fully_decoded, 0, u16::MAX as u64)?;
        check_range("partially_decoded", self.partially_decoded, 0, u16::MAX as u64)?;
        let [a, b] = (self.fully_decoded as u16).to_be_bytes();
        let [c, d] = (self.partially_decoded as u16).to_be_bytes();
        Ok([a, b, c, d])
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() != FEEDBACK_LEN {
            return Err(WireError::FeedbackLength(bytes.len()));
        }
        Ok(Self {
            fully_decoded: u16::from_be_bytes([bytes[0], bytes[1]]) as u64,
            partially_decoded: u16::from_be_bytes([bytes[2], bytes[3]]) as u64,
        })
    }
}

pub fn encode_feedback(f: &FeedbackPacket) -> Result<[u8; FEEDBACK_LEN], WireError> {
    f.encode()
}

pub fn decode_feedback(bytes: &[u8]) -> Result<FeedbackPacket, WireError> {
    FeedbackPacket::decode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(ws: u8, open: u16, cc: u8, src: bool, last: bool) -> CodingHeader {
        CodingHeader {
            window_size: ws,
            window_opening: open,
            coefficient_count: cc,
            source_fec: src,
            last_fec: last,
        }
    }

    #[test]
    fn header_layout_examples() {
        let h = header(3, 0, 8, false, false);
        assert_eq!(h.encode().unwrap(), [0x03, 0x00, 0x00, 0x08, 0x00]);
        let h = header(1, 65535, 1, true, true);
        assert_eq!(h.encode().unwrap(), [0x01, 0xFF, 0xFF, 0x01, 0xC0]);
        assert_eq!(h.window_closing(), 65535);
    }

    #[test]
    fn header_constructor_rejects_wide_opening() {
        let err = CodingHeader::new(1, 70_000, 1, false, false).unwrap_err();
        assert!(matches!(err, WireError::OutOfRange { field: "window_opening", .. }));
    }

    #[test]
    fn header_decode_examples() {
        let h = decode_header(&[0x03, 0x00, 0x00, 0x08, 0x00], ParseMode::Strict).unwrap();
        assert_eq!(h, header(3, 0, 8, false, false));
        assert!(matches!(
            decode_header(&[0x03, 0x00, 0x00, 0x08], ParseMode::Strict),
            Err(WireError::Truncated { need: 5, have: 4 })
        ));
        let reserved = [0x01, 0x00, 0x01, 0x01, 0x3F];
        assert_eq!(
            decode_header(&reserved, ParseMode::Strict),
            Err(WireError::ReservedBits(0x3F))
        );
        let tolerant = decode_header(&reserved, ParseMode::Tolerant).unwrap();
        assert_eq!(tolerant, header(1, 1, 1, false, false));
    }

    #[test]
    fn zero_window_is_rejected() {
        assert!(decode_header(&[0, 0, 0, 8, 0], ParseMode::Strict).is_err());
        assert!(header(0, 0, 8, false, false).encode().is_err());
    }

    #[test]
    fn packet_length_is_additive() {
        let p = CodedPacket {
            header: header(3, 10, 8, false, false),
            coefficients: vec![1, 2, 3, 0, 0, 0, 0, 0],
            payload: vec![0xAA; 100],
        };
        let bytes = p.encode().unwrap();
        assert_eq!(bytes.len(), 113);
        assert_eq!(CodedPacket::decode(&bytes, ParseMode::Strict).unwrap(), p);
        assert_eq!(
            CodedPacket::decode_for_flow(&bytes, 8, 100, ParseMode::Strict).unwrap(),
            p
        );
    }

    #[test]
    fn truncated_packets_are_rejected() {
        let p = CodedPacket {
            header: header(2, 0, 4, false, false),
            coefficients: vec![7, 9, 0, 0],
            payload: vec![1; 16],
        };
        let bytes = p.encode().unwrap();
        assert!(matches!(
            CodedPacket::decode(&bytes[..7], ParseMode::Strict),
            Err(WireError::Truncated { need: 9, have: 7 })
        ));
        assert!(matches!(
            CodedPacket::decode_for_flow(&bytes[..20], 4, 16, ParseMode::Strict),
            Err(WireError::Truncated { .. })
        ));
    }

    #[test]
    fn nonzero_padding_is_malformed() {
        let p = CodedPacket {
            header: header(2, 0, 4, false, false),
            coefficients: vec![7, 9, 0, 5],
            payload: vec![],
        };
        assert_eq!(p.validate(), Err(WireError::NonzeroPadding(3)));
    }

    #[test]
    fn feedback_examples() {
        assert_eq!(FeedbackPacket::new(6, 1).encode().unwrap(), [0, 6, 0, 1]);
        assert_eq!(FeedbackPacket::new(0, 0).encode().unwrap(), [0, 0, 0, 0]);
        assert!(FeedbackPacket::new(70_000, 0).encode().is_err());
        assert!(FeedbackPacket::decode(&[0, 1, 2]).is_err());
    }

    fn arb_header() -> impl Strategy<Value = CodingHeader> {
        (1u8..=255, any::<u16>(), any::<bool>(), any::<bool>())
            .prop_flat_map(|(cc, open, s, l)| {
                (1u8..=cc).prop_map(move |ws| header(ws, open, cc, s, l))
            })
    }

    fn arb_packet() -> impl Strategy<Value = CodedPacket> {
        (arb_header(), 0usize..64).prop_flat_map(|(h, plen)| {
            (
                proptest::collection::vec(any::<u8>(), h.window_size as usize),
                proptest::collection::vec(any::<u8>(), plen),
            )
                .prop_map(move |(mut coeffs, payload)| {
                    coeffs.resize(h.coefficient_count as usize, 0);
                    CodedPacket {
                        header: h,
                        coefficients: coeffs,
                        payload,
                    }
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn header_round_trip(h in arb_header()) {
            let bytes = h.encode().unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN);
            prop_assert_eq!(bytes[4] & RESERVED_MASK, 0);
            prop_assert_eq!(CodingHeader::decode(&bytes, ParseMode::Strict).unwrap(), h);
        }

        #[test]
        fn packet_round_trip(p in arb_packet()) {
            let bytes = p.encode().unwrap();
            prop_assert_eq!(bytes.len(), p.wire_len());
            prop_assert_eq!(CodedPacket::decode(&bytes, ParseMode::Strict).unwrap(), p);
        }

        #[test]
        fn feedback_round_trip(a in any::<u16>(), b in any::<u16>()) {
            let f = FeedbackPacket::new(a as u64, b as u64);
            prop_assert_eq!(FeedbackPacket::decode(&f.encode().unwrap()).unwrap(), f);
        }
    }
}
