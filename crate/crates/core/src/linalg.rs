//! Rows over global source indices and an incrementally maintained reduced
//! row-echelon basis. Shared by the sink decoder (coefficients + payload) and
//! the recoder's innovation check (coefficients only).

use std::collections::BTreeMap;

use crate::gf256::{self, Gf256};

/// A coefficient vector addressed by global source index, plus the payload
/// produced by the same linear combination.
///
/// Only the span `[start, start + coeffs.len())` is stored; everything outside
/// is zero. The span is kept trimmed so that `coeffs` never starts or ends with
/// a zero, except for the empty (all-zero) row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combination {
    start: u64,
    coeffs: Vec<u8>,
    payload: Vec<u8>,
}

impl Combination {
    pub fn new(start: u64, coeffs: Vec<u8>, payload: Vec<u8>) -> Self {
        let mut row = Self {
            start,
            coeffs,
            payload,
        };
        row.trim();
        row
    }

    /// The unit vector `e_index` carrying `payload`.
    pub fn unit(index: u64, payload: Vec<u8>) -> Self {
        Self {
            start: index,
            coeffs: vec![1],
            payload,
        }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// One past the last stored column.
    pub fn end(&self) -> u64 {
        self.start + self.coeffs.len() as u64
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn into_payload(self) -> Vec<u8> {
        self.payload
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<u64> {
        (!self.coeffs.is_empty()).then_some(self.start)
    }

    /// Last column with a nonzero coefficient.
    pub fn trailing(&self) -> Option<u64> {
        (!self.coeffs.is_empty()).then(|| self.end() - 1)
    }

    pub fn coeff(&self, col: u64) -> Gf256 {
        if col < self.start {
            return Gf256::ZERO;
        }
        self.coeffs
            .get((col - self.start) as usize)
            .map_or(Gf256::ZERO, |&c| Gf256(c))
    }

    /// True when the row is `c * e_i` for some column `i`.
    pub fn is_unit(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Combination, c: Gf256) {
        if c.is_zero() || other.is_zero() {
            return;
        }
        if self.is_zero() {
            self.start = other.start;
            self.coeffs.clear();
        }
        let start = self.start.min(other.start);
        let end = self.end().max(other.end());
        if start < self.start || end > self.end() {
            let mut widened = vec![0u8; (end - start) as usize];
            let off = (self.start - start) as usize;
            widened[off..off + self.coeffs.len()].copy_from_slice(&self.coeffs);
            self.coeffs = widened;
            self.start = start;
        }
        let off = (other.start - self.start) as usize;
        gf256::mul_add_slice(&mut self.coeffs[off..], &other.coeffs, c);
        if self.payload.len() < other.payload.len() {
            self.payload.resize(other.payload.len(), 0);
        }
        gf256::mul_add_slice(&mut self.payload, &other.payload, c);
        self.trim();
    }

    pub fn scale(&mut self, c: Gf256) {
        gf256::scale_slice(&mut self.coeffs, c);
        gf256::scale_slice(&mut self.payload, c);
        self.trim();
    }

    /// Zeroes every coefficient below `floor`. The payload is left alone, so
    /// this is only meaningful for coefficient-only bookkeeping.
    pub fn project_from(&mut self, floor: u64) {
        if floor <= self.start {
            return;
        }
        let cut = ((floor - self.start) as usize).min(self.coeffs.len());
        self.coeffs.drain(..cut);
        self.start = floor;
        self.trim();
    }

    /// Coefficients laid out from `opening`, zero-padded to `len`.
    /// Returns `None` if the support does not fit in `[opening, opening + len)`.
    pub fn aligned(&self, opening: u64, len: usize) -> Option<Vec<u8>> {
        let mut out = vec![0u8; len];
        if self.is_zero() {
            return Some(out);
        }
        if self.start < opening || self.end() > opening + len as u64 {
            return None;
        }
        let off = (self.start - opening) as usize;
        out[off..off + self.coeffs.len()].copy_from_slice(&self.coeffs);
        Some(out)
    }

    fn trim(&mut self) {
        let Some(first) = self.coeffs.iter().position(|&c| c != 0) else {
            self.coeffs.clear();
            return;
        };
        let last = self.coeffs.iter().rposition(|&c| c != 0).unwrap_or(first);
        self.coeffs.truncate(last + 1);
        if first > 0 {
            self.coeffs.drain(..first);
            self.start += first as u64;
        }
    }
}

/// Result of inserting a row into an [`Echelon`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inserted {
    pub pivot: u64,
    /// Pivots of pre-existing rows changed by back-substitution.
    pub touched: Vec<u64>,
}

/// Reduced row-echelon basis keyed by pivot column.
///
/// Invariant: every stored row has coefficient 1 at its pivot (its first
/// nonzero column) and 0 at every other row's pivot.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    rows: BTreeMap<u64, Combination>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, pivot: u64) -> Option<&Combination> {
        self.rows.get(&pivot)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&u64, &Combination)> {
        self.rows.iter()
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    /// Eliminates every pivot column from `row`.
    pub fn reduce(&self, row: &mut Combination) {
        let mut col = row.start();
        while !row.is_zero() && col < row.end() {
            let Some((&pivot, basis)) = self.rows.range(col..row.end()).next() else {
                break;
            };
            let c = row.coeff(pivot);
            if !c.is_zero() {
                row.add_scaled(basis, c);
            }
            col = pivot + 1;
        }
    }

    /// Would `row` increase the rank?
    pub fn is_innovative(&self, row: &Combination) -> bool {
        let mut probe = row.clone();
        self.reduce(&mut probe);
        !probe.is_zero()
    }

    /// Reduces `row` and stores it if it is independent of the basis.
    pub fn insert(&mut self, mut row: Combination) -> Option<Inserted> {
        self.reduce(&mut row);
        let pivot = row.leading()?;
        let lead = row.coeff(pivot);
        row.scale(lead.inv().expect("leading coefficient is nonzero"));

        let mut touched = Vec::new();
        for (&p, other) in self.rows.range_mut(..pivot) {
            let c = other.coeff(pivot);
            if !c.is_zero() {
                other.add_scaled(&row, c);
                touched.push(p);
            }
        }
        self.rows.insert(pivot, row);
        Some(Inserted { pivot, touched })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_keeps_support_tight() {
        let r = Combination::new(10, vec![0, 0, 3, 0, 5, 0], vec![]);
        assert_eq!(r.start(), 12);
        assert_eq!(r.coeffs(), &[3, 0, 5]);
        assert_eq!(r.trailing(), Some(14));
        assert!(Combination::new(4, vec![0, 0], vec![]).is_zero());
    }

    #[test]
    fn add_scaled_widens_both_ways() {
        let mut a = Combination::new(5, vec![1, 2], vec![1, 1]);
        let b = Combination::new(3, vec![4, 0, 0, 0, 7], vec![2, 0]);
        a.add_scaled(&b, Gf256(1));
        assert_eq!(a.start(), 3);
        assert_eq!(a.coeffs(), &[4, 0, 1, 2, 7]);
        assert_eq!(a.payload(), &[3, 1]);
    }

    #[test]
    fn self_cancellation_gives_zero() {
        let a = Combination::new(2, vec![9, 8, 7], vec![]);
        let mut b = a.clone();
        b.add_scaled(&a, Gf256(1));
        assert!(b.is_zero());
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let mut e = Echelon::new();
        let r1 = Combination::new(0, vec![1, 2, 3], vec![]);
        let r2 = Combination::new(1, vec![5, 6], vec![]);
        assert!(e.insert(r1.clone()).is_some());
        assert!(e.insert(r2.clone()).is_some());
        let mut combo = r1.clone();
        combo.scale(Gf256(0x1F));
        combo.add_scaled(&r2, Gf256(0x33));
        assert!(!e.is_innovative(&combo));
        assert!(e.insert(combo).is_none());
        assert_eq!(e.rank(), 2);
    }

    #[test]
    fn projection_drops_low_columns() {
        let mut r = Combination::new(0, vec![4, 0, 6, 1], vec![]);
        r.project_from(2);
        assert_eq!(r.start(), 2);
        assert_eq!(r.coeffs(), &[6, 1]);
        r.project_from(10);
        assert!(r.is_zero());
    }

    #[test]
    fn aligned_layout() {
        let r = Combination::new(4, vec![1, 2], vec![]);
        assert_eq!(r.aligned(3, 5), Some(vec![0, 1, 2, 0, 0]));
        assert_eq!(r.aligned(5, 5), None);
        assert_eq!(r.aligned(0, 5), None);
    }
}
