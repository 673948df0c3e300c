//! Arithmetic over GF(2^8) with the reduction polynomial x^8 + x^4 + x^3 + x^2 + 1 (0x11D).
//!
//! Multiplication goes through log/antilog tables built at compile time; the
//! generator 2 is primitive for this polynomial, so every nonzero element is a
//! power of 2. Bulk helpers operate on raw byte slices, which is the form both
//! coefficient vectors and payloads take on the wire.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use thiserror::Error;

/// Reduction polynomial, including the x^8 term.
pub const POLYNOMIAL: u16 = 0x11D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("zero has no multiplicative inverse in GF(256)")]
pub struct NonInvertible;

const fn build_tables() -> ([u8; 256], [u8; 512]) {
    let mut log = [0u8; 256];
    let mut exp = [0u8; 512];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLYNOMIAL;
        }
        i += 1;
    }
    // exp[510], exp[511] are never indexed: log values are < 255.
    (log, exp)
}

const TABLES: ([u8; 256], [u8; 512]) = build_tables();
const LOG: [u8; 256] = TABLES.0;
const EXP: [u8; 512] = TABLES.1;

/// One element of GF(256).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse. Fails only for zero.
    #[inline]
    pub fn inv(self) -> Result<Gf256, NonInvertible> {
        if self.0 == 0 {
            return Err(NonInvertible);
        }
        Ok(Gf256(EXP[255 - LOG[self.0 as usize] as usize]))
    }

    /// `self / rhs`.
    #[inline]
    pub fn div(self, rhs: Gf256) -> Result<Gf256, NonInvertible> {
        Ok(self * rhs.inv()?)
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf256({:#04x})", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(v: u8) -> Self {
        Gf256(v)
    }
}

impl From<Gf256> for u8 {
    fn from(v: Gf256) -> Self {
        v.0
    }
}

/// Characteristic-2 addition: bitwise XOR.
#[inline]
pub fn add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn mul(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(mul_u8(a.0, b.0))
}

#[inline]
pub fn inv(a: Gf256) -> Result<Gf256, NonInvertible> {
    a.inv()
}

#[inline]
fn mul_u8(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    fn sub(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = mul(*self, rhs);
    }
}

/// `dst[i] += c * src[i]` over the common prefix of both slices.
pub fn mul_add_slice(dst: &mut [u8], src: &[u8], c: Gf256) {
    match c.0 {
        0 => {}
        1 => {
            for (d, s) in dst.iter_mut().zip(src) {
                *d ^= *s;
            }
        }
        _ => {
            let log_c = LOG[c.0 as usize] as usize;
            for (d, &s) in dst.iter_mut().zip(src) {
                if s != 0 {
                    *d ^= EXP[log_c + LOG[s as usize] as usize];
                }
            }
        }
    }
}

/// `buf[i] *= c`.
pub fn scale_slice(buf: &mut [u8], c: Gf256) {
    match c.0 {
        0 => buf.fill(0),
        1 => {}
        _ => {
            let log_c = LOG[c.0 as usize] as usize;
            for b in buf.iter_mut() {
                if *b != 0 {
                    *b = EXP[log_c + LOG[*b as usize] as usize];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Shift-and-reduce, no tables.
    fn oracle_mul(mut a: u8, mut b: u8) -> u8 {
        let mut acc = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= (POLYNOMIAL & 0xFF) as u8;
            }
            b >>= 1;
        }
        acc
    }

    #[test]
    fn add_examples() {
        assert_eq!(add(Gf256(0x00), Gf256(0x7F)), Gf256(0x7F));
        assert_eq!(add(Gf256(0xAB), Gf256(0xAB)), Gf256(0x00));
        assert_eq!(add(Gf256(0x53), Gf256(0xCA)), Gf256(0x99));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(mul(Gf256(0x01), Gf256(0x5E)), Gf256(0x5E));
        assert_eq!(mul(Gf256(0x00), Gf256(0xFF)), Gf256(0x00));
        assert_eq!(oracle_mul(0x02, 0x80), 0x1D);
        assert_eq!(mul(Gf256(0x02), Gf256(0x80)), Gf256(0x1D));
    }

    #[test]
    fn inv_examples() {
        assert_eq!(inv(Gf256(0x01)), Ok(Gf256(0x01)));
        assert_eq!(inv(Gf256(0x00)), Err(NonInvertible));
        let by_search = (1..=255u8).find(|&v| oracle_mul(0x02, v) == 1).unwrap();
        assert_eq!(inv(Gf256(0x02)), Ok(Gf256(by_search)));
    }

    #[test]
    fn mul_matches_oracle_exhaustively() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(Gf256(a), Gf256(b)).0, oracle_mul(a, b), "{a:#x}*{b:#x}");
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_an_inverse() {
        for a in 1..=255u8 {
            let i = Gf256(a).inv().unwrap();
            assert_eq!(oracle_mul(a, i.0), 1);
        }
    }

    #[test]
    fn distributivity_sampled() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20_000 {
            let (a, b, c) = (Gf256(rng.gen()), Gf256(rng.gen()), Gf256(rng.gen()));
            assert_eq!(a * (b + c), a * b + a * c);
        }
    }

    #[test]
    fn slice_helpers_agree_with_scalar_ops() {
        let src: Vec<u8> = (0..=255).collect();
        let mut dst = vec![0x5Au8; 256];
        mul_add_slice(&mut dst, &src, Gf256(0x37));
        for (i, d) in dst.iter().enumerate() {
            assert_eq!(*d, 0x5A ^ oracle_mul(0x37, i as u8));
        }
        let mut buf = src.clone();
        scale_slice(&mut buf, Gf256(0xC1));
        for (i, b) in buf.iter().enumerate() {
            assert_eq!(*b, oracle_mul(0xC1, i as u8));
        }
    }
}
