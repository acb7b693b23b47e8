//! Fixed-length bit strings used as tokens and identifiers.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// An `L`-bit unsigned value.
///
/// Limbs are big-endian (`limbs[0]` is the most significant) and the value is
/// right-aligned, so the unused high bits of the first limb are always zero.
/// Two tokens of the same length compare like unsigned integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Token {
    len: u32,
    limbs: SmallVec<[u64; 2]>,
}

fn limb_count(len: u32) -> usize {
    (len as usize).div_ceil(64).max(1)
}

fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Token {
    pub fn zero(len: u32) -> Self {
        assert!(len > 0, "token length must be positive");
        Token {
            len,
            limbs: SmallVec::from_elem(0, limb_count(len)),
        }
    }

    pub fn all_ones(len: u32) -> Self {
        let mut t = Token::zero(len);
        for l in t.limbs.iter_mut() {
            *l = u64::MAX;
        }
        t.clear_excess();
        t
    }

    pub fn from_u64(len: u32, value: u64) -> Result<Self> {
        if len < 64 && value >> len != 0 {
            return Err(Error::InvalidParameter(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        let mut t = Token::zero(len);
        *t.limbs.last_mut().unwrap() = value;
        Ok(t)
    }

    /// Uniform random token of `len` bits.
    pub fn random<R: Rng + ?Sized>(len: u32, rng: &mut R) -> Self {
        let mut t = Token::zero(len);
        for l in t.limbs.iter_mut() {
            *l = rng.random();
        }
        t.clear_excess();
        t
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    /// Least significant limb; the whole value when `len <= 64`.
    pub fn low_u64(&self) -> u64 {
        *self.limbs.last().unwrap()
    }

    pub fn is_all_ones(&self) -> bool {
        *self == Token::all_ones(self.len)
    }

    fn clear_excess(&mut self) {
        let excess = self.limbs.len() as u32 * 64 - self.len;
        if excess > 0 {
            self.limbs[0] &= u64::MAX >> excess;
        }
    }

    /// Limb `k` counted from the least significant end; zero past the top.
    fn limb_from_low(&self, k: usize) -> u64 {
        let n = self.limbs.len();
        if k < n {
            self.limbs[n - 1 - k]
        } else {
            0
        }
    }

    fn limb_from_low_mut(&mut self, k: usize) -> Option<&mut u64> {
        let n = self.limbs.len();
        if k < n {
            Some(&mut self.limbs[n - 1 - k])
        } else {
            None
        }
    }

    /// Reads `width` (≤ 64) bits whose lowest bit sits at position `lo`
    /// (position 0 is the least significant bit).
    pub fn extract(&self, lo: u32, width: u32) -> u64 {
        debug_assert!(width <= 64 && width > 0);
        let k = (lo / 64) as usize;
        let off = lo % 64;
        let mut v = self.limb_from_low(k) >> off;
        if off != 0 && off + width > 64 {
            v |= self.limb_from_low(k + 1) << (64 - off);
        }
        v & low_mask(width)
    }

    /// Overwrites `width` (≤ 64) bits starting at position `lo`.
    pub fn deposit(&mut self, lo: u32, width: u32, value: u64) {
        debug_assert!(width <= 64 && width > 0);
        debug_assert!(lo + width <= self.len);
        let mask = low_mask(width);
        let value = value & mask;
        let k = (lo / 64) as usize;
        let off = lo % 64;
        if let Some(l) = self.limb_from_low_mut(k) {
            *l = (*l & !(mask << off)) | (value << off);
        }
        if off != 0 && off + width > 64 {
            let spill = 64 - off;
            if let Some(l) = self.limb_from_low_mut(k + 1) {
                let hi_mask = mask >> spill;
                *l = (*l & !hi_mask) | (value >> spill);
            }
        }
    }

    /// Zero-extends to `len` bits (numeric value unchanged).
    pub fn widen(&self, len: u32) -> Token {
        assert!(len >= self.len);
        let mut t = Token::zero(len);
        for k in 0..self.limbs.len() {
            if let Some(l) = t.limb_from_low_mut(k) {
                *l = self.limb_from_low(k);
            }
        }
        t
    }

    /// Truncates to `len` bits, returning `None` if any dropped bit is set.
    pub fn narrow(&self, len: u32) -> Option<Token> {
        assert!(len <= self.len && len > 0);
        let mut t = Token::zero(len);
        for k in 0..t.limbs.len() {
            *t.limb_from_low_mut(k).unwrap() = self.limb_from_low(k);
        }
        t.clear_excess();
        if t.widen(self.len) == *self {
            Some(t)
        } else {
            None
        }
    }

    /// `self mod p` for `p > 0`.
    pub fn mod_u64(&self, p: u64) -> u64 {
        assert!(p > 0);
        let p = p as u128;
        let mut acc: u128 = 0;
        for &l in &self.limbs {
            acc = ((acc << 64) | l as u128) % p;
        }
        acc as u64
    }

    fn hex_digits(&self) -> usize {
        (self.len as usize).div_ceil(4)
    }

    /// Fixed-width lowercase hexadecimal, `⌈len/4⌉` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.hex_digits();
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let lo = d as u32 * 4;
            let width = 4.min(self.len - lo);
            let nib = self.extract(lo, width);
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    /// Parses exactly `⌈len/4⌉` hex digits whose value fits in `len` bits.
    pub fn from_hex(len: u32, s: &str) -> Result<Token> {
        if len == 0 {
            return Err(Error::InvalidParameter("token length must be positive".into()));
        }
        let digits = (len as usize).div_ceil(4);
        if s.len() != digits {
            return Err(Error::Parse(format!(
                "token `{s}` must have exactly {digits} hex digits for L={len}"
            )));
        }
        let mut wide = Token::zero(digits as u32 * 4);
        for (i, ch) in s.chars().rev().enumerate() {
            let nib = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("invalid hex digit `{ch}` in `{s}`")))?;
            wide.deposit(i as u32 * 4, 4, nib as u64);
        }
        wide.narrow(len)
            .ok_or_else(|| Error::Parse(format!("token `{s}` exceeds {len} bits")))
    }
}

impl PartialOrd for Token {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Token {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.limbs.cmp(&other.limbs))
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len, self.to_hex())
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Token {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}:{}", self.len, self.to_hex()))
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let (len, hex) = s
            .split_once(':')
            .ok_or_else(|| serde::de::Error::custom("token must be `len:hex`"))?;
        let len: u32 = len.parse().map_err(serde::de::Error::custom)?;
        Token::from_hex(len, hex).map_err(serde::de::Error::custom)
    }
}

/// A node identifier: a token value, or the sentinel held by nodes without
/// input, which compares above every value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ident {
    Value(Token),
    Top,
}

impl Ident {
    pub fn value(&self) -> Option<&Token> {
        match self {
            Ident::Value(t) => Some(t),
            Ident::Top => None,
        }
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Ident::Top)
    }
}

/// Sorts a copy and scans neighbours.
pub fn has_duplicate<T: Ord + Clone>(items: impl IntoIterator<Item = T>) -> bool {
    let mut v: Vec<T> = items.into_iter().collect();
    v.sort_unstable();
    v.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn hex_width_and_value() {
        let t = Token::from_u64(8, 0x2a).unwrap();
        assert_eq!(t.to_hex(), "2a");
        let t = Token::from_u64(5, 0x1f).unwrap();
        assert_eq!(t.to_hex(), "1f");
        assert!(Token::from_u64(4, 16).is_err());
        assert!(Token::from_hex(5, "20").is_err());
        assert!(Token::from_hex(8, "2").is_err());
    }

    #[test]
    fn ordering_matches_integers() {
        let a = Token::from_u64(70, 5).unwrap();
        let mut b = Token::zero(70);
        b.deposit(64, 6, 1);
        assert!(a < b);
        assert!(Ident::Value(Token::all_ones(70)) < Ident::Top);
    }

    #[test]
    fn extract_across_limbs() {
        let mut t = Token::zero(128);
        t.deposit(60, 8, 0xab);
        assert_eq!(t.extract(60, 8), 0xab);
        assert_eq!(t.extract(64, 4), 0xa);
        assert_eq!(t.extract(60, 4), 0xb);
    }

    #[test]
    fn mod_small_prime() {
        let t = Token::from_u64(8, 29).unwrap();
        assert_eq!(t.mod_u64(13), 3);
        let wide = t.widen(200);
        assert_eq!(wide.mod_u64(13), 3);
    }

    #[test]
    fn duplicates_by_sort_scan() {
        assert!(has_duplicate([3, 7, 3]));
        assert!(!has_duplicate([0]));
    }

    proptest! {
        #[test]
        fn hex_round_trip(len in 1u32..300, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = Token::random(len, &mut rng);
            prop_assert_eq!(Token::from_hex(len, &t.to_hex()).unwrap(), t.clone());
            let w = t.widen(len + 37);
            prop_assert_eq!(w.narrow(len).unwrap(), t);
        }

        #[test]
        fn order_agrees_with_u64(a in any::<u64>(), b in any::<u64>()) {
            let ta = Token::from_u64(64, a).unwrap();
            let tb = Token::from_u64(64, b).unwrap();
            prop_assert_eq!(ta.cmp(&tb), a.cmp(&b));
            prop_assert_eq!(ta.widen(130).cmp(&tb.widen(130)), a.cmp(&b));
        }

        #[test]
        fn deposit_then_extract(lo in 0u32..190, width in 1u32..=64, v in any::<u64>()) {
            let mut t = Token::zero(256);
            t.deposit(lo, width, v);
            prop_assert_eq!(t.extract(lo, width), v & low_mask(width));
        }
    }
}
