//! Random-prime fingerprint hash into `[0, q)`.
//!
//! `h(x) = ((a·(x mod p) + b) mod p) mod q` with `p` a uniform prime from
//! `[T, 2T]`, `T = max(64, q·max(1, L))`, `q = k^(2+β)` and `a ≠ 0`, `b`
//! uniform mod `p`. Two distinct `L`-bit inputs agree mod `p` only if `p`
//! divides their difference, which has fewer than `L / log2 T` prime factors
//! that large; the affine step then spreads distinct residues over `[0, q)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::ceil_log2;
use crate::token::Token;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashSpec {
    pub p: u64,
    pub q: u64,
    pub a: u64,
    pub b: u64,
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl HashSpec {
    /// `q = k^(2+beta)`, or `None` on overflow.
    pub fn range(k: u64, beta: u32) -> Option<u64> {
        k.max(1).checked_pow(2 + beta)
    }

    /// Bits of one hash value for range `q`.
    pub fn width_for(q: u64) -> u32 {
        ceil_log2(q).max(1)
    }

    pub fn build(token_len: u32, k: u64, beta: u32, seed: u64) -> Result<HashSpec> {
        let overflow = || Error::InvalidParameter(format!("hash range k^(2+beta) overflows for k = {k}, beta = {beta}"));
        let q = Self::range(k, beta).ok_or_else(overflow)?;
        let t = q
            .checked_mul(token_len.max(1) as u64)
            .filter(|t| *t <= u64::MAX / 4)
            .ok_or_else(overflow)?
            .max(64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = loop {
            let cand = rng.random_range(t..=2 * t);
            if is_prime(cand) {
                break cand;
            }
        };
        let a = rng.random_range(1..p);
        let b = rng.random_range(0..p);
        Ok(HashSpec { p, q, a, b })
    }

    pub fn eval(&self, x: &Token) -> u64 {
        let r = x.mod_u64(self.p);
        ((mul_mod(self.a, r, self.p) + self.b) % self.p) % self.q
    }

    /// Bits needed for one hash value.
    pub fn width(&self) -> u32 {
        Self::width_for(self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let n = 5000usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..n {
            if sieve[i] {
                for j in (i * i..n).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for (i, &p) in sieve.iter().enumerate() {
            assert_eq!(is_prime(i as u64), p, "{i}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn plain_double_mod_example() {
        let h = HashSpec { p: 13, q: 8, a: 1, b: 0 };
        assert_eq!(h.eval(&Token::from_u64(8, 29).unwrap()), 3);
    }

    #[test]
    fn build_is_deterministic_and_in_range() {
        let h = HashSpec::build(64, 16, 2, 99).unwrap();
        assert_eq!(h, HashSpec::build(64, 16, 2, 99).unwrap());
        assert!(is_prime(h.p));
        let t = 16u64.pow(4) * 64;
        assert!(h.p >= t && h.p <= 2 * t);
        assert_eq!(h.q, 65536);
        assert_eq!(h.width(), 16);
        for v in 0..200 {
            assert!(h.eval(&Token::from_u64(64, v * 7919).unwrap()) < h.q);
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(HashSpec::build(64, 1 << 20, 2, 0).is_err());
    }
}
