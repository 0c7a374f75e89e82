use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A modulus `q ≥ 2`, optionally with a factorisation into pairwise coprime parts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modulus {
    q: u64,
    factors: Option<Vec<u64>>,
}

impl Modulus {
    pub fn new(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(invalid("modulus must be at least 2"));
        }
        Ok(Self { q, factors: None })
    }

    /// Builds `q = q_1 ⋯ q_ℓ` from pairwise coprime factors.
    pub fn with_factors(factors: Vec<u64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(invalid("factor list is empty"));
        }
        let mut q: u64 = 1;
        for (i, &a) in factors.iter().enumerate() {
            if a < 2 {
                return Err(invalid("every factor must be at least 2"));
            }
            for &b in &factors[i + 1..] {
                if gcd(a, b) != 1 {
                    return Err(Error::NotCoprime(a, b));
                }
            }
            q = q
                .checked_mul(a)
                .ok_or_else(|| invalid("product of factors overflows"))?;
        }
        Ok(Self {
            q,
            factors: Some(factors),
        })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn factors(&self) -> Option<&[u64]> {
        self.factors.as_deref()
    }

    /// Centered representative in `(−q/2, q/2]`.
    pub fn center(&self, x: i64) -> i64 {
        center_mod(x as i128, self.q)
    }

    pub fn reduce(&self, x: i64) -> u64 {
        reduce_mod(x as i128, self.q)
    }
}

/// Representative of `x mod q` in `(−q/2, q/2]`.
pub fn center_mod(x: i128, q: u64) -> i64 {
    let r = x.rem_euclid(q as i128);
    if 2 * r > q as i128 {
        (r - q as i128) as i64
    } else {
        r as i64
    }
}

/// Representative of `x mod q` in `[0, q)`.
pub fn reduce_mod(x: i128, q: u64) -> u64 {
    x.rem_euclid(q as i128) as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: i128, m: u64) -> Option<u64> {
    let m_i = m as i128;
    let (mut old_r, mut r) = (a.rem_euclid(m_i), m_i);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let k = old_r / r;
        (old_r, r) = (r, old_r - k * r);
        (old_s, s) = (s, old_s - k * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(old_s.rem_euclid(m_i) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Factorisation of `q` as `(p, e, p^e)` triples in increasing order of `p`.
pub fn prime_power_factors(mut q: u64) -> Vec<(u64, u32, u64)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut e = 0;
            let mut pe = 1;
            while q.is_multiple_of(p) {
                q /= p;
                e += 1;
                pe *= p;
            }
            out.push((p, e, pe));
        }
        p += 1;
    }
    if q > 1 {
        out.push((q, 1, q));
    }
    out
}

/// `⌈a⌋ = ⌊a + 1/2⌋`, so ties go to `a + 1/2`.
pub fn round_half_up(a: f64) -> i64 {
    libm::floor(a + 0.5) as i64
}

/// `⌈a⌋_q`, the multiple of `q` nearest to `a`, with ties broken upward.
pub fn round_to_multiple(a: f64, q: f64) -> f64 {
    q * libm::floor(a / q + 0.5)
}

/// `⟨a, s⟩ mod q` as a centered representative.
pub fn dot_mod(a: &[i64], s: &[i64], q: u64) -> i64 {
    let acc: i128 = a
        .iter()
        .zip(s)
        .map(|(&x, &y)| x as i128 * y as i128)
        .sum();
    center_mod(acc, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_representatives() {
        assert_eq!(center_mod(2, 4), 2);
        assert_eq!(center_mod(3, 4), -1);
        assert_eq!(center_mod(-2, 4), 2);
        assert_eq!(center_mod(4, 9), 4);
        assert_eq!(center_mod(5, 9), -4);
    }

    #[test]
    fn rounding_ties_go_up() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(-2.5), -2);
        assert_eq!(round_to_multiple(1.5, 3.0), 3.0);
        assert_eq!(round_to_multiple(-1.5, 3.0), 0.0);
    }

    #[test]
    fn factors_must_be_coprime() {
        assert!(Modulus::with_factors(alloc::vec![4, 6]).is_err());
        let m = Modulus::with_factors(alloc::vec![2, 3]).unwrap();
        assert_eq!(m.q(), 6);
    }

    #[test]
    fn inverses_and_factorisation() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
        assert_eq!(prime_power_factors(338), alloc::vec![(2, 1, 2), (13, 2, 169)]);
        assert!(is_prime(337));
        assert!(!is_prime(338));
    }
}
