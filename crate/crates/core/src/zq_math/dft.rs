use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex table on consecutive integers `start, start+1, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntTable {
    pub start: i64,
    pub values: Vec<Complex64>,
}

impl IntTable {
    pub fn new(start: i64, values: Vec<Complex64>) -> Self {
        Self { start, values }
    }

    /// Tabulates `f` on `[lo, hi]`.
    pub fn from_fn(lo: i64, hi: i64, f: impl Fn(i64) -> Complex64) -> Self {
        Self {
            start: lo,
            values: (lo..=hi).map(f).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.start + i as i64, *v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `DFT_q(f)(j) = q^{-1/2} Σ_e f(e) ω_q^{je}` for `j = 0, …, q−1`.
pub fn dft_amplitude(f: &IntTable, q: u64) -> Result<Vec<Complex64>> {
    if f.is_empty() {
        return Err(Error::EmptySupport);
    }
    let folded = fold_table(f, q, 0);
    let twiddle: Vec<Complex64> = (0..q)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / q as f64))
        .collect();
    let norm = 1.0 / libm::sqrt(q as f64);
    Ok((0..q)
        .map(|j| {
            folded
                .iter()
                .enumerate()
                .map(|(e, v)| v * twiddle[((j as u128 * e as u128) % q as u128) as usize])
                .sum::<Complex64>()
                * norm
        })
        .collect())
}

/// Folds `f` onto `Z_q`: entry `k` is `Σ_{e ≡ k − shift} f(e)`.
pub fn fold_table(f: &IntTable, q: u64, shift: i64) -> Vec<Complex64> {
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); q as usize];
    for (e, v) in f.iter() {
        let k = (e as i128 + shift as i128).rem_euclid(q as i128) as usize;
        out[k] += v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zq_math::rho_s;

    #[test]
    fn delta_is_flat() {
        let f = IntTable::new(0, alloc::vec![Complex64::new(1.0, 0.0)]);
        let g = dft_amplitude(&f, 4).unwrap();
        for v in g {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn gaussian_dft_is_symmetric_and_peaked() {
        let f = IntTable::from_fn(-32, 32, |e| Complex64::new(rho_s(4.0, e as f64), 0.0));
        let g = dft_amplitude(&f, 8).unwrap();
        for j in 1..8 {
            assert!((g[j] - g[8 - j]).norm() < 1e-12);
            assert!(g[0].norm() > g[j].norm());
        }
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(dft_amplitude(&IntTable::new(0, Vec::new()), 4), Err(Error::EmptySupport));
    }
}
