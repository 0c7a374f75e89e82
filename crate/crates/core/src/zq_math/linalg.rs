use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{center_mod, crt_combine, mod_inverse, prime_power_factors};

/// A dense row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl ZMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Entries uniform over centered `Z_q`.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, q: u64, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| center_mod(rng.gen_range(0..q) as i128, q))
                .collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Columns `start..end` as a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        let mut out = Self::zeros(self.rows, end - start);
        for r in 0..self.rows {
            for c in start..end {
                out.set(r, c - start, self.get(r, c));
            }
        }
        out
    }

    /// `Mᵀ v mod q`, centered.
    pub fn transpose_mul_mod(&self, v: &[i64], q: u64) -> Vec<i64> {
        (0..self.cols)
            .map(|c| {
                let acc: i128 = (0..self.rows)
                    .map(|r| self.get(r, c) as i128 * v[r] as i128)
                    .sum();
                center_mod(acc, q)
            })
            .collect()
    }

    /// `M v mod q`, centered.
    pub fn mul_mod(&self, v: &[i64], q: u64) -> Vec<i64> {
        (0..self.rows)
            .map(|r| {
                let acc: i128 = (0..self.cols)
                    .map(|c| self.get(r, c) as i128 * v[c] as i128)
                    .sum();
                center_mod(acc, q)
            })
            .collect()
    }
}

/// Solves `M s ≡ y (mod p^e)` for a unique `s`.
///
/// Pivots must be units; a column without one is reported as not full rank
/// (`None`), as is an inconsistent system.
pub fn solve_prime_power(m: &ZMatrix, y: &[i64], p: u64, pe: u64) -> Option<Vec<u64>> {
    let (rows, n) = (m.rows, m.cols);
    if rows < n {
        return None;
    }
    let red = |x: i128| x.rem_euclid(pe as i128);
    let mut a: Vec<Vec<i128>> = (0..rows)
        .map(|r| (0..n).map(|c| red(m.get(r, c) as i128)).collect())
        .collect();
    let mut b: Vec<i128> = y.iter().map(|&v| red(v as i128)).collect();
    for col in 0..n {
        let piv = (col..rows).find(|&r| a[r][col] % p as i128 != 0)?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = mod_inverse(a[col][col], pe)? as i128;
        for c in 0..n {
            a[col][c] = red(a[col][c] * inv);
        }
        b[col] = red(b[col] * inv);
        for r in 0..rows {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] = red(a[r][c] - f * a[col][c]);
                }
                b[r] = red(b[r] - f * b[col]);
            }
        }
    }
    if b[n..].iter().any(|&v| v != 0) {
        return None;
    }
    Some(b[..n].iter().map(|&v| v as u64).collect())
}

/// Solves `M s ≡ y (mod q)` by splitting `q` into prime powers and recombining
/// with the CRT. Returns centered entries.
pub fn solve_mod(m: &ZMatrix, y: &[i64], q: u64) -> Option<Vec<i64>> {
    let parts: Vec<(Vec<u64>, u64)> = prime_power_factors(q)
        .into_iter()
        .map(|(p, _, pe)| solve_prime_power(m, y, p, pe).map(|s| (s, pe)))
        .collect::<Option<_>>()?;
    Some(
        (0..m.cols)
            .map(|i| {
                let res: Vec<(u64, u64)> = parts.iter().map(|(s, pe)| (s[i], *pe)).collect();
                let (v, _) = crt_combine(&res).expect("prime powers are coprime");
                center_mod(v as i128, q)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_composite_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = 338;
        let mut solved = 0;
        for _ in 0..50 {
            let a = ZMatrix::random(3, 6, q, &mut rng);
            let s: Vec<i64> = (0..3).map(|_| center_mod(rng.gen_range(0..q) as i128, q)).collect();
            let y = a.transpose_mul_mod(&s, q);
            if let Some(found) = solve_mod(&a.transpose(), &y, q) {
                assert_eq!(found, s);
                solved += 1;
            }
        }
        assert!(solved > 40);
    }

    #[test]
    fn inconsistent_system_rejected() {
        let m = ZMatrix::from_rows(&[alloc::vec![1], alloc::vec![1]]);
        assert_eq!(solve_mod(&m, &[1, 2], 5), None);
    }

    #[test]
    fn non_unit_column_is_not_full_rank() {
        let m = ZMatrix::from_rows(&[alloc::vec![2], alloc::vec![4]]);
        assert_eq!(solve_prime_power(&m, &[2, 4], 2, 8), None);
    }
}
