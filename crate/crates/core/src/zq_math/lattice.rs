use alloc::vec::Vec;
use core::f64::consts::PI;

use super::ZMatrix;
use crate::error::{invalid, Error, Result};

/// Largest number of secrets enumerated by the q-ary lattice helpers.
pub const LAMBDA1_ENUMERATION_CAP: u128 = 1 << 24;

fn enumeration_size(n: usize, q: u64) -> Result<u128> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(q as u128);
    }
    if total > LAMBDA1_ENUMERATION_CAP {
        return Err(Error::EnumerationCap(total));
    }
    Ok(total)
}

fn for_each_secret(n: usize, q: u64, mut f: impl FnMut(&[i64]) -> bool) {
    let mut s = alloc::vec![0i64; n];
    loop {
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            s[i] += 1;
            if (s[i] as u64) < q {
                break;
            }
            s[i] = 0;
            i += 1;
        }
        if !f(&s) {
            return;
        }
    }
}

/// Whether `λ₁^∞(L_q(A)) ≥ q/4`, by enumerating every nonzero `s ∈ Z_q^n`.
///
/// `a` is `n × m`; entries of `Aᵀs` are centered in `(−q/2, q/2]`.
pub fn lambda1_inf_check(a: &ZMatrix, q: u64) -> Result<bool> {
    enumeration_size(a.rows, q)?;
    let mut ok = true;
    for_each_secret(a.rows, q, |s| {
        let v = a.transpose_mul_mod(s, q);
        let inf = v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0);
        if 4 * inf < q {
            ok = false;
        }
        ok
    });
    Ok(ok)
}

/// `λ₁(L_q(A))` in the Euclidean norm, by enumeration of `s ∈ Z_q^n`.
pub fn lambda1_l2(a: &ZMatrix, q: u64) -> Result<f64> {
    enumeration_size(a.rows, q)?;
    let mut best = (q as f64) * (q as f64);
    for_each_secret(a.rows, q, |s| {
        let v = a.transpose_mul_mod(s, q);
        let n2: f64 = v.iter().map(|&x| (x as f64) * (x as f64)).sum();
        if n2 > 0.0 && n2 < best {
            best = n2;
        }
        true
    });
    Ok(libm::sqrt(best))
}

/// A full-rank lattice of dimension 1 or 2 given by a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallLattice {
    dim: usize,
    /// Columns are basis vectors, stored row-major.
    basis: Vec<f64>,
    inverse: Vec<f64>,
}

impl SmallLattice {
    pub fn new(dim: usize, basis: Vec<f64>) -> Result<Self> {
        if !(dim == 1 || dim == 2) || basis.len() != dim * dim {
            return Err(invalid("only lattices of dimension 1 or 2 are supported"));
        }
        let inverse = if dim == 1 {
            if basis[0] == 0.0 {
                return Err(invalid("singular basis"));
            }
            alloc::vec![1.0 / basis[0]]
        } else {
            let det = basis[0] * basis[3] - basis[1] * basis[2];
            if det.abs() < 1e-12 {
                return Err(invalid("singular basis"));
            }
            alloc::vec![basis[3] / det, -basis[1] / det, -basis[2] / det, basis[0] / det]
        };
        Ok(Self {
            dim,
            basis,
            inverse,
        })
    }

    /// `kZ`.
    pub fn scaled_integers(k: f64) -> Result<Self> {
        Self::new(1, alloc::vec![k])
    }

    pub fn z2() -> Self {
        Self::new(2, alloc::vec![1.0, 0.0, 0.0, 1.0]).expect("identity basis")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    /// The dual lattice, with basis `B^{-T}`.
    pub fn dual(&self) -> Self {
        let d = self.dim;
        let mut t = alloc::vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                t[i * d + j] = self.inverse[j * d + i];
            }
        }
        Self::new(d, t).expect("dual of a full-rank basis")
    }

    pub fn point(&self, coeffs: &[i64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.basis[i * d + j] * coeffs[j] as f64).sum())
            .collect()
    }

    /// `B⁻¹ x`.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.inverse[i * d + j] * x[j]).sum())
            .collect()
    }

    /// Every lattice point within Euclidean distance `radius` of `center`.
    pub fn points_within(&self, center: &[f64], radius: f64) -> Vec<Vec<f64>> {
        let d = self.dim;
        let c = self.coordinates(center);
        let bound: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| self.inverse[i * d + j].abs()).sum::<f64>() * radius)
            .collect();
        let lo: Vec<i64> = (0..d).map(|i| libm::floor(c[i] - bound[i]) as i64).collect();
        let hi: Vec<i64> = (0..d).map(|i| libm::ceil(c[i] + bound[i]) as i64).collect();
        let mut out = Vec::new();
        let mut push = |coeffs: &[i64]| {
            let p = self.point(coeffs);
            let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= radius * radius {
                out.push(p);
            }
        };
        if d == 1 {
            for k in lo[0]..=hi[0] {
                push(&[k]);
            }
        } else {
            for k0 in lo[0]..=hi[0] {
                for k1 in lo[1]..=hi[1] {
                    push(&[k0, k1]);
                }
            }
        }
        out
    }

    /// `κ(u)`, a closest lattice point to `u`.
    pub fn closest_point(&self, u: &[f64]) -> Vec<f64> {
        let guess: Vec<i64> = self
            .coordinates(u)
            .iter()
            .map(|&c| libm::round(c) as i64)
            .collect();
        let p = self.point(&guess);
        let r = libm::sqrt(p.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        self.points_within(u, r * (1.0 + 1e-12) + 1e-12)
            .into_iter()
            .min_by(|a, b| dist2(a, u).total_cmp(&dist2(b, u)))
            .unwrap_or(p)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `ρ_{1/s}(L* ∖ {0})` where `dual` is `L*`.
pub fn dual_sum_excluding_origin(dual: &SmallLattice, s: f64) -> f64 {
    // ρ_{1/s}(x) < 1e-300 once ‖x‖ > 15/s.
    let radius = 15.0 / s;
    let origin = alloc::vec![0.0; dual.dim()];
    dual.points_within(&origin, radius)
        .iter()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>())
        .filter(|&n2| n2 > 1e-24)
        .map(|n2| libm::exp(-PI * n2 * s * s))
        .sum()
}

/// The smoothing parameter `η_ε(L)`: the least `s` with `ρ_{1/s}(L*∖{0}) ≤ ε`,
/// located by bisection.
pub fn smoothing_parameter(lattice: &SmallLattice, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("epsilon must lie in (0, 1)"));
    }
    let dual = lattice.dual();
    let mut hi = 1.0;
    while dual_sum_excluding_origin(&dual, hi) > eps {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while dual_sum_excluding_origin(&dual, lo) <= eps && lo > 1e-9 {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dual_sum_excluding_origin(&dual, mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    Ok(hi)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::zq_math::center_mod;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_matrix_fails() {
        assert!(!lambda1_inf_check(&ZMatrix::zeros(1, 4), 4).unwrap());
    }

    #[test]
    fn all_ones_boundary() {
        // Oracle: s = 1, 2, 3 give entries 1, 2, −1; each has |v| ≥ q/4 = 1.
        let a = ZMatrix::from_rows(&[alloc::vec![1; 8]]);
        let oracle = (1..4i64).all(|s| 4 * center_mod(s as i128, 4).unsigned_abs() >= 4);
        assert_eq!(lambda1_inf_check(&a, 4).unwrap(), oracle);
        assert!(oracle);
    }

    #[test]
    fn random_matrices_mostly_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let passes = (0..100)
            .filter(|_| lambda1_inf_check(&ZMatrix::random(2, 12, 8, &mut rng), 8).unwrap())
            .count();
        assert!(passes >= 95, "{passes}");
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(
            lambda1_inf_check(&ZMatrix::zeros(5, 4), 1000),
            Err(Error::EnumerationCap(_))
        ));
    }

    #[test]
    fn smoothing_parameter_of_z() {
        let eta = smoothing_parameter(&SmallLattice::scaled_integers(1.0).unwrap(), 1e-6).unwrap();
        let sum = dual_sum_excluding_origin(&SmallLattice::scaled_integers(1.0).unwrap(), eta);
        assert!((sum - 1e-6).abs() < 1e-12);
        let eta2 =
            smoothing_parameter(&SmallLattice::scaled_integers(2.0).unwrap(), 1e-6).unwrap();
        assert!((eta2 - 2.0 * eta).abs() < 1e-9);
    }

    #[test]
    fn closest_point_in_z2() {
        assert_eq!(SmallLattice::z2().closest_point(&[0.4, -1.7]), alloc::vec![0.0, -2.0]);
    }
}
