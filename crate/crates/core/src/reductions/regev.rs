//! Sample generation of the quantized iterative reduction on lattices of
//! dimension at most 2, and the width grid that handles the unknown width.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::{
    l2_distance_up_to_phase, trace_distance_pure, Ensemble, PureState, DEFAULT_DIMENSION_CAP,
};
use crate::zq_math::{
    center_mod, cutoff_radius, rho_s, sample_index, smoothing_parameter, SmallLattice,
};

/// `ε` standing in for the negligible smoothing error.
pub const SMOOTHING_EPSILON: f64 = 1e-6;

/// `σ_i = αq(1 + (√2 − 1)·i/(2m))` for `i = 0, …, 2m`.
pub fn width_grid(alpha: f64, q: u64, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid("m must be positive"));
    }
    let aq = alpha * q as f64;
    Ok((0..=2 * m)
        .map(|i| aq * (1.0 + (SQRT_2 - 1.0) * i as f64 / (2 * m) as f64))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegevParams {
    pub q: u64,
    pub alpha: f64,
    pub sigma: f64,
    pub r: f64,
    /// The precision `R`.
    pub precision: u64,
}

impl RegevParams {
    fn validate(&self) -> Result<()> {
        if self.q < 2 || self.precision < 2 {
            return Err(invalid("q and R must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.r > 0.0) {
            return Err(invalid("alpha and r must be positive"));
        }
        let aq = self.alpha * self.q as f64;
        if self.sigma < aq * (1.0 - 1e-12) || self.sigma > SQRT_2 * aq * (1.0 + 1e-12) {
            return Err(Error::Condition("sigma must lie in [αq, √2·αq]".into()));
        }
        Ok(())
    }
}

/// The measured `a` and the ensemble of per-`y` states on the `u` register.
#[derive(Clone, Debug)]
pub struct RegevSampleRecord {
    pub a: Vec<i64>,
    pub params: RegevParams,
    pub t: f64,
    /// `y` label of each ensemble branch, in branch order.
    pub ys: Vec<Vec<i64>>,
    pub ensemble: Ensemble,
    pub eta: f64,
    /// False when `r ≤ 4q·η_ε(L)`.
    pub regime_ok: bool,
    lattice: SmallLattice,
    s: Vec<i64>,
    x_prime: Vec<f64>,
}

fn integer_vector(v: &[f64]) -> Result<Vec<i64>> {
    v.iter()
        .map(|&c| {
            let r = libm::round(c);
            if (c - r).abs() > 1e-9 {
                Err(invalid("lattice must be integral"))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn for_each_index(dim: usize, size: u64, mut f: impl FnMut(&[i64])) {
    let mut v = alloc::vec![0i64; dim];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == dim {
                return;
            }
            v[i] += 1;
            if (v[i] as u64) < size {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

fn flat(coeffs: &[i64], q: u64) -> usize {
    coeffs
        .iter()
        .fold(0usize, |acc, &c| acc * q as usize + c.rem_euclid(q as i64) as usize)
}

/// Lattice point, its coefficient vector and its weight.
type SupportPoint = (Vec<i64>, Vec<i64>, f64);

/// Truncated `|D_{L,r}⟩` support with coefficient vectors.
fn gaussian_support(lattice: &SmallLattice, r: f64) -> Result<Vec<SupportPoint>> {
    let origin = alloc::vec![0.0; lattice.dim()];
    lattice
        .points_within(&origin, cutoff_radius(r))
        .into_iter()
        .map(|p| {
            let v = integer_vector(&p)?;
            let coeffs = integer_vector(&lattice.coordinates(&p))?;
            let w = rho_s(r, libm::sqrt(dot(&p, &p)));
            Ok((v, coeffs, w))
        })
        .collect()
}

/// Exact law of `a = L⁻¹v mod q` under `|D_{L,r}⟩`, flattened row-major.
pub fn regev_a_law(lattice: &SmallLattice, q: u64, r: f64) -> Result<Vec<f64>> {
    let support = gaussian_support(lattice, r)?;
    let mut law = alloc::vec![0.0; (q as usize).pow(lattice.dim() as u32)];
    for (_, coeffs, w) in &support {
        law[flat(coeffs, q)] += w * w;
    }
    let total: f64 = law.iter().sum();
    Ok(law.into_iter().map(|p| p / total).collect())
}

/// Runs the generation steps on truncated grids for the CVP target `x` and
/// returns `a` with the exact ensemble over `y`.
pub fn regev_generate_sample<R: Rng + ?Sized>(
    lattice: &SmallLattice,
    x: &[f64],
    params: &RegevParams,
    rng: &mut R,
) -> Result<RegevSampleRecord> {
    params.validate()?;
    let dim = lattice.dim();
    if x.len() != dim {
        return Err(Error::ShapeMismatch);
    }
    let (q, big_r) = (params.q, params.precision);
    let qr = q * big_r;
    let y_count = (big_r as usize).pow(dim as u32);
    let dense = y_count.saturating_mul(qr as usize);
    if dense > DEFAULT_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            dim: dense,
            cap: DEFAULT_DIMENSION_CAP,
        });
    }
    let eta = smoothing_parameter(lattice, SMOOTHING_EPSILON)?;
    let regime_ok = params.r > 4.0 * q as f64 * eta;

    let dual = lattice.dual();
    let kappa = dual.closest_point(x);
    let x_prime: Vec<f64> = x.iter().zip(&kappa).map(|(a, b)| a - b).collect();
    let s: Vec<i64> = integer_vector(&dual.coordinates(&kappa))?
        .iter()
        .map(|&c| center_mod(c as i128, q))
        .collect();
    let t = libm::sqrt(params.sigma * params.sigma + params.r * params.r * dot(&x_prime, &x_prime));

    let support = gaussian_support(lattice, params.r)?;
    let law = regev_a_law(lattice, q, params.r)?;
    let a_index = sample_index(&law, rng);
    let mut a = alloc::vec![0i64; dim];
    let mut rest = a_index;
    for i in (0..dim).rev() {
        a[i] = center_mod((rest % q as usize) as i128, q);
        rest /= q as usize;
    }
    let coset: Vec<&(Vec<i64>, Vec<i64>, f64)> = support
        .iter()
        .filter(|(_, c, _)| flat(c, q) == a_index)
        .collect();

    // e register over Z_{qR}/R: index k holds the value k/R mod q.
    let g: Vec<f64> = (0..qr)
        .map(|k| rho_s(params.sigma, center_mod(k as i128, qr) as f64 / big_r as f64))
        .collect();
    let shifts: Vec<usize> = coset
        .iter()
        .map(|(v, _, _)| {
            let vf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
            (libm::round(big_r as f64 * dot(x, &vf)) as i64).rem_euclid(qr as i64) as usize
        })
        .collect();

    let scale = 1.0 / libm::pow(big_r as f64, dim as f64 / 2.0);
    let mut ys = Vec::new();
    let mut branches = Vec::new();
    let mut total = 0.0;
    for_each_index(dim, big_r, |y| {
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); qr as usize];
        for ((v, _, w), &h) in coset.iter().zip(&shifts) {
            let turns = v
                .iter()
                .zip(y)
                .map(|(&vi, &yi)| (vi * yi).rem_euclid(big_r as i64))
                .sum::<i64>()
                .rem_euclid(big_r as i64);
            let coef = Complex64::from_polar(w * scale, 2.0 * PI * turns as f64 / big_r as f64);
            for k in 0..qr as usize {
                let src = (k + qr as usize - h) % qr as usize;
                amps[k] += coef * g[src];
            }
        }
        let p: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if p > 0.0 {
            total += p;
            ys.push(y.to_vec());
            branches.push((p, amps));
        }
    });
    let mut ensemble = Vec::with_capacity(branches.len());
    for (p, amps) in branches {
        ensemble.push((p / total, PureState::cyclic(amps, 0.0)?));
    }
    Ok(RegevSampleRecord {
        a,
        params: params.clone(),
        t,
        ys,
        ensemble: Ensemble::new(ensemble)?,
        eta,
        regime_ok,
        lattice: lattice.clone(),
        s,
        x_prime,
    })
}

impl RegevSampleRecord {
    /// `z(y) = y/R − κ_{(qL)*}(y/R)`.
    pub fn z(&self, y: &[i64]) -> Result<Vec<f64>> {
        let dual = self.lattice.dual();
        let q = self.params.q as f64;
        let scaled = SmallLattice::new(dual.dim(), dual.basis().iter().map(|b| b / q).collect())?;
        let yr: Vec<f64> = y.iter().map(|&c| c as f64 / self.params.precision as f64).collect();
        let k = scaled.closest_point(&yr);
        Ok(yr.iter().zip(&k).map(|(a, b)| a - b).collect())
    }

    /// `|ψ^{a,y}_t⟩ = Σ_u ρ_t(u) e^{2πi u r²⟨x′,z(y)⟩/t²} |⟨s,a⟩ + u mod q⟩` on the
    /// same `Z_{qR}/R` grid as the simulated register.
    pub fn closed_form(&self, y: &[i64]) -> Result<PureState> {
        let (q, big_r) = (self.params.q, self.params.precision);
        let qr = q * big_r;
        let z = self.z(y)?;
        let freq = self.params.r * self.params.r * dot(&self.x_prime, &z) / (self.t * self.t);
        let sa: i64 = self.s.iter().zip(&self.a).map(|(s, a)| s * a).sum();
        let base = (sa * big_r as i64).rem_euclid(qr as i64) as usize;
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); qr as usize];
        for k in 0..qr {
            let u = center_mod(k as i128, qr) as f64 / big_r as f64;
            let idx = (base + k as usize) % qr as usize;
            amps[idx] = Complex64::from_polar(rho_s(self.t, u), 2.0 * PI * u * freq);
        }
        PureState::cyclic(amps, 0.0)
    }

    /// Born-weighted mean over `y` of the normalised ℓ2 distance, up to global
    /// phase, between the simulated and closed-form states.
    pub fn formula_distance(&self) -> Result<f64> {
        let mut acc = 0.0;
        for ((p, state), y) in self.ensemble.branches().iter().zip(&self.ys) {
            if *p < 1e-15 {
                continue;
            }
            acc += p * l2_distance_up_to_phase(state, &self.closed_form(y)?)?;
        }
        Ok(acc)
    }
}

/// Trace distance between `Σ_{e∈Z_{qR}/R} ρ_{β_i}(e)|e⟩` for `i = 1, 2`, and the
/// closed form `√((β₁−β₂)²/(β₁²+β₂²))`.
pub fn gaussian_width_distance(beta1: f64, beta2: f64, q: u64, precision: u64) -> Result<(f64, f64)> {
    if !(beta1 > 0.0 && beta2 > 0.0) || q == 0 || precision == 0 {
        return Err(invalid("widths, q and R must be positive"));
    }
    let qr = q * precision;
    let state = |beta: f64| {
        PureState::cyclic(
            (0..qr)
                .map(|k| {
                    let e = center_mod(k as i128, qr) as f64 / precision as f64;
                    Complex64::new(rho_s(beta, e), 0.0)
                })
                .collect(),
            0.0,
        )
    };
    let numeric = trace_distance_pure(&state(beta1)?, &state(beta2)?)?;
    let d = beta1 - beta2;
    Ok((numeric, libm::sqrt(d * d / (beta1 * beta1 + beta2 * beta2))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn width_grid_examples() {
        let g = width_grid(1.0, 10, 2).unwrap();
        let want = [10.0, 11.03553, 12.07107, 13.10660, 14.14214];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-5);
        }
        let g1 = width_grid(0.5, 4, 1).unwrap();
        assert_eq!(g1.len(), 3);
        assert!((g1[2] - SQRT_2 * 2.0).abs() < 1e-12);
        assert!(width_grid(1.0, 4, 0).is_err());
    }

    #[test]
    fn width_grid_brackets_every_target() {
        let g = width_grid(0.15, 5, 3).unwrap();
        for k in 1..=200 {
            let target = g[0] + (g[6] - g[0]) * k as f64 / 200.0;
            assert!(g.windows(2).any(|w| w[0] < target && target <= w[1] + 1e-12));
        }
    }

    #[test]
    fn gaussian_distance_closed_form() {
        for (b1, b2) in [(8.0, 10.0), (10.0, 10.0), (5.0, 20.0)] {
            let (num, closed) = gaussian_width_distance(b1, b2, 97, 16).unwrap();
            assert!((num - closed).abs() < 1e-6, "{b1} {b2}: {num} vs {closed}");
        }
        assert_eq!(gaussian_width_distance(10.0, 10.0, 97, 16).unwrap().0, 0.0);
    }

    #[test]
    fn a_law_close_to_uniform() {
        let law = regev_a_law(&SmallLattice::scaled_integers(1.0).unwrap(), 5, 48.0).unwrap();
        for p in law {
            assert!((p - 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_dual_point_gives_plain_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = RegevParams {
            q: 5,
            alpha: 0.15,
            sigma: 0.75,
            r: 48.0,
            precision: 64,
        };
        let lattice = SmallLattice::scaled_integers(1.0).unwrap();
        let rec = regev_generate_sample(&lattice, &[2.0], &params, &mut rng).unwrap();
        assert!((rec.t - 0.75).abs() < 1e-12);
        assert!(rec.regime_ok);
        let d = rec.formula_distance().unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn rejects_sigma_outside_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = RegevParams {
            q: 5,
            alpha: 0.15,
            sigma: 0.5,
            r: 48.0,
            precision: 64,
        };
        let lattice = SmallLattice::scaled_integers(1.0).unwrap();
        assert!(regev_generate_sample(&lattice, &[1.0], &params, &mut rng).is_err());
    }
}
