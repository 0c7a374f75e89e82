use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;

use super::{CosetGrid, GaussianParam};
use crate::error::{invalid, Result};

/// Exact inversion sampler for a discrete Gaussian on a truncated coset.
#[derive(Clone, Debug)]
pub struct DiscreteGaussianTable {
    points: Vec<f64>,
    cdf: Vec<f64>,
    discarded_mass: f64,
}

impl DiscreteGaussianTable {
    /// Weights are `ρ(point)`, or `ρ(point)²` when `squared` is set (the Born law of
    /// a Gaussian amplitude).
    pub fn new(grid: &CosetGrid, param: GaussianParam, squared: bool) -> Result<Self> {
        let power = if squared { 2.0 } else { 1.0 };
        let exponent = |x: f64| -power * PI * (x - param.center) * (x - param.center)
            / (param.width * param.width);
        let points = grid.points();
        let peak = points
            .iter()
            .map(|&x| exponent(x))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut cdf = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for &x in &points {
            acc += libm::exp(exponent(x) - peak);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(crate::Error::EmptySupport);
        }
        let step = grid.step();
        let mut tail = 0.0;
        for (edge, dir) in [(points[0], -1.0), (points[points.len() - 1], 1.0)] {
            let mut k = 1.0;
            loop {
                let w = libm::exp(exponent(edge + dir * k * step) - peak);
                tail += w;
                if w < 1e-30 * acc || k > 1e7 {
                    break;
                }
                k += 1.0;
            }
        }
        let discarded_mass = tail / (acc + tail);
        if discarded_mass > 1e-12 {
            return Err(invalid("truncation radius too small for the Gaussian width"));
        }
        Ok(Self {
            points,
            cdf,
            discarded_mass,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cdf.last().expect("non-empty table");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u).min(self.points.len() - 1);
        self.points[i]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Normalised probabilities in the order of [`Self::points`].
    pub fn probabilities(&self) -> Vec<f64> {
        let total = *self.cdf.last().expect("non-empty table");
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    /// Relative mass outside the truncation radius.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn narrow_width_concentrates() {
        let g = CosetGrid::integers(10.0).unwrap();
        let t = DiscreteGaussianTable::new(&g, GaussianParam::new(1e-3, 2.0).unwrap(), false)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut rng), 2.0);
        }
    }

    #[test]
    fn coset_respected() {
        let g = CosetGrid::new(2, 1, 1.0, 40.0).unwrap();
        let t = DiscreteGaussianTable::new(&g, GaussianParam::new(3.0, 0.0).unwrap(), false)
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = t.sample(&mut rng) as i64;
            assert_eq!(x.rem_euclid(2), 1);
        }
    }

    #[test]
    fn too_narrow_truncation_rejected() {
        let g = CosetGrid::integers(3.0).unwrap();
        assert!(DiscreteGaussianTable::new(&g, GaussianParam::new(3.0, 0.0).unwrap(), false)
            .is_err());
    }

    #[test]
    fn sample_index_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(sample_index(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }
}
