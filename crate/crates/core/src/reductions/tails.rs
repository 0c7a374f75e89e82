//! Numerical check of the two Gaussian tail bounds over a dual lattice.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};
use crate::zq_math::{dual_sum_excluding_origin, smoothing_parameter, SmallLattice};

#[derive(Clone, Debug, PartialEq)]
pub struct TailPoint {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub epsilon: f64,
    /// `Σ_{x∈L*} ρ_{1/σ}(x − u)`.
    pub lhs: f64,
    pub additive_rhs: f64,
    pub multiplicative_rhs: f64,
    /// `ε − Σ_{x≠κ} ρ_{1/σ}(x − u)`, computed without the shared leading term.
    pub additive_margin: f64,
    /// `ε·ρ_{√2/σ}(κ − u) − Σ_{x≠κ} ρ_{1/σ}(x − u)`.
    pub multiplicative_margin: f64,
}

impl TailPoint {
    /// Decided on the margins; `lhs` and the right-hand sides can round to
    /// the same float once `ε` is below an ulp of the leading term.
    pub fn holds(&self) -> bool {
        self.lhs <= self.additive_rhs
            && self.lhs <= self.multiplicative_rhs
            && self.additive_margin > 0.0
            && self.multiplicative_margin > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedPoint {
    pub sigma: f64,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub points: Vec<TailPoint>,
    pub skipped: Vec<SkippedPoint>,
}

impl TailReport {
    pub fn all_hold(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(TailPoint::holds)
    }

    pub fn min_additive_margin(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.additive_margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_multiplicative_margin(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.multiplicative_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `1.01·ρ_{2√2/σ}(L*∖{0})`, the smallest round `ε` meeting both preconditions.
pub fn default_epsilon(lattice: &SmallLattice, sigma: f64) -> f64 {
    1.01 * dual_sum_excluding_origin(&lattice.dual(), sigma / (2.0 * SQRT_2))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Evaluates both bounds at every `(σ, u)`; `eps = None` picks
/// [`default_epsilon`] per `σ`. Points whose `σ` violates a precondition are
/// skipped and listed.
pub fn verify_tail_bounds(
    lattice: &SmallLattice,
    sigmas: &[f64],
    us: &[Vec<f64>],
    eps: Option<f64>,
) -> Result<TailReport> {
    if us.iter().any(|u| u.len() != lattice.dim()) {
        return Err(invalid("u points must match the lattice dimension"));
    }
    let dual = lattice.dual();
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &sigma in sigmas {
        let epsilon = eps.unwrap_or_else(|| default_epsilon(lattice, sigma));
        if !(epsilon > 0.0 && epsilon < 1.0) {
            skipped.push(SkippedPoint {
                sigma,
                reason: "epsilon outside (0, 1)",
            });
            continue;
        }
        let eta = smoothing_parameter(lattice, epsilon)?;
        if !(sigma > 2.0 * eta) {
            skipped.push(SkippedPoint {
                sigma,
                reason: "sigma not above 2·eta",
            });
            continue;
        }
        if !(sigma > 2.0 * SQRT_2 * eta) {
            skipped.push(SkippedPoint {
                sigma,
                reason: "sigma not above 2√2·eta",
            });
            continue;
        }
        let rho = |d2: f64, w: f64| libm::exp(-PI * d2 / (w * w));
        for u in us {
            let kappa = dual.closest_point(u);
            let k2 = dist2(&kappa, u);
            // ρ_{1/σ} is below 1e-300 beyond 15/σ of u.
            let radius = libm::sqrt(k2) + 15.0 / sigma;
            let mut lead = 0.0;
            let mut rest = 0.0;
            for x in dual.points_within(u, radius) {
                let term = rho(dist2(&x, u), 1.0 / sigma);
                if dist2(&x, &kappa) < 1e-24 {
                    lead += term;
                } else {
                    rest += term;
                }
            }
            let lhs = lead + rest;
            let leading = rho(k2, 1.0 / sigma);
            let damp = rho(k2, SQRT_2 / sigma);
            points.push(TailPoint {
                sigma,
                u: u.clone(),
                epsilon,
                lhs,
                additive_rhs: leading + epsilon,
                multiplicative_rhs: leading + epsilon * damp,
                additive_margin: epsilon - rest,
                multiplicative_margin: epsilon * damp - rest,
            });
        }
    }
    Ok(TailReport { points, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, max: f64) -> Vec<Vec<f64>> {
        (0..n).map(|k| alloc::vec![max * k as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn integers_sigma_eight() {
        let z = SmallLattice::scaled_integers(1.0).unwrap();
        let report = verify_tail_bounds(&z, &[8.0], &line(25, 0.5), None).unwrap();
        assert!(report.skipped.is_empty());
        assert!(report.all_hold());
        // Oracle for u = 0: the lead term is 1 and the rest is ρ_{1/8}(Z∖{0}).
        let p0 = &report.points[0];
        let oracle: f64 = (1..40).map(|k| 2.0 * libm::exp(-PI * 64.0 * (k * k) as f64)).sum();
        assert!((p0.lhs - 1.0 - oracle).abs() < 1e-15);
    }

    #[test]
    fn margins_shrink_towards_deep_hole() {
        let z = SmallLattice::scaled_integers(1.0).unwrap();
        let report = verify_tail_bounds(&z, &[6.0], &line(25, 0.5), None).unwrap();
        let m: Vec<f64> = report.points.iter().map(|p| p.additive_margin).collect();
        assert!(m.windows(2).all(|w| w[1] <= w[0]));
        assert!(report.all_hold());
    }

    #[test]
    fn small_sigma_is_skipped() {
        let z = SmallLattice::scaled_integers(1.0).unwrap();
        let report = verify_tail_bounds(&z, &[1.0], &line(3, 0.5), Some(1e-9)).unwrap();
        assert!(report.points.is_empty());
        assert_eq!(report.skipped.len(), 1);
    }
}
