use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Supports are cut where `ρ` drops below this fraction of its peak.
pub const TRUNCATION_RATIO: f64 = 1e-16;

/// Width and center of `ρ_{s,c}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParam {
    pub width: f64,
    pub center: f64,
}

impl GaussianParam {
    pub fn new(width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(invalid("Gaussian width must be positive and finite"));
        }
        Ok(Self { width, center })
    }
}

/// `ρ_{s,c}(x) = exp(−π (x−c)²/s²)`.
pub fn rho(param: GaussianParam, x: f64) -> f64 {
    rho_s(param.width, x - param.center)
}

/// `ρ_s(x)` centered at zero.
pub fn rho_s(s: f64, x: f64) -> f64 {
    libm::exp(-PI * x * x / (s * s))
}

/// `ρ_s(x)` for a vector argument.
pub fn rho_s_vec(s: f64, x: &[f64]) -> f64 {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    libm::exp(-PI * n2 / (s * s))
}

/// Radius beyond which `ρ_s` is below [`TRUNCATION_RATIO`] of its peak.
pub fn cutoff_radius(width: f64) -> f64 {
    width * libm::sqrt(-libm::log(TRUNCATION_RATIO) / PI)
}

/// A symmetric positive definite matrix `Σ`, stored with its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSpec {
    dim: usize,
    matrix: Vec<f64>,
    inverse: Vec<f64>,
}

impl CovarianceSpec {
    /// `matrix` is row-major `dim × dim`.
    pub fn new(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim {
            return Err(invalid("covariance matrix has the wrong size"));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidCovariance("matrix is not symmetric".into()));
                }
            }
        }
        let eig = symmetric_eigenvalues(&matrix, dim);
        if eig.iter().any(|&l| !(l > 1e-10)) {
            return Err(Error::InvalidCovariance(
                "matrix is not positive definite".into(),
            ));
        }
        let inverse = invert(&matrix, dim)
            .ok_or_else(|| Error::InvalidCovariance("matrix is singular".into()))?;
        Ok(Self {
            dim,
            matrix,
            inverse,
        })
    }

    /// `s² · I + u uᵀ · k`, the rank-one update shape used by the EDCP offset law.
    pub fn scaled_identity_plus_rank_one(s2: f64, u: &[f64], k: f64) -> Result<Self> {
        let dim = u.len();
        let mut m = alloc::vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                m[i * dim + j] = k * u[i] * u[j] + if i == j { s2 } else { 0.0 };
            }
        }
        Self::new(dim, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `xᵀ Σ⁻¹ x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += x[i] * self.inverse[i * d + j] * x[j];
            }
        }
        acc
    }
}

/// `ρ_{√Σ}(x) = exp(−π xᵀΣ⁻¹x)`.
pub fn rho_cov(cov: &CovarianceSpec, x: &[f64]) -> Result<f64> {
    if x.len() != cov.dim {
        return Err(invalid("vector length does not match covariance dimension"));
    }
    Ok(libm::exp(-PI * cov.quadratic_form(x)))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], dim: usize) -> Vec<f64> {
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|i| (0..dim).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * dim + j] * a[i * dim + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * dim + q] - a[p * dim + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..dim).map(|i| a[i * dim + i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

fn invert(matrix: &[f64], dim: usize) -> Option<Vec<f64>> {
    let w = 2 * dim;
    let mut aug = alloc::vec![0.0; dim * w];
    for i in 0..dim {
        aug[i * w..i * w + dim].copy_from_slice(&matrix[i * dim..(i + 1) * dim]);
        aug[i * w + dim + i] = 1.0;
    }
    for col in 0..dim {
        let piv = (col..dim).max_by(|&x, &y| aug[x * w + col].abs().total_cmp(&aug[y * w + col].abs()))?;
        if aug[piv * w + col].abs() < 1e-300 {
            return None;
        }
        for k in 0..w {
            aug.swap(col * w + k, piv * w + k);
        }
        let d = aug[col * w + col];
        for k in 0..w {
            aug[col * w + k] /= d;
        }
        for r in 0..dim {
            if r != col {
                let f = aug[r * w + col];
                if f != 0.0 {
                    for k in 0..w {
                        aug[r * w + k] -= f * aug[col * w + k];
                    }
                }
            }
        }
    }
    Some(
        (0..dim)
            .flat_map(|i| aug[i * w + dim..(i + 1) * w].to_vec())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_examples() {
        let p = GaussianParam::new(2.0, 0.0).unwrap();
        assert_eq!(rho(p, 0.0), 1.0);
        assert!((rho(p, 2.0) - 0.0432139).abs() < 1e-7);
        assert_eq!(rho(GaussianParam::new(2.0, 3.0).unwrap(), 3.0), 1.0);
    }

    #[test]
    fn rho_cov_reduces_to_scalar() {
        let s = 1.7;
        let cov = CovarianceSpec::new(1, alloc::vec![s * s]).unwrap();
        assert!((rho_cov(&cov, &[0.9]).unwrap() - rho_s(s, 0.9)).abs() < 1e-15);
        let id = CovarianceSpec::new(2, alloc::vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(rho_cov(&id, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn rho_cov_rank_one_matches_hand_inverse() {
        // Σ = I + (α²/β²q²) e eᵀ with α = 4, βq = 8, e = (1, 0) is diag(1.25, 1).
        let cov = CovarianceSpec::scaled_identity_plus_rank_one(1.0, &[1.0, 0.0], 16.0 / 64.0)
            .unwrap();
        let expected = libm::exp(-PI * (1.0 / 1.25 + 1.0));
        assert!((rho_cov(&cov, &[1.0, 1.0]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert!(CovarianceSpec::new(2, alloc::vec![1.0, 2.0, 2.0, 1.0]).is_err());
        assert!(CovarianceSpec::new(2, alloc::vec![1.0, 0.5, 0.0, 1.0]).is_err());
    }

    #[test]
    fn jacobi_eigenvalues() {
        let e = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
    }
}
