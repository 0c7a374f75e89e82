//! Goodness-of-fit helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pearson chi-square result after merging sparse bins.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Minimum expected count per merged bin.
pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson test of `observed` counts against category probabilities `probs`
/// (normalised here). Adjacent categories are merged, in the given order, until
/// every bin expects at least [`MIN_EXPECTED`] draws.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    let n = total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&k, &p) in observed.iter().zip(probs) {
        o += k as f64;
        e += n * p / mass;
        if e >= MIN_EXPECTED {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let statistic: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map(|d| 1.0 - d.cdf(statistic))
            .unwrap_or(0.0)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
        bins: bins.len(),
    }
}

/// Counts of `values` in `lo..lo + len`; values outside are ignored and returned
/// as the second component.
pub fn histogram(values: impl IntoIterator<Item = i64>, lo: i64, len: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; len];
    let mut outside = 0;
    for v in values {
        let i = v - lo;
        if i >= 0 && (i as usize) < len {
            counts[i as usize] += 1;
        } else {
            outside += 1;
        }
    }
    (counts, outside)
}

/// Standard error of a proportion.
pub fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_uniform_case() {
        let r = chi_square(&[28, 31, 40, 35], &[0.25; 4]);
        assert!((r.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert!((r.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
        assert_eq!(r.dof, 3);
    }

    #[test]
    fn sparse_bins_are_merged() {
        let r = chi_square(&[1, 1, 50, 48, 0, 0], &[0.01, 0.01, 0.48, 0.48, 0.01, 0.01]);
        assert_eq!(r.bins, 2);
        assert!(r.p_value > 0.5);
    }

    #[test]
    fn histogram_counts_outside() {
        let (h, out) = histogram([-1, 0, 0, 2, 5], 0, 3);
        assert_eq!(h, vec![2, 0, 1]);
        assert_eq!(out, 2);
    }
}
