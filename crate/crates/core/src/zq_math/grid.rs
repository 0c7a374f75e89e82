use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// The truncated coset `{offset + k·step : |offset + k·step| ≤ halfwidth}` with a
/// rational step `num/den`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetGrid {
    step_num: u64,
    step_den: u64,
    offset: f64,
    halfwidth: f64,
}

impl CosetGrid {
    pub fn new(step_num: u64, step_den: u64, offset: f64, halfwidth: f64) -> Result<Self> {
        if step_num == 0 || step_den == 0 {
            return Err(invalid("grid step must be positive"));
        }
        if !(halfwidth > 0.0) || !offset.is_finite() {
            return Err(invalid("grid halfwidth must be positive"));
        }
        let g = Self {
            step_num,
            step_den,
            offset,
            halfwidth,
        };
        if g.k_range().is_none() {
            return Err(Error::EmptySupport);
        }
        Ok(g)
    }

    /// `Z` truncated to `[−halfwidth, halfwidth]`.
    pub fn integers(halfwidth: f64) -> Result<Self> {
        Self::new(1, 1, 0.0, halfwidth)
    }

    pub fn step(&self) -> f64 {
        self.step_num as f64 / self.step_den as f64
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    fn k_range(&self) -> Option<(i64, i64)> {
        let step = self.step();
        let lo = libm::ceil((-self.halfwidth - self.offset) / step) as i64;
        let hi = libm::floor((self.halfwidth - self.offset) / step) as i64;
        (lo <= hi).then_some((lo, hi))
    }

    /// Support points in increasing order.
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = self.k_range().expect("grid validated non-empty");
        let step = self.step();
        (lo..=hi).map(|k| self.offset + k as f64 * step).collect()
    }

    pub fn len(&self) -> usize {
        let (lo, hi) = self.k_range().expect("grid validated non-empty");
        (hi - lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
