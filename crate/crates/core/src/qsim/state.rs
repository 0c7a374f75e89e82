use alloc::vec::Vec;
use num_complex::Complex64;

use super::{Register, RegisterShape};
use crate::error::{invalid, Error, Result};

/// A pure state as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    shape: RegisterShape,
    amps: Vec<Complex64>,
    truncation_loss: f64,
}

impl PureState {
    /// `truncation_loss` records ℓ2 mass discarded upstream by truncation.
    pub fn new(shape: RegisterShape, amps: Vec<Complex64>, truncation_loss: f64) -> Result<Self> {
        if amps.len() != shape.dim() {
            return Err(Error::ShapeMismatch);
        }
        if !(0.0..0.5).contains(&truncation_loss) {
            return Err(invalid("truncation loss must lie in [0, 0.5)"));
        }
        let state = Self {
            shape,
            amps,
            truncation_loss,
        };
        if !(state.norm() > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(state)
    }

    /// A normalised state from unnormalised amplitudes.
    pub fn normalized_from(
        shape: RegisterShape,
        amps: Vec<Complex64>,
        truncation_loss: f64,
    ) -> Result<Self> {
        Ok(Self::new(shape, amps, truncation_loss)?.normalized())
    }

    pub fn from_fn(shape: RegisterShape, f: impl Fn(&[usize]) -> Complex64) -> Result<Self> {
        let amps = (0..shape.dim()).map(|i| f(&shape.multi_index(i))).collect();
        Self::new(shape, amps, 0.0)
    }

    /// The computational basis state at `idx`.
    pub fn basis(shape: RegisterShape, idx: &[usize]) -> Result<Self> {
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); shape.dim()];
        amps[shape.flat_index(idx)] = Complex64::new(1.0, 0.0);
        Self::new(shape, amps, 0.0)
    }

    /// One cyclic register holding `Σ_k amps[k] |k⟩`, normalised.
    pub fn cyclic(amps: Vec<Complex64>, truncation_loss: f64) -> Result<Self> {
        let shape = RegisterShape::single(Register::Cyclic(amps.len() as u64))?;
        Self::normalized_from(shape, amps, truncation_loss)
    }

    pub fn shape(&self) -> &RegisterShape {
        &self.shape
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, idx: &[usize]) -> Complex64 {
        self.amps[self.shape.flat_index(idx)]
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        for a in &mut self.amps {
            *a /= n;
        }
        self
    }

    /// Marginal squared-amplitude mass on each label of register `reg`.
    pub fn marginal(&self, reg: usize) -> Result<Vec<f64>> {
        let size = self.shape.register(reg)?.size();
        let mut m = alloc::vec![0.0; size];
        for (i, a) in self.amps.iter().enumerate() {
            m[self.shape.component(i, reg)] += a.norm_sqr();
        }
        Ok(m)
    }

    /// `self ⊗ other`, with the registers of `self` first.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let mut regs = self.shape.registers().to_vec();
        regs.extend_from_slice(other.shape.registers());
        let shape = RegisterShape::new(regs)?;
        let mut amps = Vec::with_capacity(shape.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self::new(
            shape,
            amps,
            self.truncation_loss + other.truncation_loss,
        )
    }

    /// Applies a permutation of the computational basis given on flat indices.
    pub fn permute_basis(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut seen = alloc::vec![false; self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = f(i);
            if j >= amps.len() || seen[j] {
                return Err(Error::NonInjective);
            }
            seen[j] = true;
            amps[j] = *a;
        }
        Self::new(self.shape.clone(), amps, self.truncation_loss)
    }

    /// Multiplies each amplitude by `phase(flat index)`.
    pub fn apply_phase(&self, phase: impl Fn(usize) -> Complex64) -> Result<Self> {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * phase(i))
            .collect();
        Self::new(self.shape.clone(), amps, self.truncation_loss)
    }

    pub(crate) fn with_amplitudes(&self, shape: RegisterShape, amps: Vec<Complex64>) -> Result<Self> {
        Self::new(shape, amps, self.truncation_loss)
    }
}

/// A mixture of pure states given as explicit branches.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    branches: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(branches: Vec<(f64, PureState)>) -> Result<Self> {
        if branches.iter().any(|(p, _)| !(*p >= 0.0)) {
            return Err(invalid("branch probabilities must be non-negative"));
        }
        let total: f64 = branches.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid("branch probabilities must sum to 1"));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_and_marginal() {
        let a = PureState::cyclic(alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)], 0.0)
            .unwrap();
        let b = PureState::cyclic(alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)], 0.0)
            .unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.shape().dim(), 6);
        let m = t.marginal(1).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_rejected() {
        let shape = RegisterShape::single(Register::Cyclic(2)).unwrap();
        assert_eq!(
            PureState::new(shape, alloc::vec![Complex64::new(0.0, 0.0); 2], 0.0),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn ensemble_probabilities_checked() {
        let s = PureState::basis(RegisterShape::single(Register::Cyclic(2)).unwrap(), &[0]).unwrap();
        assert!(Ensemble::new(alloc::vec![(0.5, s.clone())]).is_err());
        assert!(Ensemble::new(alloc::vec![(0.5, s.clone()), (0.5, s)]).is_ok());
    }
}
