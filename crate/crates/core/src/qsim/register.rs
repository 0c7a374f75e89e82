use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Default limit on the number of amplitudes in one state.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 24;

/// One register of a multi-register state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Register {
    /// `Z_q` with labels `0, …, q−1`.
    Cyclic(u64),
    /// A finite grid with labels `(start + k·stride)/den` for `k < len`.
    Grid {
        start: i64,
        stride: i64,
        den: u64,
        len: usize,
    },
}

impl Register {
    /// Consecutive integers `lo..=hi`.
    pub fn integers(lo: i64, hi: i64) -> Self {
        Register::Grid {
            start: lo,
            stride: 1,
            den: 1,
            len: (hi - lo + 1).max(0) as usize,
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            Register::Cyclic(q) => q as usize,
            Register::Grid { len, .. } => len,
        }
    }

    pub fn label(&self, i: usize) -> f64 {
        match *self {
            Register::Cyclic(_) => i as f64,
            Register::Grid {
                start, stride, den, ..
            } => (start + i as i64 * stride) as f64 / den as f64,
        }
    }

    /// The label as an integer, when it is one.
    pub fn integer_label(&self, i: usize) -> Option<i64> {
        match *self {
            Register::Cyclic(_) => Some(i as i64),
            Register::Grid {
                start, stride, den, ..
            } => {
                let num = start + i as i64 * stride;
                (num % den as i64 == 0).then(|| num / den as i64)
            }
        }
    }

    /// Index of an integer label on a unit-stride integer grid.
    pub fn index_of_integer(&self, label: i64) -> Option<usize> {
        match *self {
            Register::Cyclic(q) => Some(label.rem_euclid(q as i64) as usize),
            Register::Grid {
                start,
                stride: 1,
                den: 1,
                len,
            } => {
                let k = label - start;
                (k >= 0 && (k as usize) < len).then_some(k as usize)
            }
            Register::Grid { .. } => None,
        }
    }
}

/// The ordered registers of a state, with precomputed strides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterShape {
    registers: Vec<Register>,
    strides: Vec<usize>,
    dim: usize,
}

impl RegisterShape {
    pub fn new(registers: Vec<Register>) -> Result<Self> {
        Self::with_cap(registers, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(registers: Vec<Register>, cap: usize) -> Result<Self> {
        if registers.is_empty() {
            return Err(invalid("a state needs at least one register"));
        }
        let mut dim: usize = 1;
        for r in &registers {
            if r.size() == 0 {
                return Err(Error::EmptySupport);
            }
            dim = dim.saturating_mul(r.size());
        }
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let mut strides = alloc::vec![1usize; registers.len()];
        for i in (0..registers.len() - 1).rev() {
            strides[i] = strides[i + 1] * registers[i + 1].size();
        }
        Ok(Self {
            registers,
            strides,
            dim,
        })
    }

    pub fn single(register: Register) -> Result<Self> {
        Self::new(alloc::vec![register])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, i: usize) -> Result<&Register> {
        self.registers.get(i).ok_or(Error::NoSuchRegister(i))
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    /// Index of register `reg` within a flat index.
    pub fn component(&self, flat: usize, reg: usize) -> usize {
        (flat / self.strides[reg]) % self.registers[reg].size()
    }

    /// The shape with register `reg` replaced.
    pub fn replace(&self, reg: usize, with: Register) -> Result<Self> {
        let mut regs = self.registers.clone();
        *regs.get_mut(reg).ok_or(Error::NoSuchRegister(reg))? = with;
        Self::new(regs)
    }

    /// The shape with register `reg` removed.
    pub fn remove(&self, reg: usize) -> Result<Self> {
        let mut regs = self.registers.clone();
        if reg >= regs.len() {
            return Err(Error::NoSuchRegister(reg));
        }
        regs.remove(reg);
        Self::new(regs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_and_indices() {
        let s = RegisterShape::new(alloc::vec![Register::Cyclic(3), Register::Cyclic(4)]).unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.flat_index(&[2, 1]), 9);
        assert_eq!(s.multi_index(9), alloc::vec![2, 1]);
        assert_eq!(s.component(9, 1), 1);
    }

    #[test]
    fn cap_enforced() {
        let r = RegisterShape::with_cap(alloc::vec![Register::Cyclic(1000); 3], 1 << 20);
        assert!(matches!(r, Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn grid_labels() {
        let g = Register::Grid {
            start: -3,
            stride: 1,
            den: 2,
            len: 7,
        };
        assert_eq!(g.label(0), -1.5);
        assert_eq!(g.integer_label(1), Some(-1));
        assert_eq!(g.integer_label(0), None);
        assert_eq!(Register::integers(-2, 2).index_of_integer(1), Some(3));
    }
}
