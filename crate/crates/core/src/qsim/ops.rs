use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::Rng;

use super::{PureState, Register};
use crate::error::{Error, Result};
use crate::zq_math::sample_index;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Flat base indices of the fibers along register `reg` (component `reg` is zero).
fn fiber_bases(state: &PureState, reg: usize) -> Result<(Vec<usize>, usize, usize)> {
    let shape = state.shape();
    let size = shape.register(reg)?.size();
    let stride = shape.stride(reg);
    let block = stride * size;
    let bases = (0..shape.dim() / block)
        .flat_map(|o| (0..stride).map(move |i| o * block + i))
        .collect();
    Ok((bases, size, stride))
}

fn cyclic_size(state: &PureState, reg: usize) -> Result<u64> {
    match state.shape().register(reg)? {
        Register::Cyclic(q) => Ok(*q),
        Register::Grid { .. } => Err(Error::NotCyclic(reg)),
    }
}

fn fourier(state: &PureState, reg: usize, sign: f64) -> Result<PureState> {
    let q = cyclic_size(state, reg)?;
    let (bases, size, stride) = fiber_bases(state, reg)?;
    let twiddle: Vec<Complex64> = (0..q)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / q as f64))
        .collect();
    let scale = 1.0 / libm::sqrt(q as f64);
    let amps = state.amplitudes();
    let mut out = alloc::vec![ZERO; amps.len()];
    let mut nonzero: Vec<(usize, Complex64)> = Vec::with_capacity(size);
    for base in bases {
        nonzero.clear();
        nonzero.extend(
            (0..size)
                .map(|x| (x, amps[base + x * stride]))
                .filter(|(_, a)| *a != ZERO),
        );
        if nonzero.is_empty() {
            continue;
        }
        for y in 0..size {
            let acc: Complex64 = nonzero
                .iter()
                .map(|&(x, a)| a * twiddle[(x as u128 * y as u128 % q as u128) as usize])
                .sum();
            out[base + y * stride] = acc * scale;
        }
    }
    state.with_amplitudes(state.shape().clone(), out)
}

/// `QFT_q` on a cyclic register: `|x⟩ ↦ q^{-1/2} Σ_y ω_q^{xy} |y⟩`.
pub fn qft(state: &PureState, reg: usize) -> Result<PureState> {
    fourier(state, reg, 1.0)
}

/// The inverse of [`qft`].
pub fn qft_inverse(state: &PureState, reg: usize) -> Result<PureState> {
    fourier(state, reg, -1.0)
}

/// `⟨φ|ψ⟩`.
pub fn overlap(phi: &PureState, psi: &PureState) -> Result<Complex64> {
    if phi.shape() != psi.shape() {
        return Err(Error::ShapeMismatch);
    }
    Ok(phi
        .amplitudes()
        .iter()
        .zip(psi.amplitudes())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `√(1 − |⟨φ|ψ⟩|²/(‖φ‖²‖ψ‖²))`, valid for unnormalised vectors.
pub fn trace_distance_pure(phi: &PureState, psi: &PureState) -> Result<f64> {
    let (np, ns) = (phi.norm(), psi.norm());
    if !(np > 0.0 && ns > 0.0) {
        return Err(Error::ZeroVector);
    }
    let f = (overlap(phi, psi)?.norm() / (np * ns)).min(1.0);
    Ok(libm::sqrt(((1.0 - f) * (1.0 + f)).max(0.0)))
}

/// `min_θ ‖φ̂ − e^{iθ} ψ̂‖` for the normalised vectors.
pub fn l2_distance_up_to_phase(phi: &PureState, psi: &PureState) -> Result<f64> {
    let (np, ns) = (phi.norm(), psi.norm());
    if !(np > 0.0 && ns > 0.0) {
        return Err(Error::ZeroVector);
    }
    let f = (overlap(phi, psi)?.norm() / (np * ns)).min(1.0);
    Ok(libm::sqrt((2.0 - 2.0 * f).max(0.0)))
}

/// Result of [`rejection_sample`].
#[derive(Clone, Debug)]
pub struct RejectionOutcome {
    pub state: Option<PureState>,
    pub success_probability: f64,
}

/// Quantum rejection sampling: with probability `M = Σ_x γ(x)²|f(x)|²` returns the
/// normalised state `∝ γ(x) f(x)|x⟩` on register `reg`.
pub fn rejection_sample<R: Rng + ?Sized>(
    state: &PureState,
    reg: usize,
    gamma: &[f64],
    rng: &mut R,
) -> Result<RejectionOutcome> {
    let size = state.shape().register(reg)?.size();
    if gamma.len() != size {
        return Err(Error::ShapeMismatch);
    }
    if let Some(&g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::GammaOutOfRange(g));
    }
    let shape = state.shape();
    let weighted: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a * gamma[shape.component(i, reg)])
        .collect();
    let n2 = state.norm() * state.norm();
    let m = weighted.iter().map(|a| a.norm_sqr()).sum::<f64>() / n2;
    let accepted = m > 0.0 && rng.gen::<f64>() < m;
    Ok(RejectionOutcome {
        state: if accepted {
            Some(state.with_amplitudes(shape.clone(), weighted)?.normalized())
        } else {
            None
        },
        success_probability: m,
    })
}

/// Computational-basis measurement of one register; the register is kept.
pub fn measure<R: Rng + ?Sized>(
    state: &PureState,
    reg: usize,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    let k = sample_index(&state.marginal(reg)?, rng);
    let shape = state.shape();
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| if shape.component(i, reg) == k { *a } else { ZERO })
        .collect();
    Ok((k, state.with_amplitudes(shape.clone(), amps)?.normalized()))
}

/// Computational-basis measurement that discards the measured register.
pub fn measure_out<R: Rng + ?Sized>(
    state: &PureState,
    reg: usize,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    let k = sample_index(&state.marginal(reg)?, rng);
    let shape = state.shape();
    let rest = shape.remove(reg)?;
    let amps = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| shape.component(*i, reg) == k)
        .map(|(_, a)| *a)
        .collect();
    Ok((k, state.with_amplitudes(rest, amps)?.normalized()))
}

/// A square matrix with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    dim: usize,
    rows: Vec<Complex64>,
}

impl Unitary {
    /// Validates orthonormality of the rows to `1e−10`.
    pub fn new(dim: usize, rows: Vec<Complex64>) -> Result<Self> {
        let u = Self::new_unchecked(dim, rows)?;
        let dev = u.orthonormality_deviation();
        if dev > 1e-10 {
            return Err(Error::NonOrthonormalBasis(dev));
        }
        Ok(u)
    }

    pub(crate) fn new_unchecked(dim: usize, rows: Vec<Complex64>) -> Result<Self> {
        if rows.len() != dim * dim || dim == 0 {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self { dim, rows })
    }

    pub fn identity(dim: usize) -> Self {
        let mut rows = alloc::vec![ZERO; dim * dim];
        for i in 0..dim {
            rows[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, rows }
    }

    /// The basis `(|0⟩ ± e^{iφ}|1⟩)/√2`.
    pub fn rotated_hadamard(phi: f64) -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let p = Complex64::from_polar(h, phi);
        Self {
            dim: 2,
            rows: alloc::vec![Complex64::new(h, 0.0), p, Complex64::new(h, 0.0), -p],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, d: usize) -> &[Complex64] {
        &self.rows[d * self.dim..(d + 1) * self.dim]
    }

    /// `max |⟨row_a|row_b⟩ − δ_ab|`.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.dim {
            for b in a..self.dim {
                let ip: Complex64 = self
                    .row(a)
                    .iter()
                    .zip(self.row(b))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }

    /// `⟨row_d | v⟩`.
    pub fn project(&self, d: usize, v: &[Complex64]) -> Complex64 {
        self.row(d).iter().zip(v).map(|(b, x)| b.conj() * x).sum()
    }
}

fn gather(state: &PureState, base: usize, size: usize, stride: usize) -> Vec<Complex64> {
    (0..size)
        .map(|x| state.amplitudes()[base + x * stride])
        .collect()
}

/// Measurement of register `reg` in the basis given by the rows of `basis`.
pub fn measure_in_basis<R: Rng + ?Sized>(
    state: &PureState,
    reg: usize,
    basis: &Unitary,
    rng: &mut R,
) -> Result<(usize, PureState)> {
    let (bases, size, stride) = fiber_bases(state, reg)?;
    if basis.dim() != size {
        return Err(Error::ShapeMismatch);
    }
    let coeffs: Vec<Vec<Complex64>> = bases
        .iter()
        .map(|&b| {
            let v = gather(state, b, size, stride);
            (0..size).map(|d| basis.project(d, &v)).collect()
        })
        .collect();
    let weights: Vec<f64> = (0..size)
        .map(|d| coeffs.iter().map(|c| c[d].norm_sqr()).sum())
        .collect();
    let d = sample_index(&weights, rng);
    let mut out = alloc::vec![ZERO; state.amplitudes().len()];
    for (f, &b) in bases.iter().enumerate() {
        for (x, bx) in basis.row(d).iter().enumerate() {
            out[b + x * stride] = coeffs[f][d] * bx;
        }
    }
    Ok((d, state.with_amplitudes(state.shape().clone(), out)?.normalized()))
}

/// Applies `U` to register `reg`: `|x⟩ ↦ Σ_y U[y][x] |y⟩`.
pub fn apply_unitary(state: &PureState, reg: usize, u: &Unitary) -> Result<PureState> {
    let (bases, size, stride) = fiber_bases(state, reg)?;
    if u.dim() != size {
        return Err(Error::ShapeMismatch);
    }
    let mut out = alloc::vec![ZERO; state.amplitudes().len()];
    for b in bases {
        let v = gather(state, b, size, stride);
        if v.iter().all(|a| *a == ZERO) {
            continue;
        }
        for y in 0..size {
            out[b + y * stride] = u.row(y).iter().zip(&v).map(|(m, a)| m * a).sum();
        }
    }
    state.with_amplitudes(state.shape().clone(), out)
}

/// Relabels register `reg` into `target`, multiplying by unit phases.
///
/// `map(x)` gives the new label and phase for old label `x`; it must be defined
/// and injective on every label carrying amplitude.
pub fn apply_relabel_phase(
    state: &PureState,
    reg: usize,
    target: Register,
    map: impl Fn(usize) -> Option<(usize, Complex64)>,
) -> Result<PureState> {
    let marginal = state.marginal(reg)?;
    let tsize = target.size();
    let mut image: Vec<Option<(usize, Complex64)>> = alloc::vec![None; marginal.len()];
    let mut used = alloc::vec![false; tsize];
    for (x, &w) in marginal.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (y, ph) = map(x).ok_or(Error::UnmappedLabel(x))?;
        if y >= tsize || used[y] {
            return Err(Error::NonInjective);
        }
        if (ph.norm() - 1.0).abs() > 1e-9 {
            return Err(crate::error::invalid("relabel phases must have unit modulus"));
        }
        used[y] = true;
        image[x] = Some((y, ph));
    }
    let old = state.shape();
    let shape = old.replace(reg, target)?;
    let mut out = alloc::vec![ZERO; shape.dim()];
    for (i, a) in state.amplitudes().iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let mut idx = old.multi_index(i);
        let (y, ph) = image[idx[reg]].expect("support label mapped");
        idx[reg] = y;
        out[shape.flat_index(&idx)] = a * ph;
    }
    state.with_amplitudes(shape, out)
}
