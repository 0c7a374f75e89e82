//! Error amplitudes and generators for S|LWE>, S|LWE>^phase, DCP and
//! complex-Gaussian states.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qsim::{PureState, Register, RegisterShape};
use crate::zq_math::{center_mod, cutoff_radius, dot_mod, fold_table, rho_s, IntTable};

/// One entry of a tabulated amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub index: i64,
    pub re: f64,
    pub im: f64,
}

/// A parametric error amplitude `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum AmplitudeSpec {
    /// `ρ_σ(e)`.
    RealGaussian { sigma: f64 },
    /// `ρ_σ(e)·exp(2πi c e/q)`.
    LinearPhaseGaussian { sigma: f64, c: f64, q: u64 },
    /// `ρ_r(e)·exp(−πi e²/t)`; `t = ∞` drops the phase.
    ComplexGaussian { r: f64, t: f64 },
    /// `1` on `|e| ≤ b`.
    BoundedUniform { b: f64 },
    Tabulated { entries: Vec<TableEntry> },
}

/// Fractional part in `[0, 1)`.
fn frac(x: f64) -> f64 {
    x - libm::floor(x)
}

/// `−π x²/t` reduced modulo `2π`, exact when `t` is a small integer.
pub fn quadratic_phase(x: i64, t: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t == libm::trunc(t) && t > 0.0 && t < (1u64 << 31) as f64 {
        let two_t = 2 * t as i128;
        let r = (x as i128 * x as i128).rem_euclid(two_t);
        -PI * r as f64 / t
    } else {
        -PI * (x as f64) * (x as f64) / t
    }
}

impl AmplitudeSpec {
    /// `δ₀`, the amplitude of errorless classical LWE.
    pub fn delta() -> Self {
        AmplitudeSpec::Tabulated {
            entries: alloc::vec![TableEntry {
                index: 0,
                re: 1.0,
                im: 0.0
            }],
        }
    }

    /// The bounded-uniform amplitude as a table preset.
    pub fn bounded_uniform_table(b: i64) -> Self {
        AmplitudeSpec::Tabulated {
            entries: (-b..=b)
                .map(|index| TableEntry {
                    index,
                    re: 1.0,
                    im: 0.0,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && !v.is_nan();
        let ok = match self {
            AmplitudeSpec::RealGaussian { sigma } => pos(*sigma) && sigma.is_finite(),
            AmplitudeSpec::LinearPhaseGaussian { sigma, c, q } => {
                pos(*sigma) && sigma.is_finite() && c.is_finite() && *q >= 1
            }
            AmplitudeSpec::ComplexGaussian { r, t } => pos(*r) && r.is_finite() && pos(*t),
            AmplitudeSpec::BoundedUniform { b } => pos(*b) && b.is_finite(),
            AmplitudeSpec::Tabulated { entries } => {
                !entries.is_empty()
                    && entries.iter().all(|e| e.re.is_finite() && e.im.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("amplitude parameters must be positive and finite"))
        }
    }

    /// `f(e)` at an integer point.
    pub fn eval(&self, e: i64) -> Complex64 {
        let x = e as f64;
        match self {
            AmplitudeSpec::RealGaussian { sigma } => Complex64::new(rho_s(*sigma, x), 0.0),
            AmplitudeSpec::LinearPhaseGaussian { sigma, c, q } => {
                let turns = frac(c * x / *q as f64);
                Complex64::from_polar(rho_s(*sigma, x), 2.0 * PI * turns)
            }
            AmplitudeSpec::ComplexGaussian { r, t } => {
                Complex64::from_polar(rho_s(*r, x), quadratic_phase(e, *t))
            }
            AmplitudeSpec::BoundedUniform { b } => {
                Complex64::new(if x.abs() <= *b { 1.0 } else { 0.0 }, 0.0)
            }
            AmplitudeSpec::Tabulated { entries } => entries
                .iter()
                .filter(|t| t.index == e)
                .map(|t| Complex64::new(t.re, t.im))
                .sum(),
        }
    }

    fn gaussian_width(&self) -> Option<f64> {
        match self {
            AmplitudeSpec::RealGaussian { sigma } => Some(*sigma),
            AmplitudeSpec::LinearPhaseGaussian { sigma, .. } => Some(*sigma),
            AmplitudeSpec::ComplexGaussian { r, .. } => Some(*r),
            _ => None,
        }
    }

    /// Integer support `[lo, hi]` after truncation.
    pub fn support(&self) -> (i64, i64) {
        match self {
            AmplitudeSpec::BoundedUniform { b } => {
                let k = libm::floor(*b) as i64;
                (-k, k)
            }
            AmplitudeSpec::Tabulated { entries } => (
                entries.iter().map(|e| e.index).min().unwrap_or(0),
                entries.iter().map(|e| e.index).max().unwrap_or(0),
            ),
            _ => {
                let k = libm::ceil(cutoff_radius(self.gaussian_width().expect("gaussian"))) as i64;
                (-k, k)
            }
        }
    }

    /// `f` tabulated on its truncated support.
    pub fn table(&self) -> IntTable {
        let (lo, hi) = self.support();
        IntTable::from_fn(lo, hi, |e| self.eval(e))
    }

    /// Relative ℓ2 mass discarded by [`Self::support`].
    pub fn truncation_loss(&self) -> f64 {
        let Some(w) = self.gaussian_width() else {
            return 0.0;
        };
        let (_, hi) = self.support();
        let inside: f64 = (-hi..=hi).map(|e| libm::pow(rho_s(w, e as f64), 2.0)).sum();
        let mut tail = 0.0;
        let mut e = hi + 1;
        loop {
            let v = libm::pow(rho_s(w, e as f64), 2.0);
            tail += 2.0 * v;
            if v < 1e-300 || v < 1e-30 * inside {
                break;
            }
            e += 1;
        }
        tail / (inside + tail)
    }

    /// The single support point, if `f` is a point mass.
    pub fn point_mass(&self) -> Option<i64> {
        let t = self.table();
        let mut nz = t.iter().filter(|(_, v)| v.norm_sqr() > 0.0);
        let first = nz.next()?;
        nz.next().is_none().then_some(first.0)
    }
}

/// `f(e)` at an integer point.
pub fn eval_amplitude(spec: &AmplitudeSpec, e: i64) -> Complex64 {
    spec.eval(e)
}

/// A secret vector in centered `Z_q^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub s: Vec<i64>,
    pub q: u64,
}

impl SecretKey {
    pub fn new(s: Vec<i64>, q: u64) -> Self {
        Self {
            s: s.iter().map(|&v| center_mod(v as i128, q)).collect(),
            q,
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, q: u64, rng: &mut R) -> Self {
        Self::new((0..n).map(|_| rng.gen_range(0..q) as i64).collect(), q)
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }
}

/// A uniform vector over centered `Z_q^n`.
pub fn uniform_vector<R: Rng + ?Sized>(n: usize, q: u64, rng: &mut R) -> Vec<i64> {
    (0..n)
        .map(|_| center_mod(rng.gen_range(0..q) as i128, q))
        .collect()
}

/// An S|LWE> sample: a public vector and its error state.
#[derive(Clone, Debug, PartialEq)]
pub struct SlweSample {
    pub a: Vec<i64>,
    pub state: PureState,
}

/// The part of an S|LWE>^phase sample a solver may read.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePublic {
    pub a: Vec<i64>,
    pub y: Vec<i64>,
    pub state: PureState,
}

/// Test-only introspection for an S|LWE>^phase sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseHidden {
    pub y: Vec<i64>,
    pub theta: f64,
    pub width: Option<f64>,
    pub center: Option<f64>,
}

/// An S|LWE>^phase sample. Solvers receive only [`PhasePublic`].
#[derive(Clone, Debug, PartialEq)]
pub struct SlwePhaseSample {
    public: PhasePublic,
    hidden: PhaseHidden,
}

impl SlwePhaseSample {
    pub fn public(&self) -> &PhasePublic {
        &self.public
    }

    pub fn hidden(&self) -> &PhaseHidden {
        &self.hidden
    }

    pub fn into_parts(self) -> (PhasePublic, PhaseHidden) {
        (self.public, self.hidden)
    }

    pub(crate) fn from_parts(public: PhasePublic, hidden: PhaseHidden) -> Self {
        Self { public, hidden }
    }
}

fn slwe_state(
    q: u64,
    f: &AmplitudeSpec,
    shift: i64,
    theta: f64,
) -> Result<PureState> {
    let mut table = f.table();
    if theta != 0.0 {
        for (i, v) in table.values.iter_mut().enumerate() {
            let e = table.start + i as i64;
            *v *= Complex64::from_polar(1.0, 2.0 * PI * frac(e as f64 * theta));
        }
    }
    let folded = fold_table(&table, q, shift);
    PureState::cyclic(folded, f.truncation_loss())
}

/// Draws `a` uniformly and builds `Σ_e f(e) |⟨a,s⟩ + e mod q⟩`, normalised.
pub fn gen_slwe<R: Rng + ?Sized>(
    q: u64,
    spec: &AmplitudeSpec,
    s: &SecretKey,
    rng: &mut R,
) -> Result<SlweSample> {
    spec.validate()?;
    let a = uniform_vector(s.n(), q, rng);
    let state = slwe_state(q, spec, dot_mod(&a, &s.s, q), 0.0)?;
    Ok(SlweSample { a, state })
}

/// Draws `a` uniformly and builds `Σ_e f(e) e^{2πi eθ} |⟨a,s⟩ + e mod q⟩`.
///
/// `y` and `θ = θ(y)` come from the caller; `θ` is stored only in the hidden part.
pub fn gen_slwe_phase<R: Rng + ?Sized>(
    q: u64,
    f: &AmplitudeSpec,
    s: &SecretKey,
    y: Vec<i64>,
    theta: f64,
    rng: &mut R,
) -> Result<SlwePhaseSample> {
    f.validate()?;
    if !theta.is_finite() {
        return Err(invalid("phase must be finite"));
    }
    let a = uniform_vector(s.n(), q, rng);
    let state = slwe_state(q, f, dot_mod(&a, &s.s, q), theta)?;
    Ok(SlwePhaseSample {
        public: PhasePublic {
            a,
            y: y.clone(),
            state,
        },
        hidden: PhaseHidden {
            y,
            theta,
            width: None,
            center: None,
        },
    })
}

/// Draws `a` uniformly and returns `(|0⟩ + ω_q^{⟨a,s⟩}|1⟩)/√2`.
pub fn gen_dcp_qubit<R: Rng + ?Sized>(
    q: u64,
    s: &SecretKey,
    rng: &mut R,
) -> Result<(Vec<i64>, PureState)> {
    let a = uniform_vector(s.n(), q, rng);
    let phase = dot_mod(&a, &s.s, q) as f64 / q as f64;
    let state = PureState::cyclic(
        alloc::vec![
            Complex64::new(1.0, 0.0),
            Complex64::from_polar(1.0, 2.0 * PI * phase)
        ],
        0.0,
    )?;
    Ok((a, state))
}

/// Minimum truncation radius accepted by [`complex_gaussian_state`].
pub fn complex_gaussian_min_halfwidth(r: f64) -> f64 {
    r * libm::sqrt(64.0 / (2.0 * PI))
}

/// `Σ_x ρ_r(x) e^{−πi x²/t} |x + c⟩` on the labels `c − halfwidth ..= c + halfwidth`.
pub fn complex_gaussian_state(r: f64, t: f64, c: i64, halfwidth: i64) -> Result<PureState> {
    if (halfwidth as f64) < complex_gaussian_min_halfwidth(r) {
        return Err(invalid("halfwidth is below r·√(64/2π)"));
    }
    complex_gaussian_window(r, t, c, c - halfwidth, c + halfwidth)
}

/// The complex Gaussian state centered at `c`, restricted to the labels `lo..=hi`.
pub fn complex_gaussian_window(r: f64, t: f64, c: i64, lo: i64, hi: i64) -> Result<PureState> {
    AmplitudeSpec::ComplexGaussian { r, t }.validate()?;
    if hi < lo {
        return Err(Error::EmptySupport);
    }
    let amp = |label: i64| {
        let x = label - c;
        Complex64::from_polar(rho_s(r, x as f64), quadratic_phase(x, t))
    };
    let amps: Vec<Complex64> = (lo..=hi).map(amp).collect();
    let inside: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let mut tail = 0.0;
    for (start, dir) in [(lo - 1, -1), (hi + 1, 1)] {
        let mut label = start;
        loop {
            let v = libm::pow(rho_s(r, (label - c) as f64), 2.0);
            tail += v;
            let moving_out = (label - c) * dir >= 0;
            if moving_out && (v < 1e-300 || v < 1e-30 * inside.max(1e-300)) {
                break;
            }
            label += dir;
            if (label - c).unsigned_abs() > 1 << 40 {
                break;
            }
        }
    }
    let loss = tail / (inside + tail);
    if !(loss < 0.5) {
        return Err(invalid("window discards most of the state"));
    }
    let shape = RegisterShape::single(Register::integers(lo, hi))?;
    PureState::normalized_from(shape, amps, loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{overlap, qft};
    use crate::zq_math::rho_s;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_examples() {
        assert_eq!(AmplitudeSpec::RealGaussian { sigma: 3.0 }.eval(0), Complex64::new(1.0, 0.0));
        let cg = AmplitudeSpec::ComplexGaussian { r: 7.0, t: 5.0 };
        for e in 0..20 {
            assert!((cg.eval(e) - cg.eval(-e)).norm() < 1e-15);
        }
        let lp = AmplitudeSpec::LinearPhaseGaussian { sigma: 3.0, c: 0.7, q: 9 };
        let expected = Complex64::from_polar(rho_s(3.0, 2.0), 2.0 * PI * 0.7 * 2.0 / 9.0);
        assert!((lp.eval(2) - expected).norm() < 1e-14);
    }

    #[test]
    fn delta_gives_classical_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SecretKey::new(alloc::vec![3, -1], 8);
        let sample = gen_slwe(8, &AmplitudeSpec::delta(), &s, &mut rng).unwrap();
        let b = dot_mod(&sample.a, &s.s, 8).rem_euclid(8) as usize;
        assert!((sample.state.amplitudes()[b].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_sample_matches_folded_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = SecretKey::new(alloc::vec![1, 2], 8);
        let sample = gen_slwe(8, &AmplitudeSpec::RealGaussian { sigma: 4.0 }, &s, &mut rng).unwrap();
        let shift = dot_mod(&sample.a, &s.s, 8);
        let mut oracle = [0.0f64; 8];
        for e in -200i64..=200 {
            oracle[(e + shift).rem_euclid(8) as usize] += rho_s(4.0, e as f64);
        }
        let norm = libm::sqrt(oracle.iter().map(|v| v * v).sum::<f64>());
        for k in 0..8 {
            assert!((sample.state.amplitudes()[k].re - oracle[k] / norm).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_phase_reduces_to_plain_sample() {
        let s = SecretKey::new(alloc::vec![2], 9);
        let f = AmplitudeSpec::RealGaussian { sigma: 2.0 };
        let p = gen_slwe_phase(9, &f, &s, alloc::vec![], 0.0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let g = gen_slwe(9, &f, &s, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(p.public().state, g.state);
        assert_eq!(p.public().a, g.a);
    }

    #[test]
    fn linear_phase_peaks_at_corollary_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = 16u64;
        let c = 2.3;
        let s = SecretKey::new(alloc::vec![0], q);
        let f = AmplitudeSpec::LinearPhaseGaussian { sigma: 4.0, c, q };
        let st = qft(&gen_slwe(q, &f, &s, &mut rng).unwrap().state, 0).unwrap();
        let mut mags: Vec<(usize, f64)> =
            st.amplitudes().iter().map(|a| a.norm()).enumerate().collect();
        mags.sort_by(|a, b| b.1.total_cmp(&a.1));
        let j1 = libm::floor(-c).rem_euclid(q as f64) as usize;
        let j2 = (j1 + 1) % q as usize;
        let top: Vec<usize> = mags[..2].iter().map(|m| m.0).collect();
        assert!(top.contains(&j1) && top.contains(&j2));
    }

    #[test]
    fn dcp_qubit_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, st) = gen_dcp_qubit(4, &SecretKey::new(alloc::vec![0], 4), &mut rng).unwrap();
        assert!((st.amplitudes()[1] - st.amplitudes()[0]).norm() < 1e-15);
    }

    #[test]
    fn complex_gaussian_state_properties() {
        assert!(complex_gaussian_state(10.0, 5.0, 0, 20).is_err());
        let s = complex_gaussian_state(10.0, 5.0, 3, 40).unwrap();
        assert!(s.truncation_loss() <= 1e-12);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        let flat = complex_gaussian_state(10.0, f64::INFINITY, 0, 40).unwrap();
        assert!(flat.amplitudes().iter().all(|a| a.im == 0.0));
        let a = complex_gaussian_window(30.0, 5.0, 0, -200, 200).unwrap();
        let b = complex_gaussian_window(30.0, 5.0, 10, -200, 200).unwrap();
        let expected = rho_s(30.0 / core::f64::consts::SQRT_2, 5.0);
        let got = overlap(&a, &b).unwrap().norm();
        assert!((got / expected - 1.0).abs() < 1e-6, "{got} {expected}");
    }
}
