//! Complex-Gaussian center finding, C|LWE> construction, block recovery and
//! oblivious LWE sampling.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::amplitudes::quadratic_phase;
use crate::error::{invalid, Error, Result};
use crate::qsim::{
    apply_unitary, trace_distance_pure, PureState, Register, RegisterShape, Unitary,
    DEFAULT_DIMENSION_CAP,
};
use crate::zq_math::{
    center_mod, crt_combine, cutoff_radius, rho_s, round_half_up, sample_index, solve_mod,
    CosetGrid, DiscreteGaussianTable, GaussianParam, Modulus, ZMatrix,
};

/// Resample budget of [`oblivious_sample`].
pub const RETRY_BUDGET: usize = 16;

/// Fraction of verification entries that must match in algorithm B.
pub const VERIFY_THRESHOLD: f64 = 0.9;

fn psi_entry(x: u64, d: u64, t: u64) -> Complex64 {
    Complex64::from_polar(1.0, quadratic_phase(x as i64 - d as i64, t as f64))
}

/// The basis `|ψ_d⟩ = Σ_{x∈Z_t} e^{−πi(x−d)²/t}|x⟩/√t`, one row per `d`.
pub fn psi_basis(t: u64) -> Result<Unitary> {
    if t == 0 {
        return Err(invalid("t must be positive"));
    }
    let norm = 1.0 / libm::sqrt(t as f64);
    let rows = (0..t)
        .flat_map(|d| (0..t).map(move |x| psi_entry(x, d, t) * norm))
        .collect();
    Unitary::new(t as usize, rows)
}

/// `⟨ψ_d|v⟩` for a vector `v` over `Z_t`, with `ψ_d` normalised.
fn psi_project(d: u64, v: &[Complex64]) -> Complex64 {
    let t = v.len() as u64;
    let s: Complex64 = v
        .iter()
        .enumerate()
        .map(|(x, a)| psi_entry(x as u64, d, t).conj() * a)
        .sum();
    s / libm::sqrt(t as f64)
}

/// Exact law of the center-finding outcome `d` on a one-register state.
pub fn center_distribution(state: &PureState, t: u64) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(invalid("t must be positive"));
    }
    let [reg] = state.shape().registers() else {
        return Err(invalid("center finding needs a single register"));
    };
    let mut blocks: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let label = reg
            .integer_label(i)
            .ok_or_else(|| invalid("center finding needs integer labels"))?;
        let k = label.div_euclid(t as i64);
        let y = label.rem_euclid(t as i64) as usize;
        blocks
            .entry(k)
            .or_insert_with(|| alloc::vec![Complex64::new(0.0, 0.0); t as usize])[y] = *a;
    }
    let total: f64 = state.amplitudes().iter().map(|a| a.norm_sqr()).sum();
    let mut probs = alloc::vec![0.0; t as usize];
    for v in blocks.values() {
        for (d, p) in probs.iter_mut().enumerate() {
            *p += psi_project(d as u64, v).norm_sqr() / total;
        }
    }
    Ok(probs)
}

/// Measures the high part `⌊x/t⌋` computationally, then the low part `x mod t`
/// in the `ψ_d` basis, and returns `d`.
pub fn find_center<R: Rng + ?Sized>(state: &PureState, t: u64, rng: &mut R) -> Result<u64> {
    Ok(sample_index(&center_distribution(state, t)?, rng) as u64)
}

/// `Σ_k (Σ_{y∈Z_t} ρ_r(kt + y − c))² / (t·Σ_x ρ_r(x)²)`, summed over `|x| ≤ truncation`.
pub fn exact_center_prob(t: u64, r: f64, c: i64, truncation: i64) -> Result<f64> {
    if t == 0 || !(r > 0.0) || truncation < 0 {
        return Err(invalid("need t ≥ 1, r > 0 and a nonnegative truncation"));
    }
    let t = t as i64;
    let (lo, hi) = (c - truncation, c + truncation);
    let mut num = 0.0;
    for k in lo.div_euclid(t)..=hi.div_euclid(t) {
        let s: f64 = (0..t).map(|y| rho_s(r, (k * t + y - c) as f64)).sum();
        num += s * s;
    }
    let den: f64 = (-truncation..=truncation)
        .map(|x| libm::pow(rho_s(r, x as f64), 2.0))
        .sum();
    Ok(num / (t as f64 * den))
}

/// `1 − 8πt·ln n / r`.
pub fn center_prob_bound(t: u64, r: f64, n: usize) -> f64 {
    1.0 - 8.0 * PI * t as f64 * libm::log(n as f64) / r
}

/// `ln|⟨φ_{c₁}|φ_{c₂}⟩|` for normalised untruncated complex Gaussian states with
/// `c = c₂ − c₁`, evaluated through the dual sum.
pub fn overlap_log_magnitude(r: f64, t: u64, c: i64) -> f64 {
    let s = r / core::f64::consts::SQRT_2;
    let inv = 1.0 / s;
    let b = c as f64 / t as f64;
    let centre = libm::round(b) as i64;
    let reach = libm::ceil(cutoff_radius(inv)) as i64 + 1;
    let log_rho = |y: f64| -PI * y * y / (inv * inv);
    let peak = log_rho(centre as f64 - b);
    let mut acc = Complex64::new(0.0, 0.0);
    for y in centre - reach..=centre + reach {
        let sign = if (c * y).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        acc += sign * libm::exp(log_rho(y as f64 - b) - peak);
    }
    let den: f64 = (-reach..=reach).map(|y| libm::exp(log_rho(y as f64))).sum();
    -PI * libm::pow(c as f64 / 2.0, 2.0) / (s * s) + peak + libm::log(acc.norm()) - libm::log(den)
}

/// `ln[ρ_{r/√2}(c/2)·ρ_{√2/r}(δ)]` with `δ` the distance from `c/t` to `Z`.
pub fn overlap_log_bound(r: f64, t: u64, c: i64) -> f64 {
    let b = c as f64 / t as f64;
    let delta = (b - libm::round(b)).abs();
    -PI * libm::pow(c as f64 / 2.0, 2.0) * 2.0 / (r * r) - PI * delta * delta * r * r / 2.0
}

/// Per-coordinate error amplitude of a C|LWE> state over `Z_q`:
/// `a(x) = Σ_{x' ≡ x mod q} ρ_r(x')·e^{−πi x'²/t}`.
#[derive(Clone, Debug)]
pub struct WrappedErrorTable {
    q: u64,
    t: u64,
    lo: i64,
    amps: Vec<Complex64>,
    cdf: Vec<f64>,
}

impl WrappedErrorTable {
    pub fn new(q: u64, t: u64, r: f64) -> Result<Self> {
        if t == 0 || !q.is_multiple_of(t) || !(r > 0.0) {
            return Err(invalid("need r > 0 and t dividing q"));
        }
        let reach = libm::ceil(cutoff_radius(r)) as i64;
        let (lo, hi) = if 2 * reach + 1 >= q as i64 {
            (center_mod(q as i128 / 2 + 1, q), q as i64 / 2)
        } else {
            (-reach, reach)
        };
        let amps: Vec<Complex64> = (lo..=hi)
            .map(|x| {
                let mut acc = Complex64::new(0.0, 0.0);
                let kmax = reach / q as i64 + 1;
                for k in -kmax..=kmax {
                    let xp = x + k * q as i64;
                    if xp.abs() <= reach {
                        acc += Complex64::from_polar(rho_s(r, xp as f64), quadratic_phase(xp, t as f64));
                    }
                }
                acc
            })
            .collect();
        let mut cdf = Vec::with_capacity(amps.len());
        let mut total = 0.0;
        for a in &amps {
            total += a.norm_sqr();
            cdf.push(total);
        }
        Ok(Self {
            q,
            t,
            lo,
            amps,
            cdf,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Amplitude at error residue `x`.
    pub fn amplitude(&self, x: i64) -> Complex64 {
        let x = center_mod(x as i128, self.q);
        let i = x - self.lo;
        if i < 0 || i as usize >= self.amps.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.amps[i as usize]
        }
    }

    /// Born probabilities over the centered residues `lo..`.
    pub fn born(&self) -> (i64, Vec<f64>) {
        let total = *self.cdf.last().expect("nonempty");
        (self.lo, self.amps.iter().map(|a| a.norm_sqr() / total).collect())
    }

    /// A centered error drawn from the Born law.
    pub fn sample_error<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let total = *self.cdf.last().expect("nonempty");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&v| v <= u).min(self.amps.len() - 1);
        self.lo + i as i64
    }

    /// The coordinate state `Σ_x a(x)|c + x mod q⟩`.
    pub fn state(&self, c: i64) -> Result<PureState> {
        let q = self.q as i64;
        let amps = (0..q).map(|l| self.amplitude(l - c)).collect();
        PureState::cyclic(amps, 0.0)
    }

    fn block(&self, c: i64, k: i64) -> Vec<Complex64> {
        (0..self.t as i64)
            .map(|y| self.amplitude(k * self.t as i64 + y - c))
            .collect()
    }

    /// Center finding on the coordinate state with center `c`, given that the
    /// full label `c + x mod q` was drawn first. The high part is taken from that
    /// label; `d = c mod t` is tested before the full `ψ_d` expansion.
    pub fn find_center<R: Rng + ?Sized>(&self, c: i64, x: i64, rng: &mut R) -> u64 {
        let label = (c + x).rem_euclid(self.q as i64);
        let k = label / self.t as i64;
        let v = self.block(c, k);
        let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let d0 = c.rem_euclid(self.t as i64) as u64;
        let p0 = psi_project(d0, &v).norm_sqr() / norm;
        let u = rng.gen::<f64>();
        if u < p0 {
            return d0;
        }
        let rest: Vec<f64> = (0..self.t)
            .map(|d| {
                if d == d0 {
                    0.0
                } else {
                    psi_project(d, &v).norm_sqr()
                }
            })
            .collect();
        if rest.iter().sum::<f64>() <= 0.0 {
            return d0;
        }
        sample_index(&rest, rng) as u64
    }

    /// Exact law of [`Self::find_center`] over `d`.
    pub fn outcome_distribution(&self, c: i64) -> Vec<f64> {
        let total = *self.cdf.last().expect("nonempty");
        let mut probs = alloc::vec![0.0; self.t as usize];
        for k in 0..(self.q / self.t) as i64 {
            let v = self.block(c, k);
            for (d, p) in probs.iter_mut().enumerate() {
                *p += psi_project(d as u64, &v).norm_sqr() / total;
            }
        }
        probs
    }
}

/// One block of approximate center observations.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxObservation {
    /// `n × (m/ℓ)` over `Z_q`.
    pub a_j: ZMatrix,
    pub y_tilde: Vec<i64>,
    pub q_j: u64,
}

fn group_matrix(a: &ZMatrix, group: usize, q_j: u64) -> ZMatrix {
    let w = 2 * a.rows;
    let block = a.column_block(group * w, (group + 1) * w).transpose();
    let rows: Vec<Vec<i64>> = (0..block.rows)
        .map(|i| {
            (0..block.cols)
                .map(|j| center_mod(block.get(i, j) as i128, q_j))
                .collect()
        })
        .collect();
    ZMatrix::from_rows(&rows)
}

/// Number of `n × 2n` groups in a block.
pub fn group_count(obs: &ApproxObservation) -> usize {
    obs.a_j.cols / (2 * obs.a_j.rows)
}

/// Step 2(c): does `candidate` match at least 90% of group `group`?
pub fn verify_candidate(obs: &ApproxObservation, group: usize, candidate: &[i64]) -> bool {
    let w = 2 * obs.a_j.rows;
    let m = group_matrix(&obs.a_j, group, obs.q_j);
    let predicted = m.mul_mod(candidate, obs.q_j);
    let observed = &obs.y_tilde[group * w..(group + 1) * w];
    let matches = predicted
        .iter()
        .zip(observed)
        .filter(|(a, b)| (**a - **b).rem_euclid(obs.q_j as i64) == 0)
        .count();
    matches as f64 >= VERIFY_THRESHOLD * w as f64
}

/// Algorithm B: solve on each first-half group and verify on its partner in
/// the second half. Returns `s mod q_j` in `[0, q_j)`.
pub fn recover_block(obs: &ApproxObservation) -> Option<Vec<i64>> {
    let n = obs.a_j.rows;
    let groups = group_count(obs);
    if n == 0 || groups < 2 || obs.y_tilde.len() != obs.a_j.cols {
        return None;
    }
    let half = groups / 2;
    let w = 2 * n;
    for i in 0..half {
        let m = group_matrix(&obs.a_j, i, obs.q_j);
        let Some(candidate) = solve_mod(&m, &obs.y_tilde[i * w..(i + 1) * w], obs.q_j) else {
            continue;
        };
        if verify_candidate(obs, i + half, &candidate) {
            return Some(
                candidate
                    .iter()
                    .map(|v| v.rem_euclid(obs.q_j as i64))
                    .collect(),
            );
        }
    }
    None
}

/// C|LWE> parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClweParams {
    pub n: usize,
    pub m: usize,
    pub modulus: Modulus,
    pub r: f64,
    /// Multiplier standing in for `ω(log n)` in the sample-count condition.
    pub log_slack: f64,
    pub strict: bool,
}

impl ClweParams {
    pub fn q(&self) -> u64 {
        self.modulus.q()
    }

    pub fn factors(&self) -> &[u64] {
        self.modulus.factors().unwrap_or(&[])
    }

    pub fn ell(&self) -> usize {
        self.factors().len()
    }

    pub fn block_len(&self) -> usize {
        self.m / self.ell().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let ell = self.ell();
        if self.n == 0 || ell == 0 {
            return Err(invalid("need n ≥ 1 and a factored modulus"));
        }
        if !(self.r > 0.0) || !(self.log_slack > 0.0) {
            return Err(invalid("r and log_slack must be positive"));
        }
        if !self.m.is_multiple_of(ell) || !self.block_len().is_multiple_of(4 * self.n) {
            return Err(Error::Condition(format!(
                "m/ℓ = {}/{} must be a multiple of 4n = {}",
                self.m,
                ell,
                4 * self.n
            )));
        }
        let ln_n = libm::log(self.n as f64);
        let need = 2.0 * (ell * self.n) as f64 * self.log_slack * ln_n;
        if (self.m as f64) < need {
            return Err(Error::Condition(format!("m = {} < 2ℓn·slack·ln n = {need:.2}", self.m)));
        }
        if self.strict {
            let qmax = *self.factors().iter().max().expect("ℓ ≥ 1") as f64;
            let lower = 30.0 * self.n as f64 * ln_n * qmax;
            let upper = self.q() as f64 / libm::sqrt(self.n as f64);
            if !(self.r > lower && self.r < upper) {
                return Err(Error::Condition(format!(
                    "need q/√n = {upper:.2} > r = {} > 30n·ln n·max qᵢ = {lower:.2}",
                    self.r
                )));
            }
        }
        Ok(())
    }
}

/// How a C|LWE> state is realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClweMode {
    SampledBranch,
    CoherentTiny,
}

/// Where an [`ObliviousSample`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOrigin {
    SampledBranch,
    CoherentTiny,
    ModulusSwitch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: SampleOrigin,
    pub seed: u64,
}

/// An LWE sample `(A, b)` emitted without knowledge of its secret.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObliviousSample {
    pub n: usize,
    pub m: usize,
    pub q: u64,
    /// Row-major `n × m`.
    #[serde(rename = "A")]
    pub a: Vec<i64>,
    pub b: Vec<i64>,
    pub provenance: Provenance,
}

impl ObliviousSample {
    pub fn matrix(&self) -> ZMatrix {
        ZMatrix {
            rows: self.n,
            cols: self.m,
            data: self.a.clone(),
        }
    }
}

/// Harness-side ground truth of a sampled branch.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub s: Vec<i64>,
    pub x: Vec<i64>,
}

/// Counters from one sampled branch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    pub coordinates: usize,
    pub center_errors: usize,
    pub blocks_recovered: usize,
    pub blocks: usize,
}

/// One branch of the C|LWE> algorithm with `s` drawn explicitly.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledBranch {
    pub b: Vec<i64>,
    pub witness: Witness,
    pub recovered: Option<Vec<i64>>,
    pub diagnostics: BranchDiagnostics,
}

/// Error tables for every block of a parameter set.
pub fn block_tables(params: &ClweParams) -> Result<Vec<WrappedErrorTable>> {
    params
        .factors()
        .iter()
        .map(|&t| WrappedErrorTable::new(params.q(), t, params.r))
        .collect()
}

fn check_matrix(a: &ZMatrix, params: &ClweParams) -> Result<()> {
    if a.rows != params.n || a.cols != params.m {
        return Err(Error::ShapeMismatch);
    }
    Ok(())
}

/// Draws `s`, runs center finding on every coordinate and algorithm B on every
/// block, and recombines with the CRT.
pub fn construct_sampled_branch<R: Rng + ?Sized>(
    a: &ZMatrix,
    params: &ClweParams,
    tables: &[WrappedErrorTable],
    rng: &mut R,
) -> Result<SampledBranch> {
    check_matrix(a, params)?;
    let q = params.q();
    let s: Vec<i64> = (0..params.n)
        .map(|_| center_mod(rng.gen_range(0..q) as i128, q))
        .collect();
    let c = a.transpose_mul_mod(&s, q);
    let len = params.block_len();
    let mut x = Vec::with_capacity(params.m);
    let mut diagnostics = BranchDiagnostics {
        coordinates: params.m,
        blocks: params.ell(),
        ..Default::default()
    };
    let mut residues: Vec<Vec<(u64, u64)>> = alloc::vec![Vec::new(); params.n];
    let mut all = true;
    for (j, table) in tables.iter().enumerate() {
        let t = table.t();
        let mut y_tilde = Vec::with_capacity(len);
        for &ci in &c[j * len..(j + 1) * len] {
            let xi = table.sample_error(rng);
            let d = table.find_center(ci, xi, rng);
            if d as i64 != ci.rem_euclid(t as i64) {
                diagnostics.center_errors += 1;
            }
            x.push(xi);
            y_tilde.push(center_mod(d as i128, t));
        }
        let obs = ApproxObservation {
            a_j: a.column_block(j * len, (j + 1) * len),
            y_tilde,
            q_j: t,
        };
        match recover_block(&obs) {
            Some(sj) => {
                diagnostics.blocks_recovered += 1;
                for (i, v) in sj.into_iter().enumerate() {
                    residues[i].push((v as u64, t));
                }
            }
            None => all = false,
        }
    }
    let recovered = if all {
        Some(
            residues
                .iter()
                .map(|r| crt_combine(r).map(|(v, _)| center_mod(v as i128, q)))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let b = c
        .iter()
        .zip(&x)
        .map(|(ci, xi)| center_mod(*ci as i128 + *xi as i128, q))
        .collect();
    Ok(SampledBranch {
        b,
        witness: Witness { s, x },
        recovered,
        diagnostics,
    })
}

/// Output of the coherent construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentReport {
    pub dimension: usize,
    /// Trace distance between the output and `|0⟩⊗|φ⟩`.
    pub trace_distance: f64,
}

fn mixed_radix(mut idx: usize, q: usize, len: usize) -> Vec<usize> {
    let mut out = alloc::vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = idx % q;
        idx /= q;
    }
    out
}

/// Builds `Σ_s |s⟩ ⊗ |ψ_s⟩` as a dense state, applies the `ψ_d` transform to the
/// low part of every coordinate, subtracts algorithm B's output from the `s`
/// register, undoes the transforms and compares with `|0⟩ ⊗ |φ⟩`.
pub fn construct_coherent(a: &ZMatrix, params: &ClweParams) -> Result<CoherentReport> {
    check_matrix(a, params)?;
    let q = params.q();
    let (n, m) = (params.n, params.m);
    let qs = q as usize;
    let label_dim = qs
        .checked_pow(m as u32)
        .filter(|d| *d <= DEFAULT_DIMENSION_CAP)
        .ok_or(Error::DimensionCap {
            dim: usize::MAX,
            cap: DEFAULT_DIMENSION_CAP,
        })?;
    let s_dim = qs.pow(n as u32);
    let dim = s_dim
        .checked_mul(label_dim)
        .filter(|d| *d <= DEFAULT_DIMENSION_CAP)
        .ok_or(Error::DimensionCap {
            dim: s_dim.saturating_mul(label_dim),
            cap: DEFAULT_DIMENSION_CAP,
        })?;
    let tables = block_tables(params)?;
    let len = params.block_len();
    let table_of = |i: usize| &tables[i / len];

    let mut amps = alloc::vec![Complex64::new(0.0, 0.0); dim];
    let mut ideal = alloc::vec![Complex64::new(0.0, 0.0); label_dim];
    for si in 0..s_dim {
        let s: Vec<i64> = mixed_radix(si, qs, n).into_iter().map(|v| v as i64).collect();
        let c = a.transpose_mul_mod(&s, q);
        let mut branch = alloc::vec![Complex64::new(1.0, 0.0)];
        for (i, &ci) in c.iter().enumerate() {
            let coord: Vec<Complex64> = (0..q as i64).map(|l| table_of(i).amplitude(l - ci)).collect();
            let mut next = Vec::with_capacity(branch.len() * qs);
            for b in &branch {
                for v in &coord {
                    next.push(b * v);
                }
            }
            branch = next;
        }
        for (li, v) in branch.iter().enumerate() {
            amps[si * label_dim + li] = *v;
            ideal[li] += *v;
        }
    }
    let mut regs = alloc::vec![Register::Cyclic(q); n];
    regs.extend(core::iter::repeat_n(Register::Cyclic(q), m));
    let shape = RegisterShape::new(regs)?;
    let mut state = PureState::normalized_from(shape.clone(), amps, 0.0)?;
    let mut ideal_full = alloc::vec![Complex64::new(0.0, 0.0); dim];
    ideal_full[..label_dim].copy_from_slice(&ideal);
    let ideal = PureState::normalized_from(shape, ideal_full, 0.0)?;

    let transforms: Vec<(Unitary, Unitary)> = tables
        .iter()
        .map(|tb| low_digit_transform(q, tb.t()))
        .collect::<Result<_>>()?;
    for i in 0..m {
        state = apply_unitary(&state, n + i, &transforms[i / len].0)?;
    }

    let mut cache: BTreeMap<Vec<u64>, Option<Vec<i64>>> = BTreeMap::new();
    let mut shift = alloc::vec![0usize; label_dim];
    for (li, slot) in shift.iter_mut().enumerate() {
        let labels = mixed_radix(li, qs, m);
        let ds: Vec<u64> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| l as u64 % table_of(i).t())
            .collect();
        let sol = cache
            .entry(ds.clone())
            .or_insert_with(|| coherent_recover(a, params, &ds))
            .clone();
        if let Some(sol) = sol {
            *slot = sol.iter().fold(0usize, |acc, &v| acc * qs + v.rem_euclid(q as i64) as usize);
        }
    }
    state = state.permute_basis(|flat| {
        let (si, li) = (flat / label_dim, flat % label_dim);
        if shift[li] == 0 {
            return flat;
        }
        let s = mixed_radix(si, qs, n);
        let sub = mixed_radix(shift[li], qs, n);
        let new = s
            .iter()
            .zip(&sub)
            .fold(0usize, |acc, (x, y)| acc * qs + (x + qs - y) % qs);
        new * label_dim + li
    })?;
    for i in 0..m {
        state = apply_unitary(&state, n + i, &transforms[i / len].1)?;
    }
    Ok(CoherentReport {
        dimension: dim,
        trace_distance: trace_distance_pure(&state, &ideal)?,
    })
}

/// `|kt + y⟩ ↦ Σ_d ⟨ψ_d|y⟩ |kt + d⟩` on `Z_q` and its inverse.
fn low_digit_transform(q: u64, t: u64) -> Result<(Unitary, Unitary)> {
    let psi = psi_basis(t)?;
    let qs = q as usize;
    let ts = t as usize;
    let mut fwd = alloc::vec![Complex64::new(0.0, 0.0); qs * qs];
    for k in 0..qs / ts {
        for d in 0..ts {
            for y in 0..ts {
                fwd[(k * ts + d) * qs + k * ts + y] = psi.row(d)[y].conj();
            }
        }
    }
    let mut inv = alloc::vec![Complex64::new(0.0, 0.0); qs * qs];
    for i in 0..qs {
        for j in 0..qs {
            inv[j * qs + i] = fwd[i * qs + j].conj();
        }
    }
    Ok((Unitary::new(qs, fwd)?, Unitary::new(qs, inv)?))
}

fn coherent_recover(a: &ZMatrix, params: &ClweParams, ds: &[u64]) -> Option<Vec<i64>> {
    let len = params.block_len();
    let mut residues: Vec<Vec<(u64, u64)>> = alloc::vec![Vec::new(); params.n];
    for (j, &t) in params.factors().iter().enumerate() {
        let obs = ApproxObservation {
            a_j: a.column_block(j * len, (j + 1) * len),
            y_tilde: ds[j * len..(j + 1) * len]
                .iter()
                .map(|&d| center_mod(d as i128, t))
                .collect(),
            q_j: t,
        };
        for (i, v) in recover_block(&obs)?.into_iter().enumerate() {
            residues[i].push((v as u64, t));
        }
    }
    residues
        .iter()
        .map(|r| crt_combine(r).ok().map(|(v, _)| v as i64))
        .collect()
}

/// Result of [`construct_clwe`].
#[derive(Clone, Debug, PartialEq)]
pub enum ClweConstruction {
    Sampled(SampledBranch),
    Coherent(CoherentReport),
}

pub fn construct_clwe<R: Rng + ?Sized>(
    a: &ZMatrix,
    params: &ClweParams,
    mode: ClweMode,
    rng: &mut R,
) -> Result<ClweConstruction> {
    params.validate()?;
    match mode {
        ClweMode::SampledBranch => {
            let tables = block_tables(params)?;
            Ok(ClweConstruction::Sampled(construct_sampled_branch(a, params, &tables, rng)?))
        }
        ClweMode::CoherentTiny => Ok(ClweConstruction::Coherent(construct_coherent(a, params)?)),
    }
}

/// Oblivious LWE sampling with the block error tables built once.
#[derive(Clone, Debug)]
pub struct ObliviousSampler {
    params: ClweParams,
    tables: Vec<WrappedErrorTable>,
}

impl ObliviousSampler {
    pub fn new(params: &ClweParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params: params.clone(),
            tables: block_tables(params)?,
        })
    }

    pub fn params(&self) -> &ClweParams {
        &self.params
    }

    pub fn tables(&self) -> &[WrappedErrorTable] {
        &self.tables
    }

    /// [`ObliviousSampler::sample`] together with the harness-side witness.
    pub fn sample_with_witness(&self, a: &ZMatrix, seed: u64) -> Result<(ObliviousSample, Witness)> {
        let params = &self.params;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for _ in 0..RETRY_BUDGET {
            let branch = construct_sampled_branch(a, params, &self.tables, &mut rng)?;
            let Some(rec) = branch.recovered else { continue };
            assert_eq!(rec, branch.witness.s, "verified recovery disagrees with the branch secret");
            let sample = ObliviousSample {
                n: params.n,
                m: params.m,
                q: params.q(),
                a: a.data.clone(),
                b: branch.b,
                provenance: Provenance {
                    mode: SampleOrigin::SampledBranch,
                    seed,
                },
            };
            return Ok((sample, branch.witness));
        }
        Err(Error::Exhausted)
    }

    pub fn sample(&self, a: &ZMatrix, seed: u64) -> Result<ObliviousSample> {
        Ok(self.sample_with_witness(a, seed)?.0)
    }
}

/// [`oblivious_sample`] together with the harness-side witness.
pub fn oblivious_sample_with_witness(
    a: &ZMatrix,
    params: &ClweParams,
    seed: u64,
) -> Result<(ObliviousSample, Witness)> {
    ObliviousSampler::new(params)?.sample_with_witness(a, seed)
}

/// A witness-oblivious LWE sample `(A, Aᵀs + x mod q)`.
pub fn oblivious_sample(a: &ZMatrix, params: &ClweParams, seed: u64) -> Result<ObliviousSample> {
    Ok(oblivious_sample_with_witness(a, params, seed)?.0)
}

/// Modulus-switching parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    pub q_new: u64,
    pub alpha: f64,
    pub alpha_new: f64,
    /// Width tag of the secret.
    pub secret_width: f64,
    /// Factor standing in for `ω(log n)`.
    pub slack: f64,
}

/// Squared width contributed by rounding `A` and `b`.
pub fn rounding_drift_sq(n: usize, secret_width: f64) -> f64 {
    (n as f64 * secret_width * secret_width + 2.0 * PI) / 12.0
}

/// Checks `α′² ≥ α² + (s√n/q′)²·slack`; with `q′ = q` only `α′ ≥ α` is needed.
pub fn switch_condition(n: usize, q: u64, p: &SwitchParams) -> Result<()> {
    if p.q_new == 0 || p.q_new > q || !(p.alpha > 0.0) || !(p.alpha_new > 0.0) {
        return Err(invalid("need 0 < q′ ≤ q and positive α, α′"));
    }
    if p.q_new == q {
        return if p.alpha_new >= p.alpha {
            Ok(())
        } else {
            Err(Error::Condition(format!("α′ = {} < α = {}", p.alpha_new, p.alpha)))
        };
    }
    let rhs = p.alpha * p.alpha
        + libm::pow(p.secret_width * libm::sqrt(n as f64) / p.q_new as f64, 2.0) * p.slack;
    let lhs = p.alpha_new * p.alpha_new;
    if lhs >= rhs {
        Ok(())
    } else {
        Err(Error::Condition(format!(
            "α′² = {lhs:.3e} < α² + (s√n/q′)²·ω(log n) = {rhs:.3e}"
        )))
    }
}

/// Rounds `(A, b)` from `Z_q` to `Z_{q′}` and adds fresh discrete Gaussian noise
/// so that the total error width is `α′q′`.
pub fn modulus_switch<R: Rng + ?Sized>(
    sample: &ObliviousSample,
    p: &SwitchParams,
    rng: &mut R,
) -> Result<ObliviousSample> {
    switch_condition(sample.n, sample.q, p)?;
    let q = sample.q;
    if p.q_new == q {
        let w2 = libm::pow(p.alpha_new * q as f64, 2.0) - libm::pow(p.alpha * q as f64, 2.0);
        let noise = smoothing_noise(w2)?;
        let b = sample
            .b
            .iter()
            .map(|&v| center_mod(v as i128 + draw(&noise, rng) as i128, q))
            .collect();
        return Ok(ObliviousSample {
            b,
            provenance: Provenance {
                mode: SampleOrigin::ModulusSwitch,
                seed: sample.provenance.seed,
            },
            ..sample.clone()
        });
    }
    let ratio = p.q_new as f64 / q as f64;
    let scale = |v: i64| center_mod(round_half_up(ratio * v as f64) as i128, p.q_new);
    let qn = p.q_new as f64;
    let w2 = libm::pow(p.alpha_new * qn, 2.0) - libm::pow(p.alpha * qn, 2.0) - rounding_drift_sq(sample.n, p.secret_width);
    let noise = smoothing_noise(w2)?;
    Ok(ObliviousSample {
        n: sample.n,
        m: sample.m,
        q: p.q_new,
        a: sample.a.iter().map(|&v| scale(v)).collect(),
        b: sample
            .b
            .iter()
            .map(|&v| center_mod(scale(v) as i128 + draw(&noise, rng) as i128, p.q_new))
            .collect(),
        provenance: Provenance {
            mode: SampleOrigin::ModulusSwitch,
            seed: sample.provenance.seed,
        },
    })
}

fn smoothing_noise(w2: f64) -> Result<Option<DiscreteGaussianTable>> {
    if w2 < 0.0 {
        return Err(Error::Condition(format!(
            "rounding drift exceeds the target width (w² = {w2:.3})"
        )));
    }
    if w2 == 0.0 {
        return Ok(None);
    }
    let w = libm::sqrt(w2);
    let grid = CosetGrid::integers(libm::ceil(cutoff_radius(w)) + 2.0)?;
    Ok(Some(DiscreteGaussianTable::new(&grid, GaussianParam::new(w, 0.0)?, false)?))
}

fn draw<R: Rng + ?Sized>(noise: &Option<DiscreteGaussianTable>, rng: &mut R) -> i64 {
    noise.as_ref().map_or(0, |t| t.sample(rng) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{complex_gaussian_state, complex_gaussian_window};
    use crate::qsim::overlap;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_basis_examples() {
        let one = psi_basis(1).unwrap();
        assert!((one.row(0)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // Gram-matrix oracle for t = 2.
        let two = psi_basis(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let want = [
            [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(s, 0.0)],
        ];
        for d in 0..2 {
            for x in 0..2 {
                assert!((two.row(d)[x] - want[d][x]).norm() < 1e-15);
            }
        }
        for t in [2, 3, 5, 16, 101] {
            assert!(psi_basis(t).unwrap().orthonormality_deviation() <= 1e-12);
        }
    }

    #[test]
    fn trivial_modulus_always_finds_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = complex_gaussian_state(20.0, 1.0, 13, 80).unwrap();
        for _ in 0..10 {
            assert_eq!(find_center(&st, 1, &mut rng).unwrap(), 0);
        }
        assert!((exact_center_prob(1, 20.0, 13, 100).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_probability_matches_state_distribution() {
        let st = complex_gaussian_state(1200.0, 5.0, 13, 4000).unwrap();
        let dist = center_distribution(&st, 5).unwrap();
        let exact = exact_center_prob(5, 1200.0, 13, 4000).unwrap();
        assert!((dist[3] - exact).abs() < 1e-10, "{} {exact}", dist[3]);
        assert!(exact >= center_prob_bound(5, 1200.0, 8));
    }

    #[test]
    fn dual_overlap_matches_direct_sum() {
        for (r, t, c) in [(6.0, 5u64, 2i64), (9.0, 3, 1), (8.0, 4, 6), (12.0, 5, 7)] {
            let a = complex_gaussian_window(r, t as f64, 0, -80, 90).unwrap();
            let b = complex_gaussian_window(r, t as f64, c, -80, 90).unwrap();
            let direct = overlap(&a, &b).unwrap().norm();
            let dual = libm::exp(overlap_log_magnitude(r, t, c));
            assert!((direct - dual).abs() < 1e-12 * direct.max(1e-300) + 1e-15, "{r} {t} {c}: {direct} {dual}");
        }
    }

    #[test]
    fn wrapped_table_fast_path_matches_full_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let table = WrappedErrorTable::new(30, 5, 9.0).unwrap();
        for c in [0i64, 7, 13, 29] {
            let full = center_distribution(&table.state(c).unwrap(), 5).unwrap();
            let fast = table.outcome_distribution(c);
            for (a, b) in full.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12);
            }
            let draws = 20000;
            let mut hits = 0;
            for _ in 0..draws {
                let x = table.sample_error(&mut rng);
                if table.find_center(c, x, &mut rng) == c.rem_euclid(5) as u64 {
                    hits += 1;
                }
            }
            let p = fast[c.rem_euclid(5) as usize];
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((hits as f64 / draws as f64 - p).abs() <= 4.0 * se + 1e-9, "{c}");
        }
    }

    fn small_params() -> ClweParams {
        ClweParams {
            n: 2,
            m: 16,
            modulus: Modulus::with_factors(alloc::vec![7, 8]).unwrap(),
            r: 400.0,
            log_slack: 1.0,
            strict: false,
        }
    }

    #[test]
    fn recovery_on_exact_observations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q_j = 7;
        let a = ZMatrix::random(3, 24, 56, &mut rng);
        let s = alloc::vec![2, -3, 1];
        let y = a.transpose_mul_mod(&s, q_j);
        let obs = ApproxObservation { a_j: a, y_tilde: y, q_j };
        let got = recover_block(&obs).unwrap();
        assert_eq!(got, alloc::vec![2, 4, 1]);
    }

    #[test]
    fn sampled_branch_recovers_secret() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = small_params();
        p.validate().unwrap();
        let a = ZMatrix::random(2, 16, 56, &mut rng);
        let (sample, w) = oblivious_sample_with_witness(&a, &p, 9).unwrap();
        let c = a.transpose_mul_mod(&w.s, 56);
        for i in 0..16 {
            assert_eq!(center_mod((c[i] + w.x[i]) as i128, 56), sample.b[i]);
        }
    }

    #[test]
    fn validation_conditions() {
        let mut p = small_params();
        p.m = 12;
        assert!(matches!(p.validate(), Err(Error::Condition(_))));
        let mut p = small_params();
        p.strict = true;
        assert!(matches!(p.validate(), Err(Error::Condition(_))));
    }

    #[test]
    fn switching_identity_and_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sample = ObliviousSample {
            n: 1,
            m: 3,
            q: 101,
            a: alloc::vec![4, -7, 50],
            b: alloc::vec![1, 2, 3],
            provenance: Provenance { mode: SampleOrigin::SampledBranch, seed: 0 },
        };
        let p = SwitchParams { q_new: 101, alpha: 0.1, alpha_new: 0.1, secret_width: 1.0, slack: 1.0 };
        let out = modulus_switch(&sample, &p, &mut rng).unwrap();
        assert_eq!((out.a, out.b), (sample.a.clone(), sample.b.clone()));
        let bad = SwitchParams { q_new: 50, alpha: 0.1, alpha_new: 0.1, ..p };
        assert!(matches!(switch_condition(1, 101, &bad), Err(Error::Condition(_))));
    }
}
