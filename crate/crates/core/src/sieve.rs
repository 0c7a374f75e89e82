//! Sub-exponential S|LWE> solver: heavy-pair search, conversion to dihedral
//! coset qubits and a Kuperberg-style sieve.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{AmplitudeSpec, PhasePublic, SecretKey, SlweSample};
use crate::error::{invalid, Error, Result};
use crate::qsim::{
    apply_relabel_phase, measure, measure_in_basis, measure_out, qft, rejection_sample,
    PureState, Register, Unitary,
};
use crate::zq_math::{center_mod, dft_amplitude, dot_mod, gcd, is_prime, solve_mod, ZMatrix};

/// Threshold on `|g(j)|` used by [`solve_slwe`].
pub const DEFAULT_HEAVY_THRESHOLD: f64 = 0.05;

/// Largest odd prime modulus handled by likelihood estimation.
pub const MLE_MAX_MODULUS: u64 = 64;

/// Two DFT points of the error amplitude with large enough magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyPair {
    pub j1: u64,
    pub j2: u64,
    pub g1: Complex64,
    pub g2: Complex64,
    pub threshold: f64,
}

impl HeavyPair {
    /// Acceptance probability `M = 2·min(|g1|, |g2|)²` of the conversion.
    pub fn success_probability(&self) -> f64 {
        let m = self.g1.norm().min(self.g2.norm());
        2.0 * m * m
    }
}

/// A qubit `|0⟩ + ω_q^{⟨label, s⟩}|1⟩` together with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledQubit {
    pub label: Vec<i64>,
    pub state: PureState,
}

impl LabeledQubit {
    /// `amp(1)/amp(0)`, or `None` when the `|0⟩` amplitude vanishes.
    pub fn relative_phase(&self) -> Option<Complex64> {
        let a = self.state.amplitudes();
        (a[0].norm() > 0.0).then(|| a[1] / a[0])
    }
}

/// The normalised DFT `g` of `f` over `Z_q`, so that `Σ_j |g(j)|² = 1`.
pub fn normalized_dft(f: &AmplitudeSpec, q: u64) -> Result<Vec<Complex64>> {
    f.validate()?;
    let g = dft_amplitude(&f.table(), q)?;
    let norm = libm::sqrt(g.iter().map(|v| v.norm_sqr()).sum::<f64>());
    if !(norm > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(g.into_iter().map(|v| v / norm).collect())
}

/// Finds `j1 < j2` with `gcd(j2 − j1, q) = 1` maximising `min(|g(j1)|, |g(j2)|)`.
///
/// Aborts with [`Error::NoHeavyPair`] when no admissible pair clears `threshold`.
pub fn find_heavy_pair(f: &AmplitudeSpec, q: u64, threshold: f64) -> Result<HeavyPair> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold must be positive"));
    }
    if q < 2 {
        return Err(Error::UnsupportedModulus(q));
    }
    let g = normalized_dft(f, q)?;
    let heavy: Vec<u64> = (0..q).filter(|&j| g[j as usize].norm() >= threshold).collect();
    let mut best: Option<(f64, u64, u64)> = None;
    for (x, &j1) in heavy.iter().enumerate() {
        for &j2 in &heavy[x + 1..] {
            if gcd(j2 - j1, q) != 1 {
                continue;
            }
            let m = g[j1 as usize].norm().min(g[j2 as usize].norm());
            if best.is_none_or(|(b, _, _)| m > b) {
                best = Some((m, j1, j2));
            }
        }
    }
    let (_, j1, j2) = best.ok_or(Error::NoHeavyPair(threshold))?;
    Ok(HeavyPair {
        j1,
        j2,
        g1: g[j1 as usize],
        g2: g[j2 as usize],
        threshold,
    })
}

/// Converts one error state into a DCP qubit by QFT and rejection sampling onto
/// `{j1, j2}`. Returns `None` when rejection sampling fails.
pub fn state_to_dcp<R: Rng + ?Sized>(
    a: &[i64],
    state: &PureState,
    pair: &HeavyPair,
    q: u64,
    rng: &mut R,
) -> Result<Option<LabeledQubit>> {
    if state.shape().registers() != [Register::Cyclic(q)] {
        return Err(Error::ShapeMismatch);
    }
    let fourier = qft(state, 0)?;
    let m = pair.g1.norm().min(pair.g2.norm());
    let mut gamma = alloc::vec![0.0; q as usize];
    gamma[pair.j1 as usize] = (m / pair.g1.norm()).min(1.0);
    gamma[pair.j2 as usize] = (m / pair.g2.norm()).min(1.0);
    let Some(kept) = rejection_sample(&fourier, 0, &gamma, rng)?.state else {
        return Ok(None);
    };
    let u1 = pair.g1.conj() / pair.g1.norm();
    let u2 = pair.g2.conj() / pair.g2.norm();
    let (j1, j2) = (pair.j1 as usize, pair.j2 as usize);
    let qubit = apply_relabel_phase(&kept, 0, Register::Cyclic(2), |j| {
        if j == j1 {
            Some((0, u1))
        } else if j == j2 {
            Some((1, u2))
        } else {
            None
        }
    })?;
    let d = (pair.j2 as i128 - pair.j1 as i128) as i64;
    let label = a
        .iter()
        .map(|&x| center_mod(d as i128 * x as i128, q))
        .collect();
    Ok(Some(LabeledQubit {
        label,
        state: qubit,
    }))
}

/// [`state_to_dcp`] on an S|LWE> sample.
pub fn slwe_to_dcp<R: Rng + ?Sized>(
    sample: &SlweSample,
    pair: &HeavyPair,
    q: u64,
    rng: &mut R,
) -> Result<Option<LabeledQubit>> {
    state_to_dcp(&sample.a, &sample.state, pair, q, rng)
}

fn combine_labels(x: &[i64], y: &[i64], q: u64, sign: i64) -> Vec<i64> {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| center_mod(a as i128 + sign as i128 * b as i128, q))
        .collect()
}

/// CNOT from `x` onto `y`, then measures `y`: outcome 0 leaves label
/// `x + y`, outcome 1 leaves `x − y`. Both inputs are consumed.
pub fn sieve_combine<R: Rng + ?Sized>(
    x: LabeledQubit,
    y: LabeledQubit,
    q: u64,
    rng: &mut R,
) -> Result<LabeledQubit> {
    if x.label.len() != y.label.len() {
        return Err(Error::ShapeMismatch);
    }
    let joint = x.state.tensor(&y.state)?;
    let cnot = joint.permute_basis(|i| {
        let (b1, b2) = (i >> 1, i & 1);
        (b1 << 1) | (b2 ^ b1)
    })?;
    let (outcome, state) = measure_out(&cnot, 1, rng)?;
    let sign = if outcome == 0 { 1 } else { -1 };
    Ok(LabeledQubit {
        label: combine_labels(&x.label, &y.label, q, sign),
        state,
    })
}

fn power_of_two_exponent(q: u64) -> Option<u32> {
    (q >= 2 && q.is_power_of_two()).then(|| q.trailing_zeros())
}

fn sieve_levels(n: usize, k: u32, stage: u32) -> u32 {
    let r = k - stage;
    (n as u32 - 1) * r + r - 1
}

/// Qubits per (stage, coordinate) pool needed for `levels` digit eliminations.
fn pool_budget(levels: u32) -> usize {
    libm::ceil(16.0 * libm::pow(4.0 / 3.0, levels as f64)) as usize
}

/// Minimum number of DCP qubits accepted by [`kuperberg_solve`].
pub fn budget(n: usize, q: u64) -> Result<usize> {
    if n == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if let Some(k) = power_of_two_exponent(q) {
        Ok((0..k)
            .map(|st| n * pool_budget(sieve_levels(n, k, st)))
            .sum())
    } else if q > 2 && q <= MLE_MAX_MODULUS && is_prime(q) {
        Ok(n * 64 * q as usize * 3usize.pow(n as u32 - 1))
    } else {
        Err(Error::UnsupportedModulus(q))
    }
}

/// Outcome for one recovered digit of the secret.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitRecord {
    pub stage: u32,
    pub coordinate: usize,
    pub value: i64,
    /// Number of digit-elimination rounds applied to the voting qubits.
    pub rounds: u32,
    pub votes: usize,
    /// Votes for digit 1 (power-of-two mode) or for `value` (likelihood mode).
    pub ones: usize,
    /// Votes split by the combine depth of the measured qubit.
    pub by_depth: Vec<DepthTally>,
}

/// Votes cast by qubits of one combine depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthTally {
    pub depth: u32,
    pub votes: usize,
    pub ones: usize,
}

fn tally(records: &[(u32, bool)]) -> Vec<DepthTally> {
    let mut out: Vec<DepthTally> = Vec::new();
    for &(depth, one) in records {
        let pos = match out.binary_search_by_key(&depth, |t| t.depth) {
            Ok(p) => p,
            Err(p) => {
                out.insert(p, DepthTally { depth, votes: 0, ones: 0 });
                p
            }
        };
        out[pos].votes += 1;
        out[pos].ones += usize::from(one);
    }
    out
}

/// A pool entry: a qubit and the depth of its combine tree.
struct Tracked {
    qubit: LabeledQubit,
    depth: u32,
}

/// A recovered secret with per-digit diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub secret: SecretKey,
    pub bits: Vec<BitRecord>,
}

/// Recovers the secret from DCP qubits.
pub fn kuperberg_solve<R: Rng + ?Sized>(
    qubits: Vec<LabeledQubit>,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SecretKey> {
    Ok(kuperberg_solve_report(qubits, q, n, rng)?.secret)
}

/// [`kuperberg_solve`] returning per-digit records.
pub fn kuperberg_solve_report<R: Rng + ?Sized>(
    qubits: Vec<LabeledQubit>,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SolveReport> {
    let need = budget(n, q)?;
    if qubits.len() < need {
        return Err(Error::InsufficientQubits {
            have: qubits.len(),
            need,
        });
    }
    if qubits.iter().any(|x| x.label.len() != n) {
        return Err(Error::ShapeMismatch);
    }
    match power_of_two_exponent(q) {
        Some(k) => sieve_power_of_two(qubits, q, k, n, rng),
        None => sieve_prime(qubits, q, n, rng),
    }
}

fn split_pools(mut qubits: Vec<LabeledQubit>, weights: &[f64]) -> Vec<Vec<LabeledQubit>> {
    let total: f64 = weights.iter().sum();
    let n = qubits.len();
    let mut sizes: Vec<usize> = weights
        .iter()
        .map(|w| libm::floor(n as f64 * w / total) as usize)
        .collect();
    let mut spare = n - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut() {
        if spare == 0 {
            break;
        }
        *s += 1;
        spare -= 1;
    }
    let mut pools = Vec::with_capacity(sizes.len());
    for s in sizes {
        let rest = qubits.split_off(s);
        pools.push(core::mem::replace(&mut qubits, rest));
    }
    pools
}

fn bit_of(v: i64, q: u64, b: u32) -> bool {
    (v.rem_euclid(q as i64) >> b) & 1 == 1
}

/// Zeroes one digit of one coordinate by pairing qubits whose digit is 1.
fn combine_tracked<R: Rng + ?Sized>(x: Tracked, y: Tracked, q: u64, rng: &mut R) -> Result<Tracked> {
    Ok(Tracked {
        depth: x.depth.max(y.depth) + 1,
        qubit: sieve_combine(x.qubit, y.qubit, q, rng)?,
    })
}

fn eliminate_digit<R: Rng + ?Sized>(
    pool: Vec<Tracked>,
    coord: usize,
    bit: u32,
    q: u64,
    rng: &mut R,
) -> Result<Vec<Tracked>> {
    let mut out = Vec::with_capacity(pool.len());
    let mut waiting: Option<Tracked> = None;
    for x in pool {
        if !bit_of(x.qubit.label[coord], q, bit) {
            out.push(x);
        } else if let Some(y) = waiting.take() {
            let z = combine_tracked(y, x, q, rng)?;
            debug_assert!(!bit_of(z.qubit.label[coord], q, bit));
            out.push(z);
        } else {
            waiting = Some(x);
        }
    }
    Ok(out)
}

fn correct_phase(x: LabeledQubit, low: &[i64], q: u64) -> Result<LabeledQubit> {
    let t = dot_mod(&x.label, low, q) as f64 / q as f64;
    let ph = Complex64::from_polar(1.0, -2.0 * PI * t);
    let state = x.state.apply_phase(|i| if i == 1 { ph } else { Complex64::new(1.0, 0.0) })?;
    Ok(LabeledQubit { label: x.label, state })
}

fn sieve_power_of_two<R: Rng + ?Sized>(
    qubits: Vec<LabeledQubit>,
    q: u64,
    k: u32,
    n: usize,
    rng: &mut R,
) -> Result<SolveReport> {
    let weights: Vec<f64> = (0..k)
        .flat_map(|st| (0..n).map(move |_| pool_budget(sieve_levels(n, k, st)) as f64))
        .collect();
    let mut pools = split_pools(qubits, &weights).into_iter();
    let mut low = alloc::vec![0i64; n];
    let mut bits = Vec::new();
    let hadamard = Unitary::rotated_hadamard(0.0);
    for st in 0..k {
        let modulus = q >> st;
        let top = k - st - 1;
        let mut found = alloc::vec![0i64; n];
        for i in 0..n {
            let mut pool = pools
                .next()
                .expect("one pool per stage and coordinate")
                .into_iter()
                .map(|x| {
                    Ok(Tracked {
                        qubit: correct_phase(x, &low, q)?,
                        depth: 0,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let digits = (0..n)
                .filter(|&j| j != i)
                .flat_map(|j| (0..=top).map(move |b| (j, b)))
                .chain((0..top).map(|b| (i, b)));
            let mut rounds = 0;
            for (j, b) in digits {
                pool = eliminate_digit(pool, j, b, modulus, rng)?;
                rounds += 1;
            }
            let mut cast = Vec::new();
            for x in pool {
                if x.qubit.label[i].rem_euclid(modulus as i64) != (modulus / 2) as i64 {
                    continue;
                }
                let (outcome, _) = measure_in_basis(&x.qubit.state, 0, &hadamard, rng)?;
                cast.push((x.depth, outcome == 1));
            }
            let votes = cast.len();
            let ones = cast.iter().filter(|c| c.1).count();
            if votes == 0 {
                return Err(Error::SieveExhausted {
                    stage: st as usize,
                    coordinate: i,
                });
            }
            let value = i64::from(2 * ones > votes);
            found[i] = value;
            bits.push(BitRecord {
                stage: st,
                coordinate: i,
                value,
                rounds,
                votes,
                ones,
                by_depth: tally(&cast),
            });
        }
        for i in 0..n {
            low[i] += found[i] << st;
        }
    }
    Ok(SolveReport {
        secret: SecretKey::new(low, q),
        bits,
    })
}

/// Zeroes coordinate `coord` by pairing labels with equal or opposite entries;
/// nonzero results re-enter the pool.
fn eliminate_coordinate<R: Rng + ?Sized>(
    pool: Vec<Tracked>,
    coord: usize,
    q: u64,
    rng: &mut R,
) -> Result<(Vec<Tracked>, u32)> {
    let mut done = Vec::new();
    let mut buckets: Vec<Vec<Tracked>> = (0..=q / 2).map(|_| Vec::new()).collect();
    let mut queue = pool;
    let mut rounds = 0;
    while !queue.is_empty() {
        rounds += 1;
        for x in queue.drain(..) {
            let v = x.qubit.label[coord].unsigned_abs() as usize;
            if v == 0 {
                done.push(x);
            } else {
                buckets[v].push(x);
            }
        }
        for b in buckets.iter_mut() {
            while b.len() >= 2 {
                let y = b.pop().expect("len checked");
                let x = b.pop().expect("len checked");
                queue.push(combine_tracked(x, y, q, rng)?);
            }
        }
    }
    Ok((done, rounds - 1))
}

fn sieve_prime<R: Rng + ?Sized>(
    qubits: Vec<LabeledQubit>,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SolveReport> {
    let pools = split_pools(qubits, &alloc::vec![1.0; n]);
    let bases = [
        Unitary::rotated_hadamard(0.0),
        Unitary::rotated_hadamard(PI / 2.0),
    ];
    let mut secret = alloc::vec![0i64; n];
    let mut bits = Vec::new();
    for (i, pool) in pools.into_iter().enumerate() {
        let mut pool: Vec<Tracked> = pool
            .into_iter()
            .map(|qubit| Tracked { qubit, depth: 0 })
            .collect();
        let mut rounds = 0;
        for j in (0..n).filter(|&j| j != i) {
            let (kept, r) = eliminate_coordinate(pool, j, q, rng)?;
            pool = kept;
            rounds += r;
        }
        let mut loglik = alloc::vec![0.0f64; q as usize];
        let mut votes = 0;
        let mut outcomes = Vec::new();
        for (m, x) in pool.into_iter().filter(|x| x.qubit.label[i] != 0).enumerate() {
            let phi = if m % 2 == 0 { 0.0 } else { PI / 2.0 };
            let (outcome, _) = measure_in_basis(&x.qubit.state, 0, &bases[m % 2], rng)?;
            let label = x.qubit.label[i].rem_euclid(q as i64) as u64;
            outcomes.push((label, phi, outcome, x.depth));
            for (t, ll) in loglik.iter_mut().enumerate() {
                let theta = 2.0 * PI * ((label * t as u64) % q) as f64 / q as f64;
                let p0 = 0.5 * (1.0 + libm::cos(theta - phi));
                let p = if outcome == 0 { p0 } else { 1.0 - p0 };
                *ll += libm::log(p.max(1e-12));
            }
            votes += 1;
        }
        if votes == 0 {
            return Err(Error::SieveExhausted {
                stage: 0,
                coordinate: i,
            });
        }
        let best = (0..q as usize)
            .max_by(|&a, &b| loglik[a].total_cmp(&loglik[b]).then(b.cmp(&a)))
            .expect("q ≥ 3");
        secret[i] = best as i64;
        let cast: Vec<(u32, bool)> = outcomes
            .iter()
            .map(|&(label, phi, outcome, depth)| {
                let theta = 2.0 * PI * ((label * best as u64) % q) as f64 / q as f64;
                (depth, (libm::cos(theta - phi) >= 0.0) == (outcome == 0))
            })
            .collect();
        let ones = cast.iter().filter(|c| c.1).count();
        bits.push(BitRecord {
            stage: 0,
            coordinate: i,
            value: best as i64,
            rounds,
            votes,
            ones,
            by_depth: tally(&cast),
        });
    }
    Ok(SolveReport {
        secret: SecretKey::new(secret, q),
        bits,
    })
}

/// Converts error states to DCP qubits, dropping rejected ones.
pub fn convert_states<'a, R: Rng + ?Sized>(
    states: impl IntoIterator<Item = (&'a [i64], &'a PureState)>,
    pair: &HeavyPair,
    q: u64,
    rng: &mut R,
) -> Result<Vec<LabeledQubit>> {
    let mut out = Vec::new();
    for (a, st) in states {
        if let Some(x) = state_to_dcp(a, st, pair, q, rng)? {
            out.push(x);
        }
    }
    Ok(out)
}

fn solve_classical<R: Rng + ?Sized>(
    samples: &[SlweSample],
    offset: i64,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SecretKey> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in samples {
        let (b, _) = measure(&s.state, 0, rng)?;
        rows.push(s.a.clone());
        rhs.push(center_mod(b as i128 - offset as i128, q));
        if rows.len() >= n {
            let m = ZMatrix::from_rows(&rows);
            if let Some(sol) = solve_mod(&m, &rhs, q) {
                return Ok(SecretKey::new(sol, q));
            }
        }
    }
    Err(Error::RecoveryFailed(samples.len()))
}

/// Finds the secret of i.i.d. S|LWE> samples with error amplitude `spec`.
pub fn solve_slwe<R: Rng + ?Sized>(
    samples: &[SlweSample],
    spec: &AmplitudeSpec,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SecretKey> {
    Ok(solve_slwe_report(samples, spec, q, n, rng)?.secret)
}

/// [`solve_slwe`] with per-digit records; empty for the classical fast path.
pub fn solve_slwe_report<R: Rng + ?Sized>(
    samples: &[SlweSample],
    spec: &AmplitudeSpec,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SolveReport> {
    if let Some(offset) = spec.point_mass() {
        return Ok(SolveReport {
            secret: solve_classical(samples, offset, q, n, rng)?,
            bits: Vec::new(),
        });
    }
    let pair = find_heavy_pair(spec, q, DEFAULT_HEAVY_THRESHOLD)?;
    let qubits = convert_states(
        samples.iter().map(|s| (s.a.as_slice(), &s.state)),
        &pair,
        q,
        rng,
    )?;
    kuperberg_solve_report(qubits, q, n, rng)
}

/// Runs the S|LWE> pipeline for amplitude `spec` on phase samples whose phase
/// the solver does not know.
pub fn solve_phase_public_report<R: Rng + ?Sized>(
    samples: &[PhasePublic],
    spec: &AmplitudeSpec,
    q: u64,
    n: usize,
    rng: &mut R,
) -> Result<SolveReport> {
    let pair = find_heavy_pair(spec, q, DEFAULT_HEAVY_THRESHOLD)?;
    let qubits = convert_states(
        samples.iter().map(|s| (s.a.as_slice(), &s.state)),
        &pair,
        q,
        rng,
    )?;
    kuperberg_solve_report(qubits, q, n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{gen_dcp_qubit, gen_slwe};
    use crate::zq_math::rho_s;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dcp_pool(q: u64, s: &SecretKey, count: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledQubit> {
        (0..count)
            .map(|_| {
                let (label, state) = gen_dcp_qubit(q, s, rng).unwrap();
                LabeledQubit { label, state }
            })
            .collect()
    }

    #[test]
    fn flat_amplitude_aborts() {
        let f = AmplitudeSpec::BoundedUniform { b: 3.0 };
        assert_eq!(find_heavy_pair(&f, 7, 0.05), Err(Error::NoHeavyPair(0.05)));
    }

    #[test]
    fn gaussian_pair_is_adjacent_to_zero() {
        let pair = find_heavy_pair(&AmplitudeSpec::RealGaussian { sigma: 4.0 }, 8, 0.05).unwrap();
        assert_eq!((pair.j1, pair.j2), (0, 1));
        // Oracle: direct periodised sum of ρ_4 and its 8-point DFT.
        let mut folded = [0.0f64; 8];
        for e in -100i64..=100 {
            folded[e.rem_euclid(8) as usize] += rho_s(4.0, e as f64);
        }
        let dft: Vec<f64> = (0..8)
            .map(|j| {
                (0..8)
                    .map(|k| folded[k] * libm::cos(2.0 * PI * (j * k) as f64 / 8.0))
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = dft.iter().map(|v| v * v).sum();
        assert!((pair.g1.re - dft[0] / total.sqrt()).abs() < 1e-12);
        assert!((pair.g2.re - dft[1] / total.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_phase_pair_follows_floor_of_minus_c() {
        for &c in &[2.3, -1.6, 0.4, 5.5] {
            let q = 16;
            let f = AmplitudeSpec::LinearPhaseGaussian { sigma: 4.0, c, q };
            let pair = find_heavy_pair(&f, q, 0.05).unwrap();
            let j1 = libm::floor(-c).rem_euclid(q as f64) as u64;
            let mut want = [j1, (j1 + 1) % q];
            want.sort();
            assert_eq!([pair.j1, pair.j2], want, "c = {c}");
        }
    }

    #[test]
    fn conversion_example_q8() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = AmplitudeSpec::RealGaussian { sigma: 4.0 };
        let pair = find_heavy_pair(&f, 8, 0.05).unwrap();
        let state = PureState::cyclic(
            crate::zq_math::fold_table(&f.table(), 8, 3),
            0.0,
        )
        .unwrap();
        let mut got = None;
        for _ in 0..100 {
            if let Some(x) = state_to_dcp(&[1], &state, &pair, 8, &mut rng).unwrap() {
                got = Some(x);
                break;
            }
        }
        let x = got.unwrap();
        assert_eq!(x.label, alloc::vec![1]);
        let want = Complex64::from_polar(1.0, 2.0 * PI * 3.0 / 8.0);
        assert!((x.relative_phase().unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn converted_phase_matches_secret() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = 8;
        let s = SecretKey::new(alloc::vec![5, -2], q);
        let f = AmplitudeSpec::RealGaussian { sigma: 4.0 };
        let pair = find_heavy_pair(&f, q, 0.05).unwrap();
        let mut seen = 0;
        for _ in 0..200 {
            let sample = gen_slwe(q, &f, &s, &mut rng).unwrap();
            if let Some(x) = slwe_to_dcp(&sample, &pair, q, &mut rng).unwrap() {
                let want = Complex64::from_polar(
                    1.0,
                    2.0 * PI * dot_mod(&x.label, &s.s, q) as f64 / q as f64,
                );
                assert!((x.relative_phase().unwrap() - want).norm() < 1e-12);
                assert!((x.state.amplitudes()[0].norm() - x.state.amplitudes()[1].norm()).abs() < 1e-12);
                seen += 1;
            }
        }
        assert!(seen > 20);
    }

    #[test]
    fn combine_identical_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q = 8;
        let s = SecretKey::new(alloc::vec![3], q);
        let mk = |label: i64| {
            let t = dot_mod(&[label], &s.s, q) as f64 / q as f64;
            LabeledQubit {
                label: alloc::vec![label],
                state: PureState::cyclic(
                    alloc::vec![Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, 2.0 * PI * t)],
                    0.0,
                )
                .unwrap(),
            }
        };
        let (mut zero, mut double) = (0, 0);
        for _ in 0..2000 {
            let z = sieve_combine(mk(3), mk(3), q, &mut rng).unwrap();
            let want = Complex64::from_polar(
                1.0,
                2.0 * PI * dot_mod(&z.label, &s.s, q) as f64 / q as f64,
            );
            assert!((z.relative_phase().unwrap() - want).norm() < 1e-12);
            match z.label[0] {
                0 => zero += 1,
                -2 => double += 1,
                other => panic!("label {other}"),
            }
        }
        assert!((zero as f64 - 1000.0).abs() < 3.0 * 22.37, "{zero}");
        assert_eq!(zero + double, 2000);
    }

    #[test]
    fn budget_and_insufficient_qubits() {
        assert_eq!(budget(1, 2).unwrap(), 16);
        assert!(budget(2, 8).unwrap() <= 4096);
        assert_eq!(budget(2, 12), Err(Error::UnsupportedModulus(12)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SecretKey::new(alloc::vec![1], 2);
        let pool = dcp_pool(2, &s, 3, &mut rng);
        assert_eq!(
            kuperberg_solve(pool, 2, 1, &mut rng),
            Err(Error::InsufficientQubits { have: 3, need: 16 })
        );
    }

    #[test]
    fn single_bit_secret() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for bit in 0..2 {
            let s = SecretKey::new(alloc::vec![bit], 2);
            let pool = dcp_pool(2, &s, 16, &mut rng);
            assert_eq!(kuperberg_solve(pool, 2, 1, &mut rng).unwrap(), s);
        }
    }

    #[test]
    fn sieve_recovers_power_of_two_secrets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = 8;
        for _ in 0..10 {
            let s = SecretKey::random(2, q, &mut rng);
            let pool = dcp_pool(q, &s, 4096, &mut rng);
            assert_eq!(kuperberg_solve(pool, q, 2, &mut rng).unwrap(), s);
        }
        let zero = SecretKey::new(alloc::vec![0, 0, 0], 16);
        let need = budget(3, 16).unwrap();
        let pool = dcp_pool(16, &zero, need, &mut rng);
        assert_eq!(kuperberg_solve(pool, 16, 3, &mut rng).unwrap(), zero);
    }

    #[test]
    fn likelihood_fallback_recovers_prime_secrets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &q in &[5u64, 7] {
            for _ in 0..5 {
                let s = SecretKey::random(2, q, &mut rng);
                let pool = dcp_pool(q, &s, budget(2, q).unwrap(), &mut rng);
                assert_eq!(kuperberg_solve(pool, q, 2, &mut rng).unwrap(), s);
            }
        }
    }

    #[test]
    fn classical_fast_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = 97;
        let s = SecretKey::random(3, q, &mut rng);
        let samples: Vec<SlweSample> = (0..10)
            .map(|_| gen_slwe(q, &AmplitudeSpec::delta(), &s, &mut rng).unwrap())
            .collect();
        assert_eq!(solve_slwe(&samples, &AmplitudeSpec::delta(), q, 3, &mut rng).unwrap(), s);
    }
}
