//! Classical LWE to extrapolated DCP states, and EDCP states to S|LWE>^phase.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{PhaseHidden, PhasePublic, SlwePhaseSample};
use crate::error::{invalid, Error, Result};
use crate::qsim::{measure_out, qft, PureState, Register, RegisterShape};
use crate::zq_math::{
    center_mod, cutoff_radius, lambda1_inf_check, lambda1_l2, rho_s, sample_index, CosetGrid,
    DiscreteGaussianTable, GaussianParam, ZMatrix, LAMBDA1_ENUMERATION_CAP,
};

/// Largest number of offsets enumerated in the truncation ball.
pub const BALL_CAP: usize = 1 << 22;

/// Parameters of the LWE → EDCP reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdcpParams {
    pub n: usize,
    pub m: usize,
    pub q: u64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub alpha_floor: f64,
    #[serde(default)]
    pub strict: bool,
}

impl EdcpParams {
    pub fn beta_q(&self) -> f64 {
        self.beta * self.q as f64
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.n == 0 || self.m == 0 || self.q < 2 {
            return Err(invalid("n, m must be positive and q at least 2"));
        }
        if !(pos(self.alpha) && pos(self.beta) && pos(self.gamma)) {
            return Err(invalid("alpha, beta, gamma must be positive"));
        }
        if self.alpha < self.alpha_floor {
            return Err(Error::Condition(format!(
                "alpha {} below the floor {}",
                self.alpha, self.alpha_floor
            )));
        }
        if !self.strict {
            return Ok(());
        }
        let m = self.m as f64;
        if m < self.n as f64 * libm::log2(self.q as f64) {
            return Err(Error::Condition(format!("m = {} below n·log2 q", self.m)));
        }
        if self.alpha * self.gamma * libm::sqrt(m) >= self.beta {
            return Err(Error::Condition("alpha·gamma·√m must be below beta".into()));
        }
        let bq = self.beta_q();
        if bq <= 1.0 || self.beta >= 1.0 / (16.0 * libm::sqrt(m * libm::log(bq))) {
            return Err(Error::Condition("beta must be below 1/(16√(m ln βq))".into()));
        }
        Ok(())
    }

    fn denominator(&self, e_norm_sq: f64) -> f64 {
        let bq = self.beta_q();
        self.alpha * self.alpha * e_norm_sq + bq * bq
    }
}

fn norm_sq(v: &[i64]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum()
}

fn dot(a: &[i64], b: &[i64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// `(σ, c)` with `σ = αβq/√(α²‖e‖² + β²q²)` and `c = −α²⟨x,e⟩/(α²‖e‖² + β²q²)`.
pub fn edcp_sigma_c(params: &EdcpParams, e: &[i64], x: &[i64]) -> (f64, f64) {
    let den = params.denominator(norm_sq(e));
    let sigma = params.alpha * params.beta_q() / libm::sqrt(den);
    let c = -params.alpha * params.alpha * dot(x, e) / den;
    (sigma, c)
}

/// `(step, σ_c)` of the approximate law `D_{step·Z, σ_c}` of the center `c`.
pub fn center_distribution_params(params: &EdcpParams, e: &[i64]) -> (f64, f64) {
    let e2 = norm_sq(e);
    let den = params.denominator(e2);
    let a2 = params.alpha * params.alpha;
    (a2 / den, a2 * libm::sqrt(e2) / libm::sqrt(2.0 * den))
}

/// Sampler for `c ~ D_{step·Z, σ_c}`.
#[derive(Clone, Debug)]
pub struct CenterLaw {
    step: f64,
    sigma_c: f64,
    table: Option<DiscreteGaussianTable>,
}

impl CenterLaw {
    pub fn new(params: &EdcpParams, e: &[i64]) -> Result<Self> {
        let (step, sigma_c) = center_distribution_params(params, e);
        let table = if sigma_c > 0.0 {
            let w = sigma_c / step;
            let grid = CosetGrid::integers(cutoff_radius(w) + 2.0)?;
            Some(DiscreteGaussianTable::new(&grid, GaussianParam::new(w, 0.0)?, false)?)
        } else {
            None
        };
        Ok(Self {
            step,
            sigma_c,
            table,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.table {
            Some(t) => self.step * t.sample(rng),
            None => 0.0,
        }
    }
}

/// Per-run values the reduction does not learn.
#[derive(Clone, Debug, PartialEq)]
pub struct EdcpHidden {
    pub v: Vec<i64>,
    pub x: Vec<i64>,
    pub sigma: f64,
    pub c: f64,
}

/// `y` and the residual state `Σ_j ρ_σ(j−c)|j⟩|v + js⟩` over `Z_q × Z_q^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdcpSample {
    pub y: Vec<i64>,
    pub state: PureState,
    hidden: EdcpHidden,
}

impl EdcpSample {
    pub fn hidden(&self) -> &EdcpHidden {
        &self.hidden
    }

    /// Centered `j` of every basis index of register 0.
    pub fn j_labels(&self) -> Vec<i64> {
        let q = self.state.shape().registers()[0].size() as u64;
        (0..q).map(|j| center_mod(j as i128, q)).collect()
    }

    /// Squared-amplitude mass on each `j`, indexed as register 0.
    pub fn j_marginal(&self) -> Result<Vec<f64>> {
        self.state.marginal(0)
    }
}

fn for_each_vector(n: usize, q: u64, mut f: impl FnMut(&[i64])) {
    let mut v = alloc::vec![0i64; n];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            v[i] += 1;
            if (v[i] as u64) < q {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

fn enumeration_guard(n: usize, q: u64) -> Result<()> {
    let total = (q as u128).saturating_pow(n as u32);
    if total > LAMBDA1_ENUMERATION_CAP {
        return Err(Error::EnumerationCap(total));
    }
    Ok(())
}

/// The closest point of `L_q(A)` to `b`, as `(s, e)` with `b = Aᵀs + e mod q`.
pub fn decode_lwe(a: &ZMatrix, b: &[i64], q: u64) -> Result<(Vec<i64>, Vec<i64>)> {
    enumeration_guard(a.rows, q)?;
    let mut best: Option<(f64, Vec<i64>, Vec<i64>)> = None;
    for_each_vector(a.rows, q, |s| {
        let as_ = a.transpose_mul_mod(s, q);
        let e: Vec<i64> = b
            .iter()
            .zip(&as_)
            .map(|(&bi, &ai)| center_mod(bi as i128 - ai as i128, q))
            .collect();
        let d = norm_sq(&e);
        if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
            let s = s.iter().map(|&v| center_mod(v as i128, q)).collect();
            best = Some((d, s, e));
        }
    });
    let (_, s, e) = best.ok_or(Error::EmptySupport)?;
    Ok((s, e))
}

/// Whether `Aᵀs ≡ 0 mod q` forces `s = 0`.
pub fn kernel_trivial(a: &ZMatrix, q: u64) -> Result<bool> {
    enumeration_guard(a.rows, q)?;
    let mut zeros = 0usize;
    for_each_vector(a.rows, q, |s| {
        if a.transpose_mul_mod(s, q).iter().all(|&v| v == 0) {
            zeros += 1;
        }
    });
    Ok(zeros == 1)
}

fn ball_points(m: usize, radius: f64) -> Result<Vec<Vec<i64>>> {
    let k = libm::ceil(radius) as i64;
    let side = (2 * k + 1) as u128;
    if side.saturating_pow(m as u32) > BALL_CAP as u128 {
        return Err(Error::DimensionCap {
            dim: usize::MAX,
            cap: BALL_CAP,
        });
    }
    let mut out = Vec::new();
    let mut x = alloc::vec![-k; m];
    loop {
        if norm_sq(&x) < radius * radius {
            out.push(x.clone());
        }
        let mut i = 0;
        loop {
            if i == m {
                return Ok(out);
            }
            x[i] += 1;
            if x[i] <= k {
                break;
            }
            x[i] = -k;
            i += 1;
        }
    }
}

/// The reduction from one LWE instance `(A, b)` to EDCP states.
///
/// The simulator tabulates the post-measurement state in closed form. It decodes
/// `(s, e)` by enumeration to do so; nothing decoded is exposed except through
/// [`EdcpSample::hidden`].
#[derive(Clone, Debug)]
pub struct EdcpSampler {
    params: EdcpParams,
    a: ZMatrix,
    s: Vec<i64>,
    e: Vec<i64>,
    lambda1: f64,
    regime_ok: bool,
    ball: Vec<Vec<i64>>,
    weights: Vec<f64>,
}

impl EdcpSampler {
    pub fn new(a: &ZMatrix, b: &[i64], params: &EdcpParams) -> Result<Self> {
        params.validate()?;
        if a.rows != params.n || a.cols != params.m || b.len() != params.m {
            return Err(Error::ShapeMismatch);
        }
        let q = params.q;
        let (s, e) = decode_lwe(a, b, q)?;
        if !kernel_trivial(a, q)? {
            return Err(Error::Condition("Aᵀ has a nontrivial kernel mod q".into()));
        }
        let lambda1 = lambda1_l2(a, q)?;
        let radius = lambda1 / 2.0;
        let regime_ok = lambda1_inf_check(a, q)? && libm::sqrt(norm_sq(&e)) < radius;
        let ball = ball_points(params.m, radius)?;
        let js = centered_range(q);
        let (alpha, bq) = (params.alpha, params.beta_q());
        let weights: Vec<f64> = ball
            .iter()
            .map(|x| {
                js.iter()
                    .map(|&j| {
                        let shifted: Vec<f64> =
                            x.iter().zip(&e).map(|(&xi, &ei)| (xi + j * ei) as f64).collect();
                        let amp = rho_s(alpha, j as f64)
                            * libm::exp(-core::f64::consts::PI * shifted.iter().map(|v| v * v).sum::<f64>() / (bq * bq));
                        amp * amp
                    })
                    .sum()
            })
            .collect();
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(Error::EmptySupport);
        }
        Ok(Self {
            params: params.clone(),
            a: a.clone(),
            s,
            e,
            lambda1,
            regime_ok,
            ball,
            weights,
        })
    }

    pub fn params(&self) -> &EdcpParams {
        &self.params
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Radius of the offset ball, `λ₁(L_q(A))/2`.
    pub fn radius(&self) -> f64 {
        self.lambda1 / 2.0
    }

    /// False when `λ₁^∞ < q/4` or `‖e‖ ≥ λ₁/2`; the output is then flagged, not refused.
    pub fn regime_ok(&self) -> bool {
        self.regime_ok
    }

    /// Offsets in the ball with their exact probabilities.
    pub fn offset_law(&self) -> (Vec<Vec<i64>>, Vec<f64>) {
        let total: f64 = self.weights.iter().sum();
        (
            self.ball.clone(),
            self.weights.iter().map(|w| w / total).collect(),
        )
    }

    /// The measured offset and center without building the state.
    pub fn sample_hidden<R: Rng + ?Sized>(&self, rng: &mut R) -> EdcpHidden {
        let x = self.ball[sample_index(&self.weights, rng)].clone();
        let v = (0..self.params.n)
            .map(|_| center_mod(rng.gen_range(0..self.params.q) as i128, self.params.q))
            .collect();
        let (sigma, c) = edcp_sigma_c(&self.params, &self.e, &x);
        EdcpHidden { v, x, sigma, c }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<EdcpSample> {
        let hidden = self.sample_hidden(rng);
        let q = self.params.q;
        let av = self.a.transpose_mul_mod(&hidden.v, q);
        let y = av
            .iter()
            .zip(&hidden.x)
            .map(|(&u, &x)| center_mod(u as i128 + x as i128, q))
            .collect();
        let state = self.residual(&hidden.v, &hidden.x)?;
        Ok(EdcpSample { y, state, hidden })
    }

    /// `Σ_j ρ_α(j) ρ_{βq}(x + je) |j⟩|v + js⟩` with `j` over centered `Z_q`.
    pub fn residual(&self, v: &[i64], x: &[i64]) -> Result<PureState> {
        let (q, n) = (self.params.q, self.params.n);
        let shape = RegisterShape::new(alloc::vec![Register::Cyclic(q); n + 1])?;
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); shape.dim()];
        let mut idx = alloc::vec![0usize; n + 1];
        for j in centered_range(q) {
            idx[0] = j.rem_euclid(q as i64) as usize;
            for i in 0..n {
                idx[i + 1] = (v[i] + j * self.s[i]).rem_euclid(q as i64) as usize;
            }
            let shifted: Vec<f64> = x
                .iter()
                .zip(&self.e)
                .map(|(&xi, &ei)| (xi + j * ei) as f64)
                .collect();
            let bq = self.params.beta_q();
            let r = rho_s(self.params.alpha, j as f64)
                * libm::exp(-core::f64::consts::PI * shifted.iter().map(|v| v * v).sum::<f64>() / (bq * bq));
            amps[shape.flat_index(&idx)] = Complex64::new(r, 0.0);
        }
        PureState::normalized_from(shape, amps, 0.0)
    }
}

fn centered_range(q: u64) -> Vec<i64> {
    (0..q).map(|j| center_mod(j as i128, q)).collect()
}

/// The first three steps run literally on `Z_q` registers, conditioned on the
/// third register reading `y`: amplitudes `ρ_α(j) ρ_{βq}(y − Aᵀv + j·b)` over
/// `(j, v)`, using no knowledge of `s` or `e`.
pub fn dense_residual(a: &ZMatrix, b: &[i64], params: &EdcpParams, y: &[i64]) -> Result<PureState> {
    let (q, n) = (params.q, params.n);
    enumeration_guard(n + 1, q)?;
    let shape = RegisterShape::new(alloc::vec![Register::Cyclic(q); n + 1])?;
    let mut amps = alloc::vec![Complex64::new(0.0, 0.0); shape.dim()];
    let bq = params.beta_q();
    for j in centered_range(q) {
        for_each_vector(n, q, |v| {
            let av = a.transpose_mul_mod(v, q);
            let x2: f64 = (0..params.m)
                .map(|i| {
                    let xi = center_mod(y[i] as i128 - av[i] as i128 + j as i128 * b[i] as i128, q);
                    (xi as f64) * (xi as f64)
                })
                .sum();
            let mut idx = alloc::vec![j.rem_euclid(q as i64) as usize];
            idx.extend(v.iter().map(|&c| c as usize));
            amps[shape.flat_index(&idx)] = Complex64::new(
                rho_s(params.alpha, j as f64) * libm::exp(-core::f64::consts::PI * x2 / (bq * bq)),
                0.0,
            );
        });
    }
    PureState::normalized_from(shape, amps, 0.0)
}

/// QFT on the `Z_q^n` registers, measure them as `â`, then QFT on the `j` register.
///
/// Returns `a = −â` and `Σ_e ρ_{q/σ}(e) e^{2πi ce/q} |⟨a,s⟩ + e⟩` up to wrap-around.
pub fn edcp_to_slwe_phase<R: Rng + ?Sized>(
    sample: EdcpSample,
    rng: &mut R,
) -> Result<SlwePhaseSample> {
    let regs = sample.state.shape().len();
    if regs < 2 {
        return Err(invalid("an EDCP state has a j register and n secret registers"));
    }
    let q = sample.state.shape().registers()[0].size() as u64;
    let n = regs - 1;
    let mut state = sample.state;
    for reg in 1..=n {
        state = qft(&state, reg)?;
    }
    let mut a_hat = Vec::with_capacity(n);
    for _ in 0..n {
        let (k, rest) = measure_out(&state, 1, rng)?;
        a_hat.push(k as i64);
        state = rest;
    }
    let state = qft(&state, 0)?;
    let a = a_hat.iter().map(|&k| center_mod(-(k as i128), q)).collect();
    let hidden = sample.hidden;
    Ok(SlwePhaseSample::from_parts(
        PhasePublic {
            a,
            y: sample.y.clone(),
            state,
        },
        PhaseHidden {
            y: sample.y,
            theta: hidden.c / q as f64,
            width: Some(q as f64 / hidden.sigma),
            center: Some(hidden.c),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::AmplitudeSpec;
    use crate::qsim::trace_distance_pure;
    use crate::zq_math::{dot_mod, fold_table};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(q: u64, alpha: f64, bq: f64) -> EdcpParams {
        EdcpParams {
            n: 1,
            m: 2,
            q,
            alpha,
            beta: bq / q as f64,
            gamma: 0.01,
            alpha_floor: 0.0,
            strict: false,
        }
    }

    fn instance(q: u64, s: i64, e: &[i64], rng: &mut ChaCha8Rng) -> (ZMatrix, Vec<i64>) {
        loop {
            let a = ZMatrix::random(1, 2, q, rng);
            if kernel_trivial(&a, q).unwrap()
                && lambda1_l2(&a, q).unwrap() > 2.0 * libm::sqrt(norm_sq(e)) + 0.5
            {
                let b = a
                    .transpose_mul_mod(&[s], q)
                    .iter()
                    .zip(e)
                    .map(|(&u, &ei)| center_mod(u as i128 + ei as i128, q))
                    .collect();
                return (a, b);
            }
        }
    }

    #[test]
    fn sigma_c_examples() {
        let p = params(8, 4.0, 8.0);
        let (sigma, c) = edcp_sigma_c(&p, &[1, 0], &[2, 0]);
        assert!((sigma - 32.0 / libm::sqrt(80.0)).abs() < 1e-12);
        assert!((c + 0.4).abs() < 1e-12);
        assert_eq!(edcp_sigma_c(&p, &[1, 0], &[0, 3]).1, 0.0);
        let (s0, c0) = edcp_sigma_c(&p, &[0, 0], &[2, 1]);
        assert!((s0 - 4.0).abs() < 1e-12 && c0 == 0.0);
    }

    #[test]
    fn amplitude_identity_pointwise() {
        // ρ_α(j)ρ_{βq}(x+je)/ρ_σ(j−c) must not depend on j.
        let p = params(9, 2.0, 3.0);
        let (e, x) = ([1i64, -2], [2i64, 1]);
        let (sigma, c) = edcp_sigma_c(&p, &e, &x);
        let ratio = |j: i64| {
            let shifted = [(x[0] + j * e[0]) as f64, (x[1] + j * e[1]) as f64];
            rho_s(2.0, j as f64)
                * libm::exp(-core::f64::consts::PI * (shifted[0].powi(2) + shifted[1].powi(2)) / 9.0)
                / rho_s(sigma, j as f64 - c)
        };
        let r0 = ratio(0);
        for j in -4..=4 {
            assert!((ratio(j) / r0 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn center_params_relation() {
        let p = params(8, 4.0, 8.0);
        let (step, sc) = center_distribution_params(&p, &[1, 0]);
        assert!((step - 16.0 / 80.0).abs() < 1e-15);
        assert!((sc - 16.0 / libm::sqrt(160.0)).abs() < 1e-12);
        let (sigma, _) = edcp_sigma_c(&p, &[1, 0], &[0, 0]);
        assert!((sc - 4.0 / (libm::sqrt(2.0) * 8.0) * sigma).abs() < 1e-12);
        assert_eq!(center_distribution_params(&p, &[0, 0]).1, 0.0);
    }

    #[test]
    fn residual_is_edcp_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = [1i64, 0];
        let (a, b) = instance(9, 4, &e, &mut rng);
        let p = params(9, 2.0, 3.0);
        let sampler = EdcpSampler::new(&a, &b, &p).unwrap();
        let sample = sampler.sample(&mut rng).unwrap();
        let h = sample.hidden();
        let mut fitted = alloc::vec![0.0; 9];
        for j in -4i64..=4 {
            let w = (h.v[0] + 4 * j).rem_euclid(9) as usize;
            fitted[j.rem_euclid(9) as usize] = sample.state.amplitude(&[j.rem_euclid(9) as usize, w]).re;
        }
        let r0 = fitted[0] / rho_s(h.sigma, -h.c);
        for j in -4i64..=4 {
            let got = fitted[j.rem_euclid(9) as usize] / rho_s(h.sigma, j as f64 - h.c);
            assert!((got / r0 - 1.0).abs() < 1e-9, "{j} {got} {r0} {h:?}");
        }
        let ay = a.transpose_mul_mod(&h.v, 9);
        for i in 0..2 {
            assert_eq!(center_mod((sample.y[i] - ay[i] - h.x[i]) as i128, 9), 0);
        }
    }

    #[test]
    fn dense_simulation_agrees_in_regime() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e = [1i64, 0];
        let q = 17;
        let (a, b) = instance(q, 3, &e, &mut rng);
        let p = params(q, 2.0, 1.2);
        let sampler = EdcpSampler::new(&a, &b, &p).unwrap();
        for _ in 0..5 {
            let sample = sampler.sample(&mut rng).unwrap();
            let dense = dense_residual(&a, &b, &p, &sample.y).unwrap();
            let d = trace_distance_pure(&dense, &sample.state).unwrap();
            assert!(d < 1e-3, "{d}");
        }
    }

    #[test]
    fn phase_output_matches_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = [1i64, 0];
        let q = 9;
        let (a, b) = instance(q, 2, &e, &mut rng);
        let p = params(q, 2.0, 3.0);
        let sampler = EdcpSampler::new(&a, &b, &p).unwrap();
        for _ in 0..10 {
            let out = edcp_to_slwe_phase(sampler.sample(&mut rng).unwrap(), &mut rng).unwrap();
            let (public, hidden) = out.into_parts();
            let spec = AmplitudeSpec::LinearPhaseGaussian {
                sigma: hidden.width.unwrap(),
                c: hidden.center.unwrap(),
                q,
            };
            let shift = dot_mod(&public.a, &[2], q);
            let target = PureState::cyclic(fold_table(&spec.table(), q, shift), 0.0).unwrap();
            let d = trace_distance_pure(&target, &public.state).unwrap();
            assert!(d < 1e-3, "{d}");
        }
    }

    #[test]
    fn strict_checks() {
        let mut p = params(9, 2.0, 3.0);
        assert!(p.validate().is_ok());
        p.strict = true;
        assert!(matches!(p.validate(), Err(Error::Condition(_))));
        p.alpha_floor = 3.0;
        p.strict = false;
        assert!(p.validate().is_err());
    }
}
