//! Enumerating `E = ‖e‖²` around a pluggable S|LWE>^phase solver.

use alloc::vec::Vec;
use rand::Rng;

use super::edcp::{edcp_to_slwe_phase, EdcpParams, EdcpSampler};
use crate::amplitudes::{AmplitudeSpec, PhasePublic};
use crate::error::{invalid, Error, Result};
use crate::sieve::solve_phase_public_report;
use crate::zq_math::{center_mod, solve_mod, ZMatrix};

/// A solver that sees only the public part of S|LWE>^phase samples.
pub trait PhaseSolver {
    fn solve(
        &mut self,
        samples: &[PhasePublic],
        f: &AmplitudeSpec,
        q: u64,
        n: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Option<Vec<i64>>;
}

/// The sieve run on phase samples as if the phase were absent.
#[derive(Clone, Copy, Debug, Default)]
pub struct SievePhaseSolver;

impl PhaseSolver for SievePhaseSolver {
    fn solve(
        &mut self,
        samples: &[PhasePublic],
        f: &AmplitudeSpec,
        q: u64,
        n: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Option<Vec<i64>> {
        solve_phase_public_report(samples, f, q, n, rng)
            .ok()
            .map(|r| r.secret.s)
    }
}

/// Fresh LWE samples and the `‖·‖∞` bound a correct secret must meet on them.
#[derive(Clone, Debug)]
pub struct Verifier {
    pub a: ZMatrix,
    pub b: Vec<i64>,
    pub q: u64,
    pub bound: i64,
}

impl Verifier {
    pub fn accepts(&self, s: &[i64]) -> bool {
        if s.len() != self.a.rows {
            return false;
        }
        let as_ = self.a.transpose_mul_mod(s, self.q);
        self.b
            .iter()
            .zip(&as_)
            .all(|(&b, &u)| center_mod(b as i128 - u as i128, self.q).abs() <= self.bound)
    }
}

/// `f_E = ρ_{q/σ(E)}` with `σ(E) = αβq/√(α²E + β²q²)`.
pub fn amplitude_for_guess(params: &EdcpParams, e_sq: u64) -> AmplitudeSpec {
    let bq = params.beta_q();
    let sigma = params.alpha * bq / libm::sqrt(params.alpha * params.alpha * e_sq as f64 + bq * bq);
    AmplitudeSpec::RealGaussian {
        sigma: params.q as f64 / sigma,
    }
}

/// Which guess succeeded and how many were tried.
#[derive(Clone, Debug, PartialEq)]
pub struct GuessOutcome {
    pub secret: Vec<i64>,
    pub e_sq: u64,
    pub rounds: usize,
    pub rejected: usize,
}

/// Tries `E = 1, …, ⌊mγ²q²⌋`, each with `samples_per_guess` pipeline samples.
///
/// The case `e = 0` is settled first by Gaussian elimination.
pub fn guess_e_driver<S: PhaseSolver + ?Sized, R: Rng>(
    a: &ZMatrix,
    b: &[i64],
    params: &EdcpParams,
    samples_per_guess: usize,
    verifier: &Verifier,
    solver: &mut S,
    rng: &mut R,
) -> Result<GuessOutcome> {
    if samples_per_guess == 0 {
        return Err(invalid("at least one sample per guess is needed"));
    }
    let q = params.q;
    if let Some(s) = solve_mod(&a.transpose(), b, q) {
        let s: Vec<i64> = s.iter().map(|&v| center_mod(v as i128, q)).collect();
        if verifier.accepts(&s) {
            return Ok(GuessOutcome {
                secret: s,
                e_sq: 0,
                rounds: 0,
                rejected: 0,
            });
        }
    }
    let sampler = EdcpSampler::new(a, b, params)?;
    let gq = params.gamma * q as f64;
    let max_e = libm::floor(params.m as f64 * gq * gq).max(1.0) as u64;
    let mut rejected = 0;
    for (round, e_sq) in (1..=max_e).enumerate() {
        let mut publics = Vec::with_capacity(samples_per_guess);
        for _ in 0..samples_per_guess {
            let phase = edcp_to_slwe_phase(sampler.sample(rng)?, rng)?;
            publics.push(phase.into_parts().0);
        }
        let f = amplitude_for_guess(params, e_sq);
        if let Some(candidate) = solver.solve(&publics, &f, q, params.n, rng) {
            let candidate: Vec<i64> = candidate.iter().map(|&v| center_mod(v as i128, q)).collect();
            if verifier.accepts(&candidate) {
                return Ok(GuessOutcome {
                    secret: candidate,
                    e_sq,
                    rounds: round + 1,
                    rejected,
                });
            }
            rejected += 1;
        }
    }
    Err(Error::Exhausted)
}
