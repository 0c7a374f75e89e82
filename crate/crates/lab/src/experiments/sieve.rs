use anyhow::{ensure, Result};
use qlwe_core::amplitudes::{gen_slwe, gen_slwe_phase, AmplitudeSpec, PhasePublic, SecretKey, SlweSample};
use qlwe_core::reductions::{amplitude_for_guess, CenterLaw, EdcpParams};
use qlwe_core::sieve::{
    find_heavy_pair, slwe_to_dcp, solve_phase_public_report, solve_slwe_report, SolveReport,
    DEFAULT_HEAVY_THRESHOLD,
};
use serde::{Deserialize, Serialize};

use super::{parse_params, timed, Context};
use crate::record::{int_list, Outcome, Table};
use crate::stats::proportion_se;
use crate::trials::{run_trials, Domain};

pub const PARAMS: &str = "n=2 q=8 sigma=4 samples=16384 trials=20 min_successes=18 \
conversion_trials=100000 phase_trials=20 phase_alpha=2√3 phase_beta_q=√6 phase_e=[1,0] \
min_depth=3 chance_margin=0.1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub q: u64,
    /// Width of the real Gaussian amplitude of the known-phase samples.
    pub sigma: f64,
    pub samples: usize,
    pub trials: usize,
    pub min_successes: usize,
    pub conversion_trials: usize,
    pub phase_trials: usize,
    pub phase_alpha: f64,
    pub phase_beta_q: f64,
    pub phase_e: Vec<i64>,
    pub min_depth: u32,
    pub chance_margin: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 2,
            q: 8,
            sigma: 4.0,
            samples: 1 << 14,
            trials: 20,
            min_successes: 18,
            conversion_trials: 100_000,
            phase_trials: 20,
            phase_alpha: 2.0 * 3f64.sqrt(),
            phase_beta_q: 6f64.sqrt(),
            phase_e: vec![1, 0],
            min_depth: 3,
            chance_margin: 0.1,
        }
    }
}

struct Trial {
    secret: Vec<i64>,
    recovered: Option<Vec<i64>>,
    deep_votes: usize,
    deep_correct: usize,
    seconds: f64,
}

/// Single-shot votes cast by qubits of combine depth at least `min_depth`, and
/// how many of them equal the true digit.
fn deep_votes(report: &SolveReport, s: &SecretKey, q: u64, min_depth: u32) -> (usize, usize) {
    let (mut votes, mut correct) = (0, 0);
    for bit in &report.bits {
        let truth = (s.s[bit.coordinate].rem_euclid(q as i64) >> bit.stage) & 1;
        for t in bit.by_depth.iter().filter(|t| t.depth >= min_depth) {
            votes += t.votes;
            correct += if truth == 1 { t.ones } else { t.votes - t.ones };
        }
    }
    (votes, correct)
}

fn finish(s: SecretKey, report: Result<SolveReport, qlwe_core::Error>, q: u64, min_depth: u32, seconds: f64) -> Trial {
    let (recovered, deep_votes, deep_correct) = match report {
        Ok(r) => {
            let (v, c) = deep_votes(&r, &s, q, min_depth);
            (Some(r.secret.s), v, c)
        }
        Err(_) => (None, 0, 0),
    };
    Trial {
        secret: s.s,
        recovered,
        deep_votes,
        deep_correct,
        seconds,
    }
}

fn tally(trials: &[Trial]) -> (usize, f64) {
    let ok = trials.iter().filter(|t| t.recovered.as_ref() == Some(&t.secret)).count();
    let votes: usize = trials.iter().map(|t| t.deep_votes).sum();
    let correct: usize = trials.iter().map(|t| t.deep_correct).sum();
    (ok, if votes == 0 { 0.0 } else { correct as f64 / votes as f64 })
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    ensure!(p.n >= 1 && p.q.is_power_of_two() && p.q >= 2, "q must be a power of two and n ≥ 1");
    let q = p.q;
    let f = AmplitudeSpec::RealGaussian { sigma: p.sigma };
    let mut out = Outcome::default();

    let known = run_trials(ctx.jobs, ctx.seed, Domain::Main, p.trials, |_, rng| {
        let s = SecretKey::random(p.n, q, rng);
        let (report, secs) = timed(|| {
            let samples: Vec<SlweSample> = (0..p.samples)
                .map(|_| gen_slwe(q, &f, &s, rng).expect("valid amplitude"))
                .collect();
            solve_slwe_report(&samples, &f, q, p.n, rng)
        });
        finish(s, report, q, p.min_depth, secs)
    });
    let (successes, known_acc) = tally(&known);
    out.metric("successes", successes as f64);
    out.metric("success_rate", successes as f64 / p.trials.max(1) as f64);
    out.metric("known_deep_accuracy", known_acc);
    out.timing("max_trial_seconds", known.iter().map(|t| t.seconds).fold(0.0, f64::max));
    out.criterion("1", successes >= p.min_successes);

    let pair = find_heavy_pair(&f, q, DEFAULT_HEAVY_THRESHOLD)?;
    let analytic = pair.success_probability();
    let s0 = SecretKey::random(p.n, q, &mut crate::trials::trial_rng(ctx.seed, Domain::Setup, 0));
    let (accepted, secs) = timed(|| {
        run_trials(ctx.jobs, ctx.seed, Domain::Secondary, p.conversion_trials, |_, rng| {
            let sample = gen_slwe(q, &f, &s0, rng).expect("valid amplitude");
            slwe_to_dcp(&sample, &pair, q, rng).expect("shape").is_some()
        })
    });
    let rate = accepted.iter().filter(|&&a| a).count() as f64 / p.conversion_trials.max(1) as f64;
    let se = proportion_se(analytic, p.conversion_trials.max(1));
    out.metric("conversion_rate", rate);
    out.metric("conversion_analytic", analytic);
    out.metric("conversion_se", se);
    out.metric("conversion_z", (rate - analytic) / se);
    out.timing("conversion_seconds", secs);
    out.criterion("2", p.conversion_trials > 0 && (rate - analytic).abs() <= 3.0 * se);

    let edcp = EdcpParams {
        n: p.n,
        m: p.phase_e.len(),
        q,
        alpha: p.phase_alpha,
        beta: p.phase_beta_q / q as f64,
        gamma: 0.0,
        alpha_floor: 0.0,
        strict: false,
    };
    let e_sq = p.phase_e.iter().map(|e| (e * e) as u64).sum();
    let f_phase = amplitude_for_guess(&edcp, e_sq);
    let law = CenterLaw::new(&edcp, &p.phase_e)?;
    let unknown = run_trials(ctx.jobs, ctx.seed, Domain::Tertiary, p.phase_trials, |_, rng| {
        let s = SecretKey::random(p.n, q, rng);
        let (report, secs) = timed(|| {
            let publics: Vec<PhasePublic> = (0..p.samples)
                .map(|_| {
                    let theta = law.sample(rng) / q as f64;
                    gen_slwe_phase(q, &f_phase, &s, Vec::new(), theta, rng)
                        .expect("valid amplitude")
                        .into_parts()
                        .0
                })
                .collect();
            solve_phase_public_report(&publics, &f_phase, q, p.n, rng)
        });
        finish(s, report, q, p.min_depth, secs)
    });
    let (phase_ok, phase_acc) = tally(&unknown);
    let phase_votes: usize = unknown.iter().map(|t| t.deep_votes).sum();
    let chance = 0.5;
    if let AmplitudeSpec::RealGaussian { sigma } = f_phase {
        out.metric("phase_amplitude_sigma", sigma);
    }
    out.metric("phase_center_sigma", law.sigma_c());
    out.metric("phase_center_step", law.step());
    out.metric("phase_successes", phase_ok as f64);
    out.metric("phase_deep_votes", phase_votes as f64);
    out.metric("phase_deep_accuracy", phase_acc);
    out.metric("chance", chance);
    out.criterion(
        "15",
        successes >= p.min_successes
            && p.min_depth >= 3
            && phase_votes > 0
            && phase_acc <= chance + p.chance_margin,
    );

    let mut public = Table::new("sieve_trials", &["mode", "trial", "recovered", "deep_votes", "deep_correct"], false);
    let mut hidden = Table::new("sieve_secrets", &["mode", "trial", "secret", "recovered"], true);
    for (mode, trials) in [("known", &known), ("unknown_phase", &unknown)] {
        for (i, t) in trials.iter().enumerate() {
            let ok = t.recovered.as_ref() == Some(&t.secret);
            public.push(vec![
                mode.into(),
                i.to_string(),
                (ok as u8).to_string(),
                t.deep_votes.to_string(),
                t.deep_correct.to_string(),
            ]);
            hidden.push(vec![
                mode.into(),
                i.to_string(),
                int_list(&t.secret),
                t.recovered.as_deref().map(int_list).unwrap_or_default(),
            ]);
        }
    }
    out.tables.push(public);
    out.tables.push(hidden);
    Ok((serde_json::to_value(&p)?, out))
}
