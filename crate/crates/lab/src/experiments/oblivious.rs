use std::f64::consts::PI;

use anyhow::{ensure, Result};
use qlwe_core::clwe::{
    construct_coherent, recover_block, verify_candidate, group_count, ApproxObservation,
    ClweParams, ObliviousSample, ObliviousSampler,
};
use qlwe_core::reductions::kernel_trivial;
use qlwe_core::zq_math::{center_mod, Modulus, ZMatrix};
use qlwe_core::Error as CoreError;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{parse_params, timed, Context};
use crate::record::{cell, int_list, Outcome, Table};
use crate::stats::chi_square;
use crate::trials::{run_trials, trial_rng, Domain};

pub const PARAMS: &str = "block_n=8 block_q=5 block_len=128 corruption=0.125 block_trials=50 \
sampler={n:4,m:32,factors:[337,338],r:56500,log_slack:1,strict:true} coordinates=100000 \
bins=64 tiny={n:1,m:8,factors:[2,3],r:12,log_slack:1} tiny_tolerance=0.05";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerParams {
    pub n: usize,
    pub m: usize,
    pub factors: Vec<u64>,
    pub r: f64,
    pub log_slack: f64,
    #[serde(default)]
    pub strict: bool,
}

impl SamplerParams {
    fn clwe(&self, strict: bool) -> Result<ClweParams> {
        Ok(ClweParams {
            n: self.n,
            m: self.m,
            modulus: Modulus::with_factors(self.factors.clone())?,
            r: self.r,
            log_slack: self.log_slack,
            strict: self.strict || strict,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub block_n: usize,
    pub block_q: u64,
    pub block_len: usize,
    pub corruption: f64,
    pub block_trials: usize,
    pub min_block_successes: usize,
    pub min_rejections: usize,
    pub sampler: SamplerParams,
    pub coordinates: usize,
    pub bins: usize,
    pub min_p_value: f64,
    pub tiny: SamplerParams,
    pub tiny_tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            block_n: 8,
            block_q: 5,
            block_len: 128,
            corruption: 1.0 / 8.0,
            block_trials: 50,
            min_block_successes: 49,
            min_rejections: 49,
            sampler: SamplerParams {
                n: 4,
                m: 32,
                factors: vec![337, 338],
                r: 56_500.0,
                log_slack: 1.0,
                strict: true,
            },
            coordinates: 100_000,
            bins: 64,
            min_p_value: 0.01,
            tiny: SamplerParams {
                n: 1,
                m: 8,
                factors: vec![2, 3],
                r: 12.0,
                log_slack: 1.0,
                strict: false,
            },
            tiny_tolerance: 0.05,
        }
    }
}

/// Observations `Aᵀs mod q_j` with each entry replaced, with probability
/// `corruption`, by a uniformly chosen different residue.
fn corrupted_block<R: Rng>(p: &Params, rng: &mut R) -> (ApproxObservation, Vec<i64>) {
    let q = p.block_q;
    let a = ZMatrix::random(p.block_n, p.block_len, q, rng);
    let s: Vec<i64> = (0..p.block_n).map(|_| rng.gen_range(0..q as i64)).collect();
    let y = a
        .transpose_mul_mod(&s, q)
        .into_iter()
        .map(|v| {
            if rng.gen::<f64>() < p.corruption {
                let shift = rng.gen_range(1..q as i64);
                center_mod(v as i128 + shift as i128, q)
            } else {
                v
            }
        })
        .collect();
    (ApproxObservation { a_j: a, y_tilde: y, q_j: q }, s)
}

fn block_recovery(p: &Params, ctx: &Context, out: &mut Outcome) {
    let trials = run_trials(ctx.jobs, ctx.seed, Domain::Main, p.block_trials, |_, rng| {
        let (obs, s) = corrupted_block(p, rng);
        let recovered = recover_block(&obs) == Some(s.clone());
        let wrong: Vec<i64> = loop {
            let w: Vec<i64> = (0..p.block_n).map(|_| rng.gen_range(0..p.block_q as i64)).collect();
            if w != s {
                break w;
            }
        };
        let group = rng.gen_range(0..group_count(&obs));
        (recovered, !verify_candidate(&obs, group, &wrong))
    });
    let ok = trials.iter().filter(|t| t.0).count();
    let rejected = trials.iter().filter(|t| t.1).count();
    out.metric("block_successes", ok as f64);
    out.metric("block_rejections", rejected as f64);
    out.metric("block_trials", p.block_trials as f64);
    out.criterion(
        "6",
        p.block_trials > 0 && ok >= p.min_block_successes && rejected >= p.min_rejections,
    );
}

/// `|Σ_k ρ_r(x + kq)·e^{−πi(x+kq)²/t}|²` for centered `x`, with the phase reduced
/// exactly through `(x + kq)² mod 2t`.
fn wrapped_born(q: u64, t: u64, r: f64) -> Vec<f64> {
    let q = q as i64;
    let reach = (6.0 * r).ceil() as i64;
    let lo = center_mod((q / 2 + 1) as i128, q as u64);
    let kmax = reach / q + 1;
    let mut law: Vec<f64> = (0..q)
        .map(|i| {
            let x = lo + i;
            let (mut re, mut im) = (0.0, 0.0);
            for k in -kmax..=kmax {
                let xp = (x + k * q) as i128;
                if xp.abs() > reach as i128 {
                    continue;
                }
                let w = (-PI * (xp * xp) as f64 / (r * r)).exp();
                let phase = -PI * (xp * xp).rem_euclid(2 * t as i128) as f64 / t as f64;
                re += w * phase.cos();
                im += w * phase.sin();
            }
            re * re + im * im
        })
        .collect();
    let total: f64 = law.iter().sum();
    law.iter_mut().for_each(|v| *v /= total);
    law
}

const PUBLIC_FIELDS: [&str; 6] = ["n", "m", "q", "A", "b", "provenance"];

fn record_is_public(sample: &ObliviousSample) -> bool {
    let Ok(serde_json::Value::Object(map)) = serde_json::to_value(sample) else {
        return false;
    };
    let top = map.keys().all(|k| PUBLIC_FIELDS.contains(&k.as_str()));
    let prov = match map.get("provenance") {
        Some(serde_json::Value::Object(p)) => p.keys().all(|k| k == "mode" || k == "seed"),
        _ => false,
    };
    top && prov
}

fn sampler_law(p: &Params, ctx: &Context, out: &mut Outcome) -> Result<Vec<Table>> {
    let params = p.sampler.clwe(ctx.strict)?;
    let sampler = ObliviousSampler::new(&params)?;
    let q = params.q();
    let m = params.m;
    let len = params.block_len();
    let count = p.coordinates.div_ceil(m);
    let (runs, secs) = timed(|| {
        run_trials(ctx.jobs, ctx.seed, Domain::Secondary, count, |_, rng| {
            let mut redraws = 0;
            loop {
                let a = ZMatrix::random(params.n, m, q, rng);
                match sampler.sample_with_witness(&a, rng.gen()) {
                    Ok(found) => return Ok((found, redraws)),
                    Err(CoreError::Exhausted) if redraws < 16 => redraws += 1,
                    Err(e) => return Err(e),
                }
            }
        })
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    out.timing("sampler_seconds", secs);

    let lo = center_mod((q / 2 + 1) as i128, q);
    let bins = p.bins.max(1);
    let width = q.div_ceil(bins as u64) as i64;
    let binned: Vec<Vec<f64>> = params
        .factors()
        .iter()
        .map(|&t| {
            let mut b = vec![0.0; bins];
            for (k, pr) in wrapped_born(q, t, params.r).iter().enumerate() {
                b[k / width as usize] += pr;
            }
            b
        })
        .collect();
    let mut per_block = vec![0usize; binned.len()];
    let mut observed = vec![0u64; bins];
    let mut public = true;
    let mut redraws = 0;
    let mut samples = Table::new("oblivious_samples", &["trial", "A", "b", "seed"], false);
    let mut witness = Table::new("oblivious_witness", &["trial", "s", "x"], true);
    for (i, ((sample, w), extra)) in runs.iter().enumerate() {
        redraws += extra;
        public &= record_is_public(sample);
        let a = sample.matrix();
        let as_ = a.transpose_mul_mod(&w.s, q);
        for (col, (&b, &u)) in sample.b.iter().zip(&as_).enumerate() {
            if i * m + col >= p.coordinates {
                break;
            }
            let x = center_mod(b as i128 - u as i128, q);
            observed[((x - lo) / width) as usize] += 1;
            per_block[col / len] += 1;
        }
        samples.push(vec![
            i.to_string(),
            int_list(&sample.a),
            int_list(&sample.b),
            sample.provenance.seed.to_string(),
        ]);
        witness.push(vec![i.to_string(), int_list(&w.s), int_list(&w.x)]);
    }
    let expected: Vec<f64> = (0..bins)
        .map(|k| per_block.iter().zip(&binned).map(|(&c, b)| c as f64 * b[k]).sum())
        .collect();
    let chi = chi_square(&observed, &expected);
    out.metric("sampler_coordinates", observed.iter().sum::<u64>() as f64);
    out.metric("sampler_chi2", chi.statistic);
    out.metric("sampler_dof", chi.dof as f64);
    out.metric("sampler_p_value", chi.p_value);
    out.metric("sampler_matrix_redraws", redraws as f64);
    out.metric("sampler_records_public", public as u8 as f64);
    out.criterion("7", public && chi.p_value > p.min_p_value);

    let mut law = Table::new("oblivious_error_law", &["bin_lo", "bin_hi", "observed", "expected"], false);
    for k in 0..bins {
        let a = lo + k as i64 * width;
        law.push(vec![
            a.to_string(),
            (a + width - 1).min(lo + q as i64 - 1).to_string(),
            observed[k].to_string(),
            cell(expected[k]),
        ]);
    }
    Ok(vec![samples, witness, law])
}

/// Every first-half group of every block determines `s mod q_j` uniquely.
fn groups_injective(a: &ZMatrix, params: &ClweParams) -> Result<bool> {
    let len = params.block_len();
    let w = 2 * params.n;
    for (j, &t) in params.factors().iter().enumerate() {
        for g in 0..len / w / 2 {
            let start = j * len + g * w;
            if !kernel_trivial(&a.column_block(start, start + w), t)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn coherent_check(p: &Params, ctx: &Context, out: &mut Outcome) -> Result<()> {
    let params = p.tiny.clwe(false)?;
    params.validate()?;
    let mut rng = trial_rng(ctx.seed, Domain::Tertiary, 0);
    let mut redraws = 0;
    let a = loop {
        let a = ZMatrix::random(params.n, params.m, params.q(), &mut rng);
        if groups_injective(&a, &params)? {
            break a;
        }
        redraws += 1;
        ensure!(redraws < 1000, "no matrix with injective groups found");
    };
    let (report, secs) = timed(|| construct_coherent(&a, &params));
    let report = report?;
    out.metric("coherent_trace_distance", report.trace_distance);
    out.metric("coherent_dimension", report.dimension as f64);
    out.metric("coherent_matrix_redraws", redraws as f64);
    out.timing("coherent_seconds", secs);
    out.criterion("8", report.trace_distance <= p.tiny_tolerance);
    Ok(())
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    ensure!(p.block_q >= 2 && p.block_n >= 1, "block_q ≥ 2 and block_n ≥ 1 required");
    ensure!(
        p.block_len >= 4 * p.block_n && p.block_len.is_multiple_of(2 * p.block_n),
        "block_len must be a multiple of 2·block_n and at least 4·block_n"
    );
    ensure!((0.0..1.0).contains(&p.corruption), "corruption must lie in [0, 1)");
    let mut out = Outcome::default();
    block_recovery(&p, ctx, &mut out);
    let tables = sampler_law(&p, ctx, &mut out)?;
    out.tables.extend(tables);
    coherent_check(&p, ctx, &mut out)?;
    Ok((serde_json::to_value(&p)?, out))
}
