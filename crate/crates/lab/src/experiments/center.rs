use anyhow::{ensure, Result};
use qlwe_core::clwe::{
    center_prob_bound, exact_center_prob, overlap_log_bound, overlap_log_magnitude, psi_basis,
    WrappedErrorTable,
};
use qlwe_core::zq_math::cutoff_radius;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{parse_params, timed, Context};
use crate::record::{cell, Outcome, Table};
use crate::stats::proportion_se;
use crate::trials::{run_trials_at, trial_rng, Domain};

pub const PARAMS: &str = "orthonormal_t=[2,3,5,16,101] tuples=[{t:5,r:1200,n:8},{t:3,r:500,n:4}] \
draws=10000 overlap_pairs=50 overlap_r=1200 overlap_t=5 overlap_slack=1.01";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterTuple {
    pub t: u64,
    pub r: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub orthonormal_t: Vec<u64>,
    pub orthonormal_tolerance: f64,
    pub tuples: Vec<CenterTuple>,
    pub draws: usize,
    pub overlap_pairs: usize,
    pub overlap_r: f64,
    pub overlap_t: u64,
    pub overlap_slack: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            orthonormal_t: vec![2, 3, 5, 16, 101],
            orthonormal_tolerance: 1e-12,
            tuples: vec![
                CenterTuple { t: 5, r: 1200.0, n: 8 },
                CenterTuple { t: 3, r: 500.0, n: 4 },
            ],
            draws: 10_000,
            overlap_pairs: 50,
            overlap_r: 1200.0,
            overlap_t: 5,
            overlap_slack: 1.01,
        }
    }
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    ensure!(p.overlap_t >= 2, "overlap_t must be at least 2");
    let mut out = Outcome::default();

    let mut worst = 0.0f64;
    for &t in &p.orthonormal_t {
        let dev = psi_basis(t)?.orthonormality_deviation();
        out.metric(&format!("orthonormality_t{t}"), dev);
        worst = worst.max(dev);
    }
    out.metric("orthonormality_max", worst);
    out.criterion("3", !p.orthonormal_t.is_empty() && worst <= p.orthonormal_tolerance);

    let mut table = Table::new(
        "center_sweep",
        &["t", "r", "n", "bound", "exact_prob", "empirical", "se"],
        false,
    );
    let mut c4 = !p.tuples.is_empty();
    let mut slowest = 0.0f64;
    for (i, tup) in p.tuples.iter().enumerate() {
        let (res, secs) = timed(|| -> Result<_> {
            let reach = cutoff_radius(tup.r).ceil() as u64;
            let q = tup.t * (2 * reach + 2).div_ceil(tup.t);
            let table = WrappedErrorTable::new(q, tup.t, tup.r)?;
            let c = trial_rng(ctx.seed, Domain::Setup, i as u64).gen_range(0..q as i64);
            let exact = exact_center_prob(tup.t, tup.r, c, reach as i64)?;
            let target = c.rem_euclid(tup.t as i64) as u64;
            let hits = run_trials_at(ctx.jobs, ctx.seed, Domain::Main, i * p.draws, p.draws, |_, rng| {
                let x = table.sample_error(rng);
                table.find_center(c, x, rng) == target
            })
            .into_iter()
            .filter(|&h| h)
            .count();
            let freq = hits as f64 / p.draws.max(1) as f64;
            Ok((center_prob_bound(tup.t, tup.r, tup.n), exact, freq, proportion_se(exact, p.draws.max(1))))
        });
        let (bound, exact, freq, se) = res?;
        let tag = format!("t{}_r{}_n{}", tup.t, tup.r, tup.n);
        out.metric(&format!("bound_{tag}"), bound);
        out.metric(&format!("exact_prob_{tag}"), exact);
        out.metric(&format!("empirical_{tag}"), freq);
        out.metric(&format!("se_{tag}"), se);
        out.timing(&format!("seconds_{tag}"), secs);
        slowest = slowest.max(secs);
        // A zero standard error (exact = 1) still admits no deviation.
        c4 &= exact > bound && (freq - exact).abs() <= 3.0 * se + 1e-12;
        table.push(vec![
            tup.t.to_string(),
            cell(tup.r),
            tup.n.to_string(),
            cell(bound),
            cell(exact),
            cell(freq),
            cell(se),
        ]);
    }
    out.timing("center_seconds", slowest);
    out.criterion("4", c4);

    let (r, t) = (p.overlap_r, p.overlap_t);
    let half = r.ceil() as i64;
    let mut rng = trial_rng(ctx.seed, Domain::Secondary, 0);
    let mut excess = f64::NEG_INFINITY;
    let mut pairs = Table::new("overlap_pairs", &["c1", "c2", "log_overlap", "log_bound"], false);
    let mut drawn = 0;
    while drawn < p.overlap_pairs {
        let c1 = rng.gen_range(-half..=half);
        let c2 = rng.gen_range(-half..=half);
        if (c2 - c1).rem_euclid(t as i64) == 0 {
            continue;
        }
        drawn += 1;
        let lhs = overlap_log_magnitude(r, t, c2 - c1);
        let rhs = overlap_log_bound(r, t, c2 - c1);
        excess = excess.max(lhs - rhs);
        pairs.push(vec![c1.to_string(), c2.to_string(), cell(lhs), cell(rhs)]);
    }
    out.metric("overlap_max_log_excess", if drawn == 0 { 0.0 } else { excess });
    out.metric("overlap_log_slack", p.overlap_slack.ln());
    out.criterion("5", drawn > 0 && excess <= p.overlap_slack.ln());

    out.tables.push(table);
    out.tables.push(pairs);
    Ok((serde_json::to_value(&p)?, out))
}
