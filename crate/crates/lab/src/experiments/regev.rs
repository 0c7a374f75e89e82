use anyhow::{ensure, Result};
use qlwe_core::reductions::{regev_generate_sample, width_grid, RegevParams};
use qlwe_core::zq_math::SmallLattice;
use serde::{Deserialize, Serialize};

use super::{parse_params, Context};
use crate::record::{cell, Outcome, Table};
use crate::stats::chi_square;
use crate::trials::{run_trials, Domain};

pub const PARAMS: &str = "lattice_scale=1 q=5 alpha=0.15 r=48 grid_m=2 x=3.0137 \
precisions=[64,128,256,512] tolerance_first=0.05 tolerance_at_256=0.01 marginal_runs=10000 \
marginal_precision=4 min_p_value=0.01";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// The lattice is `lattice_scale·Z`.
    pub lattice_scale: f64,
    pub q: u64,
    pub alpha: f64,
    pub r: f64,
    pub grid_m: usize,
    /// The CVP target.
    pub x: f64,
    pub precisions: Vec<u64>,
    pub tolerance_first: f64,
    pub tolerance_at_256: f64,
    pub marginal_runs: usize,
    pub marginal_precision: u64,
    pub min_p_value: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lattice_scale: 1.0,
            q: 5,
            alpha: 0.15,
            r: 48.0,
            grid_m: 2,
            x: 3.0137,
            precisions: vec![64, 128, 256, 512],
            tolerance_first: 0.05,
            tolerance_at_256: 0.01,
            marginal_runs: 10_000,
            marginal_precision: 4,
            min_p_value: 0.01,
        }
    }
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    ensure!(!p.precisions.is_empty(), "at least one precision is needed");
    let lattice = SmallLattice::scaled_integers(p.lattice_scale)?;
    let grid = width_grid(p.alpha, p.q, p.grid_m)?;
    let mut out = Outcome::default();
    let mut ok = true;
    let mut regime = true;
    for (i, &sigma) in grid.iter().enumerate() {
        // One stream per width, restarted for every R, so that only R varies.
        let dists = p
            .precisions
            .iter()
            .map(|&precision| {
                let params = RegevParams { q: p.q, alpha: p.alpha, sigma, r: p.r, precision };
                let mut rng = crate::trials::trial_rng(ctx.seed, Domain::Main, i as u64);
                let rec = regev_generate_sample(&lattice, &[p.x], &params, &mut rng)?;
                regime &= rec.regime_ok;
                Ok((precision, rec.formula_distance()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Table::new(&format!("regev_sigma{i}"), &["R", "l2_distance"], false);
        for &(precision, d) in &dists {
            out.metric(&format!("distance_sigma{i}_R{precision}"), d);
            table.push(vec![precision.to_string(), cell(d)]);
            if precision == 256 {
                ok &= d <= p.tolerance_at_256;
            }
        }
        ok &= dists[0].1 <= p.tolerance_first;
        ok &= dists.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1);
        out.metric(&format!("sigma{i}"), sigma);
        out.tables.push(table);
    }
    ok &= p.precisions.contains(&256);

    let draws = run_trials(ctx.jobs, ctx.seed, Domain::Secondary, p.marginal_runs, |_, rng| -> Result<i64> {
        let params = RegevParams {
            q: p.q,
            alpha: p.alpha,
            sigma: grid[0],
            r: p.r,
            precision: p.marginal_precision,
        };
        Ok(regev_generate_sample(&lattice, &[p.x], &params, rng)?.a[0])
    });
    let mut counts = vec![0u64; p.q as usize];
    for a in draws {
        counts[a?.rem_euclid(p.q as i64) as usize] += 1;
    }
    let chi = chi_square(&counts, &vec![1.0; p.q as usize]);
    out.metric("a_chi2", chi.statistic);
    out.metric("a_p_value", chi.p_value);
    out.metric("regime_ok", regime as u8 as f64);
    out.criterion("12", ok && chi.p_value > p.min_p_value);
    Ok((serde_json::to_value(&p)?, out))
}
