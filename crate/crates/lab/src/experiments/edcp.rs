use anyhow::{ensure, Result};
use qlwe_core::reductions::{
    center_distribution_params, edcp_sigma_c, kernel_trivial, EdcpParams, EdcpSampler,
};
use qlwe_core::zq_math::{center_mod, lambda1_l2, rho_cov, rho_s, CovarianceSpec, ZMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{parse_params, Context};
use crate::record::{cell, int_list, Outcome, Table};
use crate::stats::chi_square;
use crate::trials::{run_trials, trial_rng, Domain};

pub const PARAMS: &str = "fit={q:9,alpha:2,beta_q:3,e:[1,0],runs:100} fit_tolerance=1e-6 \
law={q:257,alpha:4,beta_q:4,e:[1,0],runs:10000} min_lambda1=16 min_p_value=0.01 \
identity_tolerance=1e-12";

/// One `n = 1` EDCP instance description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub q: u64,
    pub alpha: f64,
    pub beta_q: f64,
    pub e: Vec<i64>,
    pub runs: usize,
}

impl Instance {
    pub(crate) fn params(&self, strict: bool) -> EdcpParams {
        EdcpParams {
            n: 1,
            m: self.e.len(),
            q: self.q,
            alpha: self.alpha,
            beta: self.beta_q / self.q as f64,
            gamma: self.gamma(),
            alpha_floor: 0.0,
            strict,
        }
    }

    /// The tightest `γ` with `‖e‖ ≤ γq√m`.
    fn gamma(&self) -> f64 {
        self.e_norm().max(0.5) / (self.q as f64 * (self.e.len() as f64).sqrt())
    }

    fn e_norm(&self) -> f64 {
        (self.e.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub fit: Instance,
    pub fit_tolerance: f64,
    pub law: Instance,
    pub min_lambda1: f64,
    pub min_p_value: f64,
    pub identity_tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            fit: Instance {
                q: 9,
                alpha: 2.0,
                beta_q: 3.0,
                e: vec![1, 0],
                runs: 100,
            },
            fit_tolerance: 1e-6,
            law: Instance {
                q: 257,
                alpha: 4.0,
                beta_q: 4.0,
                e: vec![1, 0],
                runs: 10_000,
            },
            min_lambda1: 16.0,
            min_p_value: 0.01,
            identity_tolerance: 1e-12,
        }
    }
}

/// A random `1 × m` matrix whose lattice decodes errors of norm `‖e‖`, with a
/// random secret, built into an LWE instance.
pub(crate) fn random_instance<R: Rng>(inst: &Instance, rng: &mut R) -> Result<(ZMatrix, Vec<i64>, i64)> {
    let q = inst.q;
    let m = inst.e.len();
    for _ in 0..10_000 {
        let a = ZMatrix::random(1, m, q, rng);
        if kernel_trivial(&a, q)? && lambda1_l2(&a, q)? > 2.0 * inst.e_norm() + 0.5 {
            let s = rng.gen_range(0..q as i64);
            let b = lwe_b(&a, s, &inst.e, q);
            return Ok((a, b, s));
        }
    }
    anyhow::bail!("no matrix with λ₁ > 2‖e‖ + 1/2 found at q = {q}")
}

fn lwe_b(a: &ZMatrix, s: i64, e: &[i64], q: u64) -> Vec<i64> {
    a.transpose_mul_mod(&[s], q)
        .iter()
        .zip(e)
        .map(|(&u, &ei)| center_mod(u as i128 + ei as i128, q))
        .collect()
}

/// Least-squares fit of `ln a(j) = k − π(j − c)²/σ²`; returns `(σ, c)`.
fn fit_gaussian(js: &[f64], amps: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = js
        .iter()
        .zip(amps)
        .filter(|(_, &a)| a > 1e-300)
        .map(|(&j, &a)| (j, a.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    // Normal equations for y = p0 + p1·j + p2·j².
    let mut m = [[0.0f64; 4]; 3];
    for &(j, y) in &pts {
        let row = [1.0, j, j * j];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += row[r] * row[c];
            }
            m[r][3] += row[r] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let p1 = m[1][3] / m[1][1];
    let p2 = m[2][3] / m[2][2];
    if p2 >= 0.0 {
        return None;
    }
    Some(((-std::f64::consts::PI / p2).sqrt(), -p1 / (2.0 * p2)))
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn amplitude_fit(p: &Params, ctx: &Context, out: &mut Outcome) -> Result<Vec<Table>> {
    let inst = &p.fit;
    let params = inst.params(ctx.strict);
    let (a, b, _) = random_instance(inst, &mut trial_rng(ctx.seed, Domain::Setup, 0))?;
    let sampler = EdcpSampler::new(&a, &b, &params)?;
    let runs = run_trials(ctx.jobs, ctx.seed, Domain::Main, inst.runs, |_, rng| sampler.sample(rng));
    let mut diag = Table::new(
        "edcp_diagnostics",
        &["trial", "sigma_formula", "sigma_fit", "c_formula", "c_fit", "l2_resid"],
        false,
    );
    let mut hidden = Table::new("edcp_hidden", &["trial", "v", "x", "y"], true);
    let (mut worst_sigma, mut worst_c, mut worst_resid) = (0.0f64, 0.0f64, 0.0f64);
    let mut all_fit = inst.runs > 0;
    for (i, sample) in runs.into_iter().enumerate() {
        let sample = sample?;
        let h = sample.hidden();
        let (sigma, c) = edcp_sigma_c(&params, &inst.e, &h.x);
        let js: Vec<f64> = sample.j_labels().iter().map(|&j| j as f64).collect();
        let amps: Vec<f64> = sample.j_marginal()?.iter().map(|p| p.sqrt()).collect();
        let (sigma_fit, c_fit) = fit_gaussian(&js, &amps).unwrap_or((f64::INFINITY, f64::INFINITY));
        let formula: Vec<f64> = js.iter().map(|&j| rho_s(sigma, j - c)).collect();
        let resid = normalized(&amps)
            .iter()
            .zip(normalized(&formula))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        worst_sigma = worst_sigma.max((sigma_fit - sigma).abs());
        worst_c = worst_c.max((c_fit - c).abs());
        worst_resid = worst_resid.max(resid);
        all_fit &= sigma_fit.is_finite() && c_fit.is_finite();
        diag.push(vec![i.to_string(), cell(sigma), cell(sigma_fit), cell(c), cell(c_fit), cell(resid)]);
        hidden.push(vec![i.to_string(), int_list(&h.v), int_list(&h.x), int_list(&sample.y)]);
    }
    out.metric("fit_max_sigma_error", if all_fit { worst_sigma } else { -1.0 });
    out.metric("fit_max_c_error", if all_fit { worst_c } else { -1.0 });
    out.metric("fit_max_l2_residual", worst_resid);
    out.metric("fit_regime_ok", sampler.regime_ok() as u8 as f64);
    out.criterion(
        "9",
        all_fit && worst_sigma <= p.fit_tolerance && worst_c <= p.fit_tolerance,
    );
    Ok(vec![diag, hidden])
}

/// The `A = (1, a)` with the largest `λ₁(L_q(A))`.
fn best_matrix(q: u64, m: usize) -> Result<(ZMatrix, f64)> {
    ensure!(m == 2, "the offset-law instance uses m = 2");
    let mut best = (ZMatrix::from_rows(&[vec![1, 1]]), 0.0);
    for a in 2..q as i64 {
        let mat = ZMatrix::from_rows(&[vec![1, center_mod(a as i128, q)]]);
        let l = lambda1_l2(&mat, q)?;
        if l > best.1 {
            best = (mat, l);
        }
    }
    Ok(best)
}

fn offset_law(p: &Params, ctx: &Context, out: &mut Outcome) -> Result<Table> {
    let inst = &p.law;
    let params = inst.params(ctx.strict);
    let q = inst.q;
    let (a, lambda1) = best_matrix(q, inst.e.len())?;
    let s = trial_rng(ctx.seed, Domain::Setup, 1).gen_range(0..q as i64);
    let b = lwe_b(&a, s, &inst.e, q);
    let sampler = EdcpSampler::new(&a, &b, &params)?;
    out.metric("law_lambda1", lambda1);
    out.metric("law_radius", sampler.radius());

    let draws = run_trials(ctx.jobs, ctx.seed, Domain::Secondary, inst.runs, |_, rng| {
        let h = sampler.sample_hidden(rng);
        (h.x, h.c)
    });

    // Offsets: every integer point of the open ball, most likely first.
    let radius = sampler.radius();
    let k = radius.ceil() as i64;
    let bq = inst.beta_q;
    let e: Vec<f64> = inst.e.iter().map(|&v| v as f64).collect();
    let cov = CovarianceSpec::scaled_identity_plus_rank_one(bq * bq / 2.0, &e, inst.alpha * inst.alpha / 2.0)?;
    let mut cells: Vec<([i64; 2], f64)> = Vec::new();
    for x1 in -k..=k {
        for x2 in -k..=k {
            if ((x1 * x1 + x2 * x2) as f64) < radius * radius {
                cells.push(([x1, x2], rho_cov(&cov, &[x1 as f64, x2 as f64])?));
            }
        }
    }
    cells.sort_by(|u, v| v.1.total_cmp(&u.1).then(u.0.cmp(&v.0)));
    let index: std::collections::HashMap<[i64; 2], usize> =
        cells.iter().enumerate().map(|(i, c)| (c.0, i)).collect();
    let mut observed = vec![0u64; cells.len()];
    for (x, _) in &draws {
        if let Some(&i) = index.get(&[x[0], x[1]]) {
            observed[i] += 1;
        }
    }
    let probs: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let chi_x = chi_square(&observed, &probs);

    // Centers on step·Z against ρ_{σ_c/step}.
    let (step, sigma_c) = center_distribution_params(&params, &inst.e);
    let ks: Vec<i64> = draws.iter().map(|(_, c)| (c / step).round() as i64).collect();
    let on_grid = draws
        .iter()
        .zip(&ks)
        .all(|((_, c), &k)| (c - k as f64 * step).abs() < 1e-9);
    let kmax = ks.iter().map(|k| k.abs()).max().unwrap_or(0) + 1;
    let mut order: Vec<i64> = (-kmax..=kmax).collect();
    order.sort_by_key(|k| (k.abs(), *k));
    let observed_c: Vec<u64> = order.iter().map(|k| ks.iter().filter(|&&v| v == *k).count() as u64).collect();
    let probs_c: Vec<f64> = order.iter().map(|&k| rho_s(sigma_c / step, k as f64)).collect();
    let chi_c = chi_square(&observed_c, &probs_c);

    let (sigma, _) = edcp_sigma_c(&params, &inst.e, &vec![0; inst.e.len()]);
    let identity = inst.alpha * inst.e_norm() / (2f64.sqrt() * bq) * sigma;
    let identity_gap = (sigma_c - identity).abs();

    out.metric("law_x_chi2", chi_x.statistic);
    out.metric("law_x_dof", chi_x.dof as f64);
    out.metric("law_x_p_value", chi_x.p_value);
    out.metric("law_c_chi2", chi_c.statistic);
    out.metric("law_c_dof", chi_c.dof as f64);
    out.metric("law_c_p_value", chi_c.p_value);
    out.metric("law_center_step", step);
    out.metric("law_sigma_c", sigma_c);
    out.metric("law_identity_gap", identity_gap);
    out.criterion(
        "10",
        on_grid
            && chi_x.p_value > p.min_p_value
            && chi_c.p_value > p.min_p_value
            && identity_gap <= p.identity_tolerance
            && lambda1 >= p.min_lambda1,
    );

    let mut table = Table::new("edcp_offset_law", &["x1", "x2", "observed", "expected"], false);
    let total: f64 = probs.iter().sum();
    for (c, o) in cells.iter().zip(&observed) {
        table.push(vec![
            c.0[0].to_string(),
            c.0[1].to_string(),
            o.to_string(),
            cell(inst.runs as f64 * c.1 / total),
        ]);
    }
    Ok(table)
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    let mut out = Outcome::default();
    let tables = amplitude_fit(&p, ctx, &mut out)?;
    out.tables.extend(tables);
    let law = offset_law(&p, ctx, &mut out)?;
    out.tables.push(law);
    Ok((serde_json::to_value(&p)?, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_gaussian() {
        let js: Vec<f64> = (-6..=6).map(|j| j as f64).collect();
        let amps: Vec<f64> = js.iter().map(|&j| 3.0 * rho_s(1.7, j + 0.4)).collect();
        let (s, c) = fit_gaussian(&js, &amps).unwrap();
        assert!((s - 1.7).abs() < 1e-10 && (c + 0.4).abs() < 1e-10);
    }
}
