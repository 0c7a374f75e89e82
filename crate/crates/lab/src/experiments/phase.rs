use anyhow::Result;
use qlwe_core::qsim::{trace_distance_pure, PureState};
use qlwe_core::reductions::{edcp_to_slwe_phase, EdcpSampler};
use qlwe_core::zq_math::{dot_mod, rho_s};
use qlwe_core::Complex64;
use serde::{Deserialize, Serialize};

use super::edcp::{random_instance, Instance};
use super::{parse_params, Context};
use crate::record::{cell, int_list, Outcome, Table};
use crate::stats::chi_square;
use crate::trials::{run_trials, trial_rng, Domain};

pub const PARAMS: &str = "instance={q:9,alpha:2,beta_q:3,e:[1,0],runs:10000} state_runs=50 \
tolerance=1e-3 min_p_value=0.01";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// `runs` is the number of draws for the `a` marginal.
    pub instance: Instance,
    pub state_runs: usize,
    pub tolerance: f64,
    pub min_p_value: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            instance: Instance {
                q: 9,
                alpha: 2.0,
                beta_q: 3.0,
                e: vec![1, 0],
                runs: 10_000,
            },
            state_runs: 50,
            tolerance: 1e-3,
            min_p_value: 0.01,
        }
    }
}

/// `Σ_{e∈Z} ρ_w(e)·e^{2πi c e/q} |⟨a,s⟩ + e mod q⟩`, normalised.
fn target_state(q: u64, w: f64, c: f64, shift: i64) -> Result<PureState> {
    let reach = (8.0 * w).ceil() as i64 + q as i64;
    let mut amps = vec![Complex64::new(0.0, 0.0); q as usize];
    for e in -reach..=reach {
        let phase = 2.0 * std::f64::consts::PI * c * e as f64 / q as f64;
        amps[(shift + e).rem_euclid(q as i64) as usize] += Complex64::from_polar(rho_s(w, e as f64), phase);
    }
    Ok(PureState::cyclic(amps, 0.0)?)
}

pub fn run(raw: &serde_json::Value, ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    let inst = &p.instance;
    let q = inst.q;
    let params = inst.params(ctx.strict);
    let (a, b, s) = random_instance(inst, &mut trial_rng(ctx.seed, Domain::Setup, 0))?;
    let s = vec![s];
    let sampler = EdcpSampler::new(&a, &b, &params)?;
    let mut out = Outcome::default();

    let states = run_trials(ctx.jobs, ctx.seed, Domain::Main, p.state_runs, |_, rng| -> Result<_> {
        let phase = edcp_to_slwe_phase(sampler.sample(rng)?, rng)?;
        let (public, hidden) = phase.into_parts();
        let width = hidden.width.expect("EDCP output records its width");
        let c = hidden.center.expect("EDCP output records its center");
        let target = target_state(q, width, c, dot_mod(&public.a, &s, q))?;
        Ok((trace_distance_pure(&public.state, &target)?, public.a, c, width))
    });
    let mut worst = 0.0f64;
    let mut table = Table::new("phase_output", &["trial", "trace_distance"], false);
    let mut hidden = Table::new("phase_hidden", &["trial", "a", "center", "width"], true);
    for (i, r) in states.into_iter().enumerate() {
        let (d, a_out, c, w) = r?;
        worst = worst.max(d);
        table.push(vec![i.to_string(), cell(d)]);
        hidden.push(vec![i.to_string(), int_list(&a_out), cell(c), cell(w)]);
    }

    let draws = run_trials(ctx.jobs, ctx.seed, Domain::Secondary, inst.runs, |_, rng| -> Result<i64> {
        Ok(edcp_to_slwe_phase(sampler.sample(rng)?, rng)?.public().a[0])
    });
    let mut counts = vec![0u64; q as usize];
    for d in draws {
        counts[d?.rem_euclid(q as i64) as usize] += 1;
    }
    let chi = chi_square(&counts, &vec![1.0; q as usize]);
    out.metric("max_trace_distance", worst);
    out.metric("a_chi2", chi.statistic);
    out.metric("a_dof", chi.dof as f64);
    out.metric("a_p_value", chi.p_value);
    out.criterion(
        "11",
        p.state_runs > 0 && worst <= p.tolerance && chi.p_value > p.min_p_value,
    );
    out.tables.push(table);
    out.tables.push(hidden);
    Ok((serde_json::to_value(&p)?, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_separates_centers_and_shifts() {
        let base = target_state(9, 1.5, 0.5, 2).unwrap();
        let d = |s: &PureState| trace_distance_pure(&base, s).unwrap();
        assert!(d(&target_state(9, 1.5, 0.5, 2).unwrap()) < 1e-12);
        assert!(d(&target_state(9, 1.5, 1.5, 2).unwrap()) > 0.1);
        assert!(d(&target_state(9, 1.5, 0.5, 3).unwrap()) > 0.1);
    }
}
