use anyhow::Result;
use qlwe_core::reductions::gaussian_width_distance;
use qlwe_core::zq_math::rho_s;
use serde::{Deserialize, Serialize};

use super::{parse_params, Context};
use crate::record::{cell, Outcome, Table};

pub const PARAMS: &str = "pairs=[[8,10],[10,10],[5,20]] q=97 precision=16 tolerance=1e-6";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub pairs: Vec<(f64, f64)>,
    pub q: u64,
    pub precision: u64,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            pairs: vec![(8.0, 10.0), (10.0, 10.0), (5.0, 20.0)],
            q: 97,
            precision: 16,
            tolerance: 1e-6,
        }
    }
}

/// Squared mass of `ρ_β` on `Z/R` beyond `|e| ≥ q/2`, relative to the total,
/// summed over both widths.
fn tail(b1: f64, b2: f64, q: u64, precision: u64) -> f64 {
    let r = precision as f64;
    let half = (q * precision / 2) as i64;
    [b1, b2]
        .iter()
        .map(|&b| {
            let reach = half + (10.0 * b * r).ceil() as i64;
            let (mut inside, mut outside) = (0.0, 0.0);
            for k in -reach..=reach {
                let v = rho_s(b, k as f64 / r).powi(2);
                if k.abs() < half {
                    inside += v;
                } else {
                    outside += v;
                }
            }
            outside / inside
        })
        .sum()
}

pub fn run(raw: &serde_json::Value, _ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    let mut out = Outcome::default();
    let mut table = Table::new("gaussian_distance", &["beta1", "beta2", "numeric", "closed_form", "tail"], false);
    let mut ok = !p.pairs.is_empty();
    for &(b1, b2) in &p.pairs {
        let (numeric, closed) = gaussian_width_distance(b1, b2, p.q, p.precision)?;
        let t = tail(b1, b2, p.q, p.precision);
        ok &= (numeric - closed).abs() <= p.tolerance * (1.0 + t);
        if b1 == b2 {
            ok &= numeric == 0.0;
        }
        let tag = format!("b{b1}_{b2}");
        out.metric(&format!("numeric_{tag}"), numeric);
        out.metric(&format!("closed_{tag}"), closed);
        out.metric(&format!("tail_{tag}"), t);
        table.push(vec![cell(b1), cell(b2), cell(numeric), cell(closed), cell(t)]);
    }
    out.criterion("13", ok);
    out.tables.push(table);
    Ok((serde_json::to_value(&p)?, out))
}
