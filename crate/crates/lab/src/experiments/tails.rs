use anyhow::{bail, Result};
use qlwe_core::reductions::verify_tail_bounds;
use qlwe_core::zq_math::SmallLattice;
use serde::{Deserialize, Serialize};

use super::{parse_params, Context};
use crate::record::{cell, Outcome, Table};

pub const PARAMS: &str = "lattices=[Z,2Z,Z2] sigmas=[6,8,12] points=25 epsilon=auto";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lattices: Vec<String>,
    pub sigmas: Vec<f64>,
    /// Points per lattice; must be a perfect square in dimension 2.
    pub points: usize,
    /// Fixed `ε`; `null` picks the smallest admissible one per `σ`.
    pub epsilon: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lattices: vec!["Z".into(), "2Z".into(), "Z2".into()],
            sigmas: vec![6.0, 8.0, 12.0],
            points: 25,
            epsilon: None,
        }
    }
}

/// The lattice and `u` points spread from `0` to the deepest hole of `L*`.
fn setup(name: &str, points: usize) -> Result<(SmallLattice, Vec<Vec<f64>>)> {
    let line = |max: f64, k: usize| -> Vec<f64> {
        (0..k).map(|i| max * i as f64 / (k.max(2) - 1) as f64).collect()
    };
    Ok(match name {
        "Z" => (SmallLattice::scaled_integers(1.0)?, line(0.5, points).into_iter().map(|u| vec![u]).collect()),
        "2Z" => (SmallLattice::scaled_integers(2.0)?, line(0.25, points).into_iter().map(|u| vec![u]).collect()),
        "Z2" => {
            let side = (points as f64).sqrt().round() as usize;
            if side * side != points {
                bail!("points must be a perfect square for Z2");
            }
            let axis = line(0.5, side);
            let us = axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect();
            (SmallLattice::z2(), us)
        }
        other => bail!("unknown lattice '{other}'; use Z, 2Z or Z2"),
    })
}

pub fn run(raw: &serde_json::Value, _ctx: &Context) -> Result<(serde_json::Value, Outcome)> {
    let p: Params = parse_params(raw)?;
    let mut out = Outcome::default();
    let mut table = Table::new(
        "tail_bounds",
        &[
            "lattice", "sigma", "u", "epsilon", "lhs", "additive_rhs", "multiplicative_rhs",
            "additive_margin", "multiplicative_margin",
        ],
        false,
    );
    let mut ok = !p.lattices.is_empty() && !p.sigmas.is_empty();
    for name in &p.lattices {
        let (lattice, us) = setup(name, p.points)?;
        let report = verify_tail_bounds(&lattice, &p.sigmas, &us, p.epsilon)?;
        ok &= report.all_hold() && report.skipped.is_empty() && report.points.len() == us.len() * p.sigmas.len();
        for s in &report.skipped {
            out.metric(&format!("skipped_{name}_sigma{}", s.sigma), 1.0);
        }
        out.metric(&format!("points_{name}"), report.points.len() as f64);
        out.metric(&format!("min_additive_margin_{name}"), report.min_additive_margin());
        out.metric(&format!("min_multiplicative_margin_{name}"), report.min_multiplicative_margin());
        for pt in &report.points {
            let u = pt.u.iter().map(|v| cell(*v)).collect::<Vec<_>>().join(" ");
            table.push(vec![
                name.clone(),
                cell(pt.sigma),
                u,
                cell(pt.epsilon),
                cell(pt.lhs),
                cell(pt.additive_rhs),
                cell(pt.multiplicative_rhs),
                cell(pt.additive_margin),
                cell(pt.multiplicative_margin),
            ]);
        }
    }
    out.criterion("14", ok);
    out.tables.push(table);
    Ok((serde_json::to_value(&p)?, out))
}
