//! Registered experiments and the code that runs them and writes their output.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::record::{Outcome, ResultRecord};

mod center;
mod edcp;
mod gaussian;
mod oblivious;
mod phase;
mod regev;
mod sieve;
mod tails;

/// What an experiment function sees.
#[derive(Clone, Copy, Debug)]
pub struct Context {
    pub seed: u64,
    pub jobs: usize,
    pub strict: bool,
    pub emit_hidden: bool,
}

type Runner = fn(&serde_json::Value, &Context) -> Result<(serde_json::Value, Outcome)>;

/// One registry entry.
pub struct ExperimentInfo {
    pub name: &'static str,
    pub criteria: &'static [&'static str],
    pub summary: &'static str,
    /// Parameter names with their defaults, as shown by `list`.
    pub params: &'static str,
    runner: Runner,
}

pub static REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "sieve-recover",
        criteria: &["1", "2", "15"],
        summary: "S|LWE> sieve recovery, conversion rate, unknown-phase collapse",
        params: sieve::PARAMS,
        runner: sieve::run,
    },
    ExperimentInfo {
        name: "center-sweep",
        criteria: &["3", "4", "5"],
        summary: "psi_d orthonormality, center-finding probability, overlap bound",
        params: center::PARAMS,
        runner: center::run,
    },
    ExperimentInfo {
        name: "oblivious-tv",
        criteria: &["6", "7", "8"],
        summary: "block recovery, oblivious sampler error law, coherent cross-check",
        params: oblivious::PARAMS,
        runner: oblivious::run,
    },
    ExperimentInfo {
        name: "edcp-verify",
        criteria: &["9", "10"],
        summary: "EDCP residual amplitude fit and offset/center laws",
        params: edcp::PARAMS,
        runner: edcp::run,
    },
    ExperimentInfo {
        name: "phase-output-verify",
        criteria: &["11"],
        summary: "EDCP to S|LWE>^phase output state and a-marginal",
        params: phase::PARAMS,
        runner: phase::run,
    },
    ExperimentInfo {
        name: "regev-sample-verify",
        criteria: &["12"],
        summary: "sample generation against the closed form as R doubles",
        params: regev::PARAMS,
        runner: regev::run,
    },
    ExperimentInfo {
        name: "gaussian-distance",
        criteria: &["13"],
        summary: "trace distance of Gaussian states against the closed form",
        params: gaussian::PARAMS,
        runner: gaussian::run,
    },
    ExperimentInfo {
        name: "tail-bounds",
        criteria: &["14"],
        summary: "additive and multiplicative tail bounds on small lattices",
        params: tails::PARAMS,
        runner: tails::run,
    },
];

pub fn find(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

fn names() -> String {
    REGISTRY.iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
}

/// The table printed by `qlwe-lab list`.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in REGISTRY {
        out.push_str(&format!(
            "{:<21} criteria {:<9} {}\n{:<21} params: {}\n",
            e.name,
            e.criteria.join(","),
            e.summary,
            "",
            e.params
        ));
    }
    out
}

/// Fills defaults from `P::default()` and rejects unknown keys.
pub(crate) fn parse_params<P: DeserializeOwned + Serialize>(raw: &serde_json::Value) -> Result<P> {
    let raw = if raw.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        raw.clone()
    };
    serde_json::from_value(raw).context("invalid experiment parameters")
}

/// A finished run before it touches the file system.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub outcome: Outcome,
}

/// Runs an experiment without writing anything.
pub fn run_in_memory(config: &ExperimentConfig, jobs: usize) -> Result<RunOutput> {
    let Some(info) = find(&config.experiment) else {
        bail!(
            "unknown experiment '{}'; registered experiments: {}",
            config.experiment,
            names()
        );
    };
    let ctx = Context {
        seed: config.seed,
        jobs,
        strict: config.strict_mode,
        emit_hidden: config.emit_hidden,
    };
    let (params, mut outcome) = (info.runner)(&config.params, &ctx)
        .with_context(|| format!("experiment {} failed", info.name))?;
    for id in info.criteria {
        outcome.pass.entry(format!("criterion_{id}")).or_insert(false);
    }
    if !config.emit_hidden {
        outcome.tables.retain(|t| !t.hidden);
    }
    let record = ResultRecord {
        experiment: info.name.to_string(),
        seed: config.seed,
        params,
        metrics: outcome.metrics.clone(),
        pass: outcome.pass.clone(),
    };
    Ok(RunOutput { record, outcome })
}

/// Runs an experiment and writes `result.json` and its tables to `config.out_dir`.
/// Returns the run and the written paths.
pub fn run(config: &ExperimentConfig, jobs: usize) -> Result<(RunOutput, Vec<PathBuf>)> {
    if find(&config.experiment).is_none() {
        return run_in_memory(config, jobs).map(|o| (o, Vec::new()));
    }
    let dir = &config.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let probe = dir.join(".write-check");
    fs::write(&probe, b"").with_context(|| format!("{} is not writable", dir.display()))?;
    fs::remove_file(&probe).ok();

    let output = run_in_memory(config, jobs)?;
    let mut written = Vec::new();
    for table in &output.outcome.tables {
        let path = dir.join(table.file_name());
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }
    let path = dir.join("result.json");
    let mut json = serde_json::to_string_pretty(&output.record)?;
    json.push('\n');
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok((output, written))
}

/// Elapsed wall-clock seconds of `f`.
pub(crate) fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_cover_every_criterion() {
        let mut ids: Vec<u32> = REGISTRY
            .iter()
            .flat_map(|e| e.criteria.iter().map(|c| c.parse::<u32>().unwrap()))
            .collect();
        ids.sort();
        assert_eq!(ids, (1..=15).collect::<Vec<_>>());
        assert_eq!(REGISTRY.len(), 8);
    }

    #[test]
    fn unknown_experiment_lists_names() {
        let cfg = ExperimentConfig::new("nope", 0, "unused");
        let err = run_in_memory(&cfg, 1).unwrap_err().to_string();
        for e in REGISTRY {
            assert!(err.contains(e.name));
        }
    }
}
