use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The `result.json` schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    /// One flag per acceptance criterion, keyed `criterion_<id>`.
    pub pass: BTreeMap<String, bool>,
}

impl ResultRecord {
    pub fn all_pass(&self) -> bool {
        self.pass.values().all(|&p| p)
    }
}

/// A CSV table produced by an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; the writer appends `.csv` or `.SECRET.csv`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub hidden: bool,
}

impl Table {
    pub fn new(name: &str, header: &[&str], hidden: bool) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            hidden,
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        if self.hidden {
            format!("{}.SECRET.csv", self.name)
        } else {
            format!("{}.csv", self.name)
        }
    }
}

/// What an experiment hands back before anything is written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
    pub tables: Vec<Table>,
    /// Wall-clock seconds per phase. Kept out of `result.json` so that it stays
    /// byte-reproducible.
    pub timings: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn criterion(&mut self, id: &str, pass: bool) {
        self.pass.insert(format!("criterion_{id}"), pass);
    }

    pub fn timing(&mut self, name: &str, seconds: f64) {
        self.timings.insert(name.to_string(), seconds);
    }
}

/// Shortest round-trip formatting for CSV cells.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

pub fn int_list(v: &[i64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
