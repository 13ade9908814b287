//! Run artifacts: the trial log, the manifest and progress on stderr.
//!
//! A search run directory holds
//!
//! | file               | content                                         |
//! |--------------------|-------------------------------------------------|
//! | `manifest.json`    | command, merged configuration, dataset hash, seeds, version, timestamps |
//! | `schedule.json`    | planned rounds and warnings                     |
//! | `trials.jsonl`     | one record per trial, in execution order        |
//! | `best_config.json` | the selected configuration                      |
//! | `model.ckpt`       | checkpoint of the final full-fidelity model     |
//! | `report.json`      | validation and test ranking metrics of that model |
//!
//! The trial log carries no timestamps, so identical seeds give identical
//! bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use grash_core::search::{RoundGraph, RoundPlan, SearchObserver};
use grash_core::{HyperparamConfig, RankingReport, TrialResult};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const SCHEDULE: &str = "schedule.json";
pub const TRIALS: &str = "trials.jsonl";
pub const BEST_CONFIG: &str = "best_config.json";
pub const CHECKPOINT: &str = "model.ckpt";
pub const REPORT: &str = "report.json";

/// One line of the trial log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(flatten)]
    pub trial: TrialResult,
    pub config: HyperparamConfig,
}

/// Writes every finished trial as a JSON line and optionally reports
/// progress on stderr.
pub struct TrialLog<W: Write> {
    out: W,
    configs: BTreeMap<usize, HyperparamConfig>,
    progress: bool,
    done: usize,
    pool: usize,
    spent: f64,
    error: Option<std::io::Error>,
}

impl<W: Write> TrialLog<W> {
    pub fn new(out: W, configs: &[HyperparamConfig], progress: bool) -> Self {
        Self {
            out,
            configs: configs.iter().map(|c| (c.id, c.clone())).collect(),
            progress,
            done: 0,
            pool: 0,
            spent: 0.0,
            error: None,
        }
    }

    /// Flushes and returns the writer, or the first write error.
    pub fn finish(mut self, path: &Path) -> Result<W> {
        if let Some(e) = self.error.take() {
            return Err(Error::Io { path: path.to_owned(), source: e });
        }
        self.out.flush().map_err(Error::io(path))?;
        Ok(self.out)
    }
}

impl<W: Write> SearchObserver for TrialLog<W> {
    fn round_started(&mut self, plan: &RoundPlan, graph: &RoundGraph) {
        self.done = 0;
        self.pool = plan.configs;
        if self.progress {
            eprintln!(
                "round {}: {} configs, {:.3} epochs, {} triples ({} train / {} valid){}",
                plan.round,
                plan.configs,
                plan.epochs,
                graph.triples,
                graph.train_triples,
                graph.valid_triples,
                graph.core_k.map(|k| format!(", {k}-core")).unwrap_or_default()
            );
        }
    }

    fn trial_finished(&mut self, trial: &TrialResult) {
        self.done += 1;
        self.spent += trial.cost;
        if self.error.is_none() {
            let record = TrialRecord { trial: trial.clone(), config: self.configs[&trial.config_id].clone() };
            let line = serde_json::to_string(&record).expect("trial records serialize");
            if let Err(e) = writeln!(self.out, "{line}") {
                self.error = Some(e);
            }
        }
        if self.progress {
            eprintln!(
                "  trial {}/{} config {} mrr {:.4}{} (budget spent {:.3})",
                self.done,
                self.pool,
                trial.config_id,
                trial.valid_mrr,
                if trial.error.is_some() { " FAILED" } else { "" },
                self.spent
            );
        }
    }

    fn round_finished(&mut self, round: usize, survivors: &[usize]) {
        if self.progress {
            eprintln!("round {round} keeps {survivors:?}");
        }
    }
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse { path: path.to_owned(), line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// The merged configuration with every default filled in.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_sha256: Option<String>,
    pub seeds: BTreeMap<String, u64>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Command-specific facts, e.g. the number of search rounds.
    #[serde(default)]
    pub summary: serde_json::Value,
}

/// Validation and test metrics of one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub valid: Option<RankingReport>,
    pub test: Option<RankingReport>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Prints a ranking report as an aligned table.
pub fn format_report(name: &str, r: &RankingReport) -> String {
    let mut s = format!("{name:<6} queries {:>7}  MRR {:.4}", r.n_queries, r.mrr);
    for (k, v) in &r.hits_at {
        s.push_str(&format!("  Hits@{k} {v:.4}"));
    }
    s
}
