//! TOML run configuration. Every command-line flag of `grash search`,
//! `grash train` and `grash transfer` has a key here; flags win over file
//! values, and unset keys take the documented defaults.
//!
//! ```toml
//! dataset = "data/fb15k"
//! out = "runs/fb"
//! workers = 4
//! # Either a preset ("default" or "desk") or a full [space] table with the
//! # fields of `grash_core::SearchSpace`.
//! space_preset = "default"
//!
//! [model]
//! scorer = "complex"      # complex | transe | rotate
//! dim = 128
//! norm = "l2"             # TransE only: l1 | l2
//!
//! [search]
//! budget = 3.0
//! trials = 64
//! eta = 4
//! variant = "combined"    # epoch | graph | combined
//! max_epochs = 20
//! seed = 0
//! valid_size = 5000
//! reduction = "kcore"     # kcore | triple | walk
//! walk_length = 10
//! final_epochs = 20       # defaults to max_epochs
//!
//! [transfer]
//! configs = 30
//! techniques = ["kcore", "walk", "triple", "epoch", "combined"]
//! budgets = [0.01, 0.05, 0.1, 0.25, 0.5]
//! ```

use std::path::{Path, PathBuf};

use grash_core::SearchSpace;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub scorer: Option<String>,
    pub dim: Option<usize>,
    pub norm: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub budget: Option<f64>,
    pub trials: Option<usize>,
    pub eta: Option<usize>,
    pub variant: Option<String>,
    pub max_epochs: Option<f64>,
    pub seed: Option<u64>,
    pub valid_size: Option<usize>,
    pub reduction: Option<String>,
    pub walk_length: Option<usize>,
    pub final_epochs: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    pub configs: Option<usize>,
    pub techniques: Option<Vec<String>>,
    pub budgets: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub transfer: TransferSection,
    pub space_preset: Option<String>,
    pub space: Option<SearchSpace>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(path, e.to_string().trim_end().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(Error::io(path))?, path)
    }

    /// The search space: an explicit table, else the named preset.
    pub fn search_space(&self, preset_override: Option<&str>) -> Result<SearchSpace> {
        match (preset_override, &self.space, self.space_preset.as_deref()) {
            (Some(p), _, _) | (None, None, Some(p)) => preset(p),
            (None, Some(s), _) => Ok(s.clone()),
            (None, None, None) => Ok(SearchSpace::default()),
        }
    }
}

pub fn preset(name: &str) -> Result<SearchSpace> {
    match name {
        "default" => Ok(SearchSpace::default()),
        "desk" => Ok(SearchSpace::desk()),
        _ => Err(Error::Core(grash_core::Error::InvalidParam(format!("unknown space preset {name:?} (default | desk)")))),
    }
}
