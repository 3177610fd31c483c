//! The run configuration shared by every command.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file,
//! `--world-params`, `--seed`, then command-specific flags.

use std::path::{Path, PathBuf};

use rrex_core::agent::AgentConfig;
use rrex_core::benchmark::{BenchmarkSpec, Split};
use rrex_core::eval::{plan_rows, AblationConfig, SuccessRule};
use rrex_core::scorer::TrainConfig;
use rrex_core::SCHEMA_VERSION;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io;

pub const CONFIG_ECHO_FILE: &str = "config.json";

pub const DEFAULT_ROWS: [&str; 7] = [
    "RREx-BoT",
    "-- Region Positional Enc.",
    "-- Context Proposals",
    "-- Distance Limit",
    "-- Augmentation",
    "-- Viewpoint Grouping",
    "-- Fine-Tuning",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub splits: Vec<Split>,
    /// Resamples for the bootstrap confidence columns; 0 drops them.
    pub bootstrap_resamples: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            splits: vec![Split::ValSeen, Split::ValUnseen],
            bootstrap_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSettings {
    pub rows: Vec<String>,
    pub seeds: Vec<u64>,
    /// 0 uses the benchmark's regions per viewpoint.
    pub ungrouped_batch_size: usize,
    pub splits: Vec<Split>,
}

impl Default for AblationSettings {
    fn default() -> Self {
        AblationSettings {
            rows: DEFAULT_ROWS.iter().map(|s| s.to_string()).collect(),
            seeds: vec![0, 1, 2],
            ungrouped_batch_size: 0,
            splits: vec![Split::ValSeen, Split::ValUnseen],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory written by `gen`.
    pub dataset: Option<PathBuf>,
    /// Weights written by `train`.
    pub weights: Option<PathBuf>,
    /// Results files read by `report`.
    pub results: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub benchmark: BenchmarkSpec,
    pub train: TrainConfig,
    pub agent: AgentConfig,
    pub success_rule: SuccessRule,
    pub eval: EvalSettings,
    pub ablation: AblationSettings,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            benchmark: BenchmarkSpec::default(),
            train: TrainConfig::default(),
            agent: AgentConfig::default(),
            success_rule: SuccessRule::Visibility,
            eval: EvalSettings::default(),
            ablation: AblationSettings::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(path: &Path, text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|source| LabError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        io::check_version(path, value.get("schema_version"))?;
        serde_json::from_str(text).map_err(|source| LabError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_json(path, &io::read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Sets both the dataset seed and the training seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.benchmark.seed = seed;
        self.train.seed = seed;
    }

    pub fn ablation_config(&self) -> AblationConfig {
        AblationConfig {
            benchmark: self.benchmark.clone(),
            rows: self.ablation.rows.clone(),
            seeds: self.ablation.seeds.clone(),
            train: self.train.clone(),
            agent: self.agent.clone(),
            success_rule: self.success_rule,
            ungrouped_batch_size: self.ablation.ungrouped_batch_size,
            splits: self.ablation.splits.clone(),
        }
    }

    /// Fails early on bad toggles and parameters, before any expensive work.
    pub fn validate(&self) -> Result<()> {
        self.benchmark.world.validate()?;
        self.train.validate()?;
        plan_rows(&self.ablation_config())?;
        Ok(())
    }

    pub fn dataset_dir(&self) -> Result<&Path> {
        self.paths.dataset.as_deref().ok_or_else(|| {
            LabError::Usage("no dataset directory: pass --dataset or set paths.dataset".into())
        })
    }

    pub fn weights_path(&self) -> Result<&Path> {
        self.paths.weights.as_deref().ok_or_else(|| {
            LabError::Usage("no weights file: pass --weights or set paths.weights".into())
        })
    }

    pub fn write_echo(&self, out: &Path) -> Result<()> {
        io::write_text(&out.join(CONFIG_ECHO_FILE), &self.to_json())
    }
}
