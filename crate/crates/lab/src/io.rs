//! Versioned JSON documents.
//!
//! Every file is `{"schema_version": 1, "kind": "...", "data": ...}`. Floats go
//! through serde_json's round-trip parser, so weights reload bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use rrex_core::agent::EpisodeResult;
use rrex_core::benchmark::{BenchmarkSpec, Dataset, Split};
use rrex_core::language::Vocabulary;
use rrex_core::scorer::tensor::Matrix;
use rrex_core::scorer::{ScorerDims, ScorerParams, TrainConfig};
use rrex_core::world::{Environment, Episode, WorldParams};
use rrex_core::SCHEMA_VERSION;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const ENVIRONMENTS_FILE: &str = "environments.json";
pub const EPISODES_FILE: &str = "episodes.json";
pub const VOCAB_FILE: &str = "vocab.json";

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    kind: &'a str,
    data: &'a T,
}

#[derive(Deserialize)]
struct Header {
    schema_version: Option<serde_json::Value>,
    kind: Option<String>,
}

#[derive(Deserialize)]
struct Body<T> {
    data: T,
}

pub fn to_json<T: Serialize>(kind: &str, data: &T) -> String {
    let doc = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        data,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("documents serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| LabError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(LabError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_doc<T: Serialize>(path: &Path, kind: &str, data: &T) -> Result<()> {
    write_text(path, &to_json(kind, data))
}

/// Checks `schema_version` before anything else so that an old file reports
/// a version problem rather than a confusing field error.
pub fn check_version(path: &Path, value: Option<&serde_json::Value>) -> Result<()> {
    match value.and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => Ok(()),
        _ => Err(LabError::SchemaVersion {
            path: path.to_path_buf(),
            found: value.map_or_else(|| "none".to_string(), ToString::to_string),
            expected: SCHEMA_VERSION,
        }),
    }
}

pub fn parse_doc<T: DeserializeOwned>(path: &Path, kind: &'static str, text: &str) -> Result<T> {
    let parse_err = |source| LabError::Parse {
        path: path.to_path_buf(),
        source,
    };
    let header: Header = serde_json::from_str(text).map_err(parse_err)?;
    check_version(path, header.schema_version.as_ref())?;
    match header.kind {
        Some(k) if k == kind => {}
        found => {
            return Err(LabError::WrongKind {
                path: path.to_path_buf(),
                expected: kind,
                found: found.unwrap_or_default(),
            })
        }
    }
    let body: Body<T> = serde_json::from_str(text).map_err(parse_err)?;
    Ok(body.data)
}

pub fn read_doc<T: DeserializeOwned>(path: &Path, kind: &'static str) -> Result<T> {
    parse_doc(path, kind, &read_text(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSets {
    pub train: Vec<Environment>,
    pub unseen: Vec<Environment>,
    pub large: Vec<Environment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSets {
    pub spec: BenchmarkSpec,
    pub train: Vec<Episode>,
    pub val_seen: Vec<Episode>,
    pub val_unseen: Vec<Episode>,
    pub val_large: Vec<Episode>,
}

pub fn dataset_files(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join(ENVIRONMENTS_FILE),
        dir.join(EPISODES_FILE),
        dir.join(VOCAB_FILE),
    ]
}

pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    let [envs, eps, vocab] = dataset_files(dir);
    let env_sets = EnvironmentSets {
        train: ds.train_envs.clone(),
        unseen: ds.unseen_envs.clone(),
        large: ds.large_envs.clone(),
    };
    let ep_sets = EpisodeSets {
        spec: ds.spec.clone(),
        train: ds.train.clone(),
        val_seen: ds.val_seen.clone(),
        val_unseen: ds.val_unseen.clone(),
        val_large: ds.val_large.clone(),
    };
    write_doc(&envs, "environments", &env_sets)?;
    write_doc(&eps, "episodes", &ep_sets)?;
    write_doc(&vocab, "vocabulary", &ds.vocab)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let [envs, eps, vocab] = dataset_files(dir);
    let env_sets: EnvironmentSets = read_doc(&envs, "environments")?;
    let ep_sets: EpisodeSets = read_doc(&eps, "episodes")?;
    let vocab: Vocabulary = read_doc(&vocab, "vocabulary")?;
    Ok(Dataset {
        spec: ep_sets.spec,
        vocab,
        train_envs: env_sets.train,
        unseen_envs: env_sets.unseen,
        large_envs: env_sets.large,
        train: ep_sets.train,
        val_seen: ep_sets.val_seen,
        val_unseen: ep_sets.val_unseen,
        val_large: ep_sets.val_large,
    })
}

pub fn read_world_params(path: &Path) -> Result<WorldParams> {
    read_doc(path, "world_params")
}

/// One weight tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub dims: ScorerDims,
    /// Settings the weights were trained with; absent for untrained weights.
    pub train: Option<TrainConfig>,
    pub tensors: Vec<NamedTensor>,
}

impl WeightsFile {
    pub fn new(params: &ScorerParams, train: Option<TrainConfig>) -> Self {
        let tensors = params
            .tensors()
            .iter()
            .map(|(name, m)| NamedTensor {
                name: name.to_string(),
                rows: m.rows,
                cols: m.cols,
                data: m.data.clone(),
            })
            .collect();
        WeightsFile {
            dims: params.dims,
            train,
            tensors,
        }
    }

    pub fn into_params(self, path: &Path) -> Result<ScorerParams> {
        let mut params = ScorerParams::zeros(self.dims);
        for (name, m) in params.tensors_mut() {
            let t = self
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| {
                    LabError::Usage(format!("{}: tensor `{name}` is missing", path.display()))
                })?;
            *m = Matrix {
                rows: t.rows,
                cols: t.cols,
                data: t.data.clone(),
            };
        }
        params.validate()?;
        Ok(params)
    }
}

pub fn write_weights(
    path: &Path,
    params: &ScorerParams,
    train: Option<&TrainConfig>,
) -> Result<()> {
    write_doc(
        path,
        "scorer_params",
        &WeightsFile::new(params, train.cloned()),
    )
}

pub fn read_weights(path: &Path) -> Result<(ScorerParams, Option<TrainConfig>)> {
    let file: WeightsFile = read_doc(path, "scorer_params")?;
    let train = file.train.clone();
    Ok((file.into_params(path)?, train))
}

/// Agent output for one split: the input format of `eval` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub split: Split,
    pub results: Vec<EpisodeResult>,
}

pub fn write_results(path: &Path, results: &ResultsFile) -> Result<()> {
    write_doc(path, "episode_results", results)
}

pub fn read_results(path: &Path) -> Result<ResultsFile> {
    read_doc(path, "episode_results")
}
