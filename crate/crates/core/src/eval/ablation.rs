use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, judge_all, mean_std, Judgment, MetricsReport, SuccessRule};
use crate::agent::{run_episode, AgentConfig, EpisodeResult, InferenceVariant, UNLIMITED};
use crate::benchmark::{build_dataset, BenchmarkSpec, Dataset, Split};
use crate::language::TextMode;
use crate::scorer::{train, CoordinateFrame, ScorerDims, ScorerParams, TrainConfig};
use crate::world::catalog::FEATURE_DIM;
use crate::{Error, Result};

/// One named change relative to the full model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Toggle {
    Full,
    NoPositionalEncoding,
    NoContextProposals,
    NoDistanceLimit,
    NoAugmentation,
    NoGrouping,
    NoFineTuning,
    NoNeighborhood,
    NegativeRate(u32),
    Bootstrapping,
    EnvDropout(u32),
    StartRelative,
    Absolute,
    TwoStep,
    Text(TextMode),
}

impl Toggle {
    pub fn name(self) -> String {
        match self {
            Toggle::Full => "RREx-BoT".into(),
            Toggle::NoPositionalEncoding => "-- Region Positional Enc.".into(),
            Toggle::NoContextProposals => "-- Context Proposals".into(),
            Toggle::NoDistanceLimit => "-- Distance Limit".into(),
            Toggle::NoAugmentation => "-- Augmentation".into(),
            Toggle::NoGrouping => "-- Viewpoint Grouping".into(),
            Toggle::NoFineTuning => "-- Fine-Tuning".into(),
            Toggle::NoNeighborhood => "-- Viewpoint Nbhd. Feat.".into(),
            Toggle::NegativeRate(p) => format!("{p}% Negative Viewpoints"),
            Toggle::Bootstrapping => "+ Bootstrapping".into(),
            Toggle::EnvDropout(p) => format!("+ Env. Dropout {p}%"),
            Toggle::StartRelative => "Start Relative Coord.".into(),
            Toggle::Absolute => "Absolute Coord.".into(),
            Toggle::TwoStep => "+ Two-Step Inference".into(),
            Toggle::Text(m) => m.label().into(),
        }
    }

    fn apply(self, plan: &mut RowPlan, batch_size: usize) {
        let (t, a) = (&mut plan.train, &mut plan.agent);
        match self {
            Toggle::Full => {}
            Toggle::NoPositionalEncoding => {
                t.frame = CoordinateFrame::None;
                a.frame = CoordinateFrame::None;
            }
            Toggle::NoContextProposals => {
                t.include_context_regions = false;
                a.include_context_regions = false;
            }
            Toggle::NoDistanceLimit => a.limit = UNLIMITED,
            Toggle::NoAugmentation => t.negative_rate = 0.0,
            Toggle::NoGrouping => a.variant = InferenceVariant::Ungrouped { batch_size },
            Toggle::NoFineTuning => plan.fine_tune = false,
            Toggle::NoNeighborhood => {
                t.k_context = 0;
                a.k_context = 0;
            }
            Toggle::NegativeRate(p) => t.negative_rate = f64::from(p) / 100.0,
            Toggle::Bootstrapping => t.bootstrap = true,
            Toggle::EnvDropout(p) => t.env_dropout = f64::from(p) / 100.0,
            Toggle::StartRelative => {
                t.frame = CoordinateFrame::StartRelative;
                a.frame = CoordinateFrame::StartRelative;
            }
            Toggle::Absolute => {
                t.frame = CoordinateFrame::Absolute;
                a.frame = CoordinateFrame::Absolute;
            }
            Toggle::TwoStep => a.variant = InferenceVariant::TwoStep,
            Toggle::Text(m) => {
                t.text_mode = m;
                a.text_mode = m;
            }
        }
    }
}

fn percent(s: &str) -> Option<u32> {
    s.trim()
        .strip_suffix('%')?
        .trim()
        .parse()
        .ok()
        .filter(|p| *p <= 100)
}

impl FromStr for Toggle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let fixed = [
            Toggle::Full,
            Toggle::NoPositionalEncoding,
            Toggle::NoContextProposals,
            Toggle::NoDistanceLimit,
            Toggle::NoAugmentation,
            Toggle::NoGrouping,
            Toggle::NoFineTuning,
            Toggle::NoNeighborhood,
            Toggle::Bootstrapping,
            Toggle::StartRelative,
            Toggle::Absolute,
            Toggle::TwoStep,
        ];
        if let Some(t) = fixed.into_iter().find(|t| t.name() == s) {
            return Ok(t);
        }
        if let Some(m) = TextMode::ALL.into_iter().find(|m| m.label() == s) {
            return Ok(Toggle::Text(m));
        }
        match s {
            "full" => return Ok(Toggle::Full),
            "No Region Positional Enc" | "No Region Positional Enc." => {
                return Ok(Toggle::NoPositionalEncoding)
            }
            _ => {}
        }
        if let Some(p) = s.strip_suffix("Negative Viewpoints").and_then(percent) {
            return Ok(Toggle::NegativeRate(p));
        }
        if let Some(p) = s.strip_prefix("+ Env. Dropout").and_then(percent) {
            return Ok(Toggle::EnvDropout(p));
        }
        Err(Error::UnknownToggle(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    pub benchmark: BenchmarkSpec,
    /// Row names; each row may combine toggles with `" & "`.
    pub rows: Vec<String>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub agent: AgentConfig,
    pub success_rule: SuccessRule,
    /// Batch size for cross-viewpoint inference; 0 uses the per-viewpoint region count.
    pub ungrouped_batch_size: usize,
    pub splits: Vec<Split>,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            benchmark: BenchmarkSpec::default(),
            rows: Vec::new(),
            seeds: alloc::vec![0, 1, 2],
            train: TrainConfig::default(),
            agent: AgentConfig::default(),
            success_rule: SuccessRule::Visibility,
            ungrouped_batch_size: 0,
            splits: alloc::vec![Split::ValSeen, Split::ValUnseen],
        }
    }
}

/// A row resolved to concrete train/agent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowPlan {
    pub name: String,
    pub toggles: Vec<Toggle>,
    pub train: TrainConfig,
    pub agent: AgentConfig,
    /// False: evaluate the untrained initialization.
    pub fine_tune: bool,
}

impl RowPlan {
    /// Rows that train identically (for one seed) can share weights.
    pub fn same_training(&self, other: &RowPlan) -> bool {
        self.fine_tune == other.fine_tune && (!self.fine_tune || self.train == other.train)
    }
}

pub fn plan_rows(config: &AblationConfig) -> Result<Vec<RowPlan>> {
    let batch_size = match config.ungrouped_batch_size {
        0 => config.benchmark.world.regions_per_viewpoint as usize,
        n => n,
    };
    config
        .rows
        .iter()
        .map(|name| {
            // Labels such as "Only Adj & Nouns" contain the separator themselves.
            let toggles = match name.parse::<Toggle>() {
                Ok(t) => alloc::vec![t],
                Err(_) => name
                    .split(" & ")
                    .map(str::parse)
                    .collect::<Result<Vec<Toggle>>>()?,
            };
            let mut plan = RowPlan {
                name: name.clone(),
                toggles: toggles.clone(),
                train: config.train.clone(),
                agent: config.agent.clone(),
                fine_tune: true,
            };
            for t in toggles {
                t.apply(&mut plan, batch_size);
            }
            Ok(plan)
        })
        .collect()
}

/// Weights for one row and seed: trained, or the untrained initialization.
pub fn train_row(plan: &RowPlan, seed: u64, dataset: &Dataset) -> Result<ScorerParams> {
    let cfg = TrainConfig {
        seed,
        ..plan.train.clone()
    };
    if plan.fine_tune {
        Ok(train(&dataset.train, &dataset.train_envs, &dataset.vocab, &cfg)?.params)
    } else {
        let dims = ScorerDims {
            vocab_size: dataset.vocab.len(),
            feature_dim: FEATURE_DIM,
            model_dim: cfg.model_dim,
        };
        Ok(ScorerParams::init(dims, seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    pub split: Split,
    pub report: MetricsReport,
    pub results: Vec<EpisodeResult>,
    pub judgments: Vec<Judgment>,
}

pub fn evaluate_split(
    params: &ScorerParams,
    dataset: &Dataset,
    split: Split,
    agent: &AgentConfig,
    rule: SuccessRule,
) -> Result<SplitOutcome> {
    let (envs, episodes) = dataset.split(split);
    let results = episodes
        .iter()
        .map(|ep| run_episode(dataset.environment(ep.environment_id)?, ep, params, agent))
        .collect::<Result<Vec<_>>>()?;
    let judgments = judge_all(&results, envs, episodes, rule)?;
    Ok(SplitOutcome {
        split,
        report: aggregate(&judgments),
        results,
        judgments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub split: Split,
    pub mean: MetricsReport,
    pub std: MetricsReport,
    pub per_seed: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub toggles: Vec<Toggle>,
    pub seeds: Vec<u64>,
    pub splits: Vec<MetricsSummary>,
}

impl AblationRow {
    pub fn split(&self, split: Split) -> Option<&MetricsSummary> {
        self.splits.iter().find(|s| s.split == split)
    }
}

/// Folds per-seed outcomes (`outcomes[seed][split]`) into a row.
pub fn summarize_row(plan: &RowPlan, seeds: &[u64], outcomes: &[Vec<SplitOutcome>]) -> AblationRow {
    let splits = outcomes
        .first()
        .map(|first| {
            first
                .iter()
                .enumerate()
                .map(|(k, o)| {
                    let per_seed: Vec<MetricsReport> =
                        outcomes.iter().map(|s| s[k].report).collect();
                    let (mean, std) = mean_std(&per_seed);
                    MetricsSummary {
                        split: o.split,
                        mean,
                        std,
                        per_seed,
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    AblationRow {
        name: plan.name.clone(),
        toggles: plan.toggles.clone(),
        seeds: seeds.to_vec(),
        splits,
    }
}

pub fn run_ablation_suite(config: &AblationConfig) -> Result<Vec<AblationRow>> {
    let plans = plan_rows(config)?;
    if plans.is_empty() {
        return Ok(Vec::new());
    }
    run_ablation_suite_on(config, &build_dataset(&config.benchmark)?)
}

/// Runs every row and seed sequentially, training each distinct
/// configuration once per seed.
pub fn run_ablation_suite_on(
    config: &AblationConfig,
    dataset: &Dataset,
) -> Result<Vec<AblationRow>> {
    let plans = plan_rows(config)?;
    if plans.is_empty() {
        return Ok(Vec::new());
    }
    if config.seeds.is_empty() {
        return Err(Error::Empty("seeds"));
    }
    let mut trained: Vec<(usize, Vec<ScorerParams>)> = Vec::new();
    let mut rows = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let owner = plans[..i]
            .iter()
            .position(|p| p.same_training(plan))
            .unwrap_or(i);
        if owner == i {
            let weights = config
                .seeds
                .iter()
                .map(|&s| train_row(plan, s, dataset))
                .collect::<Result<Vec<_>>>()?;
            trained.push((i, weights));
        }
        let weights = &trained
            .iter()
            .find(|(o, _)| *o == owner)
            .expect("owner trained first")
            .1;
        let mut outcomes = Vec::with_capacity(config.seeds.len());
        for params in weights {
            let per_split = config
                .splits
                .iter()
                .map(|&s| evaluate_split(params, dataset, s, &plan.agent, config.success_rule))
                .collect::<Result<Vec<_>>>()?;
            outcomes.push(per_split);
        }
        rows.push(summarize_row(plan, &config.seeds, &outcomes));
    }
    Ok(rows)
}
