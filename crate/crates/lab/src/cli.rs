use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rrex_core::benchmark::Split;

use crate::commands;
use crate::config::RunConfig;
use crate::error::Result;
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "rrex",
    version,
    about = "Generate, train, evaluate and ablate remote grounding agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset and training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// World generation parameters, replacing the config's.
    #[arg(long, global = true)]
    pub world_params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build environments, episodes and the vocabulary.
    Gen,
    /// Train scorer weights on a generated dataset.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run the agent and score it.
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Splits to evaluate (train, val_seen, val_unseen, val_large).
        #[arg(long = "split", value_parser = parse_split)]
        splits: Vec<Split>,
    },
    /// Train and evaluate every ablation row over every seed.
    Ablate {
        /// Reuse a generated dataset instead of building one from the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Row name; repeat for several rows. Replaces the configured rows.
        #[arg(long = "row", allow_hyphen_values = true)]
        rows: Vec<String>,
    },
    /// Merge results files into tables and plot-ready CSVs.
    Report {
        #[arg(long)]
        dataset: Option<PathBuf>,
        results: Vec<PathBuf>,
    },
}

fn parse_split(s: &str) -> std::result::Result<Split, String> {
    [
        Split::Train,
        Split::ValSeen,
        Split::ValUnseen,
        Split::ValLarge,
    ]
    .into_iter()
    .find(|x| x.label() == s)
    .ok_or_else(|| format!("unknown split `{s}`"))
}

/// Applies flags over the config file over defaults.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.world_params {
        cfg.benchmark.world = io::read_world_params(path)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    match &cli.command {
        Command::Gen => {}
        Command::Train { dataset } => {
            cfg.paths.dataset = dataset.clone().or(cfg.paths.dataset);
        }
        Command::Eval {
            dataset,
            weights,
            splits,
        } => {
            cfg.paths.dataset = dataset.clone().or(cfg.paths.dataset);
            cfg.paths.weights = weights.clone().or(cfg.paths.weights);
            if !splits.is_empty() {
                cfg.eval.splits = splits.clone();
            }
        }
        Command::Ablate { dataset, rows } => {
            cfg.paths.dataset = dataset.clone().or(cfg.paths.dataset);
            if !rows.is_empty() {
                cfg.ablation.rows = rows.clone();
            }
        }
        Command::Report { dataset, results } => {
            cfg.paths.dataset = dataset.clone().or(cfg.paths.dataset);
            if !results.is_empty() {
                cfg.paths.results = results.clone();
            }
        }
    }
    cfg.benchmark.world.validate()?;
    cfg.train.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<String> {
    let cfg = resolve(cli)?;
    let out = &cli.out;
    match cli.command {
        Command::Gen => commands::gen(&cfg, out),
        Command::Train { .. } => commands::train_cmd(&cfg, out),
        Command::Eval { .. } => commands::eval_cmd(&cfg, out),
        Command::Ablate { .. } => commands::ablate_cmd(&cfg, out),
        Command::Report { .. } => commands::report_cmd(&cfg, out),
    }
}
