//! The five commands. Each writes into `out` and returns the text it would
//! print; the resolved config is echoed next to every output.

use std::path::{Path, PathBuf};

use rrex_core::benchmark::{build_dataset, Dataset, Split};
use rrex_core::eval::judge_all;
use rrex_core::scorer::{train, TrainReport};

use crate::config::RunConfig;
use crate::error::{LabError, Result};
use crate::io::{self, ResultsFile};
use crate::parallel::{evaluate_split, run_ablation};
use crate::report::{
    ablation_records, ablation_table, breakdown, episode_records, metrics_record, metrics_table,
    rgs_interval, write_csv, Axis,
};

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

pub fn gen(cfg: &RunConfig, out: &Path) -> Result<String> {
    let ds = build_dataset(&cfg.benchmark)?;
    io::write_dataset(out, &ds)?;
    cfg.write_echo(out)?;
    Ok(format!(
        "{} train / {} unseen / {} large environments; {} train, {} val_seen, {} val_unseen, {} val_large episodes\n",
        ds.train_envs.len(),
        ds.unseen_envs.len(),
        ds.large_envs.len(),
        ds.train.len(),
        ds.val_seen.len(),
        ds.val_unseen.len(),
        ds.val_large.len()
    ))
}

pub const WEIGHTS_FILE: &str = "weights.json";
pub const LOSS_FILE: &str = "loss.csv";

#[derive(serde::Serialize)]
struct LossRecord {
    epoch: usize,
    loss: f64,
}

pub fn train_weights(cfg: &RunConfig, ds: &Dataset) -> Result<TrainReport> {
    Ok(train(&ds.train, &ds.train_envs, &ds.vocab, &cfg.train)?)
}

pub fn train_cmd(cfg: &RunConfig, out: &Path) -> Result<String> {
    let ds = io::read_dataset(cfg.dataset_dir()?)?;
    let report = train_weights(cfg, &ds)?;
    io::write_weights(&out.join(WEIGHTS_FILE), &report.params, Some(&cfg.train))?;
    let losses: Vec<LossRecord> = report
        .loss_trace
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| LossRecord { epoch, loss })
        .collect();
    write_csv(&out.join(LOSS_FILE), &losses)?;
    cfg.write_echo(out)?;
    Ok(format!(
        "trained {} parameters for {} epochs; final loss {:.5}\n",
        report.params.num_parameters(),
        report.loss_trace.len(),
        report.loss_trace.last().copied().unwrap_or(f64::NAN)
    ))
}

pub fn results_file_name(split: Split) -> String {
    format!("results_{}.json", split.label())
}

#[derive(serde::Serialize)]
struct SplitMetrics {
    split: Split,
    report: rrex_core::eval::MetricsReport,
}

pub fn eval_cmd(cfg: &RunConfig, out: &Path) -> Result<String> {
    let weights = cfg.weights_path()?;
    let ds = io::read_dataset(cfg.dataset_dir()?)?;
    let (params, _) = io::read_weights(weights)?;
    let run = file_stem(weights);
    let mut table = Vec::new();
    let mut records = Vec::new();
    let mut docs = Vec::new();
    for &split in &cfg.eval.splits {
        if ds.split(split).1.is_empty() {
            continue;
        }
        let outcome = evaluate_split(&params, &ds, split, &cfg.agent, cfg.success_rule)?;
        io::write_results(
            &out.join(results_file_name(split)),
            &ResultsFile {
                split,
                results: outcome.results.clone(),
            },
        )?;
        let ci = rgs_interval(&outcome.judgments, cfg.eval.bootstrap_resamples);
        records.push(metrics_record(&run, split, &outcome.report, ci));
        table.push((split.label().to_string(), outcome.report));
        docs.push(SplitMetrics {
            split,
            report: outcome.report,
        });
    }
    if docs.is_empty() {
        return Err(LabError::Usage(
            "none of the requested splits has episodes".into(),
        ));
    }
    io::write_doc(&out.join("metrics.json"), "metrics", &docs)?;
    write_csv(&out.join("metrics.csv"), &records)?;
    let text = metrics_table(&table);
    io::write_text(&out.join("metrics.txt"), &text)?;
    cfg.write_echo(out)?;
    Ok(text)
}

pub fn ablate_cmd(cfg: &RunConfig, out: &Path) -> Result<String> {
    let abl = cfg.ablation_config();
    rrex_core::eval::plan_rows(&abl)?;
    let ds = match &cfg.paths.dataset {
        Some(dir) => io::read_dataset(dir)?,
        None => build_dataset(&cfg.benchmark)?,
    };
    let run = run_ablation(&abl, &ds)?;
    io::write_doc(&out.join("ablation.json"), "ablation", &run.rows)?;
    write_csv(&out.join("ablation.csv"), &ablation_records(&run.rows))?;
    let mut raw = Vec::new();
    for (row, per_seed) in run.rows.iter().zip(&run.outcomes) {
        for (&seed, splits) in row.seeds.iter().zip(per_seed) {
            for outcome in splits {
                raw.extend(episode_records(&row.name, seed, outcome));
            }
        }
    }
    write_csv(&out.join("ablation_raw.csv"), &raw)?;
    let text = ablation_table(&run.rows);
    io::write_text(&out.join("ablation.txt"), &text)?;
    cfg.write_echo(out)?;
    Ok(text)
}

pub fn axis_file_name(axis: Axis) -> String {
    format!("by_{}.csv", axis.label())
}

pub fn report_cmd(cfg: &RunConfig, out: &Path) -> Result<String> {
    if cfg.paths.results.is_empty() {
        return Err(LabError::Usage("no results files given".into()));
    }
    let ds = io::read_dataset(cfg.dataset_dir()?)?;
    let mut table = Vec::new();
    let mut records = Vec::new();
    let mut axes: Vec<Vec<_>> = vec![Vec::new(); Axis::ALL.len()];
    for path in &cfg.paths.results {
        let file = io::read_results(path)?;
        let (envs, episodes) = ds.split(file.split);
        let judgments = judge_all(&file.results, envs, episodes, cfg.success_rule)?;
        let report = rrex_core::eval::aggregate(&judgments);
        let run = format!("{}:{}", file_stem(&parent_or(path)), file_stem(path));
        records.push(metrics_record(
            &run,
            file.split,
            &report,
            rgs_interval(&judgments, cfg.eval.bootstrap_resamples),
        ));
        table.push((run.clone(), report));
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            axes[k].extend(breakdown(
                &run,
                axis,
                &judgments,
                episodes,
                envs,
                cfg.agent.limit,
            ));
        }
    }
    write_csv(&out.join("report.csv"), &records)?;
    for (axis, rows) in Axis::ALL.into_iter().zip(&axes) {
        write_csv(&out.join(axis_file_name(axis)), rows)?;
    }
    let text = metrics_table(&table);
    io::write_text(&out.join("report.txt"), &text)?;
    cfg.write_echo(out)?;
    Ok(text)
}

fn parent_or(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}
