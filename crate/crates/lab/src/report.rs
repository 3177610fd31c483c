//! Aligned text tables and CSV output.

use std::collections::BTreeMap;
use std::path::Path;

use rrex_core::agent::hop_ball;
use rrex_core::benchmark::Split;
use rrex_core::eval::{bootstrap_ci, AblationRow, Judgment, MetricsReport, SplitOutcome};
use rrex_core::world::{Environment, Episode};
use serde::Serialize;

use crate::error::{LabError, Result};

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Left-aligned first column, right-aligned numbers.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len().saturating_sub(1))));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn metric_header(first: &str) -> Vec<String> {
    let mut h = vec![first.to_string(), "N".to_string()];
    h.extend(MetricsReport::FIELDS.iter().map(|f| f.to_string()));
    h
}

fn metric_cells(r: &MetricsReport) -> Vec<String> {
    let mut cells = vec![r.n_episodes.to_string(), format!("{:.2}", r.tl)];
    cells.extend(r.values()[1..].iter().map(|&v| pct(v)));
    cells
}

/// Metrics in percent, trajectory length in meters.
pub fn metrics_table(rows: &[(String, MetricsReport)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            let mut row = vec![name.clone()];
            row.extend(metric_cells(r));
            row
        })
        .collect();
    render_table(&metric_header("run"), &body)
}

/// One line per (row, split): mean ± std over seeds.
pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut header = vec!["row".to_string(), "split".to_string(), "seeds".to_string()];
    header.extend(MetricsReport::FIELDS.iter().map(|f| f.to_string()));
    let mut body = Vec::new();
    for row in rows {
        for s in &row.splits {
            let mut cells = vec![
                row.name.clone(),
                s.split.label().to_string(),
                row.seeds.len().to_string(),
            ];
            for (i, (m, d)) in s.mean.values().iter().zip(s.std.values()).enumerate() {
                cells.push(if i == 0 {
                    format!("{m:.2} ± {d:.2}")
                } else {
                    format!("{} ± {}", pct(*m), pct(d))
                });
            }
            body.push(cells);
        }
    }
    render_table(&header, &body)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| LabError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    csv::Writer::from_path(path).map_err(|source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv<R: Serialize>(path: &Path, records: &[R]) -> Result<()> {
    let err = |source| LabError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub run: String,
    pub split: String,
    pub n_episodes: usize,
    pub tl: f64,
    pub osr: f64,
    pub sr: f64,
    pub spl: f64,
    pub rgs: f64,
    pub rgspl: f64,
    pub rgs_ci_lo: Option<f64>,
    pub rgs_ci_hi: Option<f64>,
}

pub fn metrics_record(
    run: &str,
    split: Split,
    r: &MetricsReport,
    ci: Option<(f64, f64)>,
) -> MetricsRecord {
    MetricsRecord {
        run: run.to_string(),
        split: split.label().to_string(),
        n_episodes: r.n_episodes,
        tl: r.tl,
        osr: r.osr,
        sr: r.sr,
        spl: r.spl,
        rgs: r.rgs,
        rgspl: r.rgspl,
        rgs_ci_lo: ci.map(|c| c.0),
        rgs_ci_hi: ci.map(|c| c.1),
    }
}

/// 95% bootstrap interval of per-episode grounding success.
pub fn rgs_interval(judgments: &[Judgment], resamples: usize) -> Option<(f64, f64)> {
    if resamples == 0 || judgments.is_empty() {
        return None;
    }
    let values: Vec<f64> = judgments
        .iter()
        .map(|j| f64::from(u8::from(j.grounding)))
        .collect();
    Some(bootstrap_ci(&values, resamples, 0.95, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRecord {
    pub row: String,
    pub split: String,
    pub seeds: usize,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

pub fn ablation_records(rows: &[AblationRow]) -> Vec<AblationRecord> {
    let mut out = Vec::new();
    for row in rows {
        for s in &row.splits {
            for (k, name) in MetricsReport::FIELDS.iter().enumerate() {
                out.push(AblationRecord {
                    row: row.name.clone(),
                    split: s.split.label().to_string(),
                    seeds: row.seeds.len(),
                    metric: name.to_string(),
                    mean: s.mean.values()[k],
                    std: s.std.values()[k],
                });
            }
        }
    }
    out
}

/// One line per evaluated episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub run: String,
    pub seed: u64,
    pub split: String,
    pub episode_id: u64,
    pub tl: f64,
    pub success: bool,
    pub oracle_success: bool,
    pub grounding: bool,
    pub spl: f64,
    pub rgspl: f64,
}

pub fn episode_records(run: &str, seed: u64, outcome: &SplitOutcome) -> Vec<EpisodeRecord> {
    outcome
        .judgments
        .iter()
        .map(|j| EpisodeRecord {
            run: run.to_string(),
            seed,
            split: outcome.split.label().to_string(),
            episode_id: j.episode_id,
            tl: j.tl,
            success: j.success,
            oracle_success: j.oracle_success,
            grounding: j.grounding,
            spl: j.spl,
            rgspl: j.rgspl,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    InstructionLength,
    Distance,
    ViewpointsInRange,
}

impl Axis {
    pub const ALL: [Axis; 3] = [
        Axis::InstructionLength,
        Axis::Distance,
        Axis::ViewpointsInRange,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Axis::InstructionLength => "instruction_length",
            Axis::Distance => "distance",
            Axis::ViewpointsInRange => "viewpoints_in_range",
        }
    }

    /// Bin width in the axis unit: tokens, meters, viewpoints.
    pub fn bin_width(self) -> f64 {
        match self {
            Axis::InstructionLength => 1.0,
            Axis::Distance => 2.0,
            Axis::ViewpointsInRange => 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisRecord {
    pub run: String,
    pub axis: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub n: usize,
    pub sr: f64,
    pub osr: f64,
    pub rgs: f64,
}

/// Success rates binned along `axis`; `limit` is the exploration budget used
/// to count viewpoints in range.
pub fn breakdown(
    run: &str,
    axis: Axis,
    judgments: &[Judgment],
    episodes: &[Episode],
    envs: &[Environment],
    limit: u32,
) -> Vec<AxisRecord> {
    let by_id: BTreeMap<u64, &Episode> = episodes.iter().map(|e| (e.id, e)).collect();
    let mut bins: BTreeMap<i64, [usize; 4]> = BTreeMap::new();
    for j in judgments {
        let Some(ep) = by_id.get(&j.episode_id) else {
            continue;
        };
        let x = match axis {
            Axis::InstructionLength => ep.instruction.len() as f64,
            Axis::Distance => ep.gold_path_length,
            Axis::ViewpointsInRange => match envs.iter().find(|e| e.id == ep.environment_id) {
                Some(env) => hop_ball(&env.graph, ep.start_viewpoint_id, limit).len() as f64,
                None => continue,
            },
        };
        let b = bins
            .entry((x / axis.bin_width()).floor() as i64)
            .or_default();
        b[0] += 1;
        b[1] += usize::from(j.success);
        b[2] += usize::from(j.oracle_success);
        b[3] += usize::from(j.grounding);
    }
    bins.into_iter()
        .map(|(k, [n, s, o, g])| {
            let n_f = n as f64;
            AxisRecord {
                run: run.to_string(),
                axis: axis.label().to_string(),
                bin_lo: k as f64 * axis.bin_width(),
                bin_hi: (k + 1) as f64 * axis.bin_width(),
                n,
                sr: s as f64 / n_f,
                osr: o as f64 / n_f,
                rgs: g as f64 / n_f,
            }
        })
        .collect()
}
