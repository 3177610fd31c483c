use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agent::EpisodeResult;
use crate::world::{Environment, Episode, ViewpointId};
use crate::{substream, Error, Result};

/// What counts as arriving at the target.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum SuccessRule {
    /// The viewpoint sees the target (it is one of its valid viewpoints).
    #[default]
    Visibility,
    /// The viewpoint lies within this many meters of the target center.
    WithinRadius(f64),
}

impl SuccessRule {
    fn accepts(self, env: &Environment, episode: &Episode, vp: ViewpointId) -> bool {
        match self {
            SuccessRule::Visibility => env.is_valid_viewpoint(episode.target_object_id, vp),
            SuccessRule::WithinRadius(r) => env
                .objects
                .get(episode.target_object_id.index())
                .is_some_and(|o| env.position(vp).distance(o.center) <= r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_episodes: usize,
    /// Mean trajectory length, meters.
    pub tl: f64,
    pub sr: f64,
    pub osr: f64,
    pub spl: f64,
    pub rgs: f64,
    pub rgspl: f64,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 6] = ["TL", "OSR", "SR", "SPL", "RGS", "RGSPL"];

    /// Values in the order of [`MetricsReport::FIELDS`].
    pub fn values(&self) -> [f64; 6] {
        [self.tl, self.osr, self.sr, self.spl, self.rgs, self.rgspl]
    }

    fn from_values(n_episodes: usize, v: [f64; 6]) -> Self {
        MetricsReport {
            n_episodes,
            tl: v[0],
            osr: v[1],
            sr: v[2],
            spl: v[3],
            rgs: v[4],
            rgspl: v[5],
        }
    }

    /// SPL <= SR, RGSPL <= RGS, RGS <= SR, OSR >= SR.
    pub fn satisfies_order_constraints(&self) -> bool {
        let eps = 1e-12;
        self.spl <= self.sr + eps
            && self.rgspl <= self.rgs + eps
            && self.rgs <= self.sr + eps
            && self.osr + eps >= self.sr
    }
}

/// Per-episode judgments behind a [`MetricsReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub episode_id: u64,
    pub tl: f64,
    pub success: bool,
    pub oracle_success: bool,
    pub spl: f64,
    pub grounding: bool,
    pub rgspl: f64,
}

fn path_weight(success: bool, shortest: f64, taken: f64) -> f64 {
    if !success {
        0.0
    } else if shortest <= 0.0 {
        1.0
    } else {
        shortest / taken.max(shortest)
    }
}

/// SR: the trajectory ends where the target counts as reached.
pub fn navigation_success(
    result: &EpisodeResult,
    env: &Environment,
    episode: &Episode,
    rule: SuccessRule,
) -> bool {
    rule.accepts(env, episode, result.trajectory.end())
}

/// OSR: some viewpoint along the trajectory counts as reached.
pub fn oracle_navigation_success(
    result: &EpisodeResult,
    env: &Environment,
    episode: &Episode,
    rule: SuccessRule,
) -> bool {
    result
        .trajectory
        .viewpoint_ids
        .iter()
        .any(|&vp| rule.accepts(env, episode, vp))
}

/// RGS: the predicted region overlaps the target with IoU >= 0.5 and was
/// chosen from a viewpoint that counts as reaching the target.
pub fn grounding_success(
    result: &EpisodeResult,
    env: &Environment,
    episode: &Episode,
    rule: SuccessRule,
) -> Result<bool> {
    let p = &result.prediction;
    let region = env
        .regions
        .get(p.viewpoint_id.index())
        .and_then(|rs| rs.get(p.region_index))
        .ok_or(Error::UnknownViewpoint(p.viewpoint_id))?;
    let target = env.object(episode.target_object_id)?;
    Ok(region.bbox.iou(&target.bbox) >= 0.5 && rule.accepts(env, episode, p.viewpoint_id))
}

pub fn judge(
    result: &EpisodeResult,
    env: &Environment,
    episode: &Episode,
    rule: SuccessRule,
) -> Result<Judgment> {
    let success = navigation_success(result, env, episode, rule);
    let grounding = grounding_success(result, env, episode, rule)?;
    let tl = result.trajectory.length_m;
    Ok(Judgment {
        episode_id: episode.id,
        tl,
        success,
        oracle_success: oracle_navigation_success(result, env, episode, rule),
        spl: path_weight(success, episode.gold_path_length, tl),
        grounding,
        rgspl: path_weight(grounding, episode.gold_path_length, tl),
    })
}

/// Judges every result against its episode (matched by id) and averages.
/// Sums run in episode-id order, so the report does not depend on the order
/// of `results`.
pub fn compute_metrics(
    results: &[EpisodeResult],
    envs: &[Environment],
    episodes: &[Episode],
    rule: SuccessRule,
) -> Result<MetricsReport> {
    Ok(aggregate(&judge_all(results, envs, episodes, rule)?))
}

pub fn judge_all(
    results: &[EpisodeResult],
    envs: &[Environment],
    episodes: &[Episode],
    rule: SuccessRule,
) -> Result<Vec<Judgment>> {
    if results.is_empty() {
        return Err(Error::Empty("episode results"));
    }
    let by_id: BTreeMap<u64, &Episode> = episodes.iter().map(|e| (e.id, e)).collect();
    let mut judgments = results
        .iter()
        .map(|r| {
            let episode = by_id
                .get(&r.episode_id)
                .ok_or(Error::UnknownEpisode(r.episode_id))?;
            let env = envs
                .iter()
                .find(|e| e.id == episode.environment_id)
                .ok_or(Error::UnknownEnvironment(episode.environment_id))?;
            judge(r, env, episode, rule)
        })
        .collect::<Result<Vec<_>>>()?;
    judgments.sort_by_key(|j| j.episode_id);
    Ok(judgments)
}

pub fn aggregate(judgments: &[Judgment]) -> MetricsReport {
    let n = judgments.len();
    if n == 0 {
        return MetricsReport::default();
    }
    let mut sums = [0.0; 6];
    for j in judgments {
        let v = [
            j.tl,
            f64::from(u8::from(j.oracle_success)),
            f64::from(u8::from(j.success)),
            j.spl,
            f64::from(u8::from(j.grounding)),
            j.rgspl,
        ];
        for (s, x) in sums.iter_mut().zip(v) {
            *s += x;
        }
    }
    MetricsReport::from_values(n, sums.map(|s| s / n as f64))
}

/// Mean and (population) standard deviation of each metric across reports.
pub fn mean_std(reports: &[MetricsReport]) -> (MetricsReport, MetricsReport) {
    let k = reports.len().max(1) as f64;
    let mut mean = [0.0; 6];
    for r in reports {
        for (m, v) in mean.iter_mut().zip(r.values()) {
            *m += v / k;
        }
    }
    let mut var = [0.0; 6];
    for r in reports {
        for ((s, v), m) in var.iter_mut().zip(r.values()).zip(mean) {
            *s += (v - m) * (v - m) / k;
        }
    }
    let n = reports.first().map_or(0, |r| r.n_episodes);
    (
        MetricsReport::from_values(n, mean),
        MetricsReport::from_values(n, var.map(libm::sqrt)),
    )
}

/// Percentile bootstrap interval of the mean of `values`.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> (f64, f64) {
    if values.is_empty() || resamples == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = substream(seed, 0x626f_6f74, 0);
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let lo = ((alpha * resamples as f64) as usize).min(resamples - 1);
    let hi = (((1.0 - alpha) * resamples as f64) as usize).min(resamples - 1);
    (means[lo], means[hi])
}
