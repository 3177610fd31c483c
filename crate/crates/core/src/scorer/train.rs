use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::batch::{assemble_batch, BatchOptions, CoordinateFrame, Labels, ViewpointBatch};
use super::model::loss_and_grad;
use super::params::{ScorerDims, ScorerParams};
use super::tensor::Matrix;
use crate::language::{mask_instruction, TextMode, Vocabulary};
use crate::world::catalog::FEATURE_DIM;
use crate::world::{Environment, Episode, ObjectId, ViewpointId};
use crate::{Error, Result, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_episodes: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Fraction of all steps spent in linear warmup; the rest decays linearly to zero.
    pub warmup_frac: f64,
    /// Chance of training on a random negative viewpoint (R).
    pub negative_rate: f64,
    pub seed: u64,
    pub model_dim: usize,
    pub k_context: usize,
    pub include_context_regions: bool,
    pub frame: CoordinateFrame,
    /// Chance that each region row is swapped for a random region of another
    /// training viewpoint.
    pub env_dropout: f64,
    /// Resample region rows with replacement.
    pub bootstrap: bool,
    pub text_mode: TextMode,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_episodes: 10,
            lr: 0.5,
            momentum: 0.9,
            weight_decay: 1e-4,
            warmup_frac: 0.1,
            negative_rate: 0.8,
            seed: 0,
            model_dim: 32,
            k_context: 4,
            include_context_regions: true,
            frame: CoordinateFrame::ViewpointRelative,
            env_dropout: 0.0,
            bootstrap: false,
            text_mode: TextMode::FullText,
            grad_clip: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn batch_options(&self, start_position: crate::geom::Vec3) -> BatchOptions {
        BatchOptions {
            k_context: self.k_context,
            include_context_regions: self.include_context_regions,
            frame: self.frame,
            start_position,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| {
            Err(Error::InvalidParams {
                name,
                reason: reason.into(),
            })
        };
        if !(0.0..=1.0).contains(&self.negative_rate) {
            return bad("negative_rate", "must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.env_dropout) {
            return bad("env_dropout", "must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.warmup_frac) {
            return bad("warmup_frac", "must be in [0, 1]");
        }
        if self.batch_episodes == 0 || self.model_dim == 0 {
            return bad(
                "batch_episodes",
                "batch size and model width must be positive",
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub positive_draws: usize,
    pub negative_draws: usize,
    /// Negative draws that fell back to a positive viewpoint because the target
    /// is visible from everywhere.
    pub fallback_positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub params: ScorerParams,
    /// Mean loss per epoch.
    pub loss_trace: Vec<f64>,
    pub stats: TrainStats,
}

/// A training viewpoint and per-region labels (indexed like `env.regions[vp]`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub viewpoint_id: ViewpointId,
    pub labels: Labels,
    pub negative: bool,
    pub fallback: bool,
}

/// `y_i = candidate && IoU(region, target) >= 0.5` for every region at `vp`.
pub fn region_labels(env: &Environment, vp: ViewpointId, target: ObjectId) -> Result<Labels> {
    let obj = env.object(target)?;
    let regions = crate::world::extract_regions(env, vp)?;
    Ok(Labels {
        y: regions
            .iter()
            .map(|r| r.candidate && r.bbox.iou(&obj.bbox) >= 0.5)
            .collect(),
    })
}

/// With probability `negative_rate` a uniformly random viewpoint that cannot
/// see the target, labelled all-false; otherwise a uniformly random valid
/// viewpoint labelled by the IoU rule.
pub fn sample_training_viewpoint(
    episode: &Episode,
    env: &Environment,
    negative_rate: f64,
    rng: &mut Rng,
) -> Result<TrainSample> {
    if !(0.0..=1.0).contains(&negative_rate) {
        return Err(Error::InvalidParams {
            name: "negative_rate",
            reason: "must be in [0, 1]".into(),
        });
    }
    let obj = env.object(episode.target_object_id)?;
    let want_negative = rng.random_bool(negative_rate);
    if want_negative {
        let negatives: Vec<ViewpointId> = env
            .viewpoint_ids()
            .filter(|v| obj.valid_viewpoint_ids.binary_search(v).is_err())
            .collect();
        if !negatives.is_empty() {
            let vp = negatives[rng.random_range(0..negatives.len())];
            let n = env.regions[vp.index()].len();
            return Ok(TrainSample {
                viewpoint_id: vp,
                labels: Labels {
                    y: alloc::vec![false; n],
                },
                negative: true,
                fallback: false,
            });
        }
    }
    let valid = &obj.valid_viewpoint_ids;
    let vp = valid[rng.random_range(0..valid.len())];
    Ok(TrainSample {
        viewpoint_id: vp,
        labels: region_labels(env, vp, episode.target_object_id)?,
        negative: false,
        fallback: want_negative,
    })
}

fn find_env(envs: &[Environment], id: u32) -> Result<&Environment> {
    envs.iter()
        .find(|e| e.id == id)
        .ok_or(Error::UnknownEnvironment(id))
}

fn rows_labels(batch: &ViewpointBatch, labels: &Labels) -> Labels {
    Labels {
        y: batch
            .sources
            .iter()
            .map(|s| labels.y[s.region_index])
            .collect(),
    }
}

fn resample_rows(batch: &mut ViewpointBatch, labels: &mut Labels, rng: &mut Rng) {
    let n = batch.num_regions();
    if n == 0 {
        return;
    }
    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut features = Matrix::zeros(n, batch.region_features.cols);
    let mut posenc = Matrix::zeros(n, batch.region_posenc.cols);
    for (i, &j) in picks.iter().enumerate() {
        features
            .row_mut(i)
            .copy_from_slice(batch.region_features.row(j));
        posenc
            .row_mut(i)
            .copy_from_slice(batch.region_posenc.row(j));
    }
    batch.region_features = features;
    batch.region_posenc = posenc;
    batch.candidate_mask = picks.iter().map(|&j| batch.candidate_mask[j]).collect();
    batch.sources = picks.iter().map(|&j| batch.sources[j]).collect();
    labels.y = picks.iter().map(|&j| labels.y[j]).collect();
}

fn env_dropout(
    batch: &mut ViewpointBatch,
    labels: &mut Labels,
    envs: &[Environment],
    opts: &BatchOptions,
    rate: f64,
    rng: &mut Rng,
) {
    for i in 0..batch.num_regions() {
        if !rng.random_bool(rate) {
            continue;
        }
        let env = &envs[rng.random_range(0..envs.len())];
        let vp = ViewpointId(rng.random_range(0..env.graph.len() as u32));
        let regions = &env.regions[vp.index()];
        let region = &regions[rng.random_range(0..regions.len())];
        batch
            .region_features
            .row_mut(i)
            .copy_from_slice(&region.feature);
        let p = match opts.frame {
            CoordinateFrame::None => [0.0; 4],
            CoordinateFrame::Absolute => {
                super::positional_encoding(region, crate::geom::Vec3::ZERO).to_array()
            }
            _ => super::positional_encoding(region, env.position(vp)).to_array(),
        };
        batch.region_posenc.row_mut(i).copy_from_slice(&p);
        batch.candidate_mask[i] = region.candidate;
        labels.y[i] = false;
    }
}

fn learning_rate(cfg: &TrainConfig, step: usize, total: usize) -> f64 {
    let warm = (libm::round(cfg.warmup_frac * total as f64) as usize)
        .max(1)
        .min(total);
    if step < warm {
        cfg.lr * (step + 1) as f64 / warm as f64
    } else if total > warm {
        cfg.lr * (total - step) as f64 / (total - warm) as f64
    } else {
        cfg.lr
    }
}

/// SGD with momentum over mini-batches of episodes, linear warmup then linear
/// decay. Every episode contributes one viewpoint batch per epoch; the
/// mini-batch gradient is the ordered mean of its episodes' gradients.
pub fn train(
    episodes: &[Episode],
    envs: &[Environment],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if episodes.is_empty() {
        return Err(Error::Empty("training episodes"));
    }
    if envs.is_empty() {
        return Err(Error::Empty("training environments"));
    }
    let dims = ScorerDims {
        vocab_size: vocab.len(),
        feature_dim: FEATURE_DIM,
        model_dim: cfg.model_dim,
    };
    let mut params = ScorerParams::init(dims, cfg.seed);
    let mut velocity = ScorerParams::zeros(dims);
    let mut rng = crate::substream(cfg.seed, 0x7472_6169, 0);
    let steps_per_epoch = episodes.len().div_ceil(cfg.batch_episodes);
    let total_steps = cfg.epochs * steps_per_epoch;
    let mut order: Vec<usize> = (0..episodes.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut stats = TrainStats::default();
    let mut step = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_episodes) {
            let mut grad = ScorerParams::zeros(dims);
            let mut chunk_loss = 0.0;
            for &idx in chunk {
                let episode = &episodes[idx];
                let env = find_env(envs, episode.environment_id)?;
                let sample = sample_training_viewpoint(episode, env, cfg.negative_rate, &mut rng)?;
                if sample.negative {
                    stats.negative_draws += 1;
                } else {
                    stats.positive_draws += 1;
                }
                stats.fallback_positives += usize::from(sample.fallback);
                let instr = mask_instruction(&episode.instruction, cfg.text_mode);
                let opts = cfg.batch_options(env.position(episode.start_viewpoint_id));
                let mut batch = assemble_batch(&instr, sample.viewpoint_id, env, &opts)?;
                let mut labels = rows_labels(&batch, &sample.labels);
                if cfg.bootstrap {
                    resample_rows(&mut batch, &mut labels, &mut rng);
                }
                if cfg.env_dropout > 0.0 {
                    env_dropout(
                        &mut batch,
                        &mut labels,
                        envs,
                        &opts,
                        cfg.env_dropout,
                        &mut rng,
                    );
                }
                let (l, g) = loss_and_grad(&params, &batch, &labels)?;
                chunk_loss += l;
                for ((_, acc), (_, gi)) in grad.tensors_mut().into_iter().zip(g.tensors()) {
                    acc.add_assign(gi);
                }
            }
            if !chunk_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    loss: chunk_loss,
                });
            }
            epoch_loss += chunk_loss;
            let inv = 1.0 / chunk.len() as f64;
            let mut norm_sq = 0.0;
            for ((_, g), (_, p)) in grad.tensors_mut().into_iter().zip(params.tensors()) {
                for (gi, pi) in g.data.iter_mut().zip(&p.data) {
                    *gi = *gi * inv + cfg.weight_decay * pi;
                    norm_sq += *gi * *gi;
                }
            }
            let norm = libm::sqrt(norm_sq);
            let clip = if cfg.grad_clip > 0.0 && norm > cfg.grad_clip {
                cfg.grad_clip / norm
            } else {
                1.0
            };
            let lr = learning_rate(cfg, step, total_steps);
            for (((_, p), (_, v)), (_, g)) in params
                .tensors_mut()
                .into_iter()
                .zip(velocity.tensors_mut())
                .zip(grad.tensors())
            {
                for ((pi, vi), gi) in p.data.iter_mut().zip(v.data.iter_mut()).zip(&g.data) {
                    *vi = cfg.momentum * *vi + gi * clip;
                    *pi -= lr * *vi;
                }
            }
            if !params.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    step,
                    loss: f64::NAN,
                });
            }
            step += 1;
        }
        loss_trace.push(epoch_loss / episodes.len() as f64);
    }
    Ok(TrainReport {
        params,
        loss_trace,
        stats,
    })
}
