//! Train / seen / unseen (and optional large-map) splits built from one seed.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agent::hop_ball;
use crate::language::{TemplateSet, Vocabulary};
use crate::world::{generate_environment, make_episodes, Environment, Episode, WorldParams};
use crate::{substream, Error, Result};
use rand::Rng as _;

const UNSEEN_ID_BASE: u32 = 1000;
const LARGE_ID_BASE: u32 = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub world: WorldParams,
    pub n_envs: u32,
    pub n_episodes: usize,
    pub d_min: u32,
    pub d_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub seed: u64,
    pub world: WorldParams,
    pub n_train_envs: u32,
    pub train_episodes: usize,
    /// Held-out episodes in the training environments.
    pub val_seen_episodes: usize,
    pub n_unseen_envs: u32,
    pub val_unseen_episodes: usize,
    pub d_min: u32,
    pub d_max: u32,
    /// Larger maps whose exploration ball covers only part of the environment.
    pub large: Option<SplitSpec>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            world: WorldParams {
                n_viewpoints: 192,
                n_rooms: 12,
                n_objects: 72,
                regions_per_viewpoint: 32,
                ..WorldParams::default()
            },
            n_envs: 5,
            n_episodes: 100,
            d_min: 2,
            d_max: 6,
        }
    }
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            seed: 0,
            world: WorldParams {
                regions_per_viewpoint: 32,
                ..WorldParams::default()
            },
            n_train_envs: 20,
            train_episodes: 400,
            val_seen_episodes: 100,
            n_unseen_envs: 5,
            val_unseen_episodes: 100,
            d_min: 2,
            d_max: 6,
            large: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub spec: BenchmarkSpec,
    pub vocab: Vocabulary,
    pub train_envs: Vec<Environment>,
    pub unseen_envs: Vec<Environment>,
    pub large_envs: Vec<Environment>,
    pub train: Vec<Episode>,
    pub val_seen: Vec<Episode>,
    pub val_unseen: Vec<Episode>,
    pub val_large: Vec<Episode>,
}

/// Evaluation splits of a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    ValSeen,
    ValUnseen,
    ValLarge,
}

impl Split {
    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::ValSeen => "val_seen",
            Split::ValUnseen => "val_unseen",
            Split::ValLarge => "val_large",
        }
    }
}

fn envs(base: u32, n: u32, seed: u64, salt: u64, params: &WorldParams) -> Result<Vec<Environment>> {
    (0..n)
        .map(|i| {
            let s = substream(seed, salt, u64::from(i)).random::<u64>();
            generate_environment(base + i, s, params)
        })
        .collect()
}

/// Spreads `n` episodes over `envs` as evenly as possible, earlier envs first.
fn episodes(
    envs: &[Environment],
    n: usize,
    seed: u64,
    salt: u64,
    d_min: u32,
    d_max: u32,
    templates: &TemplateSet,
) -> Result<Vec<Episode>> {
    if envs.is_empty() {
        return if n == 0 {
            Ok(Vec::new())
        } else {
            Err(Error::Empty("environments"))
        };
    }
    let k = envs.len();
    let mut out = Vec::with_capacity(n);
    for (i, env) in envs.iter().enumerate() {
        let count = n / k + usize::from(i < n % k);
        let s = substream(seed, salt, u64::from(env.id)).random::<u64>();
        out.extend(make_episodes(env, count, s, d_min, d_max, templates)?);
    }
    Ok(out)
}

pub fn build_dataset(spec: &BenchmarkSpec) -> Result<Dataset> {
    build_dataset_with(spec, &TemplateSet::standard())
}

pub fn build_dataset_with(spec: &BenchmarkSpec, templates: &TemplateSet) -> Result<Dataset> {
    let seed = spec.seed;
    let train_envs = envs(0, spec.n_train_envs, seed, 1, &spec.world)?;
    let unseen_envs = envs(UNSEEN_ID_BASE, spec.n_unseen_envs, seed, 2, &spec.world)?;
    let train = episodes(
        &train_envs,
        spec.train_episodes,
        seed,
        10,
        spec.d_min,
        spec.d_max,
        templates,
    )?;
    let mut val_seen = episodes(
        &train_envs,
        spec.val_seen_episodes,
        seed,
        11,
        spec.d_min,
        spec.d_max,
        templates,
    )?;
    // Seen episodes share environments with training; keep their ids disjoint.
    for e in &mut val_seen {
        e.id |= 1 << 31;
    }
    let val_unseen = episodes(
        &unseen_envs,
        spec.val_unseen_episodes,
        seed,
        12,
        spec.d_min,
        spec.d_max,
        templates,
    )?;
    let (large_envs, val_large) = match &spec.large {
        Some(l) => {
            let envs = envs(LARGE_ID_BASE, l.n_envs, seed, 3, &l.world)?;
            let eps = episodes(&envs, l.n_episodes, seed, 13, l.d_min, l.d_max, templates)?;
            (envs, eps)
        }
        None => (Vec::new(), Vec::new()),
    };
    Ok(Dataset {
        spec: spec.clone(),
        vocab: templates.vocab.clone(),
        train_envs,
        unseen_envs,
        large_envs,
        train,
        val_seen,
        val_unseen,
        val_large,
    })
}

impl Dataset {
    pub fn environment(&self, id: u32) -> Result<&Environment> {
        self.train_envs
            .iter()
            .chain(&self.unseen_envs)
            .chain(&self.large_envs)
            .find(|e| e.id == id)
            .ok_or(Error::UnknownEnvironment(id))
    }

    pub fn split(&self, split: Split) -> (&[Environment], &[Episode]) {
        match split {
            Split::Train => (&self.train_envs, &self.train),
            Split::ValSeen => (&self.train_envs, &self.val_seen),
            Split::ValUnseen => (&self.unseen_envs, &self.val_unseen),
            Split::ValLarge => (&self.large_envs, &self.val_large),
        }
    }

    /// Largest gold step count over the training episodes: the default
    /// exploration budget.
    pub fn max_train_steps(&self) -> u32 {
        self.train.iter().map(|e| e.gold_steps).max().unwrap_or(0)
    }
}

/// Expected grounding success of picking a uniformly random candidate region
/// inside the exploration ball: mean over episodes of `1 / |candidates|`.
pub fn random_baseline(envs: &[Environment], episodes: &[Episode], limit: u32) -> Result<f64> {
    if episodes.is_empty() {
        return Err(Error::Empty("episodes"));
    }
    let mut sum = 0.0;
    for ep in episodes {
        let env = envs
            .iter()
            .find(|e| e.id == ep.environment_id)
            .ok_or(Error::UnknownEnvironment(ep.environment_id))?;
        let n: usize = hop_ball(&env.graph, ep.start_viewpoint_id, limit)
            .iter()
            .map(|vp| {
                env.regions[vp.index()]
                    .iter()
                    .filter(|r| r.candidate)
                    .count()
            })
            .sum();
        if n == 0 {
            return Err(Error::NoCandidates);
        }
        sum += 1.0 / n as f64;
    }
    Ok(sum / episodes.len() as f64)
}
