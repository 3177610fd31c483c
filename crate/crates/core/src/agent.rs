//! Frontier exploration inside an L-step ball, viewpoint-grouped inference
//! with a global argmax, and episode execution with path accounting.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::language::{mask_instruction, Instruction, TextMode};
use crate::scorer::tensor::Matrix;
use crate::scorer::{
    assemble_batch, assemble_mixed_batch, forward, padded_text, viewpoint_mean_feature,
    BatchOptions, CoordinateFrame, RegionRef, ScoreEntry, ScoreTable, ScorerParams, ViewpointBatch,
};
use crate::world::catalog::FEATURE_DIM;
use crate::world::{Environment, Episode, NavGraph, ViewpointId};
use crate::{substream, Error, Result};

/// Exploration budget meaning "no distance limit".
pub const UNLIMITED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub viewpoint_ids: Vec<ViewpointId>,
    pub length_m: f64,
}

impl Trajectory {
    fn start(at: ViewpointId) -> Self {
        Trajectory {
            viewpoint_ids: vec![at],
            length_m: 0.0,
        }
    }

    fn extend_along(&mut self, graph: &NavGraph, path: &[ViewpointId]) {
        for w in path.windows(2) {
            debug_assert_eq!(self.viewpoint_ids.last(), Some(&w[0]));
            self.length_m += graph.edge_length(w[0], w[1]).expect("path follows edges");
            self.viewpoint_ids.push(w[1]);
        }
    }

    pub fn end(&self) -> ViewpointId {
        *self
            .viewpoint_ids
            .last()
            .expect("trajectory is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub viewpoint_id: ViewpointId,
    pub region_index: usize,
    pub score: f64,
}

impl From<ScoreEntry> for Prediction {
    fn from(e: ScoreEntry) -> Self {
        Prediction {
            viewpoint_id: e.viewpoint_id,
            region_index: e.region_index,
            score: e.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ExploreMode {
    /// The path includes the whole frontier exploration.
    #[default]
    Explore,
    /// The map is known in advance; only the direct path to the prediction counts.
    PreExplored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: u64,
    pub environment_id: u32,
    pub trajectory: Trajectory,
    pub prediction: Prediction,
    /// Sorted ascending.
    pub visited: Vec<ViewpointId>,
    pub mode: ExploreMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub trajectory: Trajectory,
    /// Sorted ascending.
    pub visited: Vec<ViewpointId>,
}

/// Viewpoints within `limit` hops of `start`, ascending.
pub fn hop_ball(graph: &NavGraph, start: ViewpointId, limit: u32) -> Vec<ViewpointId> {
    graph
        .hop_distances(&[start])
        .iter()
        .enumerate()
        .filter(|(_, h)| h.is_some_and(|h| h <= limit))
        .map(|(i, _)| ViewpointId(i as u32))
        .collect()
}

/// Visits every viewpoint within `limit` hops of `start`, always heading for
/// the unvisited one fewest hops away (lowest id on ties) along a hop-shortest
/// path inside the ball.
pub fn frontier_explore(env: &Environment, start: ViewpointId, limit: u32) -> Result<Exploration> {
    let graph = &env.graph;
    graph.viewpoint(start)?;
    let visited = hop_ball(graph, start, limit);
    let mut in_ball = vec![false; graph.len()];
    for v in &visited {
        in_ball[v.index()] = true;
    }
    let mut seen = vec![false; graph.len()];
    seen[start.index()] = true;
    let mut remaining = visited.len() - 1;
    let mut trajectory = Trajectory::start(start);
    let mut parent: Vec<Option<ViewpointId>> = vec![None; graph.len()];
    let mut hops: Vec<u32> = vec![u32::MAX; graph.len()];
    let mut queue = VecDeque::new();

    while remaining > 0 {
        let here = trajectory.end();
        parent.iter_mut().for_each(|p| *p = None);
        hops.iter_mut().for_each(|h| *h = u32::MAX);
        hops[here.index()] = 0;
        queue.clear();
        queue.push_back(here);
        let mut best: Option<ViewpointId> = None;
        while let Some(v) = queue.pop_front() {
            if let Some(b) = best {
                if hops[v.index()] > hops[b.index()] {
                    break;
                }
            }
            if !seen[v.index()] && best.is_none_or(|b| v < b) {
                best = Some(v);
            }
            for &nb in graph.neighbors(v) {
                if in_ball[nb.index()] && hops[nb.index()] == u32::MAX {
                    hops[nb.index()] = hops[v.index()] + 1;
                    parent[nb.index()] = Some(v);
                    queue.push_back(nb);
                }
            }
        }
        let target = best.expect("ball is connected through BFS-tree paths");
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = parent[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        for v in &path[1..] {
            if !seen[v.index()] {
                seen[v.index()] = true;
                remaining -= 1;
            }
        }
        trajectory.extend_along(graph, &path);
    }
    Ok(Exploration {
        trajectory,
        visited,
    })
}

fn record_candidates(table: &mut ScoreTable, batch: &ViewpointBatch, scores: &[f64]) {
    for ((src, &cand), &score) in batch.sources.iter().zip(&batch.candidate_mask).zip(scores) {
        if cand {
            table.insert(ScoreEntry {
                viewpoint_id: src.viewpoint_id,
                region_index: src.region_index,
                score,
            });
        }
    }
}

/// Scores each visited viewpoint as its own batch and returns the global
/// argmax over candidate regions (ties: lowest viewpoint id, then region index).
pub fn infer_target(
    params: &ScorerParams,
    instr: &Instruction,
    env: &Environment,
    visited: &[ViewpointId],
    opts: &BatchOptions,
) -> Result<(Prediction, ScoreTable)> {
    if visited.is_empty() {
        return Err(Error::Empty("visited viewpoints"));
    }
    let mut table = ScoreTable::default();
    let mut best: Option<ScoreEntry> = None;
    for &vp in visited {
        let batch = assemble_batch(instr, vp, env, opts)?;
        let scores = forward(params, &batch)?;
        record_candidates(&mut table, &batch, &scores);
        // viewpoint argmax, then merge into the global one
        let local = batch
            .sources
            .iter()
            .zip(&batch.candidate_mask)
            .zip(&scores)
            .filter(|((_, &c), _)| c)
            .map(|((s, _), &score)| ScoreEntry {
                viewpoint_id: s.viewpoint_id,
                region_index: s.region_index,
                score,
            })
            .reduce(|a, b| if better(&b, &a) { b } else { a });
        if let Some(l) = local {
            if best.is_none_or(|b| better(&l, &b)) {
                best = Some(l);
            }
        }
    }
    best.map(|b| (b.into(), table)).ok_or(Error::NoCandidates)
}

fn better(a: &ScoreEntry, b: &ScoreEntry) -> bool {
    a.score > b.score
        || (a.score == b.score
            && (a.viewpoint_id, a.region_index) < (b.viewpoint_id, b.region_index))
}

/// Inference without viewpoint grouping: every region of the visited
/// viewpoints is shuffled into fixed-size batches that mix viewpoints.
pub fn infer_ungrouped(
    params: &ScorerParams,
    instr: &Instruction,
    env: &Environment,
    visited: &[ViewpointId],
    opts: &BatchOptions,
    batch_size: usize,
    seed: u64,
) -> Result<(Prediction, ScoreTable)> {
    let mut pool: Vec<RegionRef> = Vec::new();
    let mut sorted = visited.to_vec();
    sorted.sort_unstable();
    for &vp in &sorted {
        for (i, r) in crate::world::extract_regions(env, vp)?.iter().enumerate() {
            if opts.include_context_regions || r.candidate {
                pool.push(RegionRef {
                    viewpoint_id: vp,
                    region_index: i,
                });
            }
        }
    }
    pool.shuffle(&mut substream(seed, 0x756e_6772, 0));
    let mut table = ScoreTable::default();
    for chunk in pool.chunks(batch_size.max(1)) {
        let batch = assemble_mixed_batch(instr, env, chunk, opts);
        let scores = forward(params, &batch)?;
        record_candidates(&mut table, &batch, &scores);
    }
    table
        .argmax()
        .map(|b| (b.into(), table))
        .ok_or(Error::NoCandidates)
}

/// First picks a viewpoint by scoring one batch of per-viewpoint mean
/// features, then picks a region inside the winning viewpoint only.
pub fn two_step_infer(
    params: &ScorerParams,
    instr: &Instruction,
    env: &Environment,
    visited: &[ViewpointId],
    opts: &BatchOptions,
) -> Result<Prediction> {
    let mut eligible: Vec<ViewpointId> = visited
        .iter()
        .copied()
        .filter(|vp| {
            env.regions
                .get(vp.index())
                .is_some_and(|rs| rs.iter().any(|r| r.candidate))
        })
        .collect();
    eligible.sort_unstable();
    eligible.dedup();
    if eligible.is_empty() {
        return Err(Error::NoCandidates);
    }
    if eligible.len() == 1 {
        return infer_target(params, instr, env, &eligible, opts).map(|(p, _)| p);
    }
    let mut features = Matrix::zeros(eligible.len(), FEATURE_DIM);
    for (i, &vp) in eligible.iter().enumerate() {
        features.row_mut(i).copy_from_slice(&viewpoint_mean_feature(
            env,
            vp,
            opts.include_context_regions,
        ));
    }
    let summary = ViewpointBatch {
        text_ids: padded_text(instr),
        region_features: features,
        region_posenc: Matrix::zeros(eligible.len(), 4),
        context_features: Matrix::zeros(0, FEATURE_DIM),
        candidate_mask: vec![true; eligible.len()],
        sources: eligible
            .iter()
            .map(|&vp| RegionRef {
                viewpoint_id: vp,
                region_index: 0,
            })
            .collect(),
        origin_viewpoint_id: None,
    };
    let scores = forward(params, &summary)?;
    let mut winner = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[winner] {
            winner = i;
        }
    }
    infer_target(params, instr, env, &[eligible[winner]], opts).map(|(p, _)| p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum InferenceVariant {
    /// One batch per viewpoint, global argmax.
    #[default]
    Grouped,
    /// Random fixed-size batches across viewpoints.
    Ungrouped {
        batch_size: usize,
    },
    TwoStep,
    /// Candidates restricted to the valid viewpoint nearest the start.
    OracleViewpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub mode: ExploreMode,
    /// Exploration budget in hops; [`UNLIMITED`] removes the limit.
    pub limit: u32,
    pub k_context: usize,
    pub include_context_regions: bool,
    pub frame: CoordinateFrame,
    pub variant: InferenceVariant,
    pub text_mode: TextMode,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            mode: ExploreMode::Explore,
            limit: 8,
            k_context: 4,
            include_context_regions: true,
            frame: CoordinateFrame::ViewpointRelative,
            variant: InferenceVariant::Grouped,
            text_mode: TextMode::FullText,
        }
    }
}

impl AgentConfig {
    pub fn batch_options(&self, env: &Environment, episode: &Episode) -> BatchOptions {
        BatchOptions {
            k_context: self.k_context,
            include_context_regions: self.include_context_regions,
            frame: self.frame,
            start_position: env.position(episode.start_viewpoint_id),
        }
    }
}

/// Nearest valid viewpoint to the start by path length, lowest id on ties.
pub fn nearest_valid_viewpoint(env: &Environment, episode: &Episode) -> Result<ViewpointId> {
    let obj = env.object(episode.target_object_id)?;
    let dist = env.graph.distances_from(&[episode.start_viewpoint_id]);
    obj.valid_viewpoint_ids
        .iter()
        .copied()
        .min_by(|a, b| dist[a.index()].total_cmp(&dist[b.index()]).then(a.cmp(b)))
        .ok_or(Error::Empty("valid viewpoints"))
}

/// Explores (or uses the pre-explored ball), predicts a region, and accounts
/// for the path: exploration plus the shortest path to the prediction in
/// [`ExploreMode::Explore`], only the direct path in [`ExploreMode::PreExplored`].
pub fn run_episode(
    env: &Environment,
    episode: &Episode,
    params: &ScorerParams,
    cfg: &AgentConfig,
) -> Result<EpisodeResult> {
    let start = episode.start_viewpoint_id;
    let explored = frontier_explore(env, start, cfg.limit)?;
    let instr = mask_instruction(&episode.instruction, cfg.text_mode);
    let opts = cfg.batch_options(env, episode);
    let mut visited = explored.visited.clone();
    let prediction = match cfg.variant {
        InferenceVariant::Grouped => infer_target(params, &instr, env, &visited, &opts)?.0,
        InferenceVariant::Ungrouped { batch_size } => {
            infer_ungrouped(params, &instr, env, &visited, &opts, batch_size, episode.id)?.0
        }
        InferenceVariant::TwoStep => two_step_infer(params, &instr, env, &visited, &opts)?,
        InferenceVariant::OracleViewpoint => {
            let gold = nearest_valid_viewpoint(env, episode)?;
            if let Err(pos) = visited.binary_search(&gold) {
                visited.insert(pos, gold);
            }
            infer_target(params, &instr, env, &[gold], &opts)?.0
        }
    };
    let trajectory = match cfg.mode {
        ExploreMode::Explore => {
            let mut t = explored.trajectory;
            let (path, _) = env.graph.shortest_path(t.end(), prediction.viewpoint_id)?;
            t.extend_along(&env.graph, &path);
            t
        }
        ExploreMode::PreExplored => {
            let (path, _) = env.graph.shortest_path(start, prediction.viewpoint_id)?;
            let mut t = Trajectory::start(start);
            t.extend_along(&env.graph, &path);
            t
        }
    };
    Ok(EpisodeResult {
        episode_id: episode.id,
        environment_id: env.id,
        trajectory,
        prediction,
        visited,
        mode: cfg.mode,
    })
}
