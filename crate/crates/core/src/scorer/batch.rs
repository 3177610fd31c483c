use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::geom::Vec3;
use crate::language::{Instruction, MAX_INSTRUCTION_TOKENS, PAD};
use crate::world::catalog::FEATURE_DIM;
use crate::world::{Environment, RegionProposal, ViewpointId};
use crate::Result;

/// Region location relative to an origin plus its radius, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosEnc4 {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub r: f64,
}

impl PosEnc4 {
    pub const ZERO: PosEnc4 = PosEnc4 {
        dx: 0.0,
        dy: 0.0,
        dz: 0.0,
        r: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.dz, self.r]
    }
}

pub fn positional_encoding(region: &RegionProposal, origin: Vec3) -> PosEnc4 {
    let d = region.center - origin;
    PosEnc4 {
        dx: d.x(),
        dy: d.y(),
        dz: d.z(),
        r: region.radius,
    }
}

/// Reference point for region positional encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum CoordinateFrame {
    /// Relative to the viewpoint the region was observed from.
    #[default]
    ViewpointRelative,
    /// Relative to the episode's start viewpoint.
    StartRelative,
    /// World coordinates.
    Absolute,
    /// All-zero encodings.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions {
    /// Number of nearest viewpoints (including the batch's own) whose mean
    /// feature is appended as a context token.
    pub k_context: usize,
    /// Keep context-only proposals as region rows.
    pub include_context_regions: bool,
    pub frame: CoordinateFrame,
    /// Episode start position, used by [`CoordinateFrame::StartRelative`].
    pub start_position: Vec3,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            k_context: 4,
            include_context_regions: true,
            frame: CoordinateFrame::ViewpointRelative,
            start_position: Vec3::ZERO,
        }
    }
}

impl BatchOptions {
    fn encode(&self, region: &RegionProposal, viewpoint_pos: Vec3) -> [f64; 4] {
        match self.frame {
            CoordinateFrame::ViewpointRelative => {
                positional_encoding(region, viewpoint_pos).to_array()
            }
            CoordinateFrame::StartRelative => {
                positional_encoding(region, self.start_position).to_array()
            }
            CoordinateFrame::Absolute => positional_encoding(region, Vec3::ZERO).to_array(),
            CoordinateFrame::None => [0.0; 4],
        }
    }
}

/// Where a batch row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegionRef {
    pub viewpoint_id: ViewpointId,
    pub region_index: usize,
}

/// One forward pass worth of input: region rows, context rows and text.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointBatch {
    pub text_ids: Vec<u32>,
    pub region_features: Matrix,
    pub region_posenc: Matrix,
    pub context_features: Matrix,
    pub candidate_mask: Vec<bool>,
    pub sources: Vec<RegionRef>,
    pub origin_viewpoint_id: Option<ViewpointId>,
}

impl ViewpointBatch {
    pub fn num_regions(&self) -> usize {
        self.region_features.rows
    }

    pub fn num_candidates(&self) -> usize {
        self.candidate_mask.iter().filter(|&&c| c).count()
    }
}

/// Per-row binary targets; all-false for a negative viewpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub y: Vec<bool>,
}

/// Instruction tokens right-padded with PAD to the maximum instruction length.
pub fn padded_text(instr: &Instruction) -> Vec<u32> {
    let mut ids = instr.tokens.clone();
    ids.truncate(MAX_INSTRUCTION_TOKENS);
    ids.resize(MAX_INSTRUCTION_TOKENS, PAD);
    ids
}

/// Mean feature of the proposals at `vp`; context-only proposals are left out
/// when `include_context_regions` is false.
pub fn viewpoint_mean_feature(
    env: &Environment,
    vp: ViewpointId,
    include_context_regions: bool,
) -> Vec<f64> {
    let mut mean = vec![0.0; FEATURE_DIM];
    let mut n = 0usize;
    for r in env.regions[vp.index()]
        .iter()
        .filter(|r| include_context_regions || r.candidate)
    {
        for (m, f) in mean.iter_mut().zip(&r.feature) {
            *m += f;
        }
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
    }
    mean
}

/// The `k` viewpoints closest to `vp` by Euclidean distance (itself first),
/// ties broken by id.
pub fn nearest_viewpoints(env: &Environment, vp: ViewpointId, k: usize) -> Vec<ViewpointId> {
    let here = env.position(vp);
    let mut all: Vec<(f64, ViewpointId)> = env
        .viewpoint_ids()
        .map(|id| (env.position(id).distance(here), id))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, id)| id).collect()
}

fn context_rows(env: &Environment, vp: ViewpointId, opts: &BatchOptions) -> Matrix {
    let neighbors = nearest_viewpoints(env, vp, opts.k_context);
    let mut m = Matrix::zeros(neighbors.len(), FEATURE_DIM);
    for (i, nb) in neighbors.into_iter().enumerate() {
        m.row_mut(i).copy_from_slice(&viewpoint_mean_feature(
            env,
            nb,
            opts.include_context_regions,
        ));
    }
    m
}

/// Batch of every proposal observed at `viewpoint_id`, with neighborhood
/// context rows.
pub fn assemble_batch(
    instr: &Instruction,
    viewpoint_id: ViewpointId,
    env: &Environment,
    opts: &BatchOptions,
) -> Result<ViewpointBatch> {
    let regions = crate::world::extract_regions(env, viewpoint_id)?;
    let refs: Vec<RegionRef> = regions
        .iter()
        .enumerate()
        .filter(|(_, r)| opts.include_context_regions || r.candidate)
        .map(|(i, _)| RegionRef {
            viewpoint_id,
            region_index: i,
        })
        .collect();
    let mut batch = rows_from_refs(instr, env, &refs, opts);
    batch.context_features = context_rows(env, viewpoint_id, opts);
    batch.origin_viewpoint_id = Some(viewpoint_id);
    Ok(batch)
}

/// Batch built from arbitrary region rows, possibly from several viewpoints.
/// Each row is encoded relative to its own viewpoint; there are no context rows.
pub fn assemble_mixed_batch(
    instr: &Instruction,
    env: &Environment,
    refs: &[RegionRef],
    opts: &BatchOptions,
) -> ViewpointBatch {
    rows_from_refs(instr, env, refs, opts)
}

fn rows_from_refs(
    instr: &Instruction,
    env: &Environment,
    refs: &[RegionRef],
    opts: &BatchOptions,
) -> ViewpointBatch {
    let n = refs.len();
    let mut features = Matrix::zeros(n, FEATURE_DIM);
    let mut posenc = Matrix::zeros(n, 4);
    let mut candidate_mask = Vec::with_capacity(n);
    for (i, rf) in refs.iter().enumerate() {
        let region = &env.regions[rf.viewpoint_id.index()][rf.region_index];
        features.row_mut(i).copy_from_slice(&region.feature);
        posenc
            .row_mut(i)
            .copy_from_slice(&opts.encode(region, env.position(rf.viewpoint_id)));
        candidate_mask.push(region.candidate);
    }
    ViewpointBatch {
        text_ids: padded_text(instr),
        region_features: features,
        region_posenc: posenc,
        context_features: Matrix::zeros(0, FEATURE_DIM),
        candidate_mask,
        sources: refs.to_vec(),
        origin_viewpoint_id: None,
    }
}
