use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Environment, ObjectId, ViewpointId};
use crate::language::{generate_instruction, Instruction, TemplateSet};
use crate::{substream, Error, Result};

const STREAM_EPISODE: u64 = 0x6570_6973;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// Unique across environments: `(environment_id << 32) | index`.
    pub id: u64,
    pub environment_id: u32,
    pub start_viewpoint_id: ViewpointId,
    pub instruction: Instruction,
    pub target_object_id: ObjectId,
    /// Shortest path length from the start to the nearest valid viewpoint, meters.
    pub gold_path_length: f64,
    /// Fewest hops from the start to any valid viewpoint.
    pub gold_steps: u32,
}

/// Samples `n` episodes whose start lies `d_min..=d_max` hops from the nearest
/// viewpoint that sees the target.
pub fn make_episodes(
    env: &Environment,
    n: usize,
    seed: u64,
    d_min: u32,
    d_max: u32,
    templates: &TemplateSet,
) -> Result<Vec<Episode>> {
    if d_min > d_max {
        return Err(Error::InvalidParams {
            name: "d_min",
            reason: format!("{d_min} > d_max {d_max}"),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let hops: Vec<Vec<Option<u32>>> = env
        .objects
        .iter()
        .map(|o| env.graph.hop_distances(&o.valid_viewpoint_ids))
        .collect();
    let eligible: Vec<(ObjectId, Vec<ViewpointId>)> = env
        .objects
        .iter()
        .zip(&hops)
        .filter_map(|(o, h)| {
            let starts: Vec<ViewpointId> = h
                .iter()
                .enumerate()
                .filter(|(_, d)| d.is_some_and(|d| (d_min..=d_max).contains(&d)))
                .map(|(i, _)| ViewpointId(i as u32))
                .collect();
            (!starts.is_empty()).then_some((o.id, starts))
        })
        .collect();
    if eligible.is_empty() {
        let all = hops.iter().flatten().flatten();
        let lo = all.clone().min().copied().unwrap_or(0);
        let hi = all.max().copied().unwrap_or(0);
        return Err(Error::DistanceRange {
            min: d_min,
            max: d_max,
            achievable: format!("{lo}..={hi}"),
        });
    }

    (0..n)
        .map(|i| {
            let mut rng = substream(seed, STREAM_EPISODE, i as u64);
            let (target, starts) = &eligible[rng.random_range(0..eligible.len())];
            let start = starts[rng.random_range(0..starts.len())];
            let obj = env.object(*target)?;
            let gold_steps =
                hops[target.index()][start.index()].expect("start drawn from reachable set");
            let gold_path_length =
                env.graph.distances_from(&obj.valid_viewpoint_ids)[start.index()];
            let instruction = generate_instruction(env, *target, rng.random(), templates)?;
            Ok(Episode {
                id: ((env.id as u64) << 32) | i as u64,
                environment_id: env.id,
                start_viewpoint_id: start,
                instruction,
                target_object_id: *target,
                gold_path_length,
                gold_steps,
            })
        })
        .collect()
}
