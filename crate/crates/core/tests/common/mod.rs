//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrex_core::agent::{EpisodeResult, ExploreMode, Prediction, Trajectory};
use rrex_core::geom::Vec3;
use rrex_core::world::{Environment, Episode, NavGraph, Viewpoint, ViewpointId, WorldParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adjacency lists rebuilt from the edge list alone.
pub fn adjacency(graph: &NavGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.viewpoints.len()];
    for e in &graph.edges {
        adj[e.a.index()].push(e.b.index());
        adj[e.b.index()].push(e.a.index());
    }
    adj
}

pub fn bfs_hops(graph: &NavGraph, start: ViewpointId) -> Vec<Option<u32>> {
    let adj = adjacency(graph);
    let mut hops = vec![None; adj.len()];
    hops[start.index()] = Some(0);
    let mut q = VecDeque::from([start.index()]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if hops[w].is_none() {
                hops[w] = Some(hops[v].unwrap() + 1);
                q.push_back(w);
            }
        }
    }
    hops
}

pub fn bfs_ball(graph: &NavGraph, start: ViewpointId, limit: u32) -> Vec<ViewpointId> {
    bfs_hops(graph, start)
        .iter()
        .enumerate()
        .filter(|(_, h)| h.is_some_and(|h| h <= limit))
        .map(|(i, _)| ViewpointId(i as u32))
        .collect()
}

/// Sum of Euclidean lengths along `walk`, or `None` if a step is not an edge.
pub fn walk_length(graph: &NavGraph, walk: &[ViewpointId]) -> Option<f64> {
    let mut total = 0.0;
    for w in walk.windows(2) {
        let e = graph
            .edges
            .iter()
            .find(|e| (e.a == w[0] && e.b == w[1]) || (e.a == w[1] && e.b == w[0]))?;
        total += e.length;
    }
    Some(total)
}

/// A connected random graph: a random spanning tree plus extra chords.
pub fn random_graph_env(seed: u64, n: usize) -> Environment {
    let mut r = rng(seed);
    let viewpoints: Vec<Viewpoint> = (0..n)
        .map(|i| Viewpoint {
            id: ViewpointId(i as u32),
            position: Vec3::new(r.random_range(0.0..20.0), r.random_range(0.0..20.0), 1.5),
            room_id: 0,
            neighbor_ids: Vec::new(),
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((
            ViewpointId(r.random_range(0..i) as u32),
            ViewpointId(i as u32),
        ));
    }
    for _ in 0..n / 2 {
        let a = r.random_range(0..n) as u32;
        let b = r.random_range(0..n) as u32;
        pairs.push((ViewpointId(a), ViewpointId(b)));
    }
    Environment {
        id: 0,
        seed,
        params: WorldParams::default(),
        rooms: Vec::new(),
        graph: NavGraph::from_edges(viewpoints, &pairs),
        objects: Vec::new(),
        regions: vec![Vec::new(); n],
    }
}

/// Random edge-valid walks from each episode start, ending at a prediction
/// that is sometimes the target's best proposal.
pub fn random_results(env: &Environment, episodes: &[Episode], seed: u64) -> Vec<EpisodeResult> {
    let mut r = rng(seed);
    let adj = adjacency(&env.graph);
    episodes
        .iter()
        .map(|ep| {
            let mut walk = vec![ep.start_viewpoint_id];
            let steps = r.random_range(0..8);
            for _ in 0..steps {
                let here = walk.last().unwrap().index();
                walk.push(ViewpointId(
                    adj[here][r.random_range(0..adj[here].len())] as u32,
                ));
            }
            let target = &env.objects[ep.target_object_id.index()];
            if r.random_bool(0.4) {
                // finish with a hop-by-hop walk to a valid viewpoint
                let goal =
                    target.valid_viewpoint_ids[r.random_range(0..target.valid_viewpoint_ids.len())];
                let (path, _) = env
                    .graph
                    .shortest_path(*walk.last().unwrap(), goal)
                    .unwrap();
                walk.extend_from_slice(&path[1..]);
            }
            let end = *walk.last().unwrap();
            let regions = &env.regions[end.index()];
            let best = (0..regions.len())
                .max_by(|&a, &b| {
                    regions[a]
                        .bbox
                        .iou(&target.bbox)
                        .total_cmp(&regions[b].bbox.iou(&target.bbox))
                })
                .unwrap();
            let region_index = if r.random_bool(0.6) {
                best
            } else {
                r.random_range(0..regions.len())
            };
            EpisodeResult {
                episode_id: ep.id,
                environment_id: env.id,
                trajectory: Trajectory {
                    length_m: walk_length(&env.graph, &walk).unwrap(),
                    viewpoint_ids: walk.clone(),
                },
                prediction: Prediction {
                    viewpoint_id: end,
                    region_index,
                    score: 0.5,
                },
                visited: walk,
                mode: ExploreMode::Explore,
            }
        })
        .collect()
}

/// TL, OSR, SR, SPL, RGS, RGSPL written out longhand.
pub fn brute_force_metrics(
    results: &[EpisodeResult],
    envs: &[Environment],
    episodes: &[Episode],
) -> [f64; 6] {
    let n = results.len() as f64;
    let mut out = [0.0; 6];
    for res in results {
        let ep = episodes.iter().find(|e| e.id == res.episode_id).unwrap();
        let env = envs.iter().find(|e| e.id == ep.environment_id).unwrap();
        let target = &env.objects[ep.target_object_id.index()];
        let valid = |v: &ViewpointId| target.valid_viewpoint_ids.contains(v);
        let p = res.trajectory.length_m;
        let l = ep.gold_path_length;
        let end = res.trajectory.viewpoint_ids.last().unwrap();
        let sr = valid(end);
        let osr = res.trajectory.viewpoint_ids.iter().any(valid);
        let region = &env.regions[res.prediction.viewpoint_id.index()][res.prediction.region_index];
        let a = region.bbox;
        let b = target.bbox;
        let mut inter = 1.0;
        let mut va = 1.0;
        let mut vb = 1.0;
        for k in 0..3 {
            inter *= (a.max.0[k].min(b.max.0[k]) - a.min.0[k].max(b.min.0[k])).max(0.0);
            va *= a.max.0[k] - a.min.0[k];
            vb *= b.max.0[k] - b.min.0[k];
        }
        let rgs = inter / (va + vb - inter) >= 0.5 && valid(&res.prediction.viewpoint_id);
        let weight = |s: bool| {
            if !s {
                0.0
            } else if l == 0.0 {
                1.0
            } else {
                l / p.max(l)
            }
        };
        out[0] += p / n;
        out[1] += f64::from(u8::from(osr)) / n;
        out[2] += f64::from(u8::from(sr)) / n;
        out[3] += weight(sr) / n;
        out[4] += f64::from(u8::from(rgs)) / n;
        out[5] += weight(rgs) / n;
    }
    out
}
