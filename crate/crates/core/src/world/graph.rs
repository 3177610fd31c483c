//! Navigation graph and the shortest-path / hop-distance queries over it.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Viewpoint, ViewpointId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: ViewpointId,
    pub b: ViewpointId,
    pub length: f64,
}

/// Undirected graph of viewpoints; viewpoint `i` has id `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavGraph {
    pub viewpoints: Vec<Viewpoint>,
    pub edges: Vec<Edge>,
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    id: ViewpointId,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, id)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl NavGraph {
    /// Builds the graph from positioned viewpoints and an undirected edge list.
    /// Edge lengths are the Euclidean distances between endpoints.
    pub fn from_edges(
        mut viewpoints: Vec<Viewpoint>,
        pairs: &[(ViewpointId, ViewpointId)],
    ) -> Self {
        for vp in &mut viewpoints {
            vp.neighbor_ids.clear();
        }
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b || viewpoints[a.index()].neighbor_ids.contains(&b) {
                continue;
            }
            let length = viewpoints[a.index()]
                .position
                .distance(viewpoints[b.index()].position);
            viewpoints[a.index()].neighbor_ids.push(b);
            viewpoints[b.index()].neighbor_ids.push(a);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            edges.push(Edge { a, b, length });
        }
        for vp in &mut viewpoints {
            vp.neighbor_ids.sort_unstable();
        }
        edges.sort_by_key(|e| (e.a, e.b));
        NavGraph { viewpoints, edges }
    }

    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }

    pub fn viewpoint(&self, id: ViewpointId) -> Result<&Viewpoint> {
        self.viewpoints
            .get(id.index())
            .ok_or(Error::UnknownViewpoint(id))
    }

    pub fn contains(&self, id: ViewpointId) -> bool {
        id.index() < self.viewpoints.len()
    }

    pub fn neighbors(&self, id: ViewpointId) -> &[ViewpointId] {
        &self.viewpoints[id.index()].neighbor_ids
    }

    pub fn are_adjacent(&self, a: ViewpointId, b: ViewpointId) -> bool {
        self.contains(a) && self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Euclidean edge length; `None` when the two viewpoints are not adjacent.
    pub fn edge_length(&self, a: ViewpointId, b: ViewpointId) -> Option<f64> {
        if !self.are_adjacent(a, b) {
            return None;
        }
        Some(
            self.viewpoints[a.index()]
                .position
                .distance(self.viewpoints[b.index()].position),
        )
    }

    /// Sum of edge lengths along a walk; `None` if two consecutive ids are not adjacent.
    pub fn walk_length(&self, walk: &[ViewpointId]) -> Option<f64> {
        walk.windows(2).map(|w| self.edge_length(w[0], w[1])).sum()
    }

    /// Minimum-length path from `from` to `to` and its length in meters.
    pub fn shortest_path(
        &self,
        from: ViewpointId,
        to: ViewpointId,
    ) -> Result<(Vec<ViewpointId>, f64)> {
        self.viewpoint(from)?;
        self.viewpoint(to)?;
        let (dist, prev) = self.dijkstra(&[from]);
        let length = dist[to.index()];
        if !length.is_finite() {
            return Err(Error::Unreachable { from, to });
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur.index()].expect("predecessor on a finite-distance node");
            path.push(cur);
        }
        path.reverse();
        Ok((path, length))
    }

    /// Shortest distance in meters from the nearest of `sources` to every viewpoint.
    pub fn distances_from(&self, sources: &[ViewpointId]) -> Vec<f64> {
        self.dijkstra(sources).0
    }

    fn dijkstra(&self, sources: &[ViewpointId]) -> (Vec<f64>, Vec<Option<ViewpointId>>) {
        let n = self.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s.index()] = 0.0;
            heap.push(Frontier { dist: 0.0, id: s });
        }
        while let Some(Frontier { dist: d, id }) = heap.pop() {
            if d > dist[id.index()] {
                continue;
            }
            let here = self.viewpoints[id.index()].position;
            for &nb in self.neighbors(id) {
                let nd = d + here.distance(self.viewpoints[nb.index()].position);
                if nd < dist[nb.index()] {
                    dist[nb.index()] = nd;
                    prev[nb.index()] = Some(id);
                    heap.push(Frontier { dist: nd, id: nb });
                }
            }
        }
        (dist, prev)
    }

    /// Hop distances from the nearest of `sources`; `None` for unreachable nodes.
    pub fn hop_distances(&self, sources: &[ViewpointId]) -> Vec<Option<u32>> {
        let mut hops = vec![None; self.len()];
        let mut queue = alloc::collections::VecDeque::new();
        for &s in sources {
            if hops[s.index()].is_none() {
                hops[s.index()] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(id) = queue.pop_front() {
            let h = hops[id.index()].unwrap_or(0);
            for &nb in self.neighbors(id) {
                if hops[nb.index()].is_none() {
                    hops[nb.index()] = Some(h + 1);
                    queue.push_back(nb);
                }
            }
        }
        hops
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty()
            || self
                .hop_distances(&[ViewpointId(0)])
                .iter()
                .all(Option::is_some)
    }

    /// Largest hop distance between any two viewpoints.
    pub fn hop_diameter(&self) -> u32 {
        (0..self.len() as u32)
            .map(|i| {
                self.hop_distances(&[ViewpointId(i)])
                    .iter()
                    .map(|h| h.unwrap_or(0))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}
