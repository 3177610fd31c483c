//! Synthetic topological environments and the region proposals observed in them.
//!
//! Rooms are grid clusters of viewpoints joined by door edges. Objects sit
//! near viewpoints and are visible from every viewpoint of the same room
//! within the line-of-sight radius. Each viewpoint stores a fixed list of
//! region proposals: noisy observations of the visible objects, candidate
//! clutter, and context-only proposals that fill the list to
//! `regions_per_viewpoint`.

pub mod catalog;
mod episodes;
mod generate;
mod graph;

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use episodes::{make_episodes, Episode};
pub use generate::{generate_environment, observation_feature};
pub use graph::{Edge, NavGraph};

use crate::geom::{Aabb, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViewpointId(pub u32);

impl ViewpointId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ViewpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vp{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl ObjectId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obj{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub id: ViewpointId,
    pub position: Vec3,
    pub room_id: u32,
    /// Sorted ascending.
    pub neighbor_ids: Vec<ViewpointId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: u32,
    /// Index into [`catalog::ROOM_KINDS`].
    pub kind: u32,
    /// Floor rectangle (z spans floor to ceiling).
    pub bounds: Aabb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attributes {
    pub color: u32,
    pub size: u32,
    pub material: u32,
    /// Fixture category of the room used as a landmark in "near the ..." phrases.
    pub anchor: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub id: ObjectId,
    pub category: u32,
    pub attributes: Attributes,
    pub center: Vec3,
    pub bbox: Aabb,
    pub room_id: u32,
    /// Sorted ascending, never empty.
    pub valid_viewpoint_ids: Vec<ViewpointId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionProposal {
    pub viewpoint_id: ViewpointId,
    pub feature: Vec<f64>,
    pub center: Vec3,
    pub radius: f64,
    pub bbox: Aabb,
    pub source_object_id: Option<ObjectId>,
    /// Eligible as a final answer; context-only proposals only inform scoring.
    pub candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub n_viewpoints: u32,
    pub n_rooms: u32,
    pub n_objects: u32,
    /// Candidate proposals per viewpoint (visible objects plus candidate clutter).
    pub candidates_per_viewpoint: u32,
    /// Total proposals per viewpoint including context fill (T_v).
    pub regions_per_viewpoint: u32,
    pub feature_noise: f64,
    /// Standard deviation of the placement error along the view ray, meters.
    pub depth_noise: f64,
    pub visibility_radius: f64,
    pub spacing: f64,
    pub position_jitter: f64,
    pub camera_height: f64,
    /// Probability that a clutter proposal is a room fixture.
    pub fixture_prob: f64,
    /// Probability that an object's category is one its room kind favours.
    pub room_affinity: f64,
    pub max_attempts: u32,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            n_viewpoints: 60,
            n_rooms: 4,
            n_objects: 24,
            candidates_per_viewpoint: 16,
            regions_per_viewpoint: 64,
            feature_noise: 0.1,
            depth_noise: 0.03,
            visibility_radius: 3.0,
            spacing: 2.0,
            position_jitter: 0.2,
            camera_height: 1.5,
            fixture_prob: 0.8,
            room_affinity: 0.7,
            max_attempts: 16,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, ok: bool) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParams {
                    name,
                    reason: "must be positive".into(),
                })
            }
        }
        positive("n_viewpoints", self.n_viewpoints >= 1)?;
        positive("n_rooms", self.n_rooms >= 1)?;
        positive("n_objects", self.n_objects >= 1)?;
        positive(
            "candidates_per_viewpoint",
            self.candidates_per_viewpoint >= 1,
        )?;
        positive("regions_per_viewpoint", self.regions_per_viewpoint >= 1)?;
        positive("visibility_radius", self.visibility_radius > 0.0)?;
        positive("spacing", self.spacing > 0.0)?;
        positive("max_attempts", self.max_attempts >= 1)?;
        if !(self.feature_noise >= 0.0 && self.depth_noise >= 0.0 && self.position_jitter >= 0.0) {
            return Err(Error::InvalidParams {
                name: "noise",
                reason: "noise levels must be >= 0".into(),
            });
        }
        if self.n_viewpoints < self.n_rooms {
            return Err(Error::InvalidParams {
                name: "n_rooms",
                reason: "every room needs at least one viewpoint".into(),
            });
        }
        if self.candidates_per_viewpoint > self.regions_per_viewpoint {
            return Err(Error::InvalidParams {
                name: "candidates_per_viewpoint",
                reason: "cannot exceed regions_per_viewpoint".into(),
            });
        }
        for (name, p) in [
            ("fixture_prob", self.fixture_prob),
            ("room_affinity", self.room_affinity),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams {
                    name,
                    reason: "must be a probability".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub id: u32,
    pub seed: u64,
    pub params: WorldParams,
    pub rooms: Vec<Room>,
    pub graph: NavGraph,
    pub objects: Vec<GroundTruthObject>,
    /// `regions[v]` holds the proposals observed at viewpoint `v`.
    pub regions: Vec<Vec<RegionProposal>>,
}

impl Environment {
    pub fn object(&self, id: ObjectId) -> Result<&GroundTruthObject> {
        self.objects.get(id.index()).ok_or(Error::UnknownObject(id))
    }

    pub fn position(&self, id: ViewpointId) -> Vec3 {
        self.graph.viewpoints[id.index()].position
    }

    pub fn room_kind(&self, room_id: u32) -> u32 {
        self.rooms[room_id as usize].kind
    }

    pub fn is_valid_viewpoint(&self, object: ObjectId, vp: ViewpointId) -> bool {
        self.objects
            .get(object.index())
            .is_some_and(|o| o.valid_viewpoint_ids.binary_search(&vp).is_ok())
    }

    /// Viewpoint ids in ascending order.
    pub fn viewpoint_ids(&self) -> impl Iterator<Item = ViewpointId> + '_ {
        self.graph.viewpoints.iter().map(|v| v.id)
    }

    /// Applies a rigid translation to every stored coordinate.
    pub fn translated(&self, offset: Vec3) -> Environment {
        let mut env = self.clone();
        for vp in &mut env.graph.viewpoints {
            vp.position = vp.position + offset;
        }
        for room in &mut env.rooms {
            room.bounds = room.bounds.translated(offset);
        }
        for obj in &mut env.objects {
            obj.center = obj.center + offset;
            obj.bbox = obj.bbox.translated(offset);
        }
        for region in env.regions.iter_mut().flatten() {
            region.center = region.center + offset;
            region.bbox = region.bbox.translated(offset);
        }
        env
    }
}

/// Proposals observed at `viewpoint_id`, candidates and context alike.
pub fn extract_regions(env: &Environment, viewpoint_id: ViewpointId) -> Result<&[RegionProposal]> {
    env.regions
        .get(viewpoint_id.index())
        .map(Vec::as_slice)
        .ok_or(Error::UnknownViewpoint(viewpoint_id))
}

/// Viewpoints from which `object_id` is visible.
pub fn valid_viewpoints(env: &Environment, object_id: ObjectId) -> Result<&[ViewpointId]> {
    Ok(&env.object(object_id)?.valid_viewpoint_ids)
}

/// Line-of-sight rule: same room and within `radius` of the object center.
pub fn is_visible(
    viewpoint: &Viewpoint,
    object_room: u32,
    object_center: Vec3,
    radius: f64,
) -> bool {
    viewpoint.room_id == object_room && viewpoint.position.distance(object_center) <= radius
}
