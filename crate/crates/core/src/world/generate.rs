use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::catalog::{
    COLORS, FEATURE_DIM, MATERIALS, N_CATEGORIES, ROOM_FIXTURES, ROOM_KINDS, ROOM_TARGETS, SIZES,
    SIZE_HALF_EXTENTS, TARGET_CATEGORIES,
};
use super::{
    is_visible, Attributes, Environment, GroundTruthObject, NavGraph, ObjectId, RegionProposal,
    Room, Viewpoint, ViewpointId, WorldParams,
};
use crate::geom::{Aabb, Vec3};
use crate::{substream, Error, Result, Rng};

const CEILING: f64 = 2.6;
const PLACEMENT_RADIUS: f64 = 1.2;
const STREAM_ATTEMPT: u64 = 0x7767_656e;

/// Builds environment `id` deterministically from `(seed, params)`.
///
/// Generation is retried with fresh streams when an object ends up without a
/// candidate proposal of IoU >= 0.5 at any of its valid viewpoints; the error
/// names the constraint that failed on the last attempt.
pub fn generate_environment(id: u32, seed: u64, params: &WorldParams) -> Result<Environment> {
    params.validate()?;
    let mut last_failure = String::new();
    for attempt in 0..params.max_attempts {
        let mut rng = substream(seed, STREAM_ATTEMPT, attempt as u64);
        match try_generate(id, seed, params, &mut rng) {
            Ok(env) => return Ok(env),
            Err(constraint) => last_failure = constraint,
        }
    }
    Err(Error::Unsolvable {
        attempts: params.max_attempts,
        constraint: last_failure,
    })
}

fn try_generate(
    id: u32,
    seed: u64,
    params: &WorldParams,
    rng: &mut Rng,
) -> core::result::Result<Environment, String> {
    let (rooms, graph) = layout(params, rng);
    let objects = place_objects(params, &rooms, &graph, rng)?;
    let regions = graph
        .viewpoints
        .iter()
        .map(|vp| observe(params, &rooms, vp, &objects, rng))
        .collect();
    let env = Environment {
        id,
        seed,
        params: params.clone(),
        rooms,
        graph,
        objects,
        regions,
    };
    check_solvable(&env)?;
    Ok(env)
}

fn ceil_sqrt(n: usize) -> usize {
    let mut k = 1;
    while k * k < n {
        k += 1;
    }
    k
}

fn layout(params: &WorldParams, rng: &mut Rng) -> (Vec<Room>, NavGraph) {
    let n_rooms = params.n_rooms as usize;
    let n_vp = params.n_viewpoints as usize;
    let counts: Vec<usize> = (0..n_rooms)
        .map(|r| n_vp / n_rooms + usize::from(r < n_vp % n_rooms))
        .collect();
    let grid_cols: Vec<usize> = counts.iter().map(|&m| ceil_sqrt(m)).collect();
    let spacing = params.spacing;
    let cell_w = grid_cols
        .iter()
        .map(|&c| (c - 1) as f64 * spacing)
        .fold(0.0, f64::max);
    let cell_h = counts
        .iter()
        .zip(&grid_cols)
        .map(|(&m, &c)| (m.div_ceil(c) - 1) as f64 * spacing)
        .fold(0.0, f64::max);
    let pitch_x = cell_w + 1.5 * spacing;
    let pitch_y = cell_h + 1.5 * spacing;
    let room_grid_cols = ceil_sqrt(n_rooms);

    let mut rooms = Vec::with_capacity(n_rooms);
    let mut viewpoints = Vec::with_capacity(n_vp);
    let mut pairs = Vec::new();
    let mut room_members: Vec<Vec<ViewpointId>> = Vec::with_capacity(n_rooms);
    // Kinds are dealt from shuffled decks, so they repeat only once every
    // kind is in use.
    let mut kinds: Vec<u32> = Vec::with_capacity(n_rooms);
    while kinds.len() < n_rooms {
        let mut deck: Vec<u32> = (0..ROOM_KINDS.len() as u32).collect();
        deck.shuffle(rng);
        kinds.extend(deck);
    }
    for (r, (&m, &cols)) in counts.iter().zip(&grid_cols).enumerate() {
        let origin = Vec3::new(
            (r % room_grid_cols) as f64 * pitch_x,
            (r / room_grid_cols) as f64 * pitch_y,
            0.0,
        );
        let rows = m.div_ceil(cols);
        let margin = spacing * 0.5;
        let bounds = Aabb {
            min: Vec3::new(origin.x() - margin, origin.y() - margin, 0.0),
            max: Vec3::new(
                origin.x() + (cols - 1) as f64 * spacing + margin,
                origin.y() + (rows - 1) as f64 * spacing + margin,
                CEILING,
            ),
        };
        rooms.push(Room {
            id: r as u32,
            kind: kinds[r],
            bounds,
        });
        let first = viewpoints.len();
        let mut members = Vec::with_capacity(m);
        for k in 0..m {
            let (row, col) = (k / cols, k % cols);
            let jitter = |rng: &mut Rng| {
                if params.position_jitter > 0.0 {
                    rng.random_range(-params.position_jitter..=params.position_jitter)
                } else {
                    0.0
                }
            };
            let position = Vec3::new(
                origin.x() + col as f64 * spacing + jitter(rng),
                origin.y() + row as f64 * spacing + jitter(rng),
                params.camera_height,
            )
            .snapped();
            let vid = ViewpointId(viewpoints.len() as u32);
            viewpoints.push(Viewpoint {
                id: vid,
                position,
                room_id: r as u32,
                neighbor_ids: Vec::new(),
            });
            members.push(vid);
            if col > 0 {
                pairs.push((ViewpointId(vid.0 - 1), vid));
            }
            if row > 0 {
                pairs.push((ViewpointId((first + k - cols) as u32), vid));
            }
        }
        room_members.push(members);
    }

    // doors between rooms adjacent in the room grid, through the closest pair of viewpoints
    for r in 0..n_rooms {
        let right = (r % room_grid_cols + 1 < room_grid_cols && r + 1 < n_rooms).then_some(r + 1);
        let below = (r + room_grid_cols < n_rooms).then_some(r + room_grid_cols);
        for other in [right, below].into_iter().flatten() {
            let mut best: Option<(f64, ViewpointId, ViewpointId)> = None;
            for &a in &room_members[r] {
                for &b in &room_members[other] {
                    let d = viewpoints[a.index()]
                        .position
                        .distance(viewpoints[b.index()].position);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, a, b));
                    }
                }
            }
            if let Some((_, a, b)) = best {
                pairs.push((a, b));
            }
        }
    }
    (rooms, NavGraph::from_edges(viewpoints, &pairs))
}

fn half_extents(size: u32, rng: &mut Rng) -> Vec3 {
    let (lo, hi) = SIZE_HALF_EXTENTS[size as usize];
    Vec3::new(
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
    )
    .snapped()
}

fn clamp_into(room: &Aabb, p: Vec3, half: Vec3) -> Vec3 {
    let clamp = |v: f64, lo: f64, hi: f64| {
        if lo > hi {
            (lo + hi) * 0.5
        } else {
            v.clamp(lo, hi)
        }
    };
    Vec3::new(
        clamp(p.x(), room.min.x() + half.x(), room.max.x() - half.x()),
        clamp(p.y(), room.min.y() + half.y(), room.max.y() - half.y()),
        p.z(),
    )
}

fn point_near(
    around: Vec3,
    min_r: f64,
    max_r: f64,
    half: Vec3,
    room: &Aabb,
    rng: &mut Rng,
) -> Vec3 {
    let angle = rng.random_range(0.0..core::f64::consts::TAU);
    let dist = if max_r > min_r {
        rng.random_range(min_r..max_r)
    } else {
        min_r
    };
    let z = half.z() + rng.random_range(0.0..0.9);
    let p = Vec3::new(
        around.x() + dist * libm::cos(angle),
        around.y() + dist * libm::sin(angle),
        z,
    );
    clamp_into(room, p, half).snapped()
}

fn place_objects(
    params: &WorldParams,
    rooms: &[Room],
    graph: &NavGraph,
    rng: &mut Rng,
) -> core::result::Result<Vec<GroundTruthObject>, String> {
    let n_rooms = rooms.len();
    let mut objects: Vec<GroundTruthObject> = Vec::with_capacity(params.n_objects as usize);
    for k in 0..params.n_objects {
        let room = &rooms[k as usize % n_rooms];
        let kind = room.kind as usize;
        let category = if rng.random_bool(params.room_affinity) {
            ROOM_TARGETS[kind][rng.random_range(0..4)]
        } else {
            rng.random_range(0..TARGET_CATEGORIES.len() as u32)
        };
        let size = rng.random_range(0..SIZES.len() as u32);
        let attributes = Attributes {
            color: rng.random_range(0..COLORS.len() as u32),
            size,
            material: rng.random_range(0..MATERIALS.len() as u32),
            anchor: Some(ROOM_FIXTURES[kind][rng.random_range(0..2)]),
        };
        let half = half_extents(size, rng);
        let members: Vec<&Viewpoint> = graph
            .viewpoints
            .iter()
            .filter(|v| v.room_id == room.id)
            .collect();
        let host = members[rng.random_range(0..members.len())];
        let center = point_near(
            host.position,
            0.0,
            PLACEMENT_RADIUS,
            half,
            &room.bounds,
            rng,
        );
        let valid_viewpoint_ids: Vec<ViewpointId> = graph
            .viewpoints
            .iter()
            .filter(|v| is_visible(v, room.id, center, params.visibility_radius))
            .map(|v| v.id)
            .collect();
        if valid_viewpoint_ids.is_empty() {
            return Err(format!(
                "object {k} has no viewpoint within the visibility radius"
            ));
        }
        objects.push(GroundTruthObject {
            id: ObjectId(k),
            category,
            attributes,
            center,
            bbox: Aabb::from_center_half_extents(center, half),
            room_id: room.id,
            valid_viewpoint_ids,
        });
    }
    Ok(objects)
}

/// Unit-norm one-hot encoding of (category, color, material, room kind) plus
/// i.i.d. Gaussian noise of standard deviation `noise` on every coordinate.
///
/// The room block stands in for the scene background a detector crop picks up.
pub fn observation_feature(
    category: u32,
    color: u32,
    material: u32,
    room_kind: u32,
    noise: f64,
    rng: &mut Rng,
) -> Vec<f64> {
    let mut f = alloc::vec![0.0; FEATURE_DIM];
    let mut offset = 0;
    for (value, width) in [
        (category, N_CATEGORIES),
        (color, COLORS.len()),
        (material, MATERIALS.len()),
        (room_kind, ROOM_KINDS.len()),
    ] {
        f[offset + value as usize] = 0.5;
        offset += width;
    }
    if noise > 0.0 {
        let normal = Normal::new(0.0, noise).expect("finite noise");
        for x in &mut f {
            *x += normal.sample(rng);
        }
    }
    f
}

fn clutter(
    params: &WorldParams,
    room: &Room,
    vp: &Viewpoint,
    candidate: bool,
    rng: &mut Rng,
) -> RegionProposal {
    let category = if rng.random_bool(params.fixture_prob) {
        ROOM_FIXTURES[room.kind as usize][rng.random_range(0..2)]
    } else {
        rng.random_range(0..TARGET_CATEGORIES.len() as u32)
    };
    let color = rng.random_range(0..COLORS.len() as u32);
    let material = rng.random_range(0..MATERIALS.len() as u32);
    let half = half_extents(rng.random_range(0..SIZES.len() as u32), rng);
    let center = point_near(
        vp.position,
        0.3,
        params.visibility_radius * 0.9,
        half,
        &room.bounds,
        rng,
    );
    let bbox = Aabb::from_center_half_extents(center, half);
    RegionProposal {
        viewpoint_id: vp.id,
        feature: observation_feature(
            category,
            color,
            material,
            room.kind,
            params.feature_noise,
            rng,
        ),
        center,
        radius: bbox.radius(),
        bbox,
        source_object_id: None,
        candidate,
    }
}

fn observe(
    params: &WorldParams,
    rooms: &[Room],
    vp: &Viewpoint,
    objects: &[GroundTruthObject],
    rng: &mut Rng,
) -> Vec<RegionProposal> {
    let total = params.regions_per_viewpoint as usize;
    let mut visible: Vec<&GroundTruthObject> = objects
        .iter()
        .filter(|o| o.valid_viewpoint_ids.binary_search(&vp.id).is_ok())
        .collect();
    visible.sort_by(|a, b| {
        let da = a.center.distance(vp.position);
        let db = b.center.distance(vp.position);
        da.total_cmp(&db).then(a.id.cmp(&b.id))
    });
    visible.truncate(total);

    let depth = (params.depth_noise > 0.0)
        .then(|| Normal::new(0.0, params.depth_noise).expect("finite noise"));
    let mut out = Vec::with_capacity(total);
    for obj in visible {
        let ray = obj.center - vp.position;
        let len = ray.norm();
        let dir = if len > 1e-9 {
            ray * (1.0 / len)
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        };
        let err = depth.as_ref().map_or(0.0, |d| d.sample(rng));
        let shift = (dir * err).snapped();
        let bbox = obj.bbox.translated(shift);
        out.push(RegionProposal {
            viewpoint_id: vp.id,
            feature: observation_feature(
                obj.category,
                obj.attributes.color,
                obj.attributes.material,
                rooms[vp.room_id as usize].kind,
                params.feature_noise,
                rng,
            ),
            center: obj.center + shift,
            radius: bbox.radius(),
            bbox,
            source_object_id: Some(obj.id),
            candidate: true,
        });
    }
    let room = &rooms[vp.room_id as usize];
    while out.len() < params.candidates_per_viewpoint as usize {
        out.push(clutter(params, room, vp, true, rng));
    }
    while out.len() < total {
        out.push(clutter(params, room, vp, false, rng));
    }
    out.shuffle(rng);
    out
}

fn check_solvable(env: &Environment) -> core::result::Result<(), String> {
    for obj in &env.objects {
        let ok = obj.valid_viewpoint_ids.iter().any(|vp| {
            env.regions[vp.index()]
                .iter()
                .any(|r| r.candidate && r.bbox.iou(&obj.bbox) >= 0.5)
        });
        if !ok {
            return Err(format!(
                "object {} has no candidate proposal with IoU >= 0.5 at a valid viewpoint",
                obj.id.0
            ));
        }
    }
    Ok(())
}
