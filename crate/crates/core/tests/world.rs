use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use rrex_core::geom::Vec3;
use rrex_core::language::TemplateSet;
use rrex_core::world::catalog::{FEATURE_DIM, ROOM_KINDS};
use rrex_core::world::{
    extract_regions, generate_environment, is_visible, make_episodes, valid_viewpoints,
    Environment, ViewpointId, WorldParams,
};
use rrex_core::Error;

fn small() -> WorldParams {
    WorldParams {
        n_viewpoints: 30,
        n_rooms: 3,
        n_objects: 12,
        regions_per_viewpoint: 24,
        ..WorldParams::default()
    }
}

fn json_hash(env: &Environment) -> u64 {
    let mut h = DefaultHasher::new();
    serde_json::to_string(env).unwrap().hash(&mut h);
    h.finish()
}

#[test]
fn same_seed_gives_identical_environment() {
    let a = generate_environment(0, 7, &small()).unwrap();
    let b = generate_environment(0, 7, &small()).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn different_seeds_give_different_features() {
    let a = generate_environment(0, 7, &small()).unwrap();
    let b = generate_environment(0, 8, &small()).unwrap();
    assert_ne!(json_hash(&a), json_hash(&b));
    assert_ne!(a.regions[0][0].feature, b.regions[0][0].feature);
}

#[test]
fn single_viewpoint_world() {
    let p = WorldParams {
        n_viewpoints: 1,
        n_rooms: 1,
        n_objects: 2,
        ..small()
    };
    let env = generate_environment(0, 1, &p).unwrap();
    assert_eq!(env.graph.len(), 1);
    assert!(env.graph.edges.is_empty());
    assert!(env.graph.is_connected());
}

#[test]
fn graphs_are_connected_and_symmetric() {
    for seed in 0..10 {
        let env = generate_environment(seed as u32, seed, &small()).unwrap();
        assert!(env.graph.is_connected());
        for vp in &env.graph.viewpoints {
            for &nb in &vp.neighbor_ids {
                assert!(env.graph.neighbors(nb).contains(&vp.id));
                assert_ne!(nb, vp.id);
                let len = env.graph.edge_length(vp.id, nb).unwrap();
                assert_eq!(len, env.graph.edge_length(nb, vp.id).unwrap());
                assert_eq!(len, vp.position.distance(env.position(nb)));
            }
        }
    }
}

#[test]
fn every_viewpoint_has_full_region_list() {
    for seed in 0..10 {
        let env = generate_environment(0, seed, &small()).unwrap();
        for vp in env.viewpoint_ids() {
            let regions = extract_regions(&env, vp).unwrap();
            assert_eq!(regions.len(), 24);
            assert_eq!(regions.iter().filter(|r| r.candidate).count(), 16);
            for r in regions {
                assert_eq!(r.viewpoint_id, vp);
                assert_eq!(r.feature.len(), FEATURE_DIM);
                assert!(r.radius > 0.0);
                assert!((r.radius - r.bbox.radius()).abs() < 1e-12);
                assert!(r.bbox.contains(r.center));
            }
        }
    }
}

#[test]
fn unknown_viewpoint_is_rejected() {
    let env = generate_environment(0, 1, &small()).unwrap();
    assert_eq!(
        extract_regions(&env, ViewpointId(999)).unwrap_err(),
        Error::UnknownViewpoint(ViewpointId(999))
    );
}

#[test]
fn noiseless_observation_reproduces_objects() {
    let p = WorldParams {
        depth_noise: 0.0,
        feature_noise: 0.0,
        ..small()
    };
    let env = generate_environment(0, 3, &p).unwrap();
    let mut seen = 0;
    for r in env.regions.iter().flatten() {
        let norm: f64 = r.feature.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        if let Some(id) = r.source_object_id {
            let obj = env.object(id).unwrap();
            assert_eq!(r.center, obj.center);
            assert_eq!(r.bbox, obj.bbox);
            seen += 1;
        }
    }
    assert!(seen > 0);
}

#[test]
fn depth_noise_matches_folded_gaussian_mean() {
    // E|N(0, 0.1)| = 0.1 * sqrt(2 / pi) ~ 0.0798
    let p = WorldParams {
        depth_noise: 0.1,
        ..small()
    };
    let mut errors = Vec::new();
    let mut seed = 0;
    while errors.len() < 10_000 {
        let env = generate_environment(0, seed, &p).unwrap();
        for r in env.regions.iter().flatten() {
            if let Some(id) = r.source_object_id {
                errors.push(r.center.distance(env.object(id).unwrap().center));
            }
        }
        seed += 1;
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((0.06..=0.11).contains(&mean), "mean error {mean}");
}

#[test]
fn valid_viewpoints_match_line_of_sight_oracle() {
    for seed in 0..5 {
        let env = generate_environment(0, seed, &small()).unwrap();
        for obj in &env.objects {
            let oracle: Vec<ViewpointId> = env
                .graph
                .viewpoints
                .iter()
                .filter(|v| {
                    v.room_id == obj.room_id
                        && v.position.distance(obj.center) <= env.params.visibility_radius
                })
                .map(|v| v.id)
                .collect();
            let stored = valid_viewpoints(&env, obj.id).unwrap();
            assert_eq!(stored, oracle.as_slice());
            assert!(!stored.is_empty());
            assert!(stored
                .iter()
                .all(|v| env.graph.viewpoints[v.index()].room_id == obj.room_id));
            assert!(obj.bbox.contains(obj.center));
        }
    }
}

#[test]
fn object_at_viewpoint_is_visible_from_it() {
    let env = generate_environment(0, 2, &small()).unwrap();
    let vp = &env.graph.viewpoints[5];
    assert!(is_visible(vp, vp.room_id, vp.position, 3.0));
    assert!(!is_visible(vp, vp.room_id + 1, vp.position, 3.0));
}

#[test]
fn every_object_is_groundable() {
    for seed in 0..5 {
        let env = generate_environment(0, seed, &small()).unwrap();
        for obj in &env.objects {
            let ok = obj.valid_viewpoint_ids.iter().any(|vp| {
                env.regions[vp.index()]
                    .iter()
                    .any(|r| r.candidate && r.bbox.iou(&obj.bbox) >= 0.5)
            });
            assert!(ok, "object {} not groundable", obj.id);
        }
    }
}

#[test]
fn room_kinds_do_not_repeat_while_kinds_remain() {
    for seed in 0..20 {
        let env = generate_environment(0, seed, &WorldParams::default()).unwrap();
        let mut kinds: Vec<u32> = env.rooms.iter().map(|r| r.kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        assert_eq!(kinds.len(), env.rooms.len().min(ROOM_KINDS.len()));
    }
}

#[test]
fn impossible_params_report_the_failed_constraint() {
    let p = WorldParams {
        visibility_radius: 1e-3,
        position_jitter: 0.0,
        max_attempts: 3,
        ..small()
    };
    match generate_environment(0, 1, &p) {
        Err(Error::Unsolvable {
            attempts: 3,
            constraint,
        }) => assert!(constraint.contains("visibility radius")),
        other => panic!("unexpected {other:?}"),
    }
    let bad = WorldParams {
        n_viewpoints: 0,
        ..small()
    };
    assert!(matches!(
        generate_environment(0, 1, &bad),
        Err(Error::InvalidParams {
            name: "n_viewpoints",
            ..
        })
    ));
    let bad = WorldParams {
        candidates_per_viewpoint: 40,
        ..small()
    };
    assert!(matches!(
        generate_environment(0, 1, &bad),
        Err(Error::InvalidParams { .. })
    ));
}

fn bfs_hops(env: &Environment, sources: &[ViewpointId]) -> Vec<Option<u32>> {
    let mut d = vec![None; env.graph.len()];
    let mut q = VecDeque::new();
    for &s in sources {
        d[s.index()] = Some(0);
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        for vp in &env.graph.viewpoints {
            let adjacent = env
                .graph
                .edges
                .iter()
                .any(|e| (e.a == v && e.b == vp.id) || (e.b == v && e.a == vp.id));
            if adjacent && d[vp.id.index()].is_none() {
                d[vp.id.index()] = Some(d[v.index()].unwrap() + 1);
                q.push_back(vp.id);
            }
        }
    }
    d
}

#[test]
fn episode_gold_steps_match_bfs_oracle() {
    let env = generate_environment(0, 11, &small()).unwrap();
    let eps = make_episodes(&env, 100, 5, 1, 4, &TemplateSet::standard()).unwrap();
    assert_eq!(eps.len(), 100);
    for ep in &eps {
        let obj = env.object(ep.target_object_id).unwrap();
        let hops = bfs_hops(&env, &obj.valid_viewpoint_ids);
        assert_eq!(hops[ep.start_viewpoint_id.index()], Some(ep.gold_steps));
        assert!((1..=4).contains(&ep.gold_steps));
        let gold = obj
            .valid_viewpoint_ids
            .iter()
            .map(|&v| env.graph.shortest_path(ep.start_viewpoint_id, v).unwrap().1)
            .fold(f64::INFINITY, f64::min);
        assert!((gold - ep.gold_path_length).abs() < 1e-9);
        assert_eq!(ep.environment_id, env.id);
    }
}

#[test]
fn zero_distance_episodes_start_at_a_valid_viewpoint() {
    let env = generate_environment(0, 4, &small()).unwrap();
    for ep in make_episodes(&env, 30, 1, 0, 0, &TemplateSet::standard()).unwrap() {
        assert!(env.is_valid_viewpoint(ep.target_object_id, ep.start_viewpoint_id));
        assert_eq!(ep.gold_steps, 0);
        assert_eq!(ep.gold_path_length, 0.0);
    }
}

#[test]
fn episode_edge_cases() {
    let env = generate_environment(0, 4, &small()).unwrap();
    assert!(make_episodes(&env, 0, 1, 0, 3, &TemplateSet::standard())
        .unwrap()
        .is_empty());
    assert!(matches!(
        make_episodes(&env, 5, 1, 3, 1, &TemplateSet::standard()),
        Err(Error::InvalidParams { .. })
    ));
    match make_episodes(&env, 5, 1, 500, 600, &TemplateSet::standard()) {
        Err(e @ Error::DistanceRange { .. }) => assert!(e.to_string().contains("achievable range")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn translation_moves_every_coordinate() {
    let env = generate_environment(0, 4, &small()).unwrap();
    let offset = Vec3::new(10.0, -3.0, 2.0);
    let moved = env.translated(offset);
    for (a, b) in env
        .regions
        .iter()
        .flatten()
        .zip(moved.regions.iter().flatten())
    {
        assert_eq!(b.center - offset, a.center);
        assert_eq!(a.radius, b.radius);
    }
    for (a, b) in env.graph.viewpoints.iter().zip(&moved.graph.viewpoints) {
        assert_eq!(b.position - offset, a.position);
    }
}
