mod common;

use common::{brute_force_metrics, random_results};
use rrex_core::agent::{
    run_episode, AgentConfig, EpisodeResult, ExploreMode, Prediction, Trajectory,
};
use rrex_core::benchmark::{build_dataset, BenchmarkSpec};
use rrex_core::eval::{
    bootstrap_ci, compute_metrics, grounding_success, mean_std, navigation_success,
    oracle_navigation_success, plan_rows, run_ablation_suite_on, AblationConfig, MetricsReport,
    SuccessRule, Toggle,
};
use rrex_core::geom::{Aabb, Vec3};
use rrex_core::language::{TemplateSet, TextMode};
use rrex_core::scorer::{ScorerDims, ScorerParams};
use rrex_core::world::catalog::FEATURE_DIM;
use rrex_core::world::{
    generate_environment, make_episodes, Environment, Episode, ViewpointId, WorldParams,
};
use rrex_core::Error;

fn setup(seed: u64, n: usize) -> (Environment, Vec<Episode>) {
    let p = WorldParams {
        n_viewpoints: 40,
        n_rooms: 4,
        n_objects: 16,
        regions_per_viewpoint: 20,
        ..WorldParams::default()
    };
    let env = generate_environment(seed as u32, seed, &p).unwrap();
    let eps = make_episodes(&env, n, seed, 0, 5, &TemplateSet::standard()).unwrap();
    (env, eps)
}

fn result_at(
    ep: &Episode,
    walk: Vec<ViewpointId>,
    length_m: f64,
    region_index: usize,
) -> EpisodeResult {
    let end = *walk.last().unwrap();
    EpisodeResult {
        episode_id: ep.id,
        environment_id: ep.environment_id,
        trajectory: Trajectory {
            viewpoint_ids: walk.clone(),
            length_m,
        },
        prediction: Prediction {
            viewpoint_id: end,
            region_index,
            score: 0.9,
        },
        visited: walk,
        mode: ExploreMode::Explore,
    }
}

#[test]
fn metrics_match_brute_force_reference() {
    for seed in 0..4 {
        let (env, eps) = setup(seed, 100);
        let results = random_results(&env, &eps, seed);
        let report = compute_metrics(
            &results,
            std::slice::from_ref(&env),
            &eps,
            SuccessRule::Visibility,
        )
        .unwrap();
        let oracle = brute_force_metrics(&results, std::slice::from_ref(&env), &eps);
        for (name, (a, b)) in MetricsReport::FIELDS
            .iter()
            .zip(report.values().iter().zip(oracle))
        {
            assert!((a - b).abs() < 1e-9, "{name}: {a} vs {b}");
        }
        assert_eq!(report.n_episodes, 100);
        assert!(report.satisfies_order_constraints());
        assert!(report.sr > 0.0 && report.rgs > 0.0 && report.sr < 1.0);
    }
}

#[test]
fn metrics_ignore_result_order() {
    let (env, eps) = setup(5, 60);
    let mut results = random_results(&env, &eps, 5);
    let envs = std::slice::from_ref(&env);
    let a = compute_metrics(&results, envs, &eps, SuccessRule::Visibility).unwrap();
    results.reverse();
    results.swap(3, 40);
    let b = compute_metrics(&results, envs, &eps, SuccessRule::Visibility).unwrap();
    assert_eq!(a, b);
}

fn valid_and_invalid(env: &Environment, ep: &Episode) -> (ViewpointId, ViewpointId) {
    let obj = env.object(ep.target_object_id).unwrap();
    let valid = obj.valid_viewpoint_ids[0];
    let invalid = env
        .viewpoint_ids()
        .find(|v| !obj.valid_viewpoint_ids.contains(v))
        .unwrap();
    (valid, invalid)
}

#[test]
fn success_definitions() {
    let (env, eps) = setup(1, 5);
    let ep = &eps[0];
    let (valid, invalid) = valid_and_invalid(&env, ep);
    let rule = SuccessRule::Visibility;
    let ends_valid = result_at(ep, vec![invalid, valid], 1.0, 0);
    assert!(navigation_success(&ends_valid, &env, ep, rule));
    let passes = result_at(ep, vec![valid, invalid], 1.0, 0);
    assert!(!navigation_success(&passes, &env, ep, rule));
    assert!(oracle_navigation_success(&passes, &env, ep, rule));

    let target = env.object(ep.target_object_id).unwrap();
    let best = env.regions[valid.index()]
        .iter()
        .position(|r| r.candidate && r.bbox.iou(&target.bbox) >= 0.5);
    if let Some(i) = best {
        assert!(grounding_success(&result_at(ep, vec![valid], 0.0, i), &env, ep, rule).unwrap());
    }
}

#[test]
fn grounding_needs_overlap_and_a_valid_viewpoint() {
    let (mut env, eps) = setup(2, 5);
    let ep = eps[0].clone();
    let (valid, invalid) = valid_and_invalid(&env, &ep);
    let target = Aabb {
        min: Vec3::ZERO,
        max: Vec3::new(3.0, 1.0, 1.0),
    };
    env.objects[ep.target_object_id.index()].bbox = target;
    // [1,4] x [0,1] x [0,1]: intersection 2, union 4
    let half = target.translated(Vec3::new(1.0, 0.0, 0.0));
    // shifted by d: (2 - d) / (4 + d) = 0.49990 for d = 2.667e-4
    let below = target.translated(Vec3::new(1.0 + 2.667e-4, 0.0, 0.0));
    assert_eq!(half.iou(&target), 0.5);
    assert!((below.iou(&target) - 0.4999).abs() < 1e-6 && below.iou(&target) < 0.5);
    for vp in [valid, invalid] {
        env.regions[vp.index()][0].bbox = half;
        env.regions[vp.index()][1].bbox = below;
    }
    let rule = SuccessRule::Visibility;
    assert!(grounding_success(&result_at(&ep, vec![valid], 0.0, 0), &env, &ep, rule).unwrap());
    assert!(!grounding_success(&result_at(&ep, vec![valid], 0.0, 1), &env, &ep, rule).unwrap());
    assert!(!grounding_success(&result_at(&ep, vec![invalid], 0.0, 0), &env, &ep, rule).unwrap());
    let bad = result_at(&ep, vec![valid], 0.0, 999);
    assert!(grounding_success(&bad, &env, &ep, rule).is_err());
}

#[test]
fn spl_examples() {
    let (env, eps) = setup(3, 5);
    let mut ep = eps[0].clone();
    let (valid, _) = valid_and_invalid(&env, &ep);
    ep.gold_path_length = 10.0;
    let envs = std::slice::from_ref(&env);
    let one = |p: f64| {
        compute_metrics(
            &[result_at(&ep, vec![valid], p, 0)],
            envs,
            std::slice::from_ref(&ep),
            SuccessRule::Visibility,
        )
        .unwrap()
    };
    let r = one(10.0);
    assert_eq!((r.sr, r.spl), (1.0, 1.0));
    assert_eq!(one(20.0).spl, 0.5);
    ep.gold_path_length = 0.0;
    let r = compute_metrics(
        &[result_at(&ep, vec![valid], 3.0, 0)],
        envs,
        std::slice::from_ref(&ep),
        SuccessRule::Visibility,
    )
    .unwrap();
    assert_eq!(r.spl, 1.0);
}

#[test]
fn metric_errors() {
    let (env, eps) = setup(4, 5);
    let envs = std::slice::from_ref(&env);
    assert!(matches!(
        compute_metrics(&[], envs, &eps, SuccessRule::Visibility),
        Err(Error::Empty(_))
    ));
    let mut r = random_results(&env, &eps, 0);
    r[0].episode_id = 12345;
    assert_eq!(
        compute_metrics(&r, envs, &eps, SuccessRule::Visibility).unwrap_err(),
        Error::UnknownEpisode(12345)
    );
    let r = random_results(&env, &eps, 0);
    assert!(matches!(
        compute_metrics(&r, &[], &eps, SuccessRule::Visibility),
        Err(Error::UnknownEnvironment(_))
    ));
}

#[test]
fn radius_rule_counts_distance_to_the_target() {
    let (env, eps) = setup(6, 20);
    for ep in &eps {
        let target = env.object(ep.target_object_id).unwrap();
        for vp in env.viewpoint_ids().step_by(7) {
            let r = result_at(ep, vec![vp], 0.0, 0);
            let near = env.position(vp).distance(target.center) <= 3.0;
            assert_eq!(
                navigation_success(&r, &env, ep, SuccessRule::WithinRadius(3.0)),
                near
            );
        }
    }
}

fn init_params(vocab: usize) -> ScorerParams {
    ScorerParams::init(
        ScorerDims {
            vocab_size: vocab,
            feature_dim: FEATURE_DIM,
            model_dim: 16,
        },
        0,
    )
}

#[test]
fn full_exploration_saturates_osr() {
    let (env, eps) = setup(7, 50);
    let p = init_params(TemplateSet::standard().vocab.len());
    let max_steps = eps.iter().map(|e| e.gold_steps).max().unwrap();
    let envs = std::slice::from_ref(&env);
    let results: Vec<EpisodeResult> = eps
        .iter()
        .map(|ep| {
            run_episode(
                &env,
                ep,
                &p,
                &AgentConfig {
                    limit: max_steps,
                    ..AgentConfig::default()
                },
            )
            .unwrap()
        })
        .collect();
    let report = compute_metrics(&results, envs, &eps, SuccessRule::Visibility).unwrap();
    assert_eq!(report.osr, 1.0);
    let pre: Vec<EpisodeResult> = eps
        .iter()
        .map(|ep| {
            let cfg = AgentConfig {
                limit: max_steps,
                mode: ExploreMode::PreExplored,
                ..AgentConfig::default()
            };
            run_episode(&env, ep, &p, &cfg).unwrap()
        })
        .collect();
    let pre_report = compute_metrics(&pre, envs, &eps, SuccessRule::Visibility).unwrap();
    assert!(report.spl <= pre_report.spl);
    assert_eq!(report.sr, pre_report.sr);
    assert!(report.tl >= pre_report.tl);
}

#[test]
fn seed_statistics() {
    let a = MetricsReport {
        n_episodes: 10,
        tl: 1.0,
        sr: 0.5,
        osr: 1.0,
        spl: 0.4,
        rgs: 0.2,
        rgspl: 0.1,
    };
    let b = MetricsReport {
        tl: 3.0,
        sr: 0.7,
        ..a
    };
    let (mean, std) = mean_std(&[a, b]);
    assert!((mean.tl - 2.0).abs() < 1e-15 && (mean.sr - 0.6).abs() < 1e-15);
    assert!((std.tl - 1.0).abs() < 1e-15 && (std.sr - 0.1).abs() < 1e-12);
    assert_eq!(std.osr, 0.0);

    let values: Vec<f64> = (0..200).map(|i| f64::from(u8::from(i % 4 == 0))).collect();
    let (lo, hi) = bootstrap_ci(&values, 1000, 0.95, 1);
    assert!(lo < 0.25 && 0.25 < hi && hi - lo < 0.2);
    assert_eq!(bootstrap_ci(&values, 1000, 0.95, 1), (lo, hi));
}

#[test]
fn toggle_names_round_trip() {
    let toggles = [
        Toggle::Full,
        Toggle::NoPositionalEncoding,
        Toggle::NoContextProposals,
        Toggle::NoDistanceLimit,
        Toggle::NoAugmentation,
        Toggle::NoGrouping,
        Toggle::NoFineTuning,
        Toggle::NoNeighborhood,
        Toggle::NegativeRate(50),
        Toggle::Bootstrapping,
        Toggle::EnvDropout(10),
        Toggle::StartRelative,
        Toggle::Absolute,
        Toggle::TwoStep,
    ];
    for t in toggles.into_iter().chain(TextMode::ALL.map(Toggle::Text)) {
        assert_eq!(t.name().parse::<Toggle>().unwrap(), t);
    }
    assert_eq!(
        "-- Augmentation".parse::<Toggle>().unwrap(),
        Toggle::NoAugmentation
    );
    assert!(matches!(
        "-- Warp Drive".parse::<Toggle>(),
        Err(Error::UnknownToggle(_))
    ));
}

#[test]
fn row_plans_change_only_the_named_setting() {
    let rows = [
        "RREx-BoT",
        "-- Augmentation",
        "-- Distance Limit",
        "Only Adj & Nouns",
        "-- Augmentation & + Two-Step Inference",
    ];
    let cfg = AblationConfig {
        rows: rows.iter().map(|s| s.to_string()).collect(),
        ..AblationConfig::default()
    };
    let plans = plan_rows(&cfg).unwrap();
    assert_eq!(plans[0].train, cfg.train);
    assert_eq!(plans[1].train.negative_rate, 0.0);
    assert_eq!(plans[1].agent, cfg.agent);
    assert_eq!(plans[2].train, cfg.train);
    assert!(plans[2].agent.limit > 1000);
    assert_eq!(plans[3].train.text_mode, TextMode::OnlyAdjNouns);
    assert_eq!(
        plans[4].toggles,
        vec![Toggle::NoAugmentation, Toggle::TwoStep]
    );
    assert!(plans[0].same_training(&plans[2]));
    assert!(!plans[0].same_training(&plans[1]));
    let bad = AblationConfig {
        rows: vec!["-- Nothing".into()],
        ..AblationConfig::default()
    };
    assert!(matches!(plan_rows(&bad), Err(Error::UnknownToggle(_))));
}

#[test]
fn tiny_ablation_suite_runs() {
    let spec = BenchmarkSpec {
        n_train_envs: 2,
        train_episodes: 20,
        val_seen_episodes: 10,
        n_unseen_envs: 1,
        val_unseen_episodes: 10,
        ..BenchmarkSpec::default()
    };
    let ds = build_dataset(&spec).unwrap();
    let empty = AblationConfig {
        benchmark: spec.clone(),
        ..AblationConfig::default()
    };
    assert!(run_ablation_suite_on(&empty, &ds).unwrap().is_empty());

    let mut cfg = AblationConfig {
        benchmark: spec,
        rows: vec![
            "RREx-BoT".into(),
            "-- Fine-Tuning".into(),
            "-- Viewpoint Grouping".into(),
        ],
        seeds: vec![0, 1],
        ..AblationConfig::default()
    };
    cfg.train.epochs = 2;
    cfg.train.model_dim = 8;
    let rows = run_ablation_suite_on(&cfg, &ds).unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row.seeds, vec![0, 1]);
        assert_eq!(row.splits.len(), 2);
        for s in &row.splits {
            assert_eq!(s.per_seed.len(), 2);
            assert!(s.mean.satisfies_order_constraints());
        }
    }
    // grouping changes inference only, so rows 0 and 2 share weights and differ in scores only
    assert_eq!(rows[0].splits[0].mean.osr, rows[2].splits[0].mean.osr);
    assert_eq!(run_ablation_suite_on(&cfg, &ds).unwrap(), rows);
}
