use rrex_core::benchmark::{build_dataset, BenchmarkSpec, Split};
use rrex_core::eval::{
    evaluate_split, run_ablation_suite_on, AblationConfig, MetricsReport, SuccessRule,
};
use rrex_core::scorer::{ScorerDims, ScorerParams};
use rrex_core::world::catalog::FEATURE_DIM;
use rrex_lab::parallel;
use rrex_lab::report::{ablation_table, breakdown, metrics_table, render_table, Axis};

fn small() -> BenchmarkSpec {
    BenchmarkSpec {
        n_train_envs: 2,
        train_episodes: 16,
        val_seen_episodes: 8,
        n_unseen_envs: 2,
        val_unseen_episodes: 8,
        ..BenchmarkSpec::default()
    }
}

#[test]
fn parallel_drivers_match_sequential_ones() {
    let ds = build_dataset(&small()).unwrap();
    let p = ScorerParams::init(
        ScorerDims {
            vocab_size: ds.vocab.len(),
            feature_dim: FEATURE_DIM,
            model_dim: 8,
        },
        1,
    );
    let agent = Default::default();
    let a = evaluate_split(&p, &ds, Split::ValUnseen, &agent, SuccessRule::Visibility).unwrap();
    let b = parallel::evaluate_split(&p, &ds, Split::ValUnseen, &agent, SuccessRule::Visibility)
        .unwrap();
    assert_eq!(a, b);

    let mut cfg = AblationConfig {
        benchmark: small(),
        rows: [
            "RREx-BoT",
            "-- Augmentation",
            "-- Viewpoint Grouping",
            "-- Fine-Tuning",
        ]
        .map(String::from)
        .to_vec(),
        seeds: vec![3, 4],
        ..AblationConfig::default()
    };
    cfg.train.epochs = 2;
    cfg.train.model_dim = 8;
    let seq = run_ablation_suite_on(&cfg, &ds).unwrap();
    let par = parallel::run_ablation(&cfg, &ds).unwrap();
    assert_eq!(par.rows, seq);
    assert_eq!(par.outcomes.len(), 4);
    assert_eq!(par.outcomes[0].len(), 2);
    assert_eq!(par.outcomes[0][1][0].report, seq[0].splits[0].per_seed[1]);

    cfg.rows.clear();
    assert!(parallel::run_ablation(&cfg, &ds).unwrap().rows.is_empty());
}

#[test]
fn tables_align_columns() {
    let t = render_table(
        &["name".into(), "x".into()],
        &[
            vec!["a".into(), "1.00".into()],
            vec!["longer".into(), "10.00".into()],
        ],
    );
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines[0], "name        x");
    assert_eq!(lines[2], "a        1.00");
    assert_eq!(lines[3], "longer  10.00");
    let r = MetricsReport {
        n_episodes: 4,
        tl: 12.345,
        sr: 0.5,
        osr: 0.75,
        spl: 0.25,
        rgs: 0.125,
        rgspl: 0.0625,
    };
    let m = metrics_table(&[("run".into(), r)]);
    assert!(
        m.lines()
            .nth(2)
            .unwrap()
            .ends_with("4  12.35  75.00  50.00  25.00  12.50   6.25"),
        "{m}"
    );
    assert_eq!(ablation_table(&[]).lines().count(), 2);
}

#[test]
fn breakdown_bins_cover_every_episode() {
    let ds = build_dataset(&small()).unwrap();
    let p = ScorerParams::init(
        ScorerDims {
            vocab_size: ds.vocab.len(),
            feature_dim: FEATURE_DIM,
            model_dim: 8,
        },
        1,
    );
    let out = parallel::evaluate_split(
        &p,
        &ds,
        Split::ValSeen,
        &Default::default(),
        SuccessRule::Visibility,
    )
    .unwrap();
    let (envs, eps) = ds.split(Split::ValSeen);
    for axis in Axis::ALL {
        let rows = breakdown("r", axis, &out.judgments, eps, envs, 8);
        assert_eq!(rows.iter().map(|r| r.n).sum::<usize>(), eps.len());
        for w in rows.windows(2) {
            assert!(w[0].bin_hi <= w[1].bin_lo);
        }
        let grounded: f64 = rows.iter().map(|r| r.rgs * r.n as f64).sum();
        assert!((grounded / eps.len() as f64 - out.report.rgs).abs() < 1e-12);
    }
    let lengths = breakdown("r", Axis::InstructionLength, &out.judgments, eps, envs, 8);
    for r in &lengths {
        let n = eps
            .iter()
            .filter(|e| e.instruction.len() as f64 == r.bin_lo)
            .count();
        assert_eq!(n, r.n);
    }
}
