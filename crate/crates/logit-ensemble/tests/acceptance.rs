//! Acceptance gate: one test per criterion, each printing a single pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).

use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use logit_ensemble::gradient::batch_gradient;
use logit_ensemble::metrics::roc_auc;
use logit_ensemble::model::{first_leaf, node_count, EnsembleModel};
use logit_ensemble::probability::{
    class1_probability, label_probability, mixture_oracle, path_probability,
};
use logit_ensemble::run::{self, RunConfig};
use logit_ensemble::synthetic;
use logit_ensemble::trainer::{train, TrainConfig};
use logit_ensemble::Dataset;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {id:2} {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn random_model(rng: &mut ChaCha12Rng, n_layers: u32, d: usize) -> EnsembleModel {
    let normal = Normal::new(0.0, 1.5).unwrap();
    let weights = (0..node_count(n_layers) * (d + 1))
        .map(|_| normal.sample(rng))
        .collect();
    EnsembleModel::from_weights(n_layers, d, weights).unwrap()
}

/// Model whose node activations at x = 0 equal the given values: bias set to
/// the logit of the target activation, feature weights zero.
fn model_with_activations(h: &[f64]) -> EnsembleModel {
    let n_layers = (h.len() + 1).ilog2();
    let weights = h
        .iter()
        .flat_map(|&v| [(v / (1.0 - v)).ln(), 0.0])
        .collect();
    EnsembleModel::from_weights(n_layers, 1, weights).unwrap()
}

#[test]
fn criterion_01_probability_oracle_equivalence() {
    let mut rng = ChaCha12Rng::seed_from_u64(1001);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=6u32 {
        for _ in 0..1000 {
            let d = rng.random_range(1..=4);
            let model = random_model(&mut rng, n, d);
            let x: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
            let y = rng.random_range(0..2u8);
            let recursive = label_probability(&model, &x, y).unwrap();
            let oracle = mixture_oracle(&model, &x, y).unwrap();
            worst = worst.max((recursive - oracle).abs());
        }
    }
    report(
        1,
        "probability oracle equivalence",
        worst <= 1e-12,
        &format!("max |recursive - enumerated| = {worst:.3e} over 6000 triples"),
    );
}

#[test]
fn criterion_02_gradient_matches_finite_differences() {
    let mut worst = 0.0f64;
    for (n, seed) in [(1u32, 3u64), (2, 9), (3, 8), (4, 12), (5, 4)] {
        let r = run::gradcheck(n, 10, seed, 16, false).unwrap();
        worst = worst.max(r.max_gradient_relative_error);
    }
    report(
        2,
        "analytical vs finite-difference gradient",
        worst <= 1e-6,
        &format!("max relative error {worst:.3e} for n in 1..=5"),
    );
}

#[test]
fn criterion_03_closed_form_spot_checks() {
    // Two-layer model with activations (0.5, 0.8, 0.4) at x = 0, label 1.
    let model = model_with_activations(&[0.5, 0.8, 0.4]);
    let x = [0.0];
    let p = label_probability(&model, &x, 1).unwrap();
    let cache = model.all_activations(&x).unwrap();
    let grad = batch_gradient(&model, &Dataset::new(vec![x.to_vec()], vec![1], None).unwrap())
        .unwrap();

    let mut worst = (p - 0.6).abs();
    worst = worst.max((grad.entry(1, 0) - (-1.0 / 6.0)).abs());
    worst = worst.max((grad.entry(2, 0) - (-2.0 / 15.0)).abs());
    worst = worst.max((grad.entry(3, 0) - (-0.2)).abs());

    // Path-probability identities: the root path weighs 1; a child path is
    // the parent's path times h for the even child and 1 - h for the odd one.
    let pw = |j| path_probability(&cache, 2, j).unwrap().value;
    worst = worst.max((pw(1) - 1.0).abs());
    worst = worst.max((pw(2) - 0.5).abs());
    worst = worst.max((pw(3) - 0.5).abs());
    let deep = model_with_activations(&[0.5, 0.8, 0.4, 0.9, 0.1, 0.7, 0.3]);
    let cache3 = deep.all_activations(&x).unwrap();
    let pw3 = |j| path_probability(&cache3, 3, j).unwrap().value;
    worst = worst.max((pw3(4) - 0.5 * 0.8).abs());
    worst = worst.max((pw3(5) - 0.5 * 0.2).abs());
    worst = worst.max((pw3(6) - 0.5 * 0.4).abs());
    worst = worst.max((pw3(7) - 0.5 * 0.6).abs());

    report(
        3,
        "closed-form spot checks",
        worst <= 1e-12,
        &format!("max deviation {worst:.3e}"),
    );
}

#[test]
fn criterion_04_path_probability_normalization() {
    let mut rng = ChaCha12Rng::seed_from_u64(4004);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=6u32 {
        for _ in 0..50 {
            let d = 3;
            let model = random_model(&mut rng, n, d);
            let x: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
            let cache = model.all_activations(&x).unwrap();
            let total: f64 = (first_leaf(n)..=node_count(n))
                .map(|j| path_probability(&cache, n, j).unwrap().value)
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    report(
        4,
        "leaf path probabilities sum to 1",
        worst <= 1e-12,
        &format!("max |sum - 1| = {worst:.3e} for n in 1..=6"),
    );
}

fn wine_config(dir: &Path) -> RunConfig {
    let data = dir.join("wine.csv");
    let table = synthetic::generate(1599, 2024).unwrap();
    synthetic::write_csv(&table, &data).unwrap();
    RunConfig {
        data,
        target_column: "quality".into(),
        label_threshold: 6,
        augmentation_fraction: 0.1,
        augmentation_seed: 1,
        split_ratio: 0.8,
        split_seed: 2,
        layers: vec![1, 2, 3],
        train: TrainConfig {
            learning_rate: 1e-4,
            iterations: 3000,
            init_scale: 0.01,
            seed: 100,
            cost_record_stride: 50,
            early_stop: true,
        },
        classification_threshold: 0.5,
        out_dir: dir.join("out"),
    }
}

#[test]
fn criterion_05_pipeline_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = wine_config(dir.path());
    let summary = run::prepare(&config).unwrap();
    let counts = (
        summary.augmented_rows,
        summary.train_rows,
        summary.test_rows,
    );
    report(
        5,
        "augmented/split row counts",
        counts == (3198, 2558, 640),
        &format!("got {counts:?}, want (3198, 2558, 640)"),
    );
}

#[test]
fn criterion_06_auc_rises_with_depth() {
    let dir = tempfile::tempdir().unwrap();
    let config = wine_config(dir.path());
    run::prepare(&config).unwrap();
    let (train_set, test_set) = run::load_prepared(&config).unwrap();

    let seeds = [101u64, 202, 303, 404, 505];
    let mut median_auc = Vec::new();
    for n in 1..=3u32 {
        let mut aucs: Vec<f64> = seeds
            .iter()
            .map(|&seed| {
                let layer_config = TrainConfig {
                    seed: seed.wrapping_add(u64::from(n)),
                    ..config.train.clone()
                };
                let result = train(&train_set, &layer_config, n).unwrap();
                let scores: Vec<f64> = (0..test_set.len())
                    .map(|k| class1_probability(&result.model, test_set.row(k)).unwrap())
                    .collect();
                roc_auc(&scores, test_set.labels()).unwrap().1
            })
            .collect();
        aucs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_auc.push(aucs[aucs.len() / 2]);
    }

    let (a1, a2, a3) = (median_auc[0], median_auc[1], median_auc[2]);
    let ok = a2 > a1 && a3 >= a2 - 0.01 && a2 >= 0.76;
    report(
        6,
        "median test AUC trend over depth",
        ok,
        &format!("median AUC n=1..3: {a1:.4}, {a2:.4}, {a3:.4} over {} seeds", seeds.len()),
    );
}

#[test]
fn criterion_07_symmetry_breaking() {
    let dataset = Dataset::new(
        vec![vec![-2.0], vec![-1.5], vec![1.5], vec![2.0]],
        vec![0, 0, 1, 1],
        None,
    )
    .unwrap();
    let base = TrainConfig {
        learning_rate: 0.1,
        iterations: 100,
        seed: 7,
        early_stop: false,
        ..TrainConfig::default()
    };

    let zero_init = train(
        &dataset,
        &TrainConfig {
            init_scale: 0.0,
            ..base.clone()
        },
        2,
    )
    .unwrap();
    let siblings_equal = zero_init.model.node_weights(2).unwrap()
        == zero_init.model.node_weights(3).unwrap();

    let noisy_init = train(
        &dataset,
        &TrainConfig {
            init_scale: 0.01,
            ..base
        },
        2,
    )
    .unwrap();
    let siblings_differ =
        noisy_init.model.node_weights(2).unwrap() != noisy_init.model.node_weights(3).unwrap();

    report(
        7,
        "zero init keeps siblings tied, noisy init breaks the tie",
        siblings_equal && siblings_differ,
        &format!("zero-init equal: {siblings_equal}, noisy-init differ: {siblings_differ}"),
    );
}

#[test]
fn criterion_08_descent_is_non_increasing() {
    let dataset = Dataset::new(
        vec![vec![-2.0], vec![-1.5], vec![1.5], vec![2.0]],
        vec![0, 0, 1, 1],
        None,
    )
    .unwrap();
    let config = TrainConfig {
        learning_rate: 0.01,
        iterations: 500,
        seed: 8,
        early_stop: false,
        ..TrainConfig::default()
    };
    let result = train(&dataset, &config, 2).unwrap();
    let mut worst_rise = f64::NEG_INFINITY;
    for pair in result.cost_history.windows(2) {
        worst_rise = worst_rise.max(pair[1].1 - pair[0].1);
    }
    report(
        8,
        "cost history non-increasing at lr 0.01",
        worst_rise <= 1e-9,
        &format!("largest per-step rise {worst_rise:.3e} over {} steps", config.iterations),
    );
}

#[test]
fn criterion_09_auc_trapezoid_equals_pairwise() {
    let mut rng = ChaCha12Rng::seed_from_u64(9009);
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 200 {
        let k = rng.random_range(2..=50);
        let labels: Vec<u8> = (0..k).map(|_| rng.random_range(0..2u8)).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        // Coarse score grid so ties actually occur.
        let scores: Vec<f64> = (0..k)
            .map(|_| f64::from(rng.random_range(0..10u32)) / 10.0)
            .collect();
        let (_, auc) = roc_auc(&scores, &labels).unwrap();

        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..k {
            for j in 0..k {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        worst = worst.max((auc - wins / pairs).abs());
        instances += 1;
    }
    report(
        9,
        "trapezoidal AUC equals pairwise counting",
        worst <= 1e-12,
        &format!("max |difference| = {worst:.3e} over 200 instances"),
    );
}

#[test]
fn criterion_10_cli_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_logit-ensemble");

    let data = dir.path().join("wine.csv");
    let table = synthetic::generate(300, 5).unwrap();
    synthetic::write_csv(&table, &data).unwrap();
    let config = RunConfig {
        data,
        target_column: "quality".into(),
        label_threshold: 6,
        augmentation_fraction: 0.1,
        augmentation_seed: 21,
        split_ratio: 0.8,
        split_seed: 22,
        layers: vec![1, 2],
        train: TrainConfig {
            learning_rate: 1e-3,
            iterations: 200,
            init_scale: 0.01,
            seed: 23,
            cost_record_stride: 20,
            early_stop: true,
        },
        classification_threshold: 0.5,
        out_dir: dir.path().join("out"),
    };
    let config_path = dir.path().join("run.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let full_run = || {
        for sub in ["prepare", "train", "evaluate"] {
            let status = Command::new(bin)
                .args([sub, "--config"])
                .arg(&config_path)
                .status()
                .unwrap();
            assert!(status.success(), "{sub} exited with {status}");
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&config.out_dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().into_string().unwrap(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };

    let first = full_run();
    std::fs::remove_dir_all(&config.out_dir).unwrap();
    let second = full_run();

    let names: Vec<&String> = first.iter().map(|(n, _)| n).collect();
    let ok = !first.is_empty() && first == second;
    report(
        10,
        "two CLI runs produce byte-identical artifacts",
        ok,
        &format!("{} artifacts compared: {names:?}", first.len()),
    );
}
