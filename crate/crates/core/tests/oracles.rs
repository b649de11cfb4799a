// SPDX-License-Identifier: MIT OR Apache-2.0

//! Library results checked against independent reference computations and
//! Monte Carlo expectations.

mod common;

use correctness_probe::baselines::{
    fit_logreg, fit_logreg_on, predict_proba, EmbeddingDataset, LogRegOptions,
};
use correctness_probe::experiments::{
    cosine_matrix, cross_matrix, extremes, idk_report, sample_curve,
};
use correctness_probe::probe::{load_direction, save_direction};
use correctness_probe::rng::{NormalStream, SplitMix64};
use correctness_probe::{
    auroc, cv_auroc, fit_direction, generate, make_folds, score, score_batch, Category, Direction,
    FoldStrategy, GaussianSpec,
};

use common::{column_means, labeled, random_labels, random_rows};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn oracle_score(h: &[f64], mu_t: &[f64], mu_f: &[f64]) -> f64 {
    let w: Vec<f64> = mu_t.iter().zip(mu_f).map(|(t, f)| t - f).collect();
    let mid: Vec<f64> = mu_t.iter().zip(mu_f).map(|(t, f)| 0.5 * (t + f)).collect();
    let centered: Vec<f64> = h.iter().zip(&mid).map(|(x, m)| x - m).collect();
    dot(&centered, &w) / dot(&w, &w).sqrt()
}

#[test]
fn centroids_match_column_means() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..50 {
        let rows = random_rows(&mut rng, 6, 3, 10.0);
        let labels = random_labels(&mut rng, 6);
        let Ok(dir) = fit_direction(&labeled("c", 0, &rows, &labels)) else {
            continue;
        };
        let t = column_means(&rows, &labels, 1);
        let f = column_means(&rows, &labels, 0);
        for j in 0..3 {
            assert!((dir.w()[j] - (t[j] - f[j])).abs() < 1e-12);
            assert!((dir.mu()[j] - 0.5 * (t[j] + f[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn single_scores_match_dot_product() {
    let mut rng = SplitMix64::new(12);
    let rows = random_rows(&mut rng, 40, 5, 3.0);
    let labels = random_labels(&mut rng, 40);
    let dir = fit_direction(&labeled("s", 0, &rows, &labels)).unwrap();
    let (t, f) = (
        column_means(&rows, &labels, 1),
        column_means(&rows, &labels, 0),
    );
    for _ in 0..100 {
        let h: Vec<f64> = (0..5).map(|_| rng.next_f64() * 20.0 - 10.0).collect();
        let expected = oracle_score(&h, &t, &f);
        assert!((score(&dir, &h).unwrap() - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn batch_scores_match_row_loop() {
    let mut rng = SplitMix64::new(13);
    let rows = random_rows(&mut rng, 1000, 7, 5.0);
    let labels = random_labels(&mut rng, 1000);
    let data = labeled("b", 0, &rows, &labels);
    let dir = fit_direction(&data).unwrap();
    let (t, f) = (
        column_means(&rows, &labels, 1),
        column_means(&rows, &labels, 0),
    );
    let batch = score_batch(&dir, &data.matrix).unwrap();
    for (row, s) in rows.iter().zip(&batch) {
        let h: Vec<f64> = row.iter().map(|&x| x as f64).collect();
        let expected = oracle_score(&h, &t, &f);
        assert!((s - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }
}

#[test]
fn wide_direction_survives_disk() {
    let mut normals = NormalStream::new(SplitMix64::new(14));
    let w: Vec<f64> = (0..4096).map(|_| normals.sample()).collect();
    let mu: Vec<f64> = (0..4096).map(|_| normals.sample() * 1e3).collect();
    let dir = Direction::from_parts(w, mu, 17).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("wide.json");
    save_direction(&dir, &path).unwrap();
    let back = load_direction(&path).unwrap();
    let max_err = dir
        .w()
        .iter()
        .zip(back.w())
        .chain(dir.mu().iter().zip(back.mu()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_err < 1e-12, "max error {max_err}");
    assert_eq!(back.layer, 17);
}

#[test]
fn null_geometry_gives_chance_auroc() {
    let data = generate(&GaussianSpec::new(8, 10_000, 0.0, 1.0, 21))
        .unwrap()
        .data;
    let plan = make_folds(&data.labels(), 5, 3, FoldStrategy::StratifiedShuffled).unwrap();
    let r = cv_auroc(&data, &plan).unwrap();
    assert!((r.mean - 0.5).abs() <= 0.02, "null cv auroc {}", r.mean);
}

#[test]
fn point_masses_separate_perfectly() {
    let data = generate(&GaussianSpec::new(4, 30, 1.5, 0.0, 22))
        .unwrap()
        .data;
    let plan = make_folds(&data.labels(), 3, 0, FoldStrategy::StratifiedShuffled).unwrap();
    assert_eq!(cv_auroc(&data, &plan).unwrap().mean, 1.0);
}

#[test]
fn same_generator_transfers_across_datasets() {
    let axis = {
        let mut a = vec![0.0; 16];
        a[3] = 1.0;
        a
    };
    let make = |seed: u64, id: &str| {
        let mut spec = GaussianSpec::new(16, 3000, 2.0, 1.0, seed);
        spec.axis = Some(axis.clone());
        spec.dataset_id = id.into();
        generate(&spec).unwrap().data
    };
    let sets = [make(31, "a"), make(32, "b")];
    let m = cross_matrix(&sets, 5, 9, FoldStrategy::StratifiedShuffled).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let gap = (m.cells[i][j].mean - m.cells[j][j].mean).abs();
            assert!(gap <= 0.02, "cell ({i},{j}) differs by {gap}");
        }
    }
}

#[test]
fn cross_diagonal_reproduces_cv() {
    let data = generate(&GaussianSpec::new(6, 200, 1.0, 1.0, 33))
        .unwrap()
        .data;
    let other = generate(&GaussianSpec::new(6, 150, 1.0, 1.0, 34))
        .unwrap()
        .data;
    let m = cross_matrix(
        &[data.clone(), other],
        4,
        5,
        FoldStrategy::StratifiedShuffled,
    )
    .unwrap();
    let plan = make_folds(&data.labels(), 4, 5, FoldStrategy::StratifiedShuffled).unwrap();
    assert_eq!(m.cells[0][0], cv_auroc(&data, &plan).unwrap());
}

#[test]
fn sample_curve_rises_with_training_size() {
    let mut spec = GaussianSpec::new(32, 2000, 1.0, 1.0, 41);
    spec.dataset_id = "train".into();
    let synthetic = generate(&spec).unwrap();
    let mut test_spec = spec.clone();
    test_spec.seed = 42;
    test_spec.axis = Some(synthetic.axis.clone());
    test_spec.dataset_id = "test".into();
    let test = generate(&test_spec).unwrap().data;
    let sizes = [20, 80, 320, 1280];
    let curve = sample_curve(&synthetic.data, &[test], &sizes, 10, 7).unwrap();
    for w in curve.mean.windows(2) {
        assert!(w[1][0] >= w[0][0] - 0.01, "curve dropped: {:?}", curve.mean);
    }
}

#[test]
fn idk_group_sits_below_wrong_answers() {
    let mut spec = GaussianSpec::new(16, 4000, 2.0, 1.0, 51);
    spec.idk_fraction = 0.2;
    spec.idk_shift = -2.0;
    let data = generate(&spec).unwrap().data;
    let report = idk_report(&fit_direction(&data).unwrap(), &data).unwrap();
    let (idk, wrong, right) = (
        report.group(Category::Idk),
        report.group(Category::Wrong),
        report.group(Category::Right),
    );
    assert!(idk.mean < wrong.mean && wrong.mean < right.mean);
    assert_eq!(idk.count, 800);
    let total: u64 = report
        .groups
        .iter()
        .map(|g| g.histogram.iter().sum::<u64>() + g.underflow + g.overflow)
        .sum();
    assert_eq!(total as usize, report.n);
}

#[test]
fn extremes_agree_with_sorting() {
    let data = generate(&GaussianSpec::new(5, 60, 1.0, 1.0, 61))
        .unwrap()
        .data;
    let dir = fit_direction(&data).unwrap();
    let scores = score_batch(&dir, &data.matrix).unwrap();
    let ex = extremes(&dir, &data, 5).unwrap();
    let mut correct: Vec<(f64, usize)> = (0..data.n())
        .filter(|&i| data.meta[i].correct == 1)
        .map(|i| (scores[i], i))
        .collect();
    correct.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top: Vec<usize> = correct[..5].iter().map(|p| p.1).collect();
    assert_eq!(
        ex.correct_high.iter().map(|e| e.index).collect::<Vec<_>>(),
        top
    );
    assert!(ex
        .incorrect_low
        .windows(2)
        .all(|w| w[0].score <= w[1].score));
}

#[test]
fn cosine_matches_normalized_dot() {
    let mut normals = NormalStream::new(SplitMix64::new(71));
    let dirs: Vec<Direction> = (0..4)
        .map(|_| {
            Direction::from_parts((0..9).map(|_| normals.sample()).collect(), vec![0.0; 9], 0)
                .unwrap()
        })
        .collect();
    let m = cosine_matrix(&dirs).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (dirs[i].w(), dirs[j].w());
            let expected = dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt());
            assert!((m[i][j] - expected).abs() < 1e-12);
        }
    }
}

fn embedding_set(rows: &[Vec<f32>], labels: &[u8]) -> EmbeddingDataset {
    EmbeddingDataset::new(labeled("emb", 0, rows, labels), "embedder")
}

#[test]
fn assessor_on_unrelated_labels_is_at_chance() {
    let mut rng = SplitMix64::new(81);
    let rows = random_rows(&mut rng, 4000, 8, 2.0);
    let labels = random_labels(&mut rng, 4000);
    let data = embedding_set(&rows, &labels);
    let train: Vec<usize> = (0..2000).collect();
    let (model, _) = fit_logreg_on(&data, &train, &LogRegOptions::default()).unwrap();
    let held_out = data.data.select(&(2000..4000).collect::<Vec<_>>());
    let p = predict_proba(&model, &held_out.matrix).unwrap();
    let a = auroc(&p, &held_out.labels()).unwrap();
    assert!((a - 0.5).abs() <= 0.06, "null assessor auroc {a}");
}

#[test]
fn heavy_penalty_shrinks_weights() {
    let data = generate(&GaussianSpec::new(4, 200, 3.0, 1.0, 82))
        .unwrap()
        .data;
    let data = EmbeddingDataset::new(data, "embedder");
    let opts = LogRegOptions {
        l2_lambda: 1e6,
        ..LogRegOptions::default()
    };
    let model = fit_logreg(&data, &opts).unwrap();
    assert!(model.converged);
    assert!(
        model.weights.iter().all(|w| w.abs() < 1e-5),
        "{:?}",
        model.weights
    );
    let light = LogRegOptions {
        l2_lambda: 1e-3,
        ..LogRegOptions::default()
    };
    let loose = fit_logreg(&data, &light).unwrap();
    assert!(loose.weights.iter().map(|w| w.abs()).sum::<f64>() > 1.0);
}

#[test]
fn assessor_loss_never_increases() {
    let data = generate(&GaussianSpec::new(6, 300, 1.0, 1.0, 83))
        .unwrap()
        .data;
    let data = EmbeddingDataset::new(data, "embedder");
    let rows: Vec<usize> = (0..data.data.n()).collect();
    let (_, trace) = fit_logreg_on(&data, &rows, &LogRegOptions::default()).unwrap();
    assert!(trace.losses.windows(2).all(|w| w[1] <= w[0]));
}
