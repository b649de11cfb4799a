// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use correctness_probe::rng::SplitMix64;
use correctness_probe::{ActivationMatrix, Category, LabeledDataset, SampleMeta};

pub fn meta(dataset: &str, i: usize, correct: u8) -> SampleMeta {
    SampleMeta {
        sample_id: format!("{dataset}-{i}"),
        dataset_id: dataset.to_string(),
        question: format!("question {i}"),
        gold: vec![format!("gold {i}")],
        answer: format!("answer {i}"),
        correct,
        category: if correct == 1 {
            Category::Right
        } else {
            Category::Wrong
        },
        verbalized_confidence: None,
    }
}

pub fn labeled(dataset: &str, layer: u32, rows: &[Vec<f32>], labels: &[u8]) -> LabeledDataset {
    let matrix = ActivationMatrix::from_rows(layer, rows).unwrap();
    let records = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| meta(dataset, i, l))
        .collect();
    LabeledDataset::new(matrix, records).unwrap()
}

/// Uniform value on a 2^-12 grid within (-scale, scale); exact in f32 for
/// scale ≤ 1024.
pub fn grid_value(rng: &mut SplitMix64, scale: f64) -> f32 {
    let steps = (scale * 4096.0) as u64;
    let k = rng.below(2 * steps) as i64 - steps as i64;
    (k as f64 / 4096.0) as f32
}

pub fn random_rows(rng: &mut SplitMix64, n: usize, d: usize, scale: f64) -> Vec<Vec<f32>> {
    (0..n)
        .map(|_| (0..d).map(|_| grid_value(rng, scale)).collect())
        .collect()
}

/// Labels with at least one member of each class.
pub fn random_labels(rng: &mut SplitMix64, n: usize) -> Vec<u8> {
    assert!(n >= 2);
    let mut labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
    labels[0] = 1;
    labels[1] = 0;
    rng.shuffle(&mut labels);
    labels
}

/// Pairwise definition: wins plus half of ties over all positive/negative
/// pairs.
pub fn pairwise_auroc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut twice_wins: u64 = 0;
    let (mut n_pos, mut n_neg) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li == 1 {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 1 {
                continue;
            }
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * n_pos * n_neg) as f64
}

/// Class means by direct column averaging.
pub fn column_means(rows: &[Vec<f32>], labels: &[u8], class: u8) -> Vec<f64> {
    let d = rows[0].len();
    let members: Vec<&Vec<f32>> = rows
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == class)
        .map(|(r, _)| r)
        .collect();
    (0..d)
        .map(|j| members.iter().map(|r| r[j] as f64).sum::<f64>() / members.len() as f64)
        .collect()
}
