// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use rayon::prelude::*;

use crate::error::{ProbeError, Result};
use crate::metrics::auroc;
use crate::probe::{fit_direction_on, score_batch};
use crate::rng::SplitMix64;
use crate::store::LabeledDataset;

/// Mean AUROC per training-set size, averaged over repetitions.
#[derive(Debug, Clone)]
pub struct SampleCurve {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub test_ids: Vec<String>,
    /// `values[size][rep][test]`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// `mean[size][test]`.
    pub mean: Vec<Vec<f64>>,
}

/// Doubling grid 10, 20, 40, …, 10240 without the sizes above `n`.
pub fn default_sizes(n: usize) -> Vec<usize> {
    (0..11).map(|i| 10usize << i).filter(|&s| s <= n).collect()
}

/// Stratified draw of `size` indices without replacement, returned in
/// ascending order. The correct-class share is `round(size · n_true / n)`,
/// kept within `[1, size − 1]`.
pub fn stratified_subsample(
    labels: &[u8],
    size: usize,
    rng: &mut SplitMix64,
) -> Result<Vec<usize>> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    let err = || ProbeError::Subsample {
        size,
        n_true: pos.len(),
        n_false: neg.len(),
    };
    if size < 2 || size > labels.len() || pos.is_empty() || neg.is_empty() {
        return Err(err());
    }
    let n = labels.len();
    let mut take_pos = ((size * pos.len()) as f64 / n as f64).round() as usize;
    take_pos = take_pos.clamp(1, size - 1);
    if take_pos > pos.len() {
        take_pos = pos.len();
    }
    if size - take_pos > neg.len() {
        take_pos = size - neg.len();
    }
    if take_pos == 0 || take_pos == size || take_pos > pos.len() {
        return Err(err());
    }
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    let mut out: Vec<usize> = pos[..take_pos]
        .iter()
        .chain(&neg[..size - take_pos])
        .copied()
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// For each size and repetition: draw a stratified subsample of `train`
/// (stream `(size index << 32) | rep` derived from `seed`), fit, and score
/// every test set.
pub fn sample_curve(
    train: &LabeledDataset,
    tests: &[LabeledDataset],
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<SampleCurve> {
    if sizes.is_empty() || reps == 0 || tests.is_empty() {
        return Err(ProbeError::InvalidArgument(
            "sample curve needs sizes, reps ≥ 1 and at least one test set".into(),
        ));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProbeError::InvalidArgument(format!(
            "sizes must be strictly increasing: {sizes:?}"
        )));
    }
    if let Some(&max) = sizes.last() {
        if max > train.n() {
            return Err(ProbeError::InvalidArgument(format!(
                "size {max} exceeds the {} training samples",
                train.n()
            )));
        }
    }
    for t in tests {
        if t.d() != train.d() {
            return Err(ProbeError::DimensionMismatch {
                expected: train.d(),
                found: t.d(),
            });
        }
    }
    let labels = train.labels();
    let test_labels: Vec<Vec<u8>> = tests.iter().map(|t| t.labels()).collect();
    let jobs: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|s| (0..reps).map(move |r| (s, r)))
        .collect();
    let flat: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let mut rng = SplitMix64::derive(seed, ((s as u64) << 32) | r as u64);
            let idx = stratified_subsample(&labels, sizes[s], &mut rng)?;
            let dir = fit_direction_on(train, &idx)?;
            tests
                .iter()
                .zip(&test_labels)
                .map(|(t, l)| auroc(&score_batch(&dir, &t.matrix)?, l))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let values: Vec<Vec<Vec<f64>>> = flat.chunks(reps).map(|c| c.to_vec()).collect();
    let mean = values
        .iter()
        .map(|per_rep| {
            (0..tests.len())
                .map(|t| per_rep.iter().map(|v| v[t]).sum::<f64>() / reps as f64)
                .collect()
        })
        .collect();
    Ok(SampleCurve {
        sizes: sizes.to_vec(),
        reps,
        test_ids: tests.iter().map(|t| t.dataset_id().to_string()).collect(),
        values,
        mean,
    })
}

pub fn write_curve_csv(curve: &SampleCurve, train_id: &str, path: &Path) -> Result<()> {
    let header = [
        "train_dataset",
        "test_dataset",
        "size",
        "reps",
        "mean_auroc",
        "rep_aurocs",
    ];
    let mut rows = Vec::new();
    for (s, &size) in curve.sizes.iter().enumerate() {
        for (t, test_id) in curve.test_ids.iter().enumerate() {
            let reps = curve.values[s]
                .iter()
                .map(|v| v[t].to_string())
                .collect::<Vec<_>>()
                .join(";");
            rows.push(vec![
                train_id.to_string(),
                test_id.clone(),
                size.to_string(),
                curve.reps.to_string(),
                curve.mean[s][t].to_string(),
                reps,
            ]);
        }
    }
    super::write_csv(path, &header, rows)
}
