// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{ProbeError, Result};
use crate::metrics::{
    eval_on, make_folds, EvalResult, EvalRow, FoldPlan, FoldStrategy, EVAL_CSV_HEADER,
};
use crate::probe::{fit_direction_on, Direction};
use crate::store::{LabeledDataset, SampleMeta};

/// Train-dataset × test-dataset grid of fold-wise AUROCs.
#[derive(Debug, Clone)]
pub struct CrossMatrix {
    pub dataset_ids: Vec<String>,
    /// `cells[train][test]`.
    pub cells: Vec<Vec<EvalResult>>,
    /// Per training dataset, the mean of its `k` fold directions.
    pub directions: Vec<Direction>,
    pub plans: Vec<FoldPlan>,
    pub protocol: String,
}

/// For fold `f`, the direction fitted on every fold but `f` of the training
/// dataset is evaluated on fold `f` of each test dataset. Test folds are the
/// same for every training dataset, and the diagonal never scores a training
/// sample.
pub fn cross_matrix(
    datasets: &[LabeledDataset],
    k: usize,
    seed: u64,
    strategy: FoldStrategy,
) -> Result<CrossMatrix> {
    let first = datasets
        .first()
        .ok_or_else(|| ProbeError::InvalidArgument("no datasets".into()))?;
    for ds in datasets {
        if ds.d() != first.d() {
            return Err(ProbeError::DimensionMismatch {
                expected: first.d(),
                found: ds.d(),
            });
        }
    }
    let plans: Vec<FoldPlan> = datasets
        .iter()
        .map(|ds| make_folds(&ds.labels(), k, seed, strategy))
        .collect::<Result<_>>()?;
    let test_folds: Vec<Vec<Vec<usize>>> = plans
        .iter()
        .map(|p| (0..k).map(|f| p.test_indices(f)).collect())
        .collect();

    // Fold directions: (train dataset, fold) jobs.
    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|t| (0..k).map(move |f| (t, f)))
        .collect();
    let fold_dirs: Vec<Direction> = jobs
        .par_iter()
        .map(|&(t, f)| fit_direction_on(&datasets[t], &plans[t].train_indices(f)))
        .collect::<Result<_>>()?;

    // Evaluations: (train, test, fold) jobs.
    let eval_jobs: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|t| (0..datasets.len()).flat_map(move |e| (0..k).map(move |f| (t, e, f))))
        .collect();
    let evals: Vec<(f64, usize, usize)> = eval_jobs
        .par_iter()
        .map(|&(t, e, f)| eval_on(&fold_dirs[t * k + f], &datasets[e], &test_folds[e][f]))
        .collect::<Result<_>>()?;

    let m = datasets.len();
    let mut cells = Vec::with_capacity(m);
    for t in 0..m {
        let mut row = Vec::with_capacity(m);
        for e in 0..m {
            let folds = &evals[(t * m + e) * k..(t * m + e + 1) * k];
            row.push(EvalResult::from_folds(
                folds.iter().map(|x| x.0).collect(),
                folds.iter().map(|x| x.1).collect(),
                folds.iter().map(|x| x.2).collect(),
            ));
        }
        cells.push(row);
    }
    let directions = (0..m)
        .map(|t| {
            let mut avg = Direction::average(&fold_dirs[t * k..(t + 1) * k])?;
            let c = datasets[t].counts();
            avg.n_true = c.n_true;
            avg.n_false = c.n_false;
            Ok(avg)
        })
        .collect::<Result<_>>()?;

    Ok(CrossMatrix {
        dataset_ids: datasets
            .iter()
            .map(|d| d.dataset_id().to_string())
            .collect(),
        cells,
        directions,
        plans,
        protocol: format!("{k}-fold {strategy} seed={seed}, shared test folds"),
    })
}

/// Fails if any `sample_id` of the layer-selection `pool` also occurs in one
/// of `datasets`.
pub fn ensure_disjoint(pool: &[SampleMeta], datasets: &[LabeledDataset]) -> Result<()> {
    let ids: HashSet<&str> = pool.iter().map(|m| m.sample_id.as_str()).collect();
    for ds in datasets {
        if let Some(m) = ds.meta.iter().find(|m| ids.contains(m.sample_id.as_str())) {
            return Err(ProbeError::OverlappingPools {
                sample_id: m.sample_id.clone(),
                dataset_id: ds.dataset_id().to_string(),
            });
        }
    }
    Ok(())
}

pub fn write_cross_csv(
    matrix: &CrossMatrix,
    model_id: &str,
    layer: u32,
    path: &Path,
) -> Result<()> {
    let mut rows = Vec::new();
    for (t, row) in matrix.cells.iter().enumerate() {
        for (e, cell) in row.iter().enumerate() {
            rows.push(
                EvalRow {
                    model_id,
                    train_dataset: &matrix.dataset_ids[t],
                    test_dataset: &matrix.dataset_ids[e],
                    layer,
                    result: cell,
                }
                .record(),
            );
        }
    }
    super::write_csv(path, &EVAL_CSV_HEADER, rows)
}
