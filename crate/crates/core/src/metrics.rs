// SPDX-License-Identifier: MIT OR Apache-2.0

//! AUROC and fold machinery.
//!
//! AUROC is the Mann–Whitney statistic computed from average ranks, so tied
//! cross-class pairs count one half. Ranks are carried as doubled integers,
//! which keeps the result identical to the pairwise definition down to the
//! last bit.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::probe::{fit_direction_on, score_rows, Direction};
use crate::rng::SplitMix64;
use crate::store::LabeledDataset;

pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(ProbeError::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(ProbeError::NanScore(i));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ProbeError::SingleClass { n_pos, n_neg });
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Positions i..j share a score; their 1-based average rank doubled is
    // (i + 1) + j.
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let rank2 = (i + 1 + j) as u128;
        let group_pos = order[i..j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        pos_rank_sum2 += rank2 * group_pos;
        i = j;
    }
    let np = n_pos as u128;
    let u2 = pos_rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * n_pos as u128 * n_neg as u128) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldStrategy {
    /// Each class shuffled separately and dealt round-robin across folds.
    StratifiedShuffled,
    /// Contiguous index blocks, fold of sample `i` is `⌊i·k/n⌋`.
    Sequential,
}

impl fmt::Display for FoldStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FoldStrategy::StratifiedShuffled => "stratified_shuffled",
            FoldStrategy::Sequential => "sequential",
        })
    }
}

impl FromStr for FoldStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stratified_shuffled" | "stratified" => Ok(FoldStrategy::StratifiedShuffled),
            "sequential" => Ok(FoldStrategy::Sequential),
            other => Err(format!(
                "unknown fold strategy {other:?} (expected stratified_shuffled or sequential)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
    pub strategy: FoldStrategy,
}

impl FoldPlan {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }
}

/// Deterministic fold assignment.
///
/// Stratified plans process label 0 then label 1 with one [`SplitMix64`]
/// stream seeded by `seed`: each class's indices are Fisher–Yates shuffled
/// and the `p`-th shuffled member goes to fold `(offset + p) mod k`, where
/// `offset` is the number of samples already dealt.
pub fn make_folds(labels: &[u8], k: usize, seed: u64, strategy: FoldStrategy) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 {
        return Err(ProbeError::InvalidArgument(format!(
            "k must be ≥ 2, got {k}"
        )));
    }
    if n < k {
        return Err(ProbeError::InvalidArgument(format!(
            "{n} samples cannot fill {k} folds"
        )));
    }
    let mut assignment = vec![0usize; n];
    match strategy {
        FoldStrategy::Sequential => {
            for (i, a) in assignment.iter_mut().enumerate() {
                *a = i * k / n;
            }
        }
        FoldStrategy::StratifiedShuffled => {
            let mut rng = SplitMix64::new(seed);
            let mut offset = 0;
            for label in [0u8, 1] {
                let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == label).collect();
                if members.len() < k {
                    return Err(ProbeError::ClassTooSmall {
                        label,
                        count: members.len(),
                        k,
                    });
                }
                rng.shuffle(&mut members);
                for (p, &i) in members.iter().enumerate() {
                    assignment[i] = (offset + p) % k;
                }
                offset += members.len();
            }
            if offset != n {
                return Err(ProbeError::InvalidArgument("labels must be 0 or 1".into()));
            }
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
        strategy,
    })
}

/// Per-fold AUROCs with their mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auroc_per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub n_pos: Vec<usize>,
    pub n_neg: Vec<usize>,
}

impl EvalResult {
    pub fn from_folds(auroc_per_fold: Vec<f64>, n_pos: Vec<usize>, n_neg: Vec<usize>) -> Self {
        let k = auroc_per_fold.len() as f64;
        let mean = auroc_per_fold.iter().sum::<f64>() / k;
        let var = auroc_per_fold
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / k;
        Self {
            auroc_per_fold,
            mean,
            std: var.sqrt(),
            n_pos,
            n_neg,
        }
    }

    pub fn single(auroc: f64, n_pos: usize, n_neg: usize) -> Self {
        Self::from_folds(vec![auroc], vec![n_pos], vec![n_neg])
    }

    pub fn k(&self) -> usize {
        self.auroc_per_fold.len()
    }

    pub fn folds_field(&self) -> String {
        self.auroc_per_fold
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Header of the CSV produced by [`EvalRow`].
pub const EVAL_CSV_HEADER: [&str; 10] = [
    "model_id",
    "train_dataset",
    "test_dataset",
    "layer",
    "k",
    "mean_auroc",
    "std_auroc",
    "fold_aurocs",
    "n_pos",
    "n_neg",
];

/// One CSV row of an evaluation.
#[derive(Debug, Clone)]
pub struct EvalRow<'a> {
    pub model_id: &'a str,
    pub train_dataset: &'a str,
    pub test_dataset: &'a str,
    pub layer: u32,
    pub result: &'a EvalResult,
}

impl EvalRow<'_> {
    pub fn record(&self) -> Vec<String> {
        let join = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        vec![
            self.model_id.to_string(),
            self.train_dataset.to_string(),
            self.test_dataset.to_string(),
            self.layer.to_string(),
            self.result.k().to_string(),
            self.result.mean.to_string(),
            self.result.std.to_string(),
            self.result.folds_field(),
            join(&self.result.n_pos),
            join(&self.result.n_neg),
        ]
    }
}

/// Outcome of one held-out fold.
#[derive(Debug, Clone)]
pub(crate) struct FoldOutcome {
    pub auroc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

pub(crate) fn check_plan(data: &LabeledDataset, plan: &FoldPlan) -> Result<()> {
    if plan.n() != data.n() {
        return Err(ProbeError::CountMismatch {
            rows: data.n(),
            records: plan.n(),
        });
    }
    Ok(())
}

pub(crate) fn eval_on(
    dir: &Direction,
    data: &LabeledDataset,
    indices: &[usize],
) -> Result<(f64, usize, usize)> {
    let scores = score_rows(dir, &data.matrix, indices)?;
    let labels: Vec<u8> = indices.iter().map(|&i| data.meta[i].correct).collect();
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let a = auroc(&scores, &labels)?;
    Ok((a, n_pos, labels.len() - n_pos))
}

pub(crate) fn cv_folds(data: &LabeledDataset, plan: &FoldPlan) -> Result<Vec<FoldOutcome>> {
    check_plan(data, plan)?;
    (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let direction = fit_direction_on(data, &plan.train_indices(f))?;
            let (auroc, n_pos, n_neg) = eval_on(&direction, data, &plan.test_indices(f))?;
            Ok(FoldOutcome {
                auroc,
                n_pos,
                n_neg,
            })
        })
        .collect()
}

pub fn cv_auroc(data: &LabeledDataset, plan: &FoldPlan) -> Result<EvalResult> {
    let folds = cv_folds(data, plan)?;
    Ok(EvalResult::from_folds(
        folds.iter().map(|f| f.auroc).collect(),
        folds.iter().map(|f| f.n_pos).collect(),
        folds.iter().map(|f| f.n_neg).collect(),
    ))
}
