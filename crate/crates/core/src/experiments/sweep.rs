// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use rayon::prelude::*;

use crate::error::{ProbeError, Result};
use crate::metrics::{
    cv_auroc, make_folds, EvalResult, EvalRow, FoldPlan, FoldStrategy, EVAL_CSV_HEADER,
};
use crate::store::LabeledDataset;

#[derive(Debug, Clone)]
pub struct LayerSweepResult {
    /// `(layer, result)` in ascending layer order.
    pub layers: Vec<(u32, EvalResult)>,
    pub best_layer: u32,
    /// Smallest gap between consecutive sampled layers (1 for a single layer).
    pub layer_stride: u32,
    pub plan: FoldPlan,
}

impl LayerSweepResult {
    pub fn best(&self) -> &EvalResult {
        &self
            .layers
            .iter()
            .find(|(l, _)| *l == self.best_layer)
            .expect("best layer is one of the swept layers")
            .1
    }
}

/// Cross-validated AUROC for every layer under one shared fold plan; the best
/// layer has the highest mean, ties going to the lowest index.
pub fn sweep_layers(
    layers: &[LabeledDataset],
    k: usize,
    seed: u64,
    strategy: FoldStrategy,
) -> Result<LayerSweepResult> {
    let first = layers
        .first()
        .ok_or_else(|| ProbeError::InvalidArgument("no layers to sweep".into()))?;
    for ds in layers {
        if ds.n() != first.n() {
            return Err(ProbeError::InconsistentLayers {
                layer: ds.matrix.layer,
                reason: format!(
                    "{} rows, layer {} has {}",
                    ds.n(),
                    first.matrix.layer,
                    first.n()
                ),
            });
        }
        if ds.d() != first.d() {
            return Err(ProbeError::InconsistentLayers {
                layer: ds.matrix.layer,
                reason: format!("hidden width {} differs from {}", ds.d(), first.d()),
            });
        }
        if let Some(i) = (0..ds.n()).find(|&i| {
            ds.meta[i].sample_id != first.meta[i].sample_id
                || ds.meta[i].correct != first.meta[i].correct
        }) {
            return Err(ProbeError::InconsistentLayers {
                layer: ds.matrix.layer,
                reason: format!("metadata diverges at sample {:?}", ds.meta[i].sample_id),
            });
        }
    }
    let mut order: Vec<&LabeledDataset> = layers.iter().collect();
    order.sort_by_key(|ds| ds.matrix.layer);
    if let Some(w) = order
        .windows(2)
        .find(|w| w[0].matrix.layer == w[1].matrix.layer)
    {
        return Err(ProbeError::InconsistentLayers {
            layer: w[0].matrix.layer,
            reason: "layer appears twice".into(),
        });
    }

    let plan = make_folds(&first.labels(), k, seed, strategy)?;
    let results: Vec<(u32, EvalResult)> = order
        .par_iter()
        .map(|ds| Ok((ds.matrix.layer, cv_auroc(ds, &plan)?)))
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, (_, r)) in results.iter().enumerate() {
        if r.mean > results[best].1.mean {
            best = i;
        }
    }
    let layer_stride = order
        .windows(2)
        .map(|w| w[1].matrix.layer - w[0].matrix.layer)
        .min()
        .unwrap_or(1);
    Ok(LayerSweepResult {
        best_layer: results[best].0,
        layers: results,
        layer_stride,
        plan,
    })
}

/// One row per layer plus an `is_best` flag.
pub fn write_sweep_csv(
    result: &LayerSweepResult,
    model_id: &str,
    dataset_id: &str,
    path: &Path,
) -> Result<()> {
    let mut header: Vec<&str> = EVAL_CSV_HEADER.to_vec();
    header.push("is_best");
    let rows = result.layers.iter().map(|(layer, r)| {
        let mut rec = EvalRow {
            model_id,
            train_dataset: dataset_id,
            test_dataset: dataset_id,
            layer: *layer,
            result: r,
        }
        .record();
        rec.push(u8::from(*layer == result.best_layer).to_string());
        rec
    });
    super::write_csv(path, &header, rows)
}
