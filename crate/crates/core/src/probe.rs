// SPDX-License-Identifier: MIT OR Apache-2.0

//! Centroid-difference correctness direction.
//!
//! With `μ_true` and `μ_false` the per-class mean activations,
//!
//! ```text
//! w     = μ_true − μ_false
//! μ     = ½ (μ_true + μ_false)
//! score = (h − μ)ᵀ w / ‖w‖
//! ```
//!
//! Scores are raw projections: no sigmoid, no threshold. Abstentions (`idk`)
//! belong to the incorrect class. Class means are plain averages with no
//! reweighting for imbalance, and no whitening is applied.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{ProbeError, Result};
use crate::store::{ActivationMatrix, LabeledDataset};

/// Minimum centroid gap accepted by [`fit_direction`].
pub const MIN_DIRECTION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub model_id: String,
    pub train_dataset_id: String,
    pub layer: u32,
    pub n_true: usize,
    pub n_false: usize,
    w: Vec<f64>,
    mu: Vec<f64>,
    w_norm: f64,
}

impl Direction {
    /// Assemble a direction from its parts, recomputing `‖w‖`.
    pub fn from_parts(w: Vec<f64>, mu: Vec<f64>, layer: u32) -> Result<Self> {
        if w.len() != mu.len() {
            return Err(ProbeError::DimensionMismatch {
                expected: w.len(),
                found: mu.len(),
            });
        }
        if w.iter().chain(&mu).any(|v| !v.is_finite()) {
            return Err(ProbeError::Schema("non-finite direction coordinate".into()));
        }
        let w_norm = l2_norm(&w);
        if !(w_norm >= MIN_DIRECTION_NORM) {
            return Err(ProbeError::DegenerateDirection { norm: w_norm });
        }
        Ok(Self {
            model_id: String::new(),
            train_dataset_id: String::new(),
            layer,
            n_true: 0,
            n_false: 0,
            w,
            mu,
            w_norm,
        })
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn w_norm(&self) -> f64 {
        self.w_norm
    }

    /// Unit vector along `w`.
    pub fn unit(&self) -> Vec<f64> {
        self.w.iter().map(|v| v / self.w_norm).collect()
    }

    /// Coordinate-wise mean of several directions (e.g. one per fold).
    pub fn average(dirs: &[Direction]) -> Result<Direction> {
        let first = dirs
            .first()
            .ok_or_else(|| ProbeError::InvalidArgument("no directions to average".into()))?;
        let d = first.d();
        let mut w = vec![0.0; d];
        let mut mu = vec![0.0; d];
        for dir in dirs {
            if dir.d() != d {
                return Err(ProbeError::DimensionMismatch {
                    expected: d,
                    found: dir.d(),
                });
            }
            for j in 0..d {
                w[j] += dir.w[j];
                mu[j] += dir.mu[j];
            }
        }
        let k = dirs.len() as f64;
        w.iter_mut().for_each(|v| *v /= k);
        mu.iter_mut().for_each(|v| *v /= k);
        let mut out = Direction::from_parts(w, mu, first.layer)?;
        out.model_id = first.model_id.clone();
        out.train_dataset_id = first.train_dataset_id.clone();
        out.n_true = first.n_true;
        out.n_false = first.n_false;
        Ok(out)
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fit_direction(data: &LabeledDataset) -> Result<Direction> {
    let all: Vec<usize> = (0..data.n()).collect();
    fit_direction_on(data, &all)
}

/// Fit on the rows listed in `indices`. Sums accumulate in `f64` in the
/// order given.
pub fn fit_direction_on(data: &LabeledDataset, indices: &[usize]) -> Result<Direction> {
    let d = data.d();
    let mut sum_true = vec![0.0f64; d];
    let mut sum_false = vec![0.0f64; d];
    let (mut n_true, mut n_false) = (0usize, 0usize);
    for &i in indices {
        let row = data.matrix.row(i);
        let acc = if data.meta[i].is_correct() {
            n_true += 1;
            &mut sum_true
        } else {
            n_false += 1;
            &mut sum_false
        };
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    if n_true == 0 || n_false == 0 {
        return Err(ProbeError::EmptyClass { n_true, n_false });
    }
    let (nt, nf) = (n_true as f64, n_false as f64);
    let mut w = Vec::with_capacity(d);
    let mut mu = Vec::with_capacity(d);
    for j in 0..d {
        let mt = sum_true[j] / nt;
        let mf = sum_false[j] / nf;
        w.push(mt - mf);
        mu.push(0.5 * (mt + mf));
    }
    let mut dir = Direction::from_parts(w, mu, data.matrix.layer)?;
    dir.model_id = data.matrix.model_id.clone();
    dir.train_dataset_id = data.dataset_id().to_string();
    dir.n_true = n_true;
    dir.n_false = n_false;
    Ok(dir)
}

fn project(dir: &Direction, h: impl Iterator<Item = f64>) -> f64 {
    let mut dot = 0.0;
    for ((x, m), w) in h.zip(&dir.mu).zip(&dir.w) {
        dot += (x - m) * w;
    }
    dot / dir.w_norm
}

pub fn score(dir: &Direction, h: &[f64]) -> Result<f64> {
    if h.len() != dir.d() {
        return Err(ProbeError::DimensionMismatch {
            expected: dir.d(),
            found: h.len(),
        });
    }
    Ok(project(dir, h.iter().copied()))
}

/// Score an `f32` activation row.
pub fn score_row(dir: &Direction, row: &[f32]) -> Result<f64> {
    if row.len() != dir.d() {
        return Err(ProbeError::DimensionMismatch {
            expected: dir.d(),
            found: row.len(),
        });
    }
    Ok(project(dir, row.iter().map(|&v| v as f64)))
}

pub fn score_batch(dir: &Direction, matrix: &ActivationMatrix) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..matrix.n()).collect();
    score_rows(dir, matrix, &all)
}

/// Scores for the listed rows, in the order listed.
pub fn score_rows(
    dir: &Direction,
    matrix: &ActivationMatrix,
    indices: &[usize],
) -> Result<Vec<f64>> {
    if matrix.d() != dir.d() {
        return Err(ProbeError::DimensionMismatch {
            expected: dir.d(),
            found: matrix.d(),
        });
    }
    Ok(indices
        .par_iter()
        .with_min_len(256)
        .map(|&i| project(dir, matrix.row(i).iter().map(|&v| v as f64)))
        .collect())
}

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn push_f64_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectionRecord {
    model_id: String,
    train_dataset_id: String,
    layer: u32,
    d: usize,
    n_true: usize,
    n_false: usize,
    w: Vec<f64>,
    mu: Vec<f64>,
    w_norm: f64,
}

/// JSON text with every real printed to 17 significant digits.
pub fn direction_to_json(dir: &Direction) -> String {
    let mut out = String::with_capacity(64 + 50 * dir.d());
    out.push_str("{\n");
    let _ = writeln!(
        out,
        "  \"model_id\": {},",
        serde_json::to_string(&dir.model_id).unwrap()
    );
    let _ = writeln!(
        out,
        "  \"train_dataset_id\": {},",
        serde_json::to_string(&dir.train_dataset_id).unwrap()
    );
    let _ = writeln!(out, "  \"layer\": {},", dir.layer);
    let _ = writeln!(out, "  \"d\": {},", dir.d());
    let _ = writeln!(out, "  \"n_true\": {},", dir.n_true);
    let _ = writeln!(out, "  \"n_false\": {},", dir.n_false);
    out.push_str("  \"w\": ");
    push_f64_array(&mut out, &dir.w);
    out.push_str(",\n  \"mu\": ");
    push_f64_array(&mut out, &dir.mu);
    let _ = writeln!(out, ",\n  \"w_norm\": {}", fmt_f64(dir.w_norm));
    out.push_str("}\n");
    out
}

pub fn direction_from_json(text: &str) -> Result<Direction> {
    let rec: DirectionRecord =
        serde_json::from_str(text).map_err(|e| ProbeError::Schema(e.to_string()))?;
    if rec.w.len() != rec.d {
        return Err(ProbeError::DimensionMismatch {
            expected: rec.d,
            found: rec.w.len(),
        });
    }
    if rec.mu.len() != rec.d {
        return Err(ProbeError::DimensionMismatch {
            expected: rec.d,
            found: rec.mu.len(),
        });
    }
    let mut dir = Direction::from_parts(rec.w, rec.mu, rec.layer)?;
    if ((dir.w_norm - rec.w_norm) / dir.w_norm).abs() > 1e-9 {
        return Err(ProbeError::Schema(format!(
            "stored w_norm {} disagrees with ‖w‖ = {}",
            rec.w_norm, dir.w_norm
        )));
    }
    dir.model_id = rec.model_id;
    dir.train_dataset_id = rec.train_dataset_id;
    dir.n_true = rec.n_true;
    dir.n_false = rec.n_false;
    Ok(dir)
}

pub fn save_direction(dir: &Direction, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, direction_to_json(dir)).map_err(|e| ProbeError::io(path, e))
}

pub fn load_direction(path: impl AsRef<Path>) -> Result<Direction> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))?;
    direction_from_json(&text)
}
