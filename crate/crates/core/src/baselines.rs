// SPDX-License-Identifier: MIT OR Apache-2.0

//! Black-box correctness baselines.
//!
//! The assessor is an L2-regularised logistic regression on question
//! embeddings, minimising
//!
//! ```text
//! (1/n) Σ [softplus(zᵢ) − yᵢ zᵢ] + (λ/2)‖w‖²,   zᵢ = w·x̃ᵢ + b
//! ```
//!
//! where `x̃` is the embedding z-scored with statistics of the training rows
//! only. The bias is not penalised. The solver is full-batch L-BFGS with an
//! Armijo backtracking line search; it runs single-threaded so fits are
//! bit-reproducible.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{ProbeError, Result};
use crate::metrics::{auroc, make_folds, EvalResult, FoldPlan, FoldStrategy};
use crate::probe::{fmt_f64, push_f64_array};
use crate::store::{ActivationMatrix, LabeledDataset, SampleMeta};

/// Question embeddings stored in an ACTV1 container (layer 0) with their
/// metadata.
#[derive(Debug, Clone)]
pub struct EmbeddingDataset {
    pub data: LabeledDataset,
    pub embedding_model_id: String,
}

impl EmbeddingDataset {
    pub fn new(data: LabeledDataset, embedding_model_id: impl Into<String>) -> Self {
        Self {
            data,
            embedding_model_id: embedding_model_id.into(),
        }
    }

    pub fn e(&self) -> usize {
        self.data.d()
    }
}

/// Source of question embeddings. Offline runs read them from ACTV1 files;
/// an embedding service client would implement the same trait.
pub trait EmbeddingSource {
    fn embed(&self, questions: &[SampleMeta]) -> Result<ActivationMatrix>;
}

/// Embeddings precomputed into an ACTV1 file, returned in sidecar order.
pub struct FileEmbeddings {
    pub path: std::path::PathBuf,
}

impl EmbeddingSource for FileEmbeddings {
    fn embed(&self, questions: &[SampleMeta]) -> Result<ActivationMatrix> {
        let m = crate::store::read_matrix(&self.path)?;
        if m.n() != questions.len() {
            return Err(ProbeError::CountMismatch {
                rows: m.n(),
                records: questions.len(),
            });
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegOptions {
    pub l2_lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub standardize: bool,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        Self {
            l2_lambda: 1.0,
            tol: 1e-6,
            max_iter: 1000,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub embedding_model_id: String,
    pub train_dataset_id: String,
    /// Weights on standardized features.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Gradient ∞-norm at termination.
    pub grad_norm: f64,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
}

impl LogRegModel {
    pub fn e(&self) -> usize {
        self.weights.len()
    }

    /// Weights and intercept folded back onto raw features.
    fn raw_affine(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.feature_std)
            .map(|(w, s)| w / s)
            .collect();
        let shift: f64 = w.iter().zip(&self.feature_mean).map(|(w, m)| w * m).sum();
        (w, self.bias - shift)
    }
}

/// Per-iteration objective values, starting with the initial point.
#[derive(Debug, Clone, Default)]
pub struct FitTrace {
    pub losses: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    matrix: &'a ActivationMatrix,
    rows: &'a [usize],
    labels: Vec<f64>,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn e(&self) -> usize {
        self.mean.len()
    }

    /// Objective and gradient at `theta = [w; b]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let e = self.e();
        let (w, b) = (&theta[..e], theta[e]);
        let raw_w: Vec<f64> = w.iter().zip(&self.inv_std).map(|(w, s)| w * s).collect();
        let intercept = b - raw_w
            .iter()
            .zip(&self.mean)
            .map(|(w, m)| w * m)
            .sum::<f64>();

        let mut loss = 0.0;
        let mut resid_sum = 0.0;
        let mut xr = vec![0.0; e];
        for (&i, &y) in self.rows.iter().zip(&self.labels) {
            let x = self.matrix.row(i);
            let z = intercept
                + x.iter()
                    .zip(&raw_w)
                    .map(|(&x, w)| x as f64 * w)
                    .sum::<f64>();
            loss += softplus(z) - y * z;
            let r = sigmoid(z) - y;
            resid_sum += r;
            for (acc, &x) in xr.iter_mut().zip(x) {
                *acc += r * x as f64;
            }
        }
        let n = self.rows.len() as f64;
        let mut reg = 0.0;
        for j in 0..e {
            grad[j] = (xr[j] - self.mean[j] * resid_sum) * self.inv_std[j] / n + self.lambda * w[j];
            reg += w[j] * w[j];
        }
        grad[e] = resid_sum / n;
        loss / n + 0.5 * self.lambda * reg
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn fit_logreg(data: &EmbeddingDataset, opts: &LogRegOptions) -> Result<LogRegModel> {
    let all: Vec<usize> = (0..data.data.n()).collect();
    fit_logreg_on(data, &all, opts).map(|(m, _)| m)
}

/// Fit on the listed rows; standardization statistics come from those rows
/// only.
pub fn fit_logreg_on(
    data: &EmbeddingDataset,
    rows: &[usize],
    opts: &LogRegOptions,
) -> Result<(LogRegModel, FitTrace)> {
    if !(opts.l2_lambda >= 0.0) || !(opts.tol > 0.0) {
        return Err(ProbeError::InvalidArgument(format!(
            "need l2_lambda ≥ 0 and tol > 0, got {} and {}",
            opts.l2_lambda, opts.tol
        )));
    }
    let ds = &data.data;
    let labels: Vec<f64> = rows.iter().map(|&i| ds.meta[i].correct as f64).collect();
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(ProbeError::SingleClass {
            n_pos,
            n_neg: labels.len() - n_pos,
        });
    }
    let e = ds.d();
    let n = rows.len() as f64;
    let (mean, std) = if opts.standardize {
        let mut mean = vec![0.0; e];
        for &i in rows {
            for (m, &x) in mean.iter_mut().zip(ds.matrix.row(i)) {
                *m += x as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; e];
        for &i in rows {
            for ((v, m), &x) in var.iter_mut().zip(&mean).zip(ds.matrix.row(i)) {
                *v += (x as f64 - m).powi(2);
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        (mean, std)
    } else {
        (vec![0.0; e], vec![1.0; e])
    };
    let problem = Problem {
        matrix: &ds.matrix,
        rows,
        labels,
        inv_std: std.iter().map(|s| 1.0 / s).collect(),
        mean: mean.clone(),
        lambda: opts.l2_lambda,
    };

    let (theta, trace, converged, iterations, grad_norm) = lbfgs(&problem, opts);
    Ok((
        LogRegModel {
            embedding_model_id: data.embedding_model_id.clone(),
            train_dataset_id: ds.dataset_id().to_string(),
            weights: theta[..e].to_vec(),
            bias: theta[e],
            l2_lambda: opts.l2_lambda,
            converged,
            iterations,
            grad_norm,
            feature_mean: mean,
            feature_std: std,
        },
        trace,
    ))
}

const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;

fn lbfgs(problem: &Problem<'_>, opts: &LogRegOptions) -> (Vec<f64>, FitTrace, bool, usize, f64) {
    let dim = problem.e() + 1;
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut loss = problem.eval(&theta, &mut grad);
    let mut trace = FitTrace { losses: vec![loss] };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut trial = vec![0.0; dim];
    let mut trial_grad = vec![0.0; dim];

    let mut iterations = 0;
    while iterations < opts.max_iter {
        if inf_norm(&grad) <= opts.tol {
            break;
        }
        // Two-loop recursion for the search direction.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / inf_norm(&grad).max(1.0),
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(q, s)| *q += (a - b) * s);
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..dim {
                trial[j] = theta[j] + step * direction[j];
            }
            let trial_loss = problem.eval(&trial, &mut trial_grad);
            if trial_loss <= loss + ARMIJO_C1 * step * slope {
                let s: Vec<f64> = (0..dim).map(|j| trial[j] - theta[j]).collect();
                let y: Vec<f64> = (0..dim).map(|j| trial_grad[j] - grad[j]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-16 * dot(&y, &y).max(f64::MIN_POSITIVE) {
                    if history.len() == HISTORY {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
                std::mem::swap(&mut theta, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        trace.losses.push(loss);
        if !accepted {
            break;
        }
    }
    let grad_norm = inf_norm(&grad);
    (theta, trace, grad_norm <= opts.tol, iterations, grad_norm)
}

pub fn predict_proba(model: &LogRegModel, embeddings: &ActivationMatrix) -> Result<Vec<f64>> {
    if embeddings.d() != model.e() {
        return Err(ProbeError::DimensionMismatch {
            expected: model.e(),
            found: embeddings.d(),
        });
    }
    let (w, b) = model.raw_affine();
    Ok((0..embeddings.n())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let z = b + embeddings
                .row(i)
                .iter()
                .zip(&w)
                .map(|(&x, w)| x as f64 * w)
                .sum::<f64>();
            sigmoid(z)
        })
        .collect())
}

/// Assessor under the direction's cross-dataset protocol: fold plans are
/// built exactly as in [`crate::experiments::cross_matrix`], so every test
/// fold holds the same questions the direction was evaluated on. Returns one
/// result per test dataset.
pub fn assessor_cross(
    train: &EmbeddingDataset,
    tests: &[EmbeddingDataset],
    k: usize,
    seed: u64,
    strategy: FoldStrategy,
    opts: &LogRegOptions,
) -> Result<Vec<EvalResult>> {
    let train_plan = make_folds(&train.data.labels(), k, seed, strategy)?;
    let test_plans: Vec<FoldPlan> = tests
        .iter()
        .map(|t| make_folds(&t.data.labels(), k, seed, strategy))
        .collect::<Result<_>>()?;
    let models: Vec<LogRegModel> = (0..k)
        .map(|f| fit_logreg_on(train, &train_plan.train_indices(f), opts).map(|m| m.0))
        .collect::<Result<_>>()?;
    tests
        .iter()
        .zip(&test_plans)
        .map(|(t, plan)| {
            let mut aurocs = Vec::with_capacity(k);
            let (mut n_pos, mut n_neg) = (Vec::new(), Vec::new());
            for (f, model) in models.iter().enumerate() {
                let idx = plan.test_indices(f);
                let sub = t.data.matrix.select(&idx);
                let p = predict_proba(model, &sub)?;
                let labels: Vec<u8> = idx.iter().map(|&i| t.data.meta[i].correct).collect();
                let pos = labels.iter().filter(|&&l| l == 1).count();
                aurocs.push(auroc(&p, &labels)?);
                n_pos.push(pos);
                n_neg.push(labels.len() - pos);
            }
            Ok(EvalResult::from_folds(aurocs, n_pos, n_neg))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    embedding_model_id: String,
    train_dataset_id: String,
    e: usize,
    weights: Vec<f64>,
    bias: f64,
    l2_lambda: f64,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    feature_mean: Vec<f64>,
    feature_std: Vec<f64>,
}

pub fn model_to_json(model: &LogRegModel) -> String {
    let mut out = String::from("{\n");
    let q = |s: &str| serde_json::to_string(s).unwrap();
    let _ = writeln!(
        out,
        "  \"embedding_model_id\": {},",
        q(&model.embedding_model_id)
    );
    let _ = writeln!(
        out,
        "  \"train_dataset_id\": {},",
        q(&model.train_dataset_id)
    );
    let _ = writeln!(out, "  \"e\": {},", model.e());
    out.push_str("  \"weights\": ");
    push_f64_array(&mut out, &model.weights);
    let _ = writeln!(out, ",\n  \"bias\": {},", fmt_f64(model.bias));
    let _ = writeln!(out, "  \"l2_lambda\": {},", fmt_f64(model.l2_lambda));
    let _ = writeln!(out, "  \"converged\": {},", model.converged);
    let _ = writeln!(out, "  \"iterations\": {},", model.iterations);
    let _ = writeln!(out, "  \"grad_norm\": {},", fmt_f64(model.grad_norm));
    out.push_str("  \"feature_mean\": ");
    push_f64_array(&mut out, &model.feature_mean);
    out.push_str(",\n  \"feature_std\": ");
    push_f64_array(&mut out, &model.feature_std);
    out.push_str("\n}\n");
    out
}

pub fn model_from_json(text: &str) -> Result<LogRegModel> {
    let r: ModelRecord =
        serde_json::from_str(text).map_err(|e| ProbeError::Schema(e.to_string()))?;
    for (name, len) in [
        ("weights", r.weights.len()),
        ("feature_mean", r.feature_mean.len()),
        ("feature_std", r.feature_std.len()),
    ] {
        if len != r.e {
            return Err(ProbeError::Schema(format!(
                "{name} has {len} entries, e = {}",
                r.e
            )));
        }
    }
    if r.feature_std.iter().any(|s| !(*s > 0.0)) {
        return Err(ProbeError::Schema(
            "feature_std entries must be positive".into(),
        ));
    }
    Ok(LogRegModel {
        embedding_model_id: r.embedding_model_id,
        train_dataset_id: r.train_dataset_id,
        weights: r.weights,
        bias: r.bias,
        l2_lambda: r.l2_lambda,
        converged: r.converged,
        iterations: r.iterations,
        grad_norm: r.grad_norm,
        feature_mean: r.feature_mean,
        feature_std: r.feature_std,
    })
}

pub fn save_model(model: &LogRegModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| ProbeError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LogRegModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))?;
    model_from_json(&text)
}

/// Confidence written in place of a missing verbalized confidence.
pub const IMPUTED_CONFIDENCE: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct VerbalizedEval {
    pub result: EvalResult,
    pub n_used: usize,
    pub n_imputed: usize,
}

/// AUROC of verbalized confidence against correctness. Missing confidences
/// are imputed at 50 when `impute` is set and dropped otherwise.
pub fn eval_verbalized(meta: &[SampleMeta], impute: bool) -> Result<VerbalizedEval> {
    let mut scores = Vec::with_capacity(meta.len());
    let mut labels = Vec::with_capacity(meta.len());
    let mut n_imputed = 0;
    for m in meta {
        match (m.verbalized_confidence, impute) {
            (Some(c), _) => scores.push(c),
            (None, true) => {
                n_imputed += 1;
                scores.push(IMPUTED_CONFIDENCE);
            }
            (None, false) => continue,
        }
        labels.push(m.correct);
    }
    if scores.is_empty() {
        return Err(ProbeError::InvalidArgument(
            "no verbalized confidences present and imputation disabled".into(),
        ));
    }
    let a = auroc(&scores, &labels)?;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    Ok(VerbalizedEval {
        result: EvalResult::single(a, n_pos, labels.len() - n_pos),
        n_used: labels.len(),
        n_imputed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Category;

    fn meta(i: usize, correct: u8, conf: Option<f64>) -> SampleMeta {
        SampleMeta {
            sample_id: format!("s{i}"),
            dataset_id: "t".into(),
            question: String::new(),
            gold: vec![],
            answer: String::new(),
            correct,
            category: if correct == 1 {
                Category::Right
            } else {
                Category::Wrong
            },
            verbalized_confidence: conf,
        }
    }

    fn embeddings(rows: &[Vec<f32>], labels: &[u8]) -> EmbeddingDataset {
        let m = ActivationMatrix::from_rows(0, rows).unwrap();
        let meta = labels
            .iter()
            .enumerate()
            .map(|(i, &c)| meta(i, c, None))
            .collect();
        EmbeddingDataset::new(LabeledDataset::new(m, meta).unwrap(), "test-embed")
    }

    #[test]
    fn separable_one_dimensional() {
        let ds = embeddings(
            &[vec![-1.0], vec![-1.0], vec![1.0], vec![1.0]],
            &[0, 0, 1, 1],
        );
        let model = fit_logreg(&ds, &LogRegOptions::default()).unwrap();
        assert!(model.converged);
        assert!(model.weights[0] > 0.0);
        let p = predict_proba(&model, &ds.data.matrix).unwrap();
        assert_eq!(auroc(&p, &ds.data.labels()).unwrap(), 1.0);
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = LogRegModel {
            embedding_model_id: String::new(),
            train_dataset_id: String::new(),
            weights: vec![0.0; 3],
            bias: 0.0,
            l2_lambda: 1.0,
            converged: true,
            iterations: 0,
            grad_norm: 0.0,
            feature_mean: vec![0.0; 3],
            feature_std: vec![1.0; 3],
        };
        let m = ActivationMatrix::from_rows(0, &[[1.0f32, 2.0, 3.0], [-4.0, 0.5, 9.0]]).unwrap();
        assert_eq!(predict_proba(&model, &m).unwrap(), vec![0.5, 0.5]);
        let mut prev = 0.5;
        for b in [1.0, 5.0, 20.0, 35.0] {
            let p = predict_proba(
                &LogRegModel {
                    bias: b,
                    ..model.clone()
                },
                &m,
            )
            .unwrap()[0];
            assert!(p >= prev && p <= 1.0);
            prev = p;
        }
        let bad = ActivationMatrix::from_rows(0, &[[1.0f32]]).unwrap();
        assert!(predict_proba(&model, &bad).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let ds = embeddings(&[vec![1.0], vec![2.0]], &[1, 1]);
        assert!(matches!(
            fit_logreg(&ds, &LogRegOptions::default()),
            Err(ProbeError::SingleClass { .. })
        ));
    }

    #[test]
    fn verbalized_cases() {
        let r = eval_verbalized(&[meta(0, 1, Some(90.0)), meta(1, 0, Some(10.0))], true).unwrap();
        assert_eq!(r.result.mean, 1.0);
        let flat: Vec<SampleMeta> = (0..6).map(|i| meta(i, (i % 2) as u8, Some(50.0))).collect();
        assert_eq!(eval_verbalized(&flat, true).unwrap().result.mean, 0.5);

        let partial = vec![
            meta(0, 1, Some(80.0)),
            meta(1, 0, None),
            meta(2, 0, Some(20.0)),
        ];
        let imputed = eval_verbalized(&partial, true).unwrap();
        assert_eq!((imputed.n_imputed, imputed.n_used), (1, 3));
        let dropped = eval_verbalized(&partial, false).unwrap();
        assert_eq!((dropped.n_imputed, dropped.n_used), (0, 2));

        let none = vec![meta(0, 1, None), meta(1, 0, None)];
        assert!(eval_verbalized(&none, false).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let ds = embeddings(
            &[
                vec![-1.0, 0.3],
                vec![-0.5, 0.1],
                vec![1.0, 0.2],
                vec![0.7, -0.4],
            ],
            &[0, 0, 1, 1],
        );
        let model = fit_logreg(&ds, &LogRegOptions::default()).unwrap();
        let back = model_from_json(&model_to_json(&model)).unwrap();
        assert_eq!(back, model);
        assert!(model_from_json("{\"e\": 1}").is_err());
    }
}
