// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-Gaussian activation generator with a closed-form AUROC.
//!
//! Correct samples are drawn from `N(+δ/2·a, σ_t²I)` and incorrect ones from
//! `N(−δ/2·a, σ_f²I)`, where `a` is a unit axis. Projected onto `a`, the two
//! classes are univariate normals whose AUROC is `Φ(δ / √(σ_t² + σ_f²))`.
//!
//! Deviates come from Box–Muller on a [`SplitMix64`] stream: first the axis
//! (when not given, `d` normals normalised), then each row's `d` coordinates
//! in row order. Rows alternate correct / incorrect, and the first
//! `⌊idk_fraction · n⌋` incorrect rows form the abstention sub-population,
//! shifted by `idk_shift · a`.

use statrs::function::erf::erfc;

use crate::error::{ProbeError, Result};
use crate::probe::l2_norm;
use crate::rng::{NormalStream, SplitMix64};
use crate::store::{ActivationMatrix, Category, LabeledDataset, SampleMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub d: usize,
    pub n_per_class: usize,
    pub delta: f64,
    pub sigma_true: f64,
    pub sigma_false: f64,
    /// Unit separating axis; drawn from the seed when `None`.
    pub axis: Option<Vec<f64>>,
    pub seed: u64,
    pub idk_fraction: f64,
    pub idk_shift: f64,
    pub dataset_id: String,
    pub model_id: String,
}

impl GaussianSpec {
    pub fn new(d: usize, n_per_class: usize, delta: f64, sigma: f64, seed: u64) -> Self {
        Self {
            d,
            n_per_class,
            delta,
            sigma_true: sigma,
            sigma_false: sigma,
            axis: None,
            seed,
            idk_fraction: 0.0,
            idk_shift: 0.0,
            dataset_id: "synth".into(),
            model_id: "synthetic".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ProbeError::InvalidSpec(msg));
        if self.d == 0 {
            return bad("d must be ≥ 1".into());
        }
        if self.n_per_class == 0 {
            return bad("n_per_class must be ≥ 1".into());
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return bad(format!("delta must be finite and ≥ 0, got {}", self.delta));
        }
        for (name, s) in [
            ("sigma_true", self.sigma_true),
            ("sigma_false", self.sigma_false),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return bad(format!("{name} must be finite and ≥ 0, got {s}"));
            }
        }
        if !(0.0..1.0).contains(&self.idk_fraction) {
            return bad(format!(
                "idk_fraction must lie in [0, 1), got {}",
                self.idk_fraction
            ));
        }
        if !(self.idk_shift <= 0.0) || !self.idk_shift.is_finite() {
            return bad(format!(
                "idk_shift must be finite and ≤ 0, got {}",
                self.idk_shift
            ));
        }
        if let Some(axis) = &self.axis {
            if axis.len() != self.d {
                return bad(format!(
                    "axis has {} coordinates, d = {}",
                    axis.len(),
                    self.d
                ));
            }
            let norm = l2_norm(axis);
            if (norm - 1.0).abs() > 1e-9 {
                return bad(format!("axis norm {norm} is not 1 within 1e-9"));
            }
        }
        Ok(())
    }
}

/// Generated dataset together with the axis it was generated along.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: LabeledDataset,
    pub axis: Vec<f64>,
}

pub fn generate(spec: &GaussianSpec) -> Result<Synthetic> {
    spec.validate()?;
    let d = spec.d;
    let mut normals = NormalStream::new(SplitMix64::new(spec.seed));
    let axis = match &spec.axis {
        Some(a) => a.clone(),
        None => {
            let raw: Vec<f64> = (0..d).map(|_| normals.sample()).collect();
            let norm = l2_norm(&raw);
            raw.into_iter().map(|v| v / norm).collect()
        }
    };

    let n = 2 * spec.n_per_class;
    let n_idk = (spec.idk_fraction * spec.n_per_class as f64).floor() as usize;
    let half = spec.delta / 2.0;
    let mut data = Vec::with_capacity(n * d);
    let mut meta = Vec::with_capacity(n);
    for i in 0..n {
        let correct = i % 2 == 0;
        let false_rank = i / 2;
        let (offset, sigma, category) = if correct {
            (half, spec.sigma_true, Category::Right)
        } else if false_rank < n_idk {
            (-half + spec.idk_shift, spec.sigma_false, Category::Idk)
        } else {
            (-half, spec.sigma_false, Category::Wrong)
        };
        for a in &axis {
            data.push((offset * a + sigma * normals.sample()) as f32);
        }
        meta.push(SampleMeta {
            sample_id: format!("{}-{i}", spec.dataset_id),
            dataset_id: spec.dataset_id.clone(),
            question: format!("synthetic question {i}"),
            gold: Vec::new(),
            answer: String::new(),
            correct: u8::from(correct),
            category,
            verbalized_confidence: None,
        });
    }
    let matrix =
        ActivationMatrix::from_flat(0, d, data)?.with_ids(&spec.model_id, &spec.dataset_id);
    Ok(Synthetic {
        data: LabeledDataset::new(matrix, meta)?,
        axis,
    })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Exact AUROC of the generating-axis projection: `Φ(δ / √(σ_t² + σ_f²))`.
pub fn analytic_auc(delta: f64, sigma_true: f64, sigma_false: f64) -> Result<f64> {
    if !(sigma_true > 0.0) || !(sigma_false > 0.0) {
        return Err(ProbeError::InvalidSpec(format!(
            "sigmas must be positive, got {sigma_true} and {sigma_false}"
        )));
    }
    Ok(normal_cdf(
        delta / (sigma_true.powi(2) + sigma_false.powi(2)).sqrt(),
    ))
}
