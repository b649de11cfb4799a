// SPDX-License-Identifier: MIT OR Apache-2.0

//! # correctness-probe
//!
//! Linear "in-advance correctness" probes on cached residual-stream
//! activations. A probe is the difference of the class centroids of
//! final-prompt-token activations for questions the model later answers
//! correctly and incorrectly; a new question is scored by projecting its
//! activation, centred on the centroid midpoint, onto that direction.
//! Scores are evaluated threshold-free with AUROC.
//!
//! The crate is organised around the data flow:
//!
//! - [`store`]: the ACTV1 activation container and its JSONL metadata sidecar.
//! - [`probe`]: fitting and scoring correctness directions.
//! - [`metrics`]: rank-based AUROC and deterministic fold plans.
//! - [`experiments`]: layer sweeps, cross-dataset matrices, sample-efficiency
//!   curves, cosine matrices, abstention reports and extreme-score tables.
//! - [`baselines`]: logistic-regression assessor and verbalized confidence.
//! - [`synth`]: Gaussian generator with a closed-form AUROC oracle.
//! - [`cli`]: the `cprobe` command line.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod metrics;
pub mod probe;
pub mod rng;
pub mod store;
pub mod synth;

pub use error::{ProbeError, Result};
pub use metrics::{auroc, cv_auroc, make_folds, EvalResult, FoldPlan, FoldStrategy};
pub use probe::{fit_direction, score, score_batch, Direction};
pub use store::{
    join, read_matrix, read_meta, write_matrix, ActivationMatrix, Category, ClassCounts,
    LabeledDataset, SampleMeta,
};
pub use synth::{analytic_auc, generate, GaussianSpec};
