// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment protocols built on [`crate::probe`] and [`crate::metrics`].
//!
//! Every protocol is a pure function of its inputs and seed. Independent
//! cells (layers, train/test pairs, size/repetition jobs) run on the rayon
//! pool and are collected in input order, so results do not depend on the
//! number of workers.

mod cosine;
mod cross;
mod curve;
mod extremes;
mod idk;
mod sweep;

pub use cosine::{cosine_matrix, write_cosine_csv};
pub use cross::{cross_matrix, ensure_disjoint, write_cross_csv, CrossMatrix};
pub use curve::{default_sizes, sample_curve, stratified_subsample, write_curve_csv, SampleCurve};
pub use extremes::{extremes, write_extremes_csv, ExtremeItem, Extremes};
pub use idk::{
    idk_report, write_idk_csv, write_idk_summary_csv, GroupSummary, IdkReport, HISTOGRAM_BINS,
};
pub use sweep::{sweep_layers, write_sweep_csv, LayerSweepResult};

use std::path::Path;

use crate::error::{ProbeError, Result};
use crate::metrics::{EvalRow, EVAL_CSV_HEADER};

/// Write `rows` under `header` as CSV. Output bytes depend only on the rows.
fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| ProbeError::io(path, e))?;
    Ok(())
}

/// Plain CSV writer used for ad-hoc result tables.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    write_csv(path, header, rows)
}

/// Evaluation rows under [`EVAL_CSV_HEADER`].
pub fn write_eval_rows(rows: &[EvalRow<'_>], path: &Path) -> Result<()> {
    write_csv(path, &EVAL_CSV_HEADER, rows.iter().map(EvalRow::record))
}
