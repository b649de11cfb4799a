// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use crate::error::Result;
use crate::probe::{score_batch, Direction};
use crate::store::{Category, LabeledDataset};

pub const HISTOGRAM_BINS: usize = 61;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub category: Category,
    pub count: usize,
    /// `NaN` when the group is empty.
    pub mean: f64,
    /// Population standard deviation, `NaN` when empty.
    pub std: f64,
    pub histogram: Vec<u64>,
    /// Scores below the first bin edge.
    pub underflow: u64,
    /// Scores at or above the last bin edge.
    pub overflow: u64,
}

/// Score distribution per answer category over a shared binning of
/// [`HISTOGRAM_BINS`] equal-width bins spanning the global mean ± 3 std.
#[derive(Debug, Clone)]
pub struct IdkReport {
    pub groups: Vec<GroupSummary>,
    pub bin_edges: Vec<f64>,
    pub global_mean: f64,
    pub global_std: f64,
    pub n: usize,
}

impl IdkReport {
    pub fn group(&self, category: Category) -> &GroupSummary {
        self.groups
            .iter()
            .find(|g| g.category == category)
            .expect("every category has a group")
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn idk_report(dir: &Direction, data: &LabeledDataset) -> Result<IdkReport> {
    let scores = score_batch(dir, &data.matrix)?;
    let (global_mean, global_std) = mean_std(&scores);
    // A zero-spread (or empty) score set gets a unit half-width.
    let half_width = if global_std > 0.0 {
        3.0 * global_std
    } else {
        1.0
    };
    let center = if global_mean.is_finite() {
        global_mean
    } else {
        0.0
    };
    let lo = center - half_width;
    let width = 2.0 * half_width / HISTOGRAM_BINS as f64;
    let bin_edges: Vec<f64> = (0..=HISTOGRAM_BINS)
        .map(|i| lo + i as f64 * width)
        .collect();

    let groups = Category::ALL
        .iter()
        .map(|&category| {
            let values: Vec<f64> = scores
                .iter()
                .zip(&data.meta)
                .filter(|(_, m)| m.category == category)
                .map(|(s, _)| *s)
                .collect();
            let (mean, std) = mean_std(&values);
            let mut histogram = vec![0u64; HISTOGRAM_BINS];
            let (mut underflow, mut overflow) = (0, 0);
            for v in &values {
                let pos = ((v - lo) / width).floor();
                if pos < 0.0 {
                    underflow += 1;
                } else if pos >= HISTOGRAM_BINS as f64 {
                    overflow += 1;
                } else {
                    histogram[pos as usize] += 1;
                }
            }
            GroupSummary {
                category,
                count: values.len(),
                mean,
                std,
                histogram,
                underflow,
                overflow,
            }
        })
        .collect();
    Ok(IdkReport {
        groups,
        bin_edges,
        global_mean,
        global_std,
        n: scores.len(),
    })
}

/// Long-format histogram: one row per (category, bin).
pub fn write_idk_csv(report: &IdkReport, path: &Path) -> Result<()> {
    let header = ["category", "bin", "bin_lo", "bin_hi", "count"];
    let mut rows = Vec::new();
    for g in &report.groups {
        for (b, c) in g.histogram.iter().enumerate() {
            rows.push(vec![
                g.category.to_string(),
                b.to_string(),
                report.bin_edges[b].to_string(),
                report.bin_edges[b + 1].to_string(),
                c.to_string(),
            ]);
        }
    }
    super::write_csv(path, &header, rows)
}

pub fn write_idk_summary_csv(report: &IdkReport, path: &Path) -> Result<()> {
    let header = ["category", "count", "mean", "std", "underflow", "overflow"];
    let rows = report.groups.iter().map(|g| {
        vec![
            g.category.to_string(),
            g.count.to_string(),
            g.mean.to_string(),
            g.std.to_string(),
            g.underflow.to_string(),
            g.overflow.to_string(),
        ]
    });
    super::write_csv(path, &header, rows)
}
