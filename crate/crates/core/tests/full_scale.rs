// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reference-cell check on real activation dumps.
//!
//! Ignored by default. Point it at dumps produced by an extraction run:
//!
//! ```text
//! CPROBE_FULL_TRAIN=/dumps/model-a/qa.L14.actv \
//! CPROBE_FULL_EXPECTED=0.80 \
//! cargo test -p correctness-probe --release --test full_scale -- --ignored
//! ```
//!
//! Each `.actv` needs its `.jsonl` sidecar next to it. `CPROBE_FULL_TEST`
//! selects a different test dataset (default: the training dataset, scored on
//! held-out folds). `CPROBE_FULL_SEED` sets the fold seed (default 0). The
//! fold-mean AUROC of the cross-dataset protocol with k = 5 must land within
//! ±0.02 of the expected value.

use std::path::PathBuf;

use correctness_probe::experiments::cross_matrix;
use correctness_probe::{join, read_matrix, FoldStrategy, LabeledDataset};

fn load(path: &PathBuf) -> LabeledDataset {
    let matrix = read_matrix(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    join(matrix, path.with_extension("jsonl")).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
#[ignore = "needs externally produced activation dumps"]
fn reference_cell_within_tolerance() {
    let var = |name: &str| std::env::var(name).ok();
    let train = PathBuf::from(var("CPROBE_FULL_TRAIN").expect("set CPROBE_FULL_TRAIN"));
    let expected: f64 = var("CPROBE_FULL_EXPECTED")
        .expect("set CPROBE_FULL_EXPECTED")
        .parse()
        .expect("CPROBE_FULL_EXPECTED must be a number");
    let seed: u64 = var("CPROBE_FULL_SEED").map_or(0, |s| s.parse().expect("numeric seed"));

    let mut datasets = vec![load(&train)];
    let test_index = match var("CPROBE_FULL_TEST") {
        Some(test) => {
            datasets.push(load(&PathBuf::from(test)));
            1
        }
        None => 0,
    };
    let m = cross_matrix(&datasets, 5, seed, FoldStrategy::StratifiedShuffled).unwrap();
    let cell = &m.cells[0][test_index];
    println!(
        "mean auroc {:.4} ± {:.4} (expected {expected})",
        cell.mean, cell.std
    );
    assert!(
        (cell.mean - expected).abs() <= 0.02,
        "mean auroc {} outside {expected} ± 0.02",
        cell.mean
    );
}
