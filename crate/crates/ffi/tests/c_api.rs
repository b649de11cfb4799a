// SPDX-License-Identifier: MIT OR Apache-2.0

use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use correctness_probe::store::{write_meta, Category, SampleMeta};
use correctness_probe_ffi::*;

fn c(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cp_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn record(i: usize, correct: u8) -> SampleMeta {
    SampleMeta {
        sample_id: format!("q{i}"),
        dataset_id: "fixture".into(),
        question: String::new(),
        gold: vec![],
        answer: String::new(),
        correct,
        category: if correct == 1 {
            Category::Right
        } else {
            Category::Wrong
        },
        verbalized_confidence: None,
    }
}

#[test]
fn fit_and_score_through_handles() {
    let tmp = tempfile::tempdir().unwrap();
    let actv = tmp.path().join("fixture.actv");
    let meta = tmp.path().join("fixture.jsonl");
    let rows: [f32; 8] = [1.0, 0.0, 3.0, 0.0, -1.0, 0.0, -3.0, 0.0];
    write_meta(
        &[record(0, 1), record(1, 1), record(2, 0), record(3, 0)],
        &meta,
    )
    .unwrap();

    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(
            cp_matrix_from_f32(rows.as_ptr(), 4, 2, 3, &mut m),
            CpStatus::Ok
        );
        assert_eq!(
            (cp_matrix_n(m), cp_matrix_d(m), cp_matrix_layer(m)),
            (4, 2, 3)
        );
        assert_eq!(cp_matrix_write(m, c(&actv).as_ptr()), CpStatus::Ok);

        let mut ds = ptr::null_mut();
        assert_eq!(
            cp_dataset_load(c(&actv).as_ptr(), c(&meta).as_ptr(), &mut ds),
            CpStatus::Ok
        );
        assert_eq!((cp_dataset_n(ds), cp_dataset_n_true(ds)), (4, 2));
        let mut labels = [9u8; 4];
        assert_eq!(cp_dataset_labels(ds, labels.as_mut_ptr(), 4), CpStatus::Ok);
        assert_eq!(labels, [1, 1, 0, 0]);

        let mut dir = ptr::null_mut();
        assert_eq!(cp_direction_fit(ds, &mut dir), CpStatus::Ok);
        assert_eq!((cp_direction_d(dir), cp_direction_w_norm(dir)), (2, 4.0));
        let (mut w, mut mu) = ([0.0; 2], [1.0; 2]);
        assert_eq!(
            cp_direction_vectors(dir, w.as_mut_ptr(), mu.as_mut_ptr(), 2),
            CpStatus::Ok
        );
        assert_eq!((w, mu), ([4.0, 0.0], [0.0, 0.0]));

        let mut s = 0.0;
        assert_eq!(
            cp_direction_score(dir, [4.0, 7.0].as_ptr(), 2, &mut s),
            CpStatus::Ok
        );
        assert_eq!(s, 4.0);
        assert_eq!(
            cp_direction_score(dir, [4.0].as_ptr(), 1, &mut s),
            CpStatus::DimensionMismatch
        );
        assert!(last_error().contains("dimension"), "{}", last_error());

        let mut scores = [0.0; 4];
        assert_eq!(
            cp_direction_score_batch(dir, m, scores.as_mut_ptr(), 4),
            CpStatus::Ok
        );
        assert_eq!(scores, [1.0, 3.0, -1.0, -3.0]);
        let mut again = [0.0; 4];
        assert_eq!(
            cp_direction_score_dataset(dir, ds, again.as_mut_ptr(), 4),
            CpStatus::Ok
        );
        assert_eq!(scores, again);

        let mut a = 0.0;
        assert_eq!(
            cp_auroc(scores.as_ptr(), labels.as_ptr(), 4, &mut a),
            CpStatus::Ok
        );
        assert_eq!(a, 1.0);

        let saved = tmp.path().join("dir.json");
        assert_eq!(cp_direction_save(dir, c(&saved).as_ptr()), CpStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(
            cp_direction_load(c(&saved).as_ptr(), &mut loaded),
            CpStatus::Ok
        );
        assert_eq!(cp_direction_w_norm(loaded), 4.0);

        cp_direction_free(loaded);
        cp_direction_free(dir);
        cp_dataset_free(ds);
        cp_matrix_free(m);
    }
}

#[test]
fn failures_map_to_status_codes() {
    let tmp = tempfile::tempdir().unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(cp_matrix_read(ptr::null(), &mut m), CpStatus::NullPointer);
        assert!(m.is_null());

        let missing = tmp.path().join("missing.actv");
        assert_eq!(cp_matrix_read(c(&missing).as_ptr(), &mut m), CpStatus::Io);
        assert!(last_error().contains("missing.actv"));

        let bad = tmp.path().join("bad.actv");
        std::fs::write(&bad, b"XXXX0000000000000000000000000000").unwrap();
        assert_eq!(cp_matrix_read(c(&bad).as_ptr(), &mut m), CpStatus::Format);

        let nan = [f32::NAN];
        assert_eq!(
            cp_matrix_from_f32(nan.as_ptr(), 1, 1, 0, &mut m),
            CpStatus::NonFinite
        );

        let mut a = 0.0;
        assert_eq!(
            cp_auroc([1.0, 2.0].as_ptr(), [1u8, 1].as_ptr(), 2, &mut a),
            CpStatus::SingleClass
        );
        assert_eq!(
            cp_analytic_auc(2.0, 1.0, 0.0, &mut a),
            CpStatus::InvalidArgument
        );
        assert_eq!(cp_analytic_auc(2.0, 1.0, 1.0, &mut a), CpStatus::Ok);
        assert!((a - 0.921350396474857).abs() < 1e-10);

        assert_eq!(cp_matrix_n(ptr::null()), 0);
        cp_matrix_free(ptr::null_mut());
        assert!(!CStr::from_ptr(cp_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("include/correctness_probe.h"),
    )
    .unwrap();
    for name in [
        "CP_STATUS_OK",
        "typedef struct CpDirection CpDirection",
        "cp_matrix_read",
        "cp_dataset_load",
        "cp_direction_fit",
        "cp_direction_score_batch",
        "cp_auroc",
        "cp_last_error_message",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Compiles a C program against the header and the static library.
#[test]
fn c_program_links_against_static_library() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let lib = target.join(profile).join("libcorrectness_probe_ffi.a");
    if !lib.exists()
        || std::process::Command::new("cc")
            .arg("--version")
            .output()
            .is_err()
    {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "correctness_probe.h"
int main(void) {
    const float rows[] = {1, 0, 3, 0, -1, 0, -3, 0};
    CpMatrix *m = NULL;
    if (cp_matrix_from_f32(rows, 4, 2, 0, &m) != CP_STATUS_OK) return 1;
    double auc = 0;
    const double scores[] = {1, 3, -1, -3};
    const uint8_t labels[] = {1, 1, 0, 0};
    if (cp_auroc(scores, labels, 4, &auc) != CP_STATUS_OK || auc != 1.0) return 2;
    if (cp_auroc(scores, labels, 0, &auc) == CP_STATUS_OK) return 3;
    cp_matrix_free(m);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C smoke exited {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
