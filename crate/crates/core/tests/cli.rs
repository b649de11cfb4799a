// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::path::{Path, PathBuf};

use correctness_probe::cli::dispatch;
use correctness_probe::manifest::RunManifest;
use correctness_probe::probe::load_direction;
use correctness_probe::store::write_meta;
use correctness_probe::{write_matrix, ActivationMatrix};

use common::meta;

fn run(args: &[&str]) -> i32 {
    dispatch(std::iter::once("cprobe").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_fixture(dir: &Path, name: &str, rows: &[Vec<f32>], labels: &[u8]) -> PathBuf {
    let actv = dir.join(format!("{name}.actv"));
    write_matrix(&ActivationMatrix::from_rows(0, rows).unwrap(), &actv).unwrap();
    let records: Vec<_> = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| meta(name, i, l))
        .collect();
    write_meta(&records, dir.join(format!("{name}.jsonl"))).unwrap();
    actv
}

#[test]
fn fit_on_symmetric_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let actv = write_fixture(
        tmp.path(),
        "trivial",
        &[
            vec![1.0, 0.0],
            vec![3.0, 0.0],
            vec![-1.0, 0.0],
            vec![-3.0, 0.0],
        ],
        &[1, 1, 0, 0],
    );
    let out = tmp.path().join("dir.json");
    assert_eq!(
        run(&[
            "fit",
            "--activations",
            p(&actv),
            "--layer",
            "0",
            "--out",
            p(&out)
        ]),
        0
    );
    let dir = load_direction(&out).unwrap();
    assert_eq!(dir.w(), &[4.0, 0.0]);
    assert_eq!(dir.mu(), &[0.0, 0.0]);
    assert_eq!(dir.w_norm(), 4.0);
    let manifest = RunManifest::read(&RunManifest::path_for(&out)).unwrap();
    assert_eq!(manifest.inputs.len(), 2);
    assert_eq!(manifest.inputs[0].sha256.len(), 64);

    let scores = tmp.path().join("scores.csv");
    assert_eq!(
        run(&[
            "score",
            "--direction",
            p(&out),
            "--activations",
            p(&actv),
            "--out",
            p(&scores)
        ]),
        0
    );
    let text = std::fs::read_to_string(&scores).unwrap();
    assert!(text.starts_with("index,sample_id,correct,score\n0,trivial-0,1,"));
}

#[test]
fn synth_then_eval_matches_analytic_value() {
    let tmp = tempfile::tempdir().unwrap();
    let train = tmp.path().join("train");
    let test = tmp.path().join("test");
    let common_args = ["--d", "64", "--n", "20000", "--delta", "2", "--sigma", "1"];
    let mut args = vec!["synth", "--seed", "1", "--out-prefix", p(&train)];
    args.extend(common_args);
    assert_eq!(run(&args), 0);
    let axis = tmp.path().join("train.axis.json");
    let mut args = vec![
        "synth",
        "--seed",
        "2",
        "--dataset-id",
        "test",
        "--axis",
        p(&axis),
        "--out-prefix",
        p(&test),
    ];
    args.extend(common_args);
    assert_eq!(run(&args), 0);

    let dir = tmp.path().join("dir.json");
    let train_actv = tmp.path().join("train.actv");
    assert_eq!(
        run(&["fit", "--activations", p(&train_actv), "--out", p(&dir)]),
        0
    );
    let out = tmp.path().join("eval.csv");
    let test_actv = tmp.path().join("test.actv");
    assert_eq!(
        run(&[
            "eval",
            "--direction",
            p(&dir),
            "--test-activations",
            p(&test_actv),
            "--out",
            p(&out)
        ]),
        0
    );
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let row = reader.records().next().unwrap().unwrap();
    let value: f64 = row[5].parse().unwrap();
    assert!((value - 0.9214).abs() <= 0.01, "eval auroc {value}");
    assert!(RunManifest::path_for(&out).exists());
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["fit", "--no-such-flag"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(
        run(&[
            "sweep",
            "--layers-dir",
            "x",
            "--out",
            "y",
            "--strategy",
            "random"
        ]),
        1
    );

    let missing = tmp.path().join("missing.actv");
    let out = tmp.path().join("o.json");
    assert_eq!(
        run(&["fit", "--activations", p(&missing), "--out", p(&out)]),
        2
    );

    let bad = tmp.path().join("bad.actv");
    std::fs::write(&bad, b"XXXX0000000000000000000000000000").unwrap();
    assert_eq!(run(&["ingest", "--activations", p(&bad)]), 2);

    let one_class = write_fixture(tmp.path(), "one", &[vec![1.0], vec![2.0]], &[1, 1]);
    assert_eq!(
        run(&["fit", "--activations", p(&one_class), "--out", p(&out)]),
        2
    );
    assert!(!out.exists());
}

#[test]
fn analysis_commands_write_results_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let prefix = tmp.path().join("s");
    assert_eq!(
        run(&[
            "synth",
            "--d",
            "8",
            "--n",
            "300",
            "--delta",
            "1.5",
            "--seed",
            "4",
            "--idk-fraction",
            "0.2",
            "--idk-shift",
            "-2",
            "--out-prefix",
            p(&prefix),
        ]),
        0
    );
    let actv = tmp.path().join("s.actv");
    assert_eq!(run(&["ingest", "--activations", p(&actv)]), 0);
    let dir = tmp.path().join("d.json");
    assert_eq!(
        run(&["fit", "--activations", p(&actv), "--out", p(&dir)]),
        0
    );

    let idk = tmp.path().join("idk.csv");
    assert_eq!(
        run(&[
            "idk",
            "--direction",
            p(&dir),
            "--data",
            p(&actv),
            "--out",
            p(&idk)
        ]),
        0
    );
    assert!(tmp.path().join("idk.summary.csv").exists());

    let ex = tmp.path().join("ex.csv");
    assert_eq!(
        run(&[
            "extremes",
            "--direction",
            p(&dir),
            "--data",
            p(&actv),
            "--top-k",
            "3",
            "--out",
            p(&ex)
        ]),
        0
    );
    // Header plus 3 rows in each of the 4 groups.
    assert_eq!(std::fs::read_to_string(&ex).unwrap().lines().count(), 13);

    let cos = tmp.path().join("cos.csv");
    assert_eq!(
        run(&["cosine", "--directions", p(&dir), p(&dir), "--out", p(&cos)]),
        0
    );

    let model = tmp.path().join("model.json");
    assert_eq!(
        run(&[
            "assessor",
            "fit",
            "--embeddings",
            p(&actv),
            "--out",
            p(&model)
        ]),
        0
    );
    let aeval = tmp.path().join("assessor.csv");
    assert_eq!(
        run(&[
            "assessor",
            "eval",
            "--model",
            p(&model),
            "--embeddings",
            p(&actv),
            "--out",
            p(&aeval)
        ]),
        0
    );

    for out in [&idk, &ex, &cos, &model, &aeval] {
        assert!(
            RunManifest::path_for(out).exists(),
            "no manifest for {}",
            out.display()
        );
    }
}

#[test]
fn raw_dump_converts_to_actv() {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("dump.f32");
    let values: Vec<u8> = (0..12).flat_map(|i| (i as f32).to_le_bytes()).collect();
    std::fs::write(&raw, values).unwrap();
    let out = tmp.path().join("dump.actv");
    assert_eq!(
        run(&[
            "ingest",
            "--raw-f32",
            "--activations",
            p(&raw),
            "--d",
            "4",
            "--layer",
            "9",
            "--out",
            p(&out)
        ]),
        0
    );
    let m = correctness_probe::read_matrix(&out).unwrap();
    assert_eq!((m.n(), m.d(), m.layer), (3, 4, 9));
    assert_eq!(m.row(2), &[8.0, 9.0, 10.0, 11.0]);
}

#[test]
fn verbal_eval_reads_sidecar_confidences() {
    let tmp = tempfile::tempdir().unwrap();
    let records: Vec<_> = (0..6)
        .map(|i| {
            let mut m = meta("v", i, (i % 2) as u8);
            m.verbalized_confidence = Some(if i % 2 == 1 { 80.0 } else { 30.0 });
            m
        })
        .collect();
    let path = tmp.path().join("v.jsonl");
    write_meta(&records, &path).unwrap();
    let out = tmp.path().join("verbal.csv");
    assert_eq!(
        run(&["verbal", "eval", "--meta", p(&path), "--out", p(&out)]),
        0
    );
    assert!(std::fs::read_to_string(&out).unwrap().contains(",1,"));
}
