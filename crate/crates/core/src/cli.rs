// SPDX-License-Identifier: MIT OR Apache-2.0

//! `cprobe` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Relative input paths
//! that do not exist are retried under `$CPROBE_DATA_DIR` when it is set.
//! Every command that writes a result file also writes
//! `<result>.manifest.json` next to it.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::baselines::{
    assessor_cross, eval_verbalized, fit_logreg, load_model, predict_proba, save_model,
    EmbeddingDataset, LogRegOptions,
};
use crate::error::{ProbeError, Result};
use crate::experiments::{
    cosine_matrix, cross_matrix, default_sizes, ensure_disjoint, extremes, idk_report,
    sample_curve, sweep_layers, write_cosine_csv, write_cross_csv, write_curve_csv,
    write_extremes_csv, write_idk_csv, write_idk_summary_csv, write_sweep_csv,
};
use crate::manifest::RunManifest;
use crate::metrics::{auroc, EvalResult, EvalRow, FoldStrategy};
use crate::probe::{fit_direction, load_direction, save_direction, score_batch};
use crate::store::{
    import_raw_f32, read_matrix, read_meta, write_matrix, write_meta, LabeledDataset,
};
use crate::synth::{analytic_auc, generate, GaussianSpec};

pub const DATA_DIR_ENV: &str = "CPROBE_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "cprobe",
    version,
    about = "In-advance correctness probes on cached activations"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate activation dumps (or convert a raw f32 dump with --raw-f32).
    Ingest(IngestArgs),
    /// Fit a correctness direction.
    Fit(FitArgs),
    /// Score activations with a fitted direction.
    Score(ScoreArgs),
    /// Cross-validated layer sweep.
    Sweep(SweepArgs),
    /// AUROC of a fitted direction on a labeled test set.
    Eval(EvalArgs),
    /// Train × test AUROC matrix over shared folds.
    Cross(CrossArgs),
    /// Sample-efficiency curve.
    Curve(CurveArgs),
    /// Cosine similarity between directions.
    Cosine(CosineArgs),
    /// Score distributions per answer category.
    Idk(IdkArgs),
    /// Most extreme scores among correct and incorrect samples.
    Extremes(ExtremesArgs),
    /// Logistic-regression assessor on question embeddings.
    #[command(subcommand)]
    Assessor(AssessorCommand),
    /// Verbalized-confidence baseline.
    #[command(subcommand)]
    Verbal(VerbalCommand),
    /// Generate a synthetic two-Gaussian dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// ACTV1 files (or one raw f32 file with --raw-f32).
    #[arg(long, num_args = 1.., required = true)]
    pub activations: Vec<PathBuf>,
    /// Sidecar to join against (defaults to the file's .jsonl sibling or
    /// meta.jsonl in the same directory, when present).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Treat the input as headerless little-endian f32 and write ACTV1 to --out.
    #[arg(long, requires_all = ["d", "out"])]
    pub raw_f32: bool,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub layer: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Expected layer; must match the file header when given.
    #[arg(long)]
    pub layer: Option<u32>,
    #[arg(long, default_value = "unknown")]
    pub model_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub direction: PathBuf,
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FoldArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// stratified_shuffled or sequential.
    #[arg(long, default_value = "stratified_shuffled")]
    pub strategy: FoldStrategy,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of per-layer ACTV1 files sharing one sidecar.
    #[arg(long)]
    pub layers_dir: PathBuf,
    /// Shared sidecar (default: <layers-dir>/meta.jsonl).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[command(flatten)]
    pub folds: FoldArgs,
    #[arg(long, default_value = "unknown")]
    pub model_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub direction: PathBuf,
    #[arg(long)]
    pub test_activations: PathBuf,
    #[arg(long)]
    pub test_meta: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossArgs {
    /// ACTV1 files, one per dataset, each with a .jsonl sibling sidecar.
    #[arg(long, num_args = 1.., required = true)]
    pub datasets: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Layer-selection sidecars whose sample_ids must not appear in any dataset.
    #[arg(long, num_args = 1..)]
    pub holdout_meta: Vec<PathBuf>,
    /// Write each dataset's fold-averaged direction here.
    #[arg(long)]
    pub directions_out: Option<PathBuf>,
    #[arg(long, default_value = "unknown")]
    pub model_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub tests: Vec<PathBuf>,
    /// Comma-separated sizes (default: 10, 20, 40, … clipped to n).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CosineArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub directions: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IdkArgs {
    #[arg(long)]
    pub direction: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Histogram CSV; the per-category summary goes to <out>.summary.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtremesArgs {
    #[arg(long)]
    pub direction: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum AssessorCommand {
    /// Fit on all rows of an embedding file.
    Fit(AssessorFitArgs),
    /// AUROC of a fitted assessor on a labeled embedding file.
    Eval(AssessorEvalArgs),
    /// Fold-wise protocol matching `cross`: fit on k−1 train folds, test on
    /// fold k of each test set.
    Cross(AssessorCrossArgs),
}

#[derive(Debug, Args)]
pub struct LogRegArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Fit on raw features instead of z-scored ones.
    #[arg(long)]
    pub no_standardize: bool,
}

impl LogRegArgs {
    fn options(&self) -> LogRegOptions {
        LogRegOptions {
            l2_lambda: self.lambda,
            tol: self.tol,
            max_iter: self.max_iter,
            standardize: !self.no_standardize,
        }
    }
}

#[derive(Debug, Args)]
pub struct AssessorFitArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, default_value = "unknown")]
    pub embedding_model_id: String,
    #[command(flatten)]
    pub logreg: LogRegArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AssessorEvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssessorCrossArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub tests: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub folds: FoldArgs,
    #[command(flatten)]
    pub logreg: LogRegArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum VerbalCommand {
    /// AUROC of verbalized confidence against correctness.
    Eval(VerbalEvalArgs),
}

#[derive(Debug, Args)]
pub struct VerbalEvalArgs {
    #[arg(long)]
    pub meta: PathBuf,
    /// Drop samples without a confidence instead of imputing 50.
    #[arg(long)]
    pub no_impute: bool,
    #[arg(long, default_value = "unknown")]
    pub model_id: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub d: usize,
    /// Samples per class.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub delta: f64,
    /// Standard deviation of both classes (see --sigma-false).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub sigma_false: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub idk_fraction: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub idk_shift: f64,
    /// Reuse the separating axis from an earlier run's .axis.json.
    #[arg(long)]
    pub axis: Option<PathBuf>,
    #[arg(long, default_value = "synth")]
    pub dataset_id: String,
    #[arg(long, default_value = "synthetic")]
    pub model_id: String,
    /// Writes <prefix>.actv, <prefix>.jsonl and <prefix>.axis.json.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

/// Parse `argv` and run. Returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command_line: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let outcome = match cli.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| run(cli.command, command_line)),
            Err(e) => Err(ProbeError::InvalidArgument(e.to_string())),
        },
        None => run(cli.command, command_line),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &ProbeError) -> i32 {
    match e {
        ProbeError::InvalidArgument(_) => 1,
        _ => 2,
    }
}

/// `path`, or `$CPROBE_DATA_DIR/path` when `path` is relative and missing.
pub fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

/// Sidecar for `actv`: explicit path, else `<stem>.jsonl`, else `meta.jsonl`
/// in the same directory.
pub fn sidecar_for(actv: &Path, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return resolve(p);
    }
    let sibling = actv.with_extension("jsonl");
    if sibling.exists() {
        return sibling;
    }
    let shared = actv.with_file_name("meta.jsonl");
    if shared.exists() {
        return shared;
    }
    sibling
}

fn load_labeled(
    actv: &Path,
    meta: Option<&Path>,
    manifest: &mut RunManifest,
) -> Result<LabeledDataset> {
    let actv = resolve(actv);
    let meta_path = sidecar_for(&actv, meta);
    let matrix = read_matrix(&actv)?;
    manifest.input(&actv)?.input(&meta_path)?;
    let records = read_meta(&meta_path)?;
    LabeledDataset::new(matrix, records)
}

fn finish(manifest: &mut RunManifest, out: &Path) -> Result<()> {
    manifest.output(out);
    manifest.write_for(out)?;
    Ok(())
}

fn write_eval_csv(rows: &[EvalRow<'_>], path: &Path) -> Result<()> {
    crate::experiments::write_eval_rows(rows, path)
}

fn run(command: Command, command_line: Vec<String>) -> Result<()> {
    let mut manifest = RunManifest::new(command_line);
    match command {
        Command::Ingest(a) => ingest(a, &mut manifest),
        Command::Fit(a) => {
            let mut ds = load_labeled(&a.activations, a.meta.as_deref(), &mut manifest)?;
            if let Some(layer) = a.layer {
                if layer != ds.matrix.layer {
                    return Err(ProbeError::InvalidArgument(format!(
                        "--layer {layer} but {} holds layer {}",
                        a.activations.display(),
                        ds.matrix.layer
                    )));
                }
            }
            ds.matrix.model_id = a.model_id;
            let dir = fit_direction(&ds)?;
            save_direction(&dir, &a.out)?;
            println!(
                "direction: layer {} d {} n_true {} n_false {} |w| {}",
                dir.layer,
                dir.d(),
                dir.n_true,
                dir.n_false,
                dir.w_norm()
            );
            finish(&mut manifest, &a.out)
        }
        Command::Score(a) => {
            let dir_path = resolve(&a.direction);
            let dir = load_direction(&dir_path)?;
            manifest.input(&dir_path)?;
            let actv = resolve(&a.activations);
            let matrix = read_matrix(&actv)?;
            manifest.input(&actv)?;
            let meta_path = sidecar_for(&actv, a.meta.as_deref());
            let meta = if a.meta.is_some() || meta_path.exists() {
                manifest.input(&meta_path)?;
                let m = read_meta(&meta_path)?;
                if m.len() != matrix.n() {
                    return Err(ProbeError::CountMismatch {
                        rows: matrix.n(),
                        records: m.len(),
                    });
                }
                Some(m)
            } else {
                None
            };
            let scores = score_batch(&dir, &matrix)?;
            let rows = scores.iter().enumerate().map(|(i, s)| {
                let (id, correct) = match &meta {
                    Some(m) => (m[i].sample_id.clone(), m[i].correct.to_string()),
                    None => (String::new(), String::new()),
                };
                vec![i.to_string(), id, correct, s.to_string()]
            });
            crate::experiments::write_rows(
                &a.out,
                &["index", "sample_id", "correct", "score"],
                rows,
            )?;
            println!("scored {} rows", scores.len());
            finish(&mut manifest, &a.out)
        }
        Command::Sweep(a) => {
            let dir = resolve(&a.layers_dir);
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| ProbeError::io(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "actv"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(ProbeError::InvalidArgument(format!(
                    "no .actv files in {}",
                    dir.display()
                )));
            }
            let meta_path = a
                .meta
                .as_deref()
                .map(resolve)
                .unwrap_or_else(|| dir.join("meta.jsonl"));
            manifest.input(&meta_path)?;
            let meta = read_meta(&meta_path)?;
            let mut layers = Vec::with_capacity(files.len());
            for f in &files {
                manifest.input(f)?;
                let mut ds = LabeledDataset::new(read_matrix(f)?, meta.clone())?;
                ds.matrix.model_id = a.model_id.clone();
                layers.push(ds);
            }
            let result = sweep_layers(&layers, a.k, a.folds.seed, a.folds.strategy)?;
            let dataset_id = layers[0].dataset_id().to_string();
            write_sweep_csv(&result, &a.model_id, &dataset_id, &a.out)?;
            for (layer, r) in &result.layers {
                println!("layer {layer:>3}: {:.4} ± {:.4}", r.mean, r.std);
            }
            println!(
                "best layer {} (stride {})",
                result.best_layer, result.layer_stride
            );
            manifest
                .seed("fold_seed", a.folds.seed)
                .plan(&dataset_id, &result.plan);
            finish(&mut manifest, &a.out)
        }
        Command::Eval(a) => {
            let dir_path = resolve(&a.direction);
            let dir = load_direction(&dir_path)?;
            manifest.input(&dir_path)?;
            let ds = load_labeled(&a.test_activations, a.test_meta.as_deref(), &mut manifest)?;
            let scores = score_batch(&dir, &ds.matrix)?;
            let labels = ds.labels();
            let value = auroc(&scores, &labels)?;
            let c = ds.counts();
            println!("auroc {value}");
            if let Some(out) = &a.out {
                let result = EvalResult::single(value, c.n_true, c.n_false);
                let row = EvalRow {
                    model_id: &dir.model_id,
                    train_dataset: &dir.train_dataset_id,
                    test_dataset: ds.dataset_id(),
                    layer: dir.layer,
                    result: &result,
                };
                write_eval_csv(&[row], out)?;
                finish(&mut manifest, out)?;
            }
            Ok(())
        }
        Command::Cross(a) => {
            let mut datasets = Vec::with_capacity(a.datasets.len());
            for p in &a.datasets {
                let mut ds = load_labeled(p, None, &mut manifest)?;
                ds.matrix.model_id = a.model_id.clone();
                datasets.push(ds);
            }
            for h in &a.holdout_meta {
                let h = resolve(h);
                manifest.input(&h)?;
                ensure_disjoint(&read_meta(&h)?, &datasets)?;
            }
            let cm = cross_matrix(&datasets, a.k, a.folds.seed, a.folds.strategy)?;
            let layer = datasets[0].matrix.layer;
            write_cross_csv(&cm, &a.model_id, layer, &a.out)?;
            for (t, row) in cm.cells.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|c| format!("{:.4}", c.mean)).collect();
                println!("{:>16}: {}", cm.dataset_ids[t], cells.join("  "));
            }
            if let Some(dir) = &a.directions_out {
                std::fs::create_dir_all(dir).map_err(|e| ProbeError::io(dir, e))?;
                for d in &cm.directions {
                    let path = dir.join(format!("{}.direction.json", d.train_dataset_id));
                    save_direction(d, &path)?;
                    manifest.output(&path);
                }
            }
            manifest.seed("fold_seed", a.folds.seed);
            for (id, plan) in cm.dataset_ids.iter().zip(&cm.plans) {
                manifest.plan(id, plan);
            }
            finish(&mut manifest, &a.out)
        }
        Command::Curve(a) => {
            let train = load_labeled(&a.train, None, &mut manifest)?;
            let tests = a
                .tests
                .iter()
                .map(|p| load_labeled(p, None, &mut manifest))
                .collect::<Result<Vec<_>>>()?;
            let sizes = if a.sizes.is_empty() {
                default_sizes(train.n())
            } else {
                a.sizes.clone()
            };
            let curve = sample_curve(&train, &tests, &sizes, a.reps, a.seed)?;
            write_curve_csv(&curve, train.dataset_id(), &a.out)?;
            for (s, size) in curve.sizes.iter().enumerate() {
                let cells: Vec<String> = curve.mean[s].iter().map(|v| format!("{v:.4}")).collect();
                println!("{size:>6}: {}", cells.join("  "));
            }
            manifest.seed("subsample_seed", a.seed);
            finish(&mut manifest, &a.out)
        }
        Command::Cosine(a) => {
            let mut dirs = Vec::with_capacity(a.directions.len());
            let mut labels = Vec::with_capacity(a.directions.len());
            for p in &a.directions {
                let p = resolve(p);
                manifest.input(&p)?;
                let d = load_direction(&p)?;
                labels.push(if d.train_dataset_id.is_empty() {
                    p.display().to_string()
                } else {
                    d.train_dataset_id.clone()
                });
                dirs.push(d);
            }
            let m = cosine_matrix(&dirs)?;
            write_cosine_csv(&labels, &m, &a.out)?;
            finish(&mut manifest, &a.out)
        }
        Command::Idk(a) => {
            let dir_path = resolve(&a.direction);
            let dir = load_direction(&dir_path)?;
            manifest.input(&dir_path)?;
            let ds = load_labeled(&a.data, a.meta.as_deref(), &mut manifest)?;
            let report = idk_report(&dir, &ds)?;
            write_idk_csv(&report, &a.out)?;
            let summary = summary_path(&a.out);
            write_idk_summary_csv(&report, &summary)?;
            for g in &report.groups {
                println!(
                    "{:>5}: n {:>7} mean {:.4} std {:.4}",
                    g.category, g.count, g.mean, g.std
                );
            }
            manifest.output(&summary);
            finish(&mut manifest, &a.out)
        }
        Command::Extremes(a) => {
            let dir_path = resolve(&a.direction);
            let dir = load_direction(&dir_path)?;
            manifest.input(&dir_path)?;
            let ds = load_labeled(&a.data, a.meta.as_deref(), &mut manifest)?;
            let ex = extremes(&dir, &ds, a.top_k)?;
            write_extremes_csv(&ex, &a.out)?;
            finish(&mut manifest, &a.out)
        }
        Command::Assessor(cmd) => assessor(cmd, &mut manifest),
        Command::Verbal(VerbalCommand::Eval(a)) => {
            let meta_path = resolve(&a.meta);
            manifest.input(&meta_path)?;
            let meta = read_meta(&meta_path)?;
            let r = eval_verbalized(&meta, !a.no_impute)?;
            println!(
                "auroc {} (n {}, imputed {})",
                r.result.mean, r.n_used, r.n_imputed
            );
            if let Some(out) = &a.out {
                let dataset = meta
                    .first()
                    .map(|m| m.dataset_id.clone())
                    .unwrap_or_default();
                let row = EvalRow {
                    model_id: &a.model_id,
                    train_dataset: "verbalized",
                    test_dataset: &dataset,
                    layer: 0,
                    result: &r.result,
                };
                write_eval_csv(&[row], out)?;
                finish(&mut manifest, out)?;
            }
            Ok(())
        }
        Command::Synth(a) => {
            let axis = match &a.axis {
                Some(p) => {
                    let p = resolve(p);
                    let text = std::fs::read_to_string(&p).map_err(|e| ProbeError::io(&p, e))?;
                    manifest.input(&p)?;
                    Some(serde_json::from_str::<Vec<f64>>(&text)?)
                }
                None => None,
            };
            let spec = GaussianSpec {
                d: a.d,
                n_per_class: a.n,
                delta: a.delta,
                sigma_true: a.sigma,
                sigma_false: a.sigma_false.unwrap_or(a.sigma),
                axis,
                seed: a.seed,
                idk_fraction: a.idk_fraction,
                idk_shift: a.idk_shift,
                dataset_id: a.dataset_id,
                model_id: a.model_id,
            };
            let s = generate(&spec)?;
            let actv = a.out_prefix.with_extension("actv");
            let meta = a.out_prefix.with_extension("jsonl");
            let axis = a.out_prefix.with_extension("axis.json");
            write_matrix(&s.data.matrix, &actv)?;
            write_meta(&s.data.meta, &meta)?;
            std::fs::write(&axis, serde_json::to_string(&s.axis)? + "\n")
                .map_err(|e| ProbeError::io(&axis, e))?;
            if spec.sigma_true > 0.0 && spec.sigma_false > 0.0 {
                println!(
                    "analytic auroc {}",
                    analytic_auc(spec.delta, spec.sigma_true, spec.sigma_false)?
                );
            }
            manifest
                .seed("synth_seed", spec.seed)
                .output(&meta)
                .output(&axis);
            finish(&mut manifest, &actv)
        }
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".summary.csv");
    out.with_file_name(name)
}

fn ingest(a: IngestArgs, manifest: &mut RunManifest) -> Result<()> {
    if a.raw_f32 {
        let [input] = a.activations.as_slice() else {
            return Err(ProbeError::InvalidArgument(
                "--raw-f32 converts exactly one file".into(),
            ));
        };
        let input = resolve(input);
        let d = a.d.expect("clap enforces --d");
        let out = a.out.expect("clap enforces --out");
        manifest.input(&input)?;
        let m = import_raw_f32(&input, d, a.layer)?;
        write_matrix(&m, &out)?;
        println!(
            "{}: layer {} d {} n {}",
            out.display(),
            m.layer,
            m.d(),
            m.n()
        );
        return finish(manifest, &out);
    }
    for p in &a.activations {
        let p = resolve(p);
        let m = read_matrix(&p)?;
        let meta_path = sidecar_for(&p, a.meta.as_deref());
        if a.meta.is_some() || meta_path.exists() {
            let ds = LabeledDataset::new(m, read_meta(&meta_path)?)?;
            let c = ds.counts();
            println!(
                "{}: layer {} d {} n {} (n_true {} n_false {} n_idk {})",
                p.display(),
                ds.matrix.layer,
                ds.d(),
                ds.n(),
                c.n_true,
                c.n_false,
                c.n_idk
            );
        } else {
            println!("{}: layer {} d {} n {}", p.display(), m.layer, m.d(), m.n());
        }
    }
    Ok(())
}

fn load_embeddings(
    path: &Path,
    meta: Option<&Path>,
    id: &str,
    manifest: &mut RunManifest,
) -> Result<EmbeddingDataset> {
    Ok(EmbeddingDataset::new(
        load_labeled(path, meta, manifest)?,
        id,
    ))
}

fn assessor(cmd: AssessorCommand, manifest: &mut RunManifest) -> Result<()> {
    match cmd {
        AssessorCommand::Fit(a) => {
            let ds = load_embeddings(
                &a.embeddings,
                a.meta.as_deref(),
                &a.embedding_model_id,
                manifest,
            )?;
            let model = fit_logreg(&ds, &a.logreg.options())?;
            save_model(&model, &a.out)?;
            println!(
                "assessor: converged {} after {} iterations (grad ∞-norm {:e})",
                model.converged, model.iterations, model.grad_norm
            );
            finish(manifest, &a.out)
        }
        AssessorCommand::Eval(a) => {
            let model_path = resolve(&a.model);
            let model = load_model(&model_path)?;
            manifest.input(&model_path)?;
            let ds = load_embeddings(
                &a.embeddings,
                a.meta.as_deref(),
                &model.embedding_model_id,
                manifest,
            )?;
            let p = predict_proba(&model, &ds.data.matrix)?;
            let value = auroc(&p, &ds.data.labels())?;
            println!("auroc {value}");
            if let Some(out) = &a.out {
                let c = ds.data.counts();
                let result = EvalResult::single(value, c.n_true, c.n_false);
                let row = EvalRow {
                    model_id: &model.embedding_model_id,
                    train_dataset: &model.train_dataset_id,
                    test_dataset: ds.data.dataset_id(),
                    layer: 0,
                    result: &result,
                };
                write_eval_csv(&[row], out)?;
                finish(manifest, out)?;
            }
            Ok(())
        }
        AssessorCommand::Cross(a) => {
            let train = load_embeddings(&a.train, None, "embeddings", manifest)?;
            let tests = a
                .tests
                .iter()
                .map(|p| load_embeddings(p, None, "embeddings", manifest))
                .collect::<Result<Vec<_>>>()?;
            let results = assessor_cross(
                &train,
                &tests,
                a.k,
                a.folds.seed,
                a.folds.strategy,
                &a.logreg.options(),
            )?;
            let rows: Vec<EvalRow<'_>> = tests
                .iter()
                .zip(&results)
                .map(|(t, r)| EvalRow {
                    model_id: "assessor",
                    train_dataset: train.data.dataset_id(),
                    test_dataset: t.data.dataset_id(),
                    layer: 0,
                    result: r,
                })
                .collect();
            for row in &rows {
                println!(
                    "{:>16}: {:.4} ± {:.4}",
                    row.test_dataset, row.result.mean, row.result.std
                );
            }
            write_eval_csv(&rows, &a.out)?;
            manifest.seed("fold_seed", a.folds.seed);
            finish(manifest, &a.out)
        }
    }
}
