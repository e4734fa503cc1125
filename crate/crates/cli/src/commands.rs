use std::path::{Path, PathBuf};

use anorand::data::{generate_synthetic, load_csv, load_csv_columns, load_csv_optional_label, Standardization};
use anorand::labelgen::build_training_set;
use anorand::metrics::evaluate;
use anorand::model::{AnoRandModel, Mode};
use anorand::{Checkpoint, Dataset};
use anyhow::{bail, ensure, Context};
use serde::Serialize;

use crate::args::{BenchArgs, Detector, EvalArgs, GenerateArgs, ScoreArgs, SweepArgs, TrainArgs};
use crate::harness::{self, AnoRandSettings, RunOutcome, Split};
use crate::manifest::ManifestBuilder;
use crate::sweep::{self, SweepRow, SWEEP_SCHEMA_VERSION};

pub const EVAL_SCHEMA_VERSION: u32 = 1;
pub const BENCH_SCHEMA_VERSION: u32 = 1;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn synthetic_assumptions(m: &mut ManifestBuilder, dim: usize, class_sep: f64) {
    m.assume("feature_dimension", dim)
        .assume("class_sep", class_sep)
        .assume(
            "generator",
            "gaussian clusters on hypercube vertices, per-cluster random linear mix, count-preserving label swaps",
        );
}

pub fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let mut m = ManifestBuilder::start("generate", args, Some(args.seed))?;
    let config = args.data.config(args.seed)?;
    let data: Dataset = generate_synthetic(&config)?;
    data.write_csv(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    synthetic_assumptions(&mut m, config.d, config.class_sep);
    m.output(&args.out)
        .extra("n_rows", data.n_rows())
        .extra("n_positive", data.n_positive());
    m.finish()?;
    Ok(())
}

pub fn train(args: &TrainArgs) -> anyhow::Result<()> {
    let mut m = ManifestBuilder::start("train", args, Some(args.seed))?;
    let settings = args.model.settings()?;
    let mode: Mode = args.mode.into();
    let data: Dataset = match mode {
        Mode::SemiSupervised => load_csv_optional_label(&args.data, &args.label_column)
            .with_context(|| format!("loading {}", args.data.display()))?
            .without_labels(),
        Mode::Supervised => load_csv(&args.data, Some(&args.label_column)).with_context(|| {
            format!(
                "supervised mode needs label column `{}` in {}",
                args.label_column,
                args.data.display()
            )
        })?,
    };
    let standardization = Standardization::fit(&data.features)?;
    let standardized = standardization.apply_dataset(&data)?;
    let mut model = AnoRandModel::new(settings.model_config(data.n_features(), mode, args.seed))?;
    let history = match mode {
        Mode::SemiSupervised => {
            let training_set = build_training_set(&standardized.features, &settings.labelgen_config(args.seed))?;
            m.extra("synthetic_anomalies", training_set.n_anomalies())
                .extra("training_rows", training_set.len());
            model.fit(&training_set)?
        }
        Mode::Supervised => model.fit_supervised(&standardized)?,
    };
    let alpha = model.alpha();
    let checkpoint = Checkpoint {
        model,
        feature_names: data.feature_names.clone(),
        standardization: Some(standardization),
    };
    checkpoint
        .save(&args.model_out)
        .with_context(|| format!("writing {}", args.model_out.display()))?;
    let history_out = args
        .history_out
        .clone()
        .unwrap_or_else(|| with_suffix(&args.model_out, ".history.csv"));
    history.save_csv(&history_out)?;
    m.input(&args.data)
        .output(&args.model_out)
        .output(&history_out)
        .extra("alpha", alpha)
        .extra("epochs_run", history.len());
    m.finish()?;
    Ok(())
}

pub fn score(args: &ScoreArgs) -> anyhow::Result<()> {
    let mut m = ManifestBuilder::start("score", args, None)?;
    let checkpoint =
        Checkpoint::load(&args.model).with_context(|| format!("loading checkpoint {}", args.model.display()))?;
    let data: Dataset = load_csv_columns(&args.data, &checkpoint.feature_names, None)
        .with_context(|| format!("loading {}", args.data.display()))?;
    let raw = match &checkpoint.standardization {
        Some(s) => s.apply(&data.features)?,
        None => data.features.clone(),
    };
    let report = checkpoint.model.score_parallel(&raw, args.threads)?;
    let file = std::fs::File::create(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    report.write_csv(std::io::BufWriter::new(file))?;
    m.input(&args.model)
        .input(&args.data)
        .output(&args.out)
        .extra("alpha", report.alpha)
        .extra("mode", checkpoint.model.mode())
        .extra("n_rows", report.len());
    m.finish()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    schema_version: u32,
    #[serde(flatten)]
    result: anorand::metrics::EvalResult,
}

#[derive(Debug, Serialize)]
struct EvalError {
    schema_version: u32,
    error: String,
}

/// Reads one numeric column, keyed by `row_index` when that column exists.
fn read_scores(path: &Path, column: &str) -> anyhow::Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == column)
        .with_context(|| format!("column `{column}` not found in {}", path.display()))?;
    let index_col = headers.iter().position(|h| h == "row_index");
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let r = record?;
        let score: f64 = r[col]
            .trim()
            .parse()
            .with_context(|| format!("{} row {}: `{}` is not a number", path.display(), i + 1, &r[col]))?;
        let index = match index_col {
            Some(c) => r[c]
                .trim()
                .parse::<usize>()
                .with_context(|| format!("{} row {}: bad row_index `{}`", path.display(), i + 1, &r[c]))?,
            None => i,
        };
        pairs.push((index, score));
    }
    pairs.sort_by_key(|p| p.0);
    for (expected, &(index, _)) in pairs.iter().enumerate() {
        ensure!(
            index == expected,
            "{}: row_index values must be 0..{} without gaps or repeats",
            path.display(),
            pairs.len()
        );
    }
    Ok(pairs.into_iter().map(|p| p.1).collect())
}

fn read_labels(path: &Path, column: &str) -> anyhow::Result<Vec<u8>> {
    let data: Dataset = load_csv_optional_label(path, column)?;
    match data.labels {
        Some(l) => Ok(l),
        None => bail!("label column `{column}` not found in {}", path.display()),
    }
}

pub fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let start = std::time::Instant::now();
    let outcome = (|| -> anyhow::Result<anorand::metrics::EvalResult> {
        let scores = read_scores(&args.scores, &args.score_column)?;
        let labels_path = args.labels.as_ref().unwrap_or(&args.scores);
        let labels = read_labels(labels_path, &args.label_column)?;
        ensure!(
            scores.len() == labels.len(),
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        );
        let mut result = evaluate(&scores, &labels)?;
        result.seed = args.seed;
        result.runtime_seconds = start.elapsed().as_secs_f64();
        result.config = Some(serde_json::json!({
            "scores": args.scores,
            "score_column": args.score_column,
            "labels": labels_path,
            "label_column": args.label_column,
        }));
        Ok(result)
    })();
    let (text, failed) = match outcome {
        Ok(result) => (
            serde_json::to_string_pretty(&EvalOutput {
                schema_version: EVAL_SCHEMA_VERSION,
                result,
            })?,
            None,
        ),
        Err(e) => (
            serde_json::to_string_pretty(&EvalError {
                schema_version: EVAL_SCHEMA_VERSION,
                error: format!("{e:#}"),
            })?,
            Some(e),
        ),
    };
    match &args.out {
        Some(path) => {
            std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            if failed.is_none() {
                let mut m = ManifestBuilder::start("eval", args, args.seed)?;
                m.input(&args.scores).output(path);
                if let Some(l) = &args.labels {
                    m.input(l);
                }
                m.finish()?;
            }
        }
        None => println!("{text}"),
    }
    match failed {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    W,
    Noise,
}

impl SweepKind {
    fn column(self) -> &'static str {
        match self {
            SweepKind::W => "w",
            SweepKind::Noise => "sigma",
        }
    }

    fn command(self) -> &'static str {
        match self {
            SweepKind::W => "sweep-w",
            SweepKind::Noise => "sweep-noise",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::W => sweep::grid(0.0, 1.0, 0.1),
            SweepKind::Noise => sweep::grid(0.1, 1.0, 0.1),
        }
        .expect("valid default grid")
    }

    fn apply(self, base: &AnoRandSettings, value: f64) -> AnoRandSettings {
        let mut s = base.clone();
        match self {
            SweepKind::W => s.w = value,
            SweepKind::Noise => s.sigma = value,
        }
        s
    }
}

pub fn run_sweep(kind: SweepKind, args: &SweepArgs) -> anyhow::Result<Vec<SweepRow>> {
    let mut m = ManifestBuilder::start(kind.command(), args, Some(args.seed))?;
    let base = args.model.settings()?;
    let data = args.data.config(args.seed)?;
    ensure!(args.repeats >= 1, "--repeats must be at least 1");
    ensure!(
        args.test_fraction > 0.0 && args.test_fraction < 1.0,
        "--test-fraction must lie in (0, 1), got {}",
        args.test_fraction
    );
    let grid = args.grid.clone().unwrap_or_else(|| kind.default_grid());
    ensure!(!grid.is_empty(), "--grid is empty");
    for &v in &grid {
        check_grid_value(kind, v)?;
    }
    let seeds = sweep::seeds(args.seed, args.repeats);
    let existing = if !args.fresh && args.out.exists() {
        sweep::read_rows(&args.out, kind.column())?
    } else {
        Vec::new()
    };
    let (rows, computed) = sweep::run_grid(&grid, &seeds, existing, args.jobs, |value, seed| {
        let split = harness::synthetic_split(&data, args.test_fraction, seed)?;
        Ok(harness::run_anorand(&split, &kind.apply(&base, value), seed)?)
    })?;
    sweep::write_rows(&args.out, kind.column(), &rows)?;
    synthetic_assumptions(&mut m, data.d, data.class_sep);
    m.output(&args.out)
        .extra("schema_version", SWEEP_SCHEMA_VERSION)
        .extra("grid", &grid)
        .extra("repeats", args.repeats)
        .extra("seeds", &seeds)
        .extra("rows_computed", computed)
        .extra("rows_reused", rows.len() - computed)
        .extra("median_pr_auc", median_summary(&rows));
    m.finish()?;
    Ok(rows)
}

fn check_grid_value(kind: SweepKind, v: f64) -> anyhow::Result<()> {
    match kind {
        SweepKind::W => ensure!((0.0..=1.0).contains(&v), "--grid: w must lie in [0, 1], got {v}"),
        SweepKind::Noise => ensure!(v.is_finite() && v >= 0.0, "--grid: sigma must be finite and nonnegative, got {v}"),
    }
    Ok(())
}

fn median_summary(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    sweep::by_value(rows)
        .into_iter()
        .map(|(v, g)| (v, harness::median(&g.iter().map(|r| r.pr_auc).collect::<Vec<_>>())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub detector: String,
    pub seed: u64,
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub fit_seconds: f64,
    pub score_seconds: f64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub dataset: String,
    pub detector: String,
    pub runs: usize,
    pub mean_pr_auc: f64,
    pub mean_roc_auc: f64,
    pub mean_fit_seconds: f64,
    pub rank: usize,
}

/// Rank 1 is the highest mean PR-AUC within a dataset; ties keep detector order.
pub fn rank_table(rows: &[BenchRow]) -> Vec<RankRow> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut detectors: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        if !detectors.contains(&r.detector.as_str()) {
            detectors.push(&r.detector);
        }
    }
    let mut table = Vec::new();
    for ds in datasets {
        let mut group: Vec<RankRow> = detectors
            .iter()
            .filter_map(|&det| {
                let runs: Vec<&BenchRow> = rows.iter().filter(|r| r.dataset == ds && r.detector == det).collect();
                if runs.is_empty() {
                    return None;
                }
                let col = |f: fn(&BenchRow) -> f64| harness::mean(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
                Some(RankRow {
                    dataset: ds.to_string(),
                    detector: det.to_string(),
                    runs: runs.len(),
                    mean_pr_auc: col(|r| r.pr_auc),
                    mean_roc_auc: col(|r| r.roc_auc),
                    mean_fit_seconds: col(|r| r.fit_seconds),
                    rank: 0,
                })
            })
            .collect();
        group.sort_by(|a, b| b.mean_pr_auc.total_cmp(&a.mean_pr_auc));
        for (i, r) in group.iter_mut().enumerate() {
            r.rank = i + 1;
        }
        table.extend(group);
    }
    table
}

fn write_serialized<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// External scores: `row_index,score`, one row per dataset row.
fn read_external(path: &Path) -> anyhow::Result<Vec<f64>> {
    read_scores(path, "score")
}

fn run_detector(
    detector: &Detector,
    split: &Split,
    settings: &AnoRandSettings,
    args: &BenchArgs,
    external: &[(PathBuf, Vec<f64>)],
    seed: u64,
) -> anyhow::Result<RunOutcome> {
    Ok(match detector {
        Detector::AnoRand => harness::run_anorand(split, settings, seed)?,
        Detector::Knn => harness::run_knn(split, args.knn_k)?,
        Detector::Pca => harness::run_pca(split, args.pca_components)?,
        Detector::External(path) => {
            let scores = &external.iter().find(|(p, _)| p == path).expect("loaded up front").1;
            harness::run_external(split, scores)?
        }
    })
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<(Vec<BenchRow>, Vec<RankRow>)> {
    let mut m = ManifestBuilder::start("bench", args, Some(args.seed))?;
    let settings = args.model.settings()?;
    ensure!(args.repeats >= 1, "--repeats must be at least 1");
    ensure!(!args.detectors.is_empty(), "--detectors is empty");
    ensure!(
        args.test_fraction > 0.0 && args.test_fraction < 1.0,
        "--test-fraction must lie in (0, 1), got {}",
        args.test_fraction
    );
    let mut external = Vec::new();
    for d in &args.detectors {
        if let Detector::External(path) = d {
            ensure!(
                args.datasets.len() == 1,
                "external detectors need exactly one --data file for their scores to align with"
            );
            let scores = read_external(path).with_context(|| format!("external scores {}", path.display()))?;
            external.push((path.clone(), scores));
            m.input(path);
        }
    }

    let synthetic = if args.datasets.is_empty() {
        let config = args.synthetic.config(args.seed)?;
        synthetic_assumptions(&mut m, config.d, config.class_sep);
        Some(config)
    } else {
        None
    };
    let mut loaded = Vec::new();
    for path in &args.datasets {
        let data: Dataset = load_csv(path, Some(&args.label_column))
            .with_context(|| format!("loading labelled dataset {}", path.display()))?;
        for (p, scores) in &external {
            ensure!(
                scores.len() == data.n_rows(),
                "{} has {} scores for {} dataset rows",
                p.display(),
                scores.len(),
                data.n_rows()
            );
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        loaded.push((name, data));
        m.input(path);
    }

    let mut rows = Vec::new();
    for seed in sweep::seeds(args.seed, args.repeats) {
        let splits: Vec<(String, Split)> = match &synthetic {
            Some(config) => vec![(
                "synthetic".to_string(),
                harness::synthetic_split(config, args.test_fraction, seed)?,
            )],
            None => loaded
                .iter()
                .map(|(name, data)| Ok((name.clone(), Split::new(data, args.test_fraction, seed)?)))
                .collect::<anyhow::Result<_>>()?,
        };
        for (name, split) in &splits {
            for detector in &args.detectors {
                let o = run_detector(detector, split, &settings, args, &external, seed)
                    .with_context(|| format!("{} on {name}, seed {seed}", detector.name()))?;
                rows.push(BenchRow {
                    dataset: name.clone(),
                    detector: detector.name(),
                    seed,
                    roc_auc: o.roc_auc,
                    pr_auc: o.pr_auc,
                    fit_seconds: o.fit_seconds,
                    score_seconds: o.score_seconds,
                    runtime_seconds: o.runtime_seconds(),
                });
            }
        }
    }
    rows.sort_by(|a, b| (&a.dataset, a.seed).cmp(&(&b.dataset, b.seed)));
    let ranks = rank_table(&rows);
    let ranks_out = args
        .ranks_out
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".ranks.csv"));
    write_serialized(&args.out, &rows)?;
    write_serialized(&ranks_out, &ranks)?;
    m.output(&args.out)
        .output(&ranks_out)
        .extra("schema_version", BENCH_SCHEMA_VERSION)
        .extra("seeds", sweep::seeds(args.seed, args.repeats))
        .extra("detectors", args.detectors.iter().map(Detector::name).collect::<Vec<_>>());
    m.finish()?;
    Ok((rows, ranks))
}
