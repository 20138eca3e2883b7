//! `evaluate`: score trained models on the run's held-out files and write
//! report JSONs plus plot-data CSVs.
//!
//! Reports are byte-stable across reruns: wall-clock timing summaries go
//! to separate `*_timing.json` files instead of the reports themselves.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use linkfault::dataset::{Dataset, LabelSpace};
use linkfault::learners::ModelEnvelope;
use linkfault::metrics::{
    fault_detection_accuracy, micro_precision_recall_f1, precision_recall_f1, r2_score,
    summarize_timings, ConfusionMatrix, EvaluationReport, Scores,
};
use linkfault::pipeline::{FaultType, Pipeline};
use linkfault::topology::FaultScenario;

use crate::config::ExperimentConfig;
use crate::manifest::{eval_path, model_path, RunManifest, MIXED_TEST, STAGE1_TEST, STAGE2_TEST};

use super::train::{regression_pairs, Algo};
use super::write_file;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Stage-1 classifier on the held-out disconnection set.
    Stage1,
    /// Stage-2 delay regressor on the held-out disconnection set.
    Regressor,
    /// Stage-1-alone vs the full pipeline on the mixed set.
    Pipeline,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Stage-1 model family to load.
    #[arg(long, value_enum, default_value = "rf")]
    pub algo: Algo,
    /// Stage-3 model family to load (pipeline mode).
    #[arg(long, value_enum, default_value = "rf")]
    pub stage3_algo: Algo,
    /// Comma-separated delay-error thresholds; emits a sweep curve CSV
    /// (pipeline mode only).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub sweep_threshold: Vec<f64>,
}

pub fn run(config: &ExperimentConfig, args: &EvaluateArgs) -> Result<()> {
    match args.mode {
        Mode::Stage1 => evaluate_stage1(config, args.algo),
        Mode::Regressor => evaluate_regressor(config),
        Mode::Pipeline => evaluate_pipeline(config, args),
    }
}

fn evaluate_stage1(config: &ExperimentConfig, algo: Algo) -> Result<()> {
    let run_dir = &config.output.dir;
    let manifest = RunManifest::load(run_dir)?;
    let test = Dataset::read_csv(
        &run_dir.join(STAGE1_TEST),
        manifest.stage1_classes.clone(),
        manifest.topology_fingerprint.clone(),
    )
    .with_context(|| format!("cannot load {STAGE1_TEST}"))?;

    let stem = format!("stage1_{}", algo.stem());
    let envelope = ModelEnvelope::load(
        &model_path(run_dir, &stem),
        Some(&manifest.topology_fingerprint),
    )?;

    let (predictions, times_us) = predict_rows_timed(&envelope, &test)?;
    let class_count = test.label_space.len();
    let cm = ConfusionMatrix::from_pairs(
        class_count,
        test.labels.iter().copied().zip(predictions.iter().copied()),
    );
    let scores = precision_recall_f1(&cm);
    let micro = micro_precision_recall_f1(&cm);
    let detection = detection_accuracy(&test.label_space, &test.labels, &predictions)?;

    let report = EvaluationReport {
        subject: stem.clone(),
        class_count,
        rows: test.row_count(),
        scores: scores.clone(),
        micro: Some(micro),
        fault_detection_accuracy: Some(detection),
        r2: None,
        timing: None,
    };
    write_report(run_dir, &report)?;
    write_file(
        &eval_path(run_dir, &format!("{stem}_timing.json")),
        &to_pretty_json(&summarize_timings(&times_us)),
    )?;
    write_per_class_csv(run_dir, &stem, &test.label_space, &scores)?;
    write_file(
        &eval_path(run_dir, &format!("{stem}_detection.csv")),
        &format!("subject,detection_accuracy\n{stem},{detection:.6}\n"),
    )?;
    eprintln!(
        "{stem}: macro-F1 = {:.4}, detection accuracy = {detection:.4} on {} rows",
        scores.macro_f1,
        test.row_count()
    );
    Ok(())
}

fn evaluate_regressor(config: &ExperimentConfig) -> Result<()> {
    let run_dir = &config.output.dir;
    let manifest = RunManifest::load(run_dir)?;
    let test = Dataset::read_csv(
        &run_dir.join(STAGE2_TEST),
        manifest.stage2_classes.clone(),
        manifest.topology_fingerprint.clone(),
    )
    .with_context(|| format!("cannot load {STAGE2_TEST}"))?;

    let stem = "stage2_regressor";
    let envelope = ModelEnvelope::load(
        &model_path(run_dir, stem),
        Some(&manifest.topology_fingerprint),
    )?;
    let topology = manifest.topology()?;
    let (inputs, targets) = regression_pairs(&test, topology.node_count())?;

    let start = Instant::now();
    let predicted = envelope.predict_values(&inputs)?;
    let elapsed_us = start.elapsed().as_secs_f64() * 1e6;

    // One pooled score over every (row, pair) delay prediction.
    let r2 = r2_score(&predicted.data, &targets.data)?;

    #[derive(serde::Serialize)]
    struct RegressorReport<'a> {
        subject: &'a str,
        rows: usize,
        outputs: usize,
        r2: f64,
    }
    write_file(
        &eval_path(run_dir, &format!("{stem}_report.json")),
        &to_pretty_json(&RegressorReport {
            subject: stem,
            rows: inputs.rows,
            outputs: targets.cols,
            r2,
        }),
    )?;
    write_file(
        &eval_path(run_dir, &format!("{stem}_timing.json")),
        &to_pretty_json(&serde_json::json!({
            "batch_time_us": elapsed_us,
            "per_row_us": elapsed_us / inputs.rows.max(1) as f64,
        })),
    )?;
    eprintln!("{stem}: held-out R² = {r2:.4} on {} rows", inputs.rows);
    Ok(())
}

fn evaluate_pipeline(config: &ExperimentConfig, args: &EvaluateArgs) -> Result<()> {
    let run_dir = &config.output.dir;
    let manifest = RunManifest::load(run_dir)?;
    let mixed = Dataset::read_csv(
        &run_dir.join(MIXED_TEST),
        manifest.mixed_classes.clone(),
        manifest.topology_fingerprint.clone(),
    )
    .with_context(|| format!("cannot load {MIXED_TEST}"))?;

    let stage1_stem = format!("stage1_{}", args.algo.stem());
    let stage1 = ModelEnvelope::load(
        &model_path(run_dir, &stage1_stem),
        Some(&manifest.topology_fingerprint),
    )?;
    let regressor = ModelEnvelope::load(
        &model_path(run_dir, "stage2_regressor"),
        Some(&manifest.topology_fingerprint),
    )?;
    let stage3_file = model_path(run_dir, &format!("stage3_{}", args.stage3_algo.stem()));
    let stage3 = if stage3_file.exists() {
        Some(ModelEnvelope::load(&stage3_file, Some(&manifest.topology_fingerprint))?)
    } else {
        eprintln!(
            "note: {} not found; reconnections will collapse to disconnection-only",
            stage3_file.display()
        );
        None
    };

    let threshold = config.pipeline.delay_error_threshold;
    let pipeline = Pipeline::new(stage1.clone(), regressor.clone(), stage3.clone(), threshold)?;

    // Stage 1 alone, mapped into the mixed label space. It has no
    // reconnection classes to predict, which is exactly the degradation
    // the pipeline exists to repair.
    let stage1_predictions = stage1.predict_classes(&mixed.features)?;
    let stage1_mapped: Vec<usize> = stage1_predictions
        .iter()
        .map(|&c| {
            let scenario = manifest.stage1_classes.class(c);
            mixed.label_space.index_of(scenario).expect("stage-1 classes are a subset of mixed")
        })
        .collect();

    let diagnoses: Vec<_> = (0..mixed.row_count())
        .map(|i| pipeline.diagnose(mixed.features.row(i)))
        .collect::<Result<_, _>>()?;
    let pipeline_mapped: Vec<usize> = diagnoses
        .iter()
        .map(|d| diagnosis_class(&mixed.label_space, d))
        .collect::<Result<_>>()?;
    let times_us: Vec<f64> = diagnoses.iter().map(|d| d.inference_time_us).collect();

    let class_count = mixed.label_space.len();
    let mut rows = Vec::new();
    for (subject, predictions) in [
        (format!("{stage1_stem}_mixed"), &stage1_mapped),
        ("pipeline_mixed".to_string(), &pipeline_mapped),
    ] {
        let cm = ConfusionMatrix::from_pairs(
            class_count,
            mixed.labels.iter().copied().zip(predictions.iter().copied()),
        );
        let scores = precision_recall_f1(&cm);
        let detection = detection_accuracy(&mixed.label_space, &mixed.labels, predictions)?;
        let report = EvaluationReport {
            subject: subject.clone(),
            class_count,
            rows: mixed.row_count(),
            scores: scores.clone(),
            micro: Some(micro_precision_recall_f1(&cm)),
            fault_detection_accuracy: Some(detection),
            r2: None,
            timing: None,
        };
        write_report(run_dir, &report)?;
        eprintln!("{subject}: macro-F1 = {:.4} on {} rows", scores.macro_f1, mixed.row_count());
        rows.push((subject, scores));
    }
    write_file(
        &eval_path(run_dir, "pipeline_vs_stage1.csv"),
        &comparison_csv(&rows),
    )?;
    write_file(
        &eval_path(run_dir, "pipeline_mixed_timing.json"),
        &to_pretty_json(&summarize_timings(&times_us)),
    )?;

    if !args.sweep_threshold.is_empty() {
        let csv = threshold_sweep(&mixed, &stage1, &regressor, &stage3, &args.sweep_threshold)?;
        write_file(&eval_path(run_dir, "threshold_sweep.csv"), &csv)?;
        eprintln!("threshold sweep over {:?} written", args.sweep_threshold);
    }
    Ok(())
}

/// Per-threshold fault-type identification quality on the mixed set.
///
/// Truth and prediction collapse to three classes (no fault, disconnection
/// only, reconnection); the curve reports the macro-F1 of that 3-class
/// problem next to the full per-scenario macro-F1.
fn threshold_sweep(
    mixed: &Dataset,
    stage1: &ModelEnvelope,
    regressor: &ModelEnvelope,
    stage3: &Option<ModelEnvelope>,
    thresholds: &[f64],
) -> Result<String> {
    let mut csv = String::from("threshold,type_macro_f1,scenario_macro_f1\n");
    for &threshold in thresholds {
        let pipeline =
            Pipeline::new(stage1.clone(), regressor.clone(), stage3.clone(), threshold)?;
        let mut type_pairs = Vec::with_capacity(mixed.row_count());
        let mut scenario_pairs = Vec::with_capacity(mixed.row_count());
        for i in 0..mixed.row_count() {
            let diagnosis = pipeline.diagnose(mixed.features.row(i))?;
            let truth = mixed.label_space.class(mixed.labels[i]);
            type_pairs.push((scenario_type(truth), diagnosis_type(&diagnosis)));
            scenario_pairs.push((mixed.labels[i], diagnosis_class(&mixed.label_space, &diagnosis)?));
        }
        let type_f1 = precision_recall_f1(&ConfusionMatrix::from_pairs(3, type_pairs)).macro_f1;
        let scenario_f1 =
            precision_recall_f1(&ConfusionMatrix::from_pairs(mixed.label_space.len(), scenario_pairs))
                .macro_f1;
        csv.push_str(&format!("{threshold},{type_f1:.6},{scenario_f1:.6}\n"));
    }
    Ok(csv)
}

fn scenario_type(scenario: &FaultScenario) -> usize {
    match scenario {
        FaultScenario::NoFault => 0,
        FaultScenario::Disconnection { .. } => 1,
        FaultScenario::Reconnection { .. } => 2,
    }
}

fn diagnosis_type(diagnosis: &linkfault::pipeline::Diagnosis) -> usize {
    match diagnosis.fault_type {
        None => 0,
        Some(FaultType::DisconnectionOnly) => 1,
        Some(FaultType::Reconnection) => 2,
    }
}

/// Maps a diagnosis back to a class of the evaluation label space.
fn diagnosis_class(
    space: &LabelSpace,
    diagnosis: &linkfault::pipeline::Diagnosis,
) -> Result<usize> {
    let scenario = match (diagnosis.fault_type, diagnosis.disconnected, diagnosis.reconnected) {
        (None, _, _) => FaultScenario::NoFault,
        (Some(FaultType::DisconnectionOnly), Some(removed), _) => {
            FaultScenario::Disconnection { removed }
        }
        (Some(FaultType::Reconnection), Some(removed), Some(added)) => {
            FaultScenario::Reconnection { removed, added }
        }
        other => bail!("inconsistent diagnosis {other:?}"),
    };
    space
        .index_of(&scenario)
        .with_context(|| format!("diagnosis {scenario} falls outside the evaluation label space"))
}

/// Fraction of truly faulty rows flagged as faulty (any fault class).
fn detection_accuracy(
    space: &LabelSpace,
    truth: &[usize],
    predictions: &[usize],
) -> Result<f64> {
    let no_fault = space.index_of(&FaultScenario::NoFault);
    let faulty: Vec<bool> = truth.iter().map(|&c| Some(c) != no_fault).collect();
    let detected: Vec<bool> = predictions.iter().map(|&c| Some(c) != no_fault).collect();
    Ok(fault_detection_accuracy(&detected, &faulty)?)
}

/// Per-row predictions with per-row wall times.
fn predict_rows_timed(
    envelope: &ModelEnvelope,
    dataset: &Dataset,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut predictions = Vec::with_capacity(dataset.row_count());
    let mut times = Vec::with_capacity(dataset.row_count());
    for i in 0..dataset.row_count() {
        let row = dataset.features.select_rows(&[i]);
        let start = Instant::now();
        let predicted = envelope.predict_classes(&row)?;
        times.push((start.elapsed().as_secs_f64() * 1e6).max(1e-3));
        predictions.push(predicted[0]);
    }
    Ok((predictions, times))
}

/// Bar-chart data: one row of macro scores per evaluated subject.
fn comparison_csv(rows: &[(String, Scores)]) -> String {
    let mut csv = String::from("subject,macro_precision,macro_recall,macro_f1,accuracy\n");
    for (subject, scores) in rows {
        csv.push_str(&format!(
            "{subject},{:.6},{:.6},{:.6},{:.6}\n",
            scores.macro_precision, scores.macro_recall, scores.macro_f1, scores.accuracy
        ));
    }
    csv
}

fn write_report(run_dir: &std::path::Path, report: &EvaluationReport) -> Result<()> {
    write_file(
        &eval_path(run_dir, &format!("{}_report.json", report.subject)),
        &to_pretty_json(report),
    )
}

fn write_per_class_csv(
    run_dir: &std::path::Path,
    stem: &str,
    space: &LabelSpace,
    scores: &Scores,
) -> Result<()> {
    let mut csv = String::from("class,label,precision,recall,f1\n");
    for (class, per_class) in scores.per_class.iter().enumerate() {
        csv.push_str(&format!(
            "{class},{},{:.6},{:.6},{:.6}\n",
            space.class(class),
            per_class.precision,
            per_class.recall,
            per_class.f1
        ));
    }
    write_file(&eval_path(run_dir, &format!("{stem}_per_class.csv")), &csv)
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}
