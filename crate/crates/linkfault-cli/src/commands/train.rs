//! `train`: fit one stage's model from the run's dataset files and save it
//! as a model envelope, plus a per-epoch curve CSV for iterative learners.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use linkfault::dataset::preprocess::fit_preprocessor;
use linkfault::dataset::{Dataset, LabelSpace};
use linkfault::learners::forest::train_rf;
use linkfault::learners::mlp::{train_mlp_classifier, train_mlp_regressor};
use linkfault::learners::svm::train_svm;
use linkfault::learners::{ModelEnvelope, ModelPayload, TrainLog, MODEL_FORMAT_VERSION};
use linkfault::linalg::Matrix;
use linkfault::metrics::{precision_recall_f1, ConfusionMatrix};
use linkfault::pipeline::stage2_input;

use crate::config::ExperimentConfig;
use crate::manifest::{curve_path, model_path, RunManifest, STAGE1_TRAIN, STAGE2_TRAIN, STAGE3_TRAIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    Rf,
    Mlp,
    Svm,
}

impl Algo {
    pub fn stem(self) -> &'static str {
        match self {
            Algo::Rf => "rf",
            Algo::Mlp => "mlp",
            Algo::Svm => "svm",
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// 1 = fault classifier, 2 = delay regressor, 3 = reconnection
    /// classifier.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub stage: u8,
    /// Classifier family for stages 1 and 3 (stage 2 is always the MLP
    /// regressor).
    #[arg(long, value_enum, default_value = "rf")]
    pub algo: Algo,
}

pub fn run(config: &ExperimentConfig, args: &TrainArgs) -> Result<()> {
    let run_dir = &config.output.dir;
    let manifest = RunManifest::load(run_dir)?;

    match args.stage {
        1 => train_classifier_stage(
            config,
            &manifest,
            args.algo,
            STAGE1_TRAIN,
            manifest.stage1_classes.clone(),
            &format!("stage1_{}", args.algo.stem()),
        ),
        3 => {
            let Some(classes) = manifest.stage3_classes.clone() else {
                bail!("this run has no reconnection scenarios, so stage 3 has no dataset");
            };
            train_classifier_stage(
                config,
                &manifest,
                args.algo,
                STAGE3_TRAIN,
                classes,
                &format!("stage3_{}", args.algo.stem()),
            )
        }
        2 => train_regressor_stage(config, &manifest),
        other => bail!("stage {other} out of range"),
    }
}

fn train_classifier_stage(
    config: &ExperimentConfig,
    manifest: &RunManifest,
    algo: Algo,
    train_file: &str,
    classes: LabelSpace,
    stem: &str,
) -> Result<()> {
    let run_dir = &config.output.dir;
    let train = Dataset::read_csv(
        &run_dir.join(train_file),
        classes.clone(),
        manifest.topology_fingerprint.clone(),
    )
    .with_context(|| format!("cannot load {train_file}"))?;

    let (features, preprocessor) = if config.preprocess.enabled {
        let preprocessor = fit_preprocessor(&train, &config.preprocess.params)?;
        let projected = preprocessor.transform_rows(&train.features)?;
        eprintln!(
            "{stem}: preprocessor keeps {} of {} dimensions",
            preprocessor.output_dim(),
            preprocessor.input_dim()
        );
        (projected, Some(preprocessor))
    } else {
        (train.features.clone(), None)
    };

    let (payload, log): (ModelPayload, Option<TrainLog>) = match algo {
        Algo::Rf => {
            let model = train_rf(&features, &train.labels, &config.train.rf)?;
            (ModelPayload::RandomForest(model), None)
        }
        Algo::Mlp => {
            let (model, log) = train_mlp_classifier(&features, &train.labels, &config.train.mlp)?;
            (ModelPayload::MlpClassifier(model), Some(log))
        }
        Algo::Svm => {
            let (model, log) = train_svm(&features, &train.labels, &config.train.svm)?;
            (ModelPayload::Svm(model), Some(log))
        }
    };

    let envelope = ModelEnvelope {
        format_version: MODEL_FORMAT_VERSION,
        label_space: Some(classes),
        topology_fingerprint: manifest.topology_fingerprint.clone(),
        preprocessor,
        payload,
    };

    let model_file = model_path(run_dir, stem);
    save_envelope(&envelope, &model_file)?;
    if let Some(log) = &log {
        super::write_file(&curve_path(run_dir, stem), &log.to_csv())?;
    }

    // Training-set score, logged so a memorization failure is visible
    // immediately rather than at evaluation time.
    let predictions = envelope.predict_classes(&train.features)?;
    let cm = ConfusionMatrix::from_pairs(
        envelope_classes(&envelope),
        train.labels.iter().copied().zip(predictions.iter().copied()),
    );
    let scores = precision_recall_f1(&cm);
    eprintln!(
        "{stem}: trained on {} rows, train macro-F1 = {:.4}, saved {}",
        train.row_count(),
        scores.macro_f1,
        model_file.display()
    );
    Ok(())
}

fn envelope_classes(envelope: &ModelEnvelope) -> usize {
    envelope.label_space.as_ref().map(|s| s.len()).expect("classifier envelopes carry a label space")
}

/// Stage 2: rows of the disconnection dataset become (rates ++ one-hot
/// endpoints) inputs and all-pairs-delay targets.
fn train_regressor_stage(config: &ExperimentConfig, manifest: &RunManifest) -> Result<()> {
    let run_dir = &config.output.dir;
    let train = Dataset::read_csv(
        &run_dir.join(STAGE2_TRAIN),
        manifest.stage2_classes.clone(),
        manifest.topology_fingerprint.clone(),
    )
    .with_context(|| format!("cannot load {STAGE2_TRAIN}"))?;

    let topology = manifest.topology()?;
    let (inputs, targets) = regression_pairs(&train, topology.node_count())?;

    let (model, log) = train_mlp_regressor(&inputs, &targets, &config.train.regressor)?;
    let envelope = ModelEnvelope {
        format_version: MODEL_FORMAT_VERSION,
        label_space: None,
        topology_fingerprint: manifest.topology_fingerprint.clone(),
        preprocessor: None,
        payload: ModelPayload::MlpRegressor(model),
    };

    let stem = "stage2_regressor";
    let model_file = model_path(run_dir, stem);
    save_envelope(&envelope, &model_file)?;
    super::write_file(&curve_path(run_dir, stem), &log.to_csv())?;

    match log.final_val_metric {
        Some(r2) => eprintln!(
            "{stem}: trained on {} rows, validation R² = {r2:.4}, saved {}",
            inputs.rows,
            model_file.display()
        ),
        None => eprintln!(
            "{stem}: trained on {} rows (no validation split), saved {}",
            inputs.rows,
            model_file.display()
        ),
    }
    Ok(())
}

/// Turns disconnection measurements into regression pairs: the input is
/// the measured rates followed by the removed link's endpoint one-hots,
/// the target is the measured all-pairs delay block.
pub fn regression_pairs(dataset: &Dataset, node_count: usize) -> Result<(Matrix, Matrix)> {
    let pair_count = node_count * (node_count - 1);
    anyhow::ensure!(
        dataset.feature_count() == 3 * pair_count,
        "dataset width {} does not match a {node_count}-node feature layout",
        dataset.feature_count()
    );
    let mut inputs = Matrix::zeros(dataset.row_count(), pair_count + 2 * node_count);
    let mut targets = Matrix::zeros(dataset.row_count(), pair_count);
    for i in 0..dataset.row_count() {
        let row = dataset.features.row(i);
        let scenario = dataset.label_space.class(dataset.labels[i]);
        let removed = scenario
            .removed()
            .with_context(|| format!("row {i} has no removed link; stage 2 expects disconnections"))?;
        let input = stage2_input(&row[..pair_count], removed, node_count);
        inputs.row_mut(i).copy_from_slice(&input);
        targets.row_mut(i).copy_from_slice(&row[pair_count..2 * pair_count]);
    }
    Ok((inputs, targets))
}

fn save_envelope(envelope: &ModelEnvelope, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    envelope.save(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
