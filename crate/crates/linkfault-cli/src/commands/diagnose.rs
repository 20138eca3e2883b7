//! `diagnose`: run the trained pipeline on feature vectors supplied as
//! JSON, writing one Diagnosis JSON per input to stdout.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use linkfault::learners::ModelEnvelope;
use linkfault::pipeline::Pipeline;
use serde::Deserialize;

use crate::manifest::{model_path, RunManifest};

use super::train::Algo;

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Run directory with a manifest and trained models.
    #[arg(long, value_name = "DIR")]
    pub run: PathBuf,
    /// Stage-1 model family to load.
    #[arg(long, value_enum, default_value = "rf")]
    pub algo: Algo,
    /// Stage-3 model family to load, when present.
    #[arg(long, value_enum, default_value = "rf")]
    pub stage3_algo: Algo,
    /// Delay-error threshold.
    #[arg(long, default_value_t = 0.10)]
    pub threshold: f64,
    /// One feature vector: a JSON array or `{"features": [...]}`.
    #[arg(long, value_name = "FILE", conflicts_with = "batch")]
    pub input: Option<PathBuf>,
    /// JSON-lines file, one feature vector per line; output mirrors it.
    #[arg(long, value_name = "FILE")]
    pub batch: Option<PathBuf>,
}

/// Accepts `[1.0, 2.0, ...]` or `{"features": [1.0, 2.0, ...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum FeatureInput {
    Bare(Vec<f64>),
    Tagged { features: Vec<f64> },
}

impl FeatureInput {
    fn into_features(self) -> Vec<f64> {
        match self {
            FeatureInput::Bare(features) | FeatureInput::Tagged { features } => features,
        }
    }
}

pub fn run(args: &DiagnoseArgs) -> Result<()> {
    let manifest = RunManifest::load(&args.run)?;
    let stage1 = ModelEnvelope::load(
        &model_path(&args.run, &format!("stage1_{}", args.algo.stem())),
        Some(&manifest.topology_fingerprint),
    )?;
    let regressor = ModelEnvelope::load(
        &model_path(&args.run, "stage2_regressor"),
        Some(&manifest.topology_fingerprint),
    )?;
    let stage3_file = model_path(&args.run, &format!("stage3_{}", args.stage3_algo.stem()));
    let stage3 = if stage3_file.exists() {
        Some(ModelEnvelope::load(&stage3_file, Some(&manifest.topology_fingerprint))?)
    } else {
        None
    };
    let pipeline = Pipeline::new(stage1, regressor, stage3, args.threshold)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match (&args.input, &args.batch) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let input: FeatureInput = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a feature-vector JSON", path.display()))?;
            let diagnosis = pipeline.diagnose(&input.into_features())?;
            writeln!(out, "{}", serde_json::to_string(&diagnosis)?)?;
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let input: FeatureInput = serde_json::from_str(line).with_context(|| {
                    format!("{}:{} is not a feature-vector JSON", path.display(), lineno + 1)
                })?;
                let diagnosis = pipeline.diagnose(&input.into_features())?;
                writeln!(out, "{}", serde_json::to_string(&diagnosis)?)?;
            }
        }
        (None, None) => bail!("pass --input FILE or --batch FILE"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
    Ok(())
}
