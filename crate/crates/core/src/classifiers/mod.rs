//! Binary classifiers over the three standardized features.
//!
//! Label 1 is CPFSK, label 0 is a linear modulation. Every trainer is a
//! deterministic function of its data, config and seed.

mod logreg;
mod mlp;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use logreg::{log_likelihood, log_likelihood_gradient, train_logreg, LogRegModel};
pub use mlp::{train_mlp, MlpModel, HIDDEN_UNITS};
pub use svm::{svm_objective, train_svm, LinearSvmModel};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const FEATURE_NAMES: [&str; 3] = ["f1", "f2", "f3"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "LR")]
    LogReg,
    #[serde(rename = "NN")]
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Svm, ClassifierKind::LogReg, ClassifierKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "SVM",
            ClassifierKind::LogReg => "LR",
            ClassifierKind::Mlp => "NN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SVM" => Ok(ClassifierKind::Svm),
            "LR" | "LOGREG" => Ok(ClassifierKind::LogReg),
            "NN" | "MLP" => Ok(ClassifierKind::Mlp),
            _ => Err(Error::InvalidArgument(format!("unknown classifier '{s}'"))),
        }
    }
}

/// Trainer settings. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub svm_c: f64,
    pub svm_max_epochs: usize,
    /// Stop once a full pass lowers the primal objective by less than this.
    pub svm_tolerance: f64,
    pub lr_max_iterations: usize,
    /// Stop once the max-norm of the log-likelihood gradient is below this.
    pub lr_gradient_tolerance: f64,
    pub nn_epochs: usize,
    pub nn_batch_size: usize,
    pub nn_learning_rate: f64,
    pub nn_validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            svm_c: 1.0,
            svm_max_epochs: 10_000,
            svm_tolerance: 1e-8,
            lr_max_iterations: 10_000,
            lr_gradient_tolerance: 1e-6,
            nn_epochs: 200,
            nn_batch_size: 32,
            nn_learning_rate: 0.1,
            nn_validation_fraction: 0.1,
        }
    }
}

/// Convergence summary returned by every trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub iterations: usize,
    pub converged: bool,
    /// Final objective (SVM primal, LR log-likelihood, NN validation loss).
    pub objective: f64,
    /// Objective after each accepted iteration/epoch.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Per-feature z-score transform fit on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Standardizer {
    pub fn fit(rows: &[[f64; 3]]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooShort { needed: 2, got: rows.len() });
        }
        let n = rows.len() as f64;
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for j in 0..3 {
            mean[j] = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let ss = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>();
            std[j] = (ss / (n - 1.0)).sqrt();
            if !(std[j] > 0.0 && std[j].is_finite()) {
                return Err(Error::ConstantFeature(FEATURE_NAMES[j]));
            }
        }
        Ok(Standardizer { mean, std })
    }

    pub fn fit_features(rows: &[FeatureVector]) -> Result<Self> {
        Self::fit(&rows.iter().map(FeatureVector::x).collect::<Vec<_>>())
    }

    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|j| (x[j] - self.mean[j]) / self.std[j])
    }

    pub fn apply_all(&self, rows: &[[f64; 3]]) -> Vec<[f64; 3]> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// A trained classifier, without its standardizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum TrainedModel {
    Svm(LinearSvmModel),
    LogReg(LogRegModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::LogReg(_) => ClassifierKind::LogReg,
            TrainedModel::Mlp(_) => ClassifierKind::Mlp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    /// SVM: `w.x + b`. LR and NN: sigmoid output.
    pub score: f64,
}

/// Classify one standardized input. Ties at the threshold go to label 0.
pub fn predict(model: &TrainedModel, x: &[f64; 3]) -> Result<Prediction> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("classifier input"));
    }
    Ok(match model {
        TrainedModel::Svm(m) => {
            let score = m.decision(x);
            Prediction { label: u8::from(score > 0.0), score }
        }
        TrainedModel::LogReg(m) => {
            let z = m.logit(x);
            Prediction { label: u8::from(z > 0.0), score: logreg::sigmoid(z) }
        }
        TrainedModel::Mlp(m) => {
            let z = m.logit(x);
            Prediction { label: u8::from(z > 0.0), score: logreg::sigmoid(z) }
        }
    })
}

/// Fraction of predictions equal to their labels.
pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: labels.len() });
    }
    if labels.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

pub(crate) fn check_training_set(x: &[[f64; 3]], y: &[u8]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: x.len() });
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidArgument(format!("label {bad} is not binary")));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(Error::SingleLabel);
    }
    if !x.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }
    Ok(())
}

/// Train one classifier on standardized inputs.
pub fn train(
    kind: ClassifierKind,
    x: &[[f64; 3]],
    y: &[u8],
    config: &TrainConfig,
    seed: u64,
) -> Result<(TrainedModel, TrainingReport)> {
    Ok(match kind {
        ClassifierKind::Svm => {
            let (m, r) = train_svm(x, y, config)?;
            (TrainedModel::Svm(m), r)
        }
        ClassifierKind::LogReg => {
            let (m, r) = train_logreg(x, y, config)?;
            (TrainedModel::LogReg(m), r)
        }
        ClassifierKind::Mlp => {
            let (m, r) = train_mlp(x, y, config, seed)?;
            (TrainedModel::Mlp(m), r)
        }
    })
}

/// Standardizer plus model: what the `train` command writes to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub classifier: ClassifierKind,
    pub standardizer: Standardizer,
    pub model: TrainedModel,
    pub config: TrainConfig,
    pub seed: u64,
    pub training: TrainingMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub n_train: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub snr_db: Option<f64>,
}

pub const MODEL_FORMAT: &str = "modrec-model";

impl ModelFile {
    /// Fit the standardizer on `rows`, then train.
    pub fn fit(kind: ClassifierKind, rows: &[FeatureVector], config: &TrainConfig, seed: u64) -> Result<Self> {
        let standardizer = Standardizer::fit_features(rows)?;
        let x: Vec<[f64; 3]> = rows.iter().map(|r| standardizer.apply(&r.x())).collect();
        let y: Vec<u8> = rows.iter().map(|r| r.label).collect();
        let (model, report) = train(kind, &x, &y, config, seed)?;
        let snr_db = rows.first().map(|r| r.snr_db).filter(|s| rows.iter().all(|r| r.snr_db == *s));
        Ok(ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: 1,
            classifier: kind,
            standardizer,
            model,
            config: config.clone(),
            seed,
            training: TrainingMetadata {
                n_train: rows.len(),
                iterations: report.iterations,
                converged: report.converged,
                objective: report.objective,
                snr_db,
            },
        })
    }

    pub fn predict_raw(&self, x: &[f64; 3]) -> Result<Prediction> {
        predict(&self.model, &self.standardizer.apply(x))
    }

    pub fn accuracy_on(&self, rows: &[FeatureVector]) -> Result<f64> {
        let preds = rows.iter().map(|r| self.predict_raw(&r.x()).map(|p| p.label)).collect::<Result<Vec<_>>>()?;
        let labels: Vec<u8> = rows.iter().map(|r| r.label).collect();
        accuracy(&preds, &labels)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file: format '{}'", m.format)));
        }
        if m.model.kind() != m.classifier {
            return Err(Error::Format("classifier tag does not match model".into()));
        }
        Ok(m)
    }
}
