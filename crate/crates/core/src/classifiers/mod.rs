//! Binary classifiers over feature vectors: L2 logistic regression and a
//! random forest. Both output P(female).

pub mod cv;
pub mod forest;
pub mod logreg;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::features::FeatureTable;
use crate::ingest::Gender;

pub use cv::{complement, stratified_folds};
pub use forest::{fit_forest, train_rf, GridSpec, Node, RfModel, RfParams, Tree};
pub use logreg::{train_logreg, LogRegModel};

/// Rows of named features with a label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Gender>,
}

impl Dataset {
    pub fn new(names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<Gender>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(GazeError::InvalidConfig(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(bad) = x.iter().position(|r| r.len() != names.len()) {
            return Err(GazeError::InvalidConfig(format!(
                "row {bad} has {} values for {} features",
                x[bad].len(),
                names.len()
            )));
        }
        Ok(Dataset { names, x, y })
    }

    pub fn from_table(table: &FeatureTable) -> Dataset {
        Dataset {
            names: table.names.clone(),
            x: table.rows.iter().map(|r| r.values.clone()).collect(),
            y: table.labels(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.y.iter().map(|g| g.target()).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Both classes present, at least one feature and all values finite.
    pub fn check_trainable(&self) -> Result<()> {
        if self.n_features() == 0 {
            return Err(GazeError::InsufficientData("no features to train on".into()));
        }
        let female = self.y.iter().filter(|&&g| g == Gender::Female).count();
        if female == 0 || female == self.len() {
            return Err(GazeError::InsufficientData(format!(
                "training needs both classes, got {female} female of {}",
                self.len()
            )));
        }
        for (i, row) in self.x.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(GazeError::NonFinite(format!("row {i}, feature {}", self.names[j])));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LogReg,
    RandomForest,
}

impl std::str::FromStr for ClassifierKind {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" | "log_reg" | "lr" => Ok(ClassifierKind::LogReg),
            "rf" | "random_forest" | "forest" => Ok(ClassifierKind::RandomForest),
            _ => Err(GazeError::InvalidConfig(format!("unknown classifier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub l2: f64,
    pub grid: GridSpec,
    pub cv_folds: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::RandomForest,
            l2: 1.0,
            grid: GridSpec::default(),
            cv_folds: 5,
        }
    }
}

impl ClassifierConfig {
    pub fn logreg(l2: f64) -> Self {
        ClassifierConfig {
            kind: ClassifierKind::LogReg,
            l2,
            ..ClassifierConfig::default()
        }
    }

    pub fn forest(grid: GridSpec) -> Self {
        ClassifierConfig {
            kind: ClassifierKind::RandomForest,
            grid,
            ..ClassifierConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    LogReg(LogRegModel),
    RandomForest(RfModel),
}

impl TrainedModel {
    pub fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::LogReg(m) => &m.feature_names,
            TrainedModel::RandomForest(m) => &m.feature_names,
        }
    }

    /// P(female) for a row in training column order.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::LogReg(m) => m.predict_proba(x),
            TrainedModel::RandomForest(m) => m.predict_proba(x),
        }
    }

    /// Like `predict_proba` but checks that the columns match the names the
    /// model was trained on.
    pub fn predict_named(&self, names: &[String], x: &[f64]) -> Result<f64> {
        let own = self.feature_names();
        if names != own {
            return Err(GazeError::SchemaMismatch {
                expected: own.to_vec(),
                found: names.to_vec(),
            });
        }
        if x.len() != own.len() {
            return Err(GazeError::InvalidConfig(format!(
                "{} values for {} features",
                x.len(),
                own.len()
            )));
        }
        Ok(self.predict_proba(x))
    }

    pub fn predict(&self, x: &[f64]) -> Gender {
        Gender::from_probability(self.predict_proba(x))
    }
}

pub fn train(data: &Dataset, config: &ClassifierConfig, seed: u64) -> Result<TrainedModel> {
    match config.kind {
        ClassifierKind::LogReg => Ok(TrainedModel::LogReg(train_logreg(data, config.l2)?)),
        ClassifierKind::RandomForest => Ok(TrainedModel::RandomForest(train_rf(
            data,
            &config.grid,
            config.cv_folds,
            seed,
        )?)),
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

pub fn write_model<W: Write>(writer: W, model: &TrainedModel) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_writer_pretty(writer, &file).map_err(|e| GazeError::Serialization(e.to_string()))
}

pub fn read_model<R: Read>(reader: R) -> Result<TrainedModel> {
    let file: ModelFile = serde_json::from_reader(reader).map_err(|e| GazeError::Serialization(e.to_string()))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(GazeError::Serialization(format!(
            "unsupported model format version {}",
            file.format_version
        )));
    }
    Ok(file.model)
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| GazeError::io(path, e))?;
    write_model(std::io::BufWriter::new(f), model)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let f = std::fs::File::open(path).map_err(|e| GazeError::io(path, e))?;
    read_model(std::io::BufReader::new(f))
}
