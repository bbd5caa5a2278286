use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};
use crate::ingest::Gender;

use super::{Channel, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub participant_id: String,
    pub label: Gender,
    pub values: Vec<f64>,
}

/// Participants x features design matrix of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub channel: Channel,
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(channel: Channel, names: Vec<String>, rows: Vec<FeatureRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &rows {
            if r.values.len() != names.len() {
                return Err(GazeError::InvalidConfig(format!(
                    "row {} has {} values for {} features",
                    r.participant_id,
                    r.values.len(),
                    names.len()
                )));
            }
            if !seen.insert(r.participant_id.as_str()) {
                return Err(GazeError::InvalidConfig(format!(
                    "participant {} appears twice",
                    r.participant_id
                )));
            }
        }
        Ok(FeatureTable { channel, names, rows })
    }

    /// Table over a channel's full catalog.
    pub fn from_vectors<'a>(
        channel: Channel,
        vectors: impl IntoIterator<Item = (&'a str, Gender, &'a FeatureVector)>,
    ) -> Result<Self> {
        let rows = vectors
            .into_iter()
            .map(|(id, label, fv)| {
                if fv.channel != channel {
                    return Err(GazeError::InvalidConfig(format!(
                        "{} vector in {} table",
                        fv.channel.name(),
                        channel.name()
                    )));
                }
                Ok(FeatureRow {
                    participant_id: id.to_string(),
                    label,
                    values: fv.values.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(channel, channel.catalog().to_vec(), rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    pub fn labels(&self) -> Vec<Gender> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.participant_id.as_str())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Projection onto the named columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<FeatureTable> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| GazeError::InvalidConfig(format!("unknown {} feature {n}", self.channel.name())))
            })
            .collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureRow {
                participant_id: r.participant_id.clone(),
                label: r.label,
                values: idx.iter().map(|&i| r.values[i]).collect(),
            })
            .collect();
        Ok(FeatureTable {
            channel: self.channel,
            names: names.to_vec(),
            rows,
        })
    }

    /// Rows whose participant id is in `ids`, in the order of `ids`.
    pub fn subset(&self, ids: &[&str]) -> Result<FeatureTable> {
        let rows = ids
            .iter()
            .map(|id| {
                self.rows
                    .iter()
                    .find(|r| r.participant_id == *id)
                    .cloned()
                    .ok_or_else(|| GazeError::InvalidConfig(format!("participant {id} not in table")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureTable {
            channel: self.channel,
            names: self.names.clone(),
            rows,
        })
    }

    /// CSV with header `participant_id,label,<features>` and 12 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
        let mut header = vec!["participant_id".to_string(), "label".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(ser)?;
        for r in &self.rows {
            let mut rec = vec![r.participant_id.clone(), r.label.code().to_string()];
            rec.extend(r.values.iter().map(|v| format_sig12(*v)));
            w.write_record(&rec).map_err(ser)?;
        }
        w.flush().map_err(|e| GazeError::Serialization(e.to_string()))
    }
}

/// Scientific notation with 12 significant digits, e.g. `1.23456789012e3`.
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}
