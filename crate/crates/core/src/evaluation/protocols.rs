use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GazeError, Result};

use super::experiment::{run_experiment, EvalReport, ExperimentConfig, FeatureSet, SubsetSpec};
use super::prepare::PreparedCohort;

/// One report per k, all with the same seed so run `i` uses the same split
/// for every k.
pub fn sweep_feature_counts(
    cohort: &PreparedCohort,
    ks: &[usize],
    config: &ExperimentConfig,
) -> Result<Vec<(usize, EvalReport)>> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let cfg = ExperimentConfig {
                k_features: k,
                ..config.clone()
            };
            Ok((k, run_experiment(cohort, &cfg)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotaProtocol {
    pub subset: SubsetSpec,
    pub n_runs: usize,
}

impl Default for SotaProtocol {
    fn default() -> Self {
        SotaProtocol {
            subset: SubsetSpec { female: 20, male: 25 },
            n_runs: 5,
        }
    }
}

/// Pipeline features and the six comparison features on the same
/// participant subset and splits. Compare the reports by `sd`.
pub fn sota_protocol(
    cohort: &PreparedCohort,
    protocol: &SotaProtocol,
    config: &ExperimentConfig,
) -> Result<(EvalReport, EvalReport)> {
    let base = ExperimentConfig {
        n_runs: protocol.n_runs,
        subset: Some(protocol.subset),
        ..config.clone()
    };
    let pipeline = run_experiment(
        cohort,
        &ExperimentConfig {
            feature_set: FeatureSet::Pipeline,
            ..base.clone()
        },
    )?;
    let sota = run_experiment(
        cohort,
        &ExperimentConfig {
            feature_set: FeatureSet::Sota,
            ..base
        },
    )?;
    Ok((pipeline, sota))
}

/// Across-run SD of accuracy for balanced random subsets of each size.
pub fn sd_vs_users(cohort: &PreparedCohort, sizes: &[usize], config: &ExperimentConfig) -> Result<Vec<(usize, f64)>> {
    if sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(GazeError::InvalidConfig("sizes must be ascending".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let cfg = ExperimentConfig {
                subset: Some(SubsetSpec::balanced(n)?),
                ..config.clone()
            };
            Ok((n, run_experiment(cohort, &cfg)?.sd))
        })
        .collect()
}

/// Plot data as `x,y` rows.
pub fn write_xy_csv<W: Write>(writer: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
    w.write_record(["x", "y"]).map_err(ser)?;
    for (x, y) in points {
        w.write_record([x.to_string(), y.to_string()]).map_err(ser)?;
    }
    w.flush().map_err(|e| GazeError::Serialization(e.to_string()))
}
