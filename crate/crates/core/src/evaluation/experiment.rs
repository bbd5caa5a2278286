use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{train, ClassifierConfig, ClassifierKind, Dataset, GridSpec, TrainedModel};
use crate::ensemble::{fused_accuracy, optimize_weights, optimize_weights_on, EnsembleWeights, NmConfig, TuneOn};
use crate::error::{GazeError, Result};
use crate::features::{anova_rank, select_top_k, Channel, FeatureTable};
use crate::ingest::Gender;
use crate::rng::{derive_seed, stream_rng};

use super::prepare::{PreparedCohort, PreparedParticipant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightMode {
    Equal,
    Optimized,
    Manual { weights: EnsembleWeights },
}

/// Rows the ANOVA ranking reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOn {
    Train,
    /// Whole cohort including the test split; leaks test labels.
    All,
}

impl std::str::FromStr for RankOn {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(RankOn::Train),
            "all" => Ok(RankOn::All),
            _ => Err(GazeError::InvalidConfig(format!("unknown ranking scope {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Fixation and saccade classifiers on the top-k ranked features, fused.
    Pipeline,
    /// One classifier on the six comparison features.
    Sota,
}

/// Participants drawn per class before splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub female: usize,
    pub male: usize,
}

impl SubsetSpec {
    pub fn balanced(total: usize) -> Result<Self> {
        if total < 2 || total % 2 != 0 {
            return Err(GazeError::InvalidConfig(format!(
                "subset size must be even and >= 2, got {total}"
            )));
        }
        Ok(SubsetSpec {
            female: total / 2,
            male: total / 2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_runs: usize,
    pub split_ratio: f64,
    pub k_features: usize,
    pub classifier: ClassifierConfig,
    pub weight_mode: WeightMode,
    pub tune_on: TuneOn,
    pub rank_on: RankOn,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub subset: Option<SubsetSpec>,
    pub nelder_mead: NmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_runs: 50,
            split_ratio: 0.8,
            k_features: 1,
            classifier: ClassifierConfig::logreg(1.0),
            weight_mode: WeightMode::Equal,
            tune_on: TuneOn::Train,
            rank_on: RankOn::Train,
            feature_set: FeatureSet::Pipeline,
            seed: 0,
            subset: None,
            nelder_mead: NmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(GazeError::InvalidConfig("n_runs must be at least 1".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(GazeError::InvalidConfig(format!(
                "split ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.k_features == 0 {
            return Err(GazeError::InvalidConfig("k must be at least 1".into()));
        }
        if self.weight_mode == WeightMode::Optimized {
            self.nelder_mead.validate()?;
        }
        Ok(())
    }

    /// True when some step reads test-split labels.
    pub fn is_leaky(&self) -> bool {
        let ranks_all = self.rank_on == RankOn::All && self.feature_set == FeatureSet::Pipeline;
        let tunes_test = self.weight_mode == WeightMode::Optimized && self.tune_on == TuneOn::TestLeaky;
        ranks_all || tunes_test
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub train_female: usize,
    pub train_male: usize,
    pub test_female: usize,
    pub test_male: usize,
    pub features: Vec<String>,
    pub weights: Option<EnsembleWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub leaky: bool,
    pub vt: f64,
    pub n_eligible: usize,
    pub n_excluded: usize,
    pub split_rule: String,
    pub runs: Vec<RunRecord>,
    pub mean_accuracy: f64,
    pub sd: f64,
    pub sem: f64,
    /// Mean of per-run weights when they were optimized.
    pub mean_weights: Option<EnsembleWeights>,
}

impl EvalReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.accuracy).collect()
    }

    /// mean ± 2·SEM.
    pub fn interval(&self) -> (f64, f64) {
        (self.mean_accuracy - 2.0 * self.sem, self.mean_accuracy + 2.0 * self.sem)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| GazeError::Serialization(e.to_string()))
    }

    /// `run,seed,accuracy,w_fix,w_sac` per run.
    pub fn write_runs_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
        w.write_record(["run", "seed", "accuracy", "w_fix", "w_sac"])
            .map_err(ser)?;
        for r in &self.runs {
            let (wf, ws) = r.weights.map_or((String::new(), String::new()), |w| {
                (w.w_fix.to_string(), w.w_sac.to_string())
            });
            w.write_record([r.run.to_string(), r.seed.to_string(), r.accuracy.to_string(), wf, ws])
                .map_err(ser)?;
        }
        w.flush().map_err(|e| GazeError::Serialization(e.to_string()))
    }
}

/// Mean, sample SD and SEM of a list of accuracies. The SD is computed as
/// `sem * sqrt(n)` so that identity holds exactly in floating point.
/// A single value has SD and SEM 0.
pub fn sem(values: &[f64]) -> Result<(f64, f64, f64)> {
    let n = values.len();
    if n == 0 {
        return Err(GazeError::InsufficientData("no values to summarize".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok((mean, 0.0, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let root_n = (n as f64).sqrt();
    let sem = (var / n as f64).sqrt();
    Ok((mean, sem * root_n, sem))
}

const SUBSET_STREAM: u64 = 0x7375_6273;

fn by_class<'a>(ps: &[&'a PreparedParticipant]) -> (Vec<&'a PreparedParticipant>, Vec<&'a PreparedParticipant>) {
    ps.iter().partition(|p| p.gender == Gender::Female)
}

/// Train counts per class: floor(ratio · m), remainder goes to test.
pub fn balanced_split_sizes(per_class: usize, ratio: f64) -> (usize, usize) {
    let train = (ratio * per_class as f64).floor() as usize;
    (train, per_class - train)
}

struct Split<'a> {
    train: Vec<&'a PreparedParticipant>,
    test: Vec<&'a PreparedParticipant>,
}

fn draw_split<'a, R: Rng>(
    female: &[&'a PreparedParticipant],
    male: &[&'a PreparedParticipant],
    ratio: f64,
    rng: &mut R,
) -> Result<Split<'a>> {
    let m = female.len().min(male.len());
    let (n_train, n_test) = balanced_split_sizes(m, ratio);
    if n_train < 2 || n_test < 1 {
        return Err(GazeError::InsufficientData(format!(
            "{m} participants per class cannot form a balanced split with ratio {ratio}"
        )));
    }
    let mut f = female.to_vec();
    let mut ma = male.to_vec();
    f.shuffle(rng);
    ma.shuffle(rng);
    let mut train: Vec<_> = f[..n_train].iter().chain(&ma[..n_train]).copied().collect();
    let mut test: Vec<_> = f[n_train..m].iter().chain(&ma[n_train..m]).copied().collect();
    // keep cohort order inside each split so results do not depend on shuffle layout
    train.sort_by_key(|p| p.id.as_str());
    test.sort_by_key(|p| p.id.as_str());
    Ok(Split { train, test })
}

fn table_of(channel: Channel, ps: &[&PreparedParticipant]) -> Result<FeatureTable> {
    FeatureTable::from_vectors(
        channel,
        ps.iter().map(|p| {
            (
                p.id.as_str(),
                p.gender,
                p.vector(channel).expect("eligible participant"),
            )
        }),
    )
}

/// Panics if a test participant reached a training-only code path.
fn assert_no_leak(train_ids: &[&str], test: &[&PreparedParticipant]) {
    let train: HashSet<&str> = train_ids.iter().copied().collect();
    for p in test {
        assert!(
            !train.contains(p.id.as_str()),
            "test participant {} reached training",
            p.id
        );
    }
}

fn dataset(table: &FeatureTable) -> Dataset {
    Dataset::from_table(table)
}

/// Config for refits inside weight tuning: the forest keeps the grid point
/// already chosen rather than searching again.
fn refit_config(base: &ClassifierConfig, model: &TrainedModel) -> ClassifierConfig {
    match model {
        TrainedModel::RandomForest(m) => ClassifierConfig {
            grid: GridSpec::single(m.params),
            ..base.clone()
        },
        TrainedModel::LogReg(_) => base.clone(),
    }
}

fn accuracy(model: &TrainedModel, data: &Dataset) -> f64 {
    let hits = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(x, y)| model.predict(x) == **y)
        .count();
    hits as f64 / data.len() as f64
}

fn run_once(
    eligible: &[&PreparedParticipant],
    female: &[&PreparedParticipant],
    male: &[&PreparedParticipant],
    config: &ExperimentConfig,
    run: usize,
) -> Result<RunRecord> {
    let run_seed = derive_seed(config.seed, run as u64);
    let mut rng = stream_rng(run_seed, 0);
    let split = draw_split(female, male, config.split_ratio, &mut rng)?;
    let count = |ps: &[&PreparedParticipant], g: Gender| ps.iter().filter(|p| p.gender == g).count();
    let mut record = RunRecord {
        run,
        seed: run_seed,
        accuracy: 0.0,
        train_female: count(&split.train, Gender::Female),
        train_male: count(&split.train, Gender::Male),
        test_female: count(&split.test, Gender::Female),
        test_male: count(&split.test, Gender::Male),
        features: Vec::new(),
        weights: None,
    };

    if config.feature_set == FeatureSet::Sota {
        let train_t = table_of(Channel::Sota, &split.train)?;
        assert_no_leak(&train_t.ids().collect::<Vec<_>>(), &split.test);
        let model = train(&dataset(&train_t), &config.classifier, derive_seed(run_seed, 1))?;
        record.accuracy = accuracy(&model, &dataset(&table_of(Channel::Sota, &split.test)?));
        record.features = train_t.names.clone();
        return Ok(record);
    }

    let mut selected = Vec::new();
    let mut tables = Vec::new();
    for channel in [Channel::Fixation, Channel::Saccade] {
        let train_t = table_of(channel, &split.train)?;
        let ranking = match config.rank_on {
            RankOn::Train => {
                assert_no_leak(&train_t.ids().collect::<Vec<_>>(), &split.test);
                anova_rank(&train_t)?
            }
            RankOn::All => anova_rank(&table_of(channel, eligible)?)?,
        };
        let names = select_top_k(&ranking, config.k_features)?;
        let train_d = dataset(&train_t.select(&names)?);
        let test_d = dataset(&table_of(channel, &split.test)?.select(&names)?);
        selected.extend(names.iter().map(|n| format!("{}:{n}", channel.name())));
        tables.push((train_d, test_d));
    }
    let [(fix_train, fix_test), (sac_train, sac_test)]: [(Dataset, Dataset); 2] =
        tables.try_into().expect("two channels");

    let fix_model = train(&fix_train, &config.classifier, derive_seed(run_seed, 1))?;
    let sac_model = train(&sac_train, &config.classifier, derive_seed(run_seed, 2))?;
    let p_fix: Vec<f64> = fix_test.x.iter().map(|x| fix_model.predict_proba(x)).collect();
    let p_sac: Vec<f64> = sac_test.x.iter().map(|x| sac_model.predict_proba(x)).collect();

    let weights = match config.weight_mode {
        WeightMode::Equal => EnsembleWeights::equal(),
        WeightMode::Manual { weights } => weights,
        WeightMode::Optimized => match config.tune_on {
            TuneOn::Train => {
                optimize_weights(
                    &fix_train,
                    &sac_train,
                    &refit_config(&config.classifier, &fix_model),
                    &refit_config(&config.classifier, &sac_model),
                    derive_seed(run_seed, 3),
                    &config.nelder_mead,
                )?
                .weights
            }
            TuneOn::TestLeaky => optimize_weights_on(&p_fix, &p_sac, &fix_test.y, &config.nelder_mead)?.weights,
        },
    };
    record.accuracy = fused_accuracy(&p_fix, &p_sac, &fix_test.y, weights);
    record.features = selected;
    if config.weight_mode != WeightMode::Equal {
        record.weights = Some(weights);
    }
    Ok(record)
}

/// Repeated class-balanced splits. Each run draws its split from a seed
/// derived from `(config.seed, run)`, so runs may execute in any order and
/// the report is identical for identical inputs.
pub fn run_experiment(cohort: &PreparedCohort, config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    if config.classifier.kind == ClassifierKind::RandomForest {
        config.classifier.grid.points()?;
    }
    let channels: &[Channel] = match config.feature_set {
        FeatureSet::Pipeline => &[Channel::Fixation, Channel::Saccade],
        FeatureSet::Sota => &[Channel::Sota],
    };
    let mut eligible = cohort.eligible(channels);
    let n_excluded = cohort.participants.len() - eligible.len();
    if n_excluded > 0 {
        log::warn!("{n_excluded} participants excluded for empty channels");
    }

    if let Some(sub) = config.subset {
        let (f, m) = by_class(&eligible);
        if sub.female > f.len() || sub.male > m.len() || sub.female == 0 || sub.male == 0 {
            return Err(GazeError::InvalidConfig(format!(
                "subset of {} female / {} male requested from {} / {} eligible",
                sub.female,
                sub.male,
                f.len(),
                m.len()
            )));
        }
        let mut rng = stream_rng(config.seed, SUBSET_STREAM);
        let (mut f, mut m) = (f, m);
        f.shuffle(&mut rng);
        m.shuffle(&mut rng);
        let mut chosen: Vec<_> = f[..sub.female].iter().chain(&m[..sub.male]).copied().collect();
        chosen.sort_by_key(|p| p.id.as_str());
        eligible = chosen;
    }

    let (female, male) = by_class(&eligible);
    if female.is_empty() || male.is_empty() {
        return Err(GazeError::InsufficientData("cohort needs both classes".into()));
    }
    let runs: Vec<RunRecord> = (0..config.n_runs)
        .into_par_iter()
        .map(|r| run_once(&eligible, &female, &male, config, r))
        .collect::<Result<_>>()?;

    let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let (mean_accuracy, sd, sem) = sem(&accs)?;
    let mean_weights = (config.weight_mode != WeightMode::Equal).then(|| {
        let w = runs.iter().filter_map(|r| r.weights).map(|w| w.w_fix).sum::<f64>() / runs.len() as f64;
        EnsembleWeights::from_fix(w)
    });
    let m = female.len().min(male.len());
    let (n_train, n_test) = balanced_split_sizes(m, config.split_ratio);
    Ok(EvalReport {
        config: config.clone(),
        leaky: config.is_leaky(),
        vt: cohort.vt,
        n_eligible: eligible.len(),
        n_excluded,
        split_rule: format!(
            "per class: {m} used, train = floor({} * {m}) = {n_train}, test = {n_test}",
            config.split_ratio
        ),
        runs,
        mean_accuracy,
        sd,
        sem,
        mean_weights,
    })
}
