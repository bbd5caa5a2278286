//! Command-line front end. `run` parses arguments, executes one subcommand
//! and maps the outcome to a process exit code.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classifiers::{save_model, train, ClassifierConfig, ClassifierKind, Dataset, GridSpec};
use crate::ensemble::{EnsembleWeights, TuneOn};
use crate::error::{GazeError, Result};
use crate::evaluation::{
    cohort_stats, prepare_cohort, run_experiment, sd_vs_users, sota_protocol, sweep_feature_counts, write_xy_csv,
    AoiSpec, EvalReport, ExperimentConfig, FeatureSet, PipelineConfig, PreparedCohort, RankOn, StatTest, SubsetSpec,
    WeightMode,
};
use crate::features::{anova_rank, select_top_k, Aggregation, Channel};
use crate::ingest::{
    generate_synthetic_cohort, load_cohort, write_cohort, ClassEffect, CohortSpec, GazeTrajectory, KinematicOffsets,
    LoadOptions, ScreenGeometry, DEFAULT_CAP_MS, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::segmentation::{segment_series, select_vt, IvtParams, DEFAULT_MFD_MS};
use crate::signal::{kinematics, smooth_trajectory, SmoothingConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gazeforge", version, about = "Gaze-trajectory gender classification toolkit")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "GAZEFORGE_SEED", default_value_t = 0)]
    seed: u64,
    /// Parent directory for per-experiment output directories.
    #[arg(long, global = true, default_value = "gazeforge-runs")]
    out_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a cohort CSV and write the concatenated, capped trajectories.
    Ingest(IngestArgs),
    /// Generate a synthetic cohort CSV.
    Synth(SynthArgs),
    /// Segment every trajectory into fixations and saccades.
    Segment(DataArgs),
    /// Extract fixation, saccade and comparison feature tables.
    Features(DataArgs),
    /// Rank features of each channel by ANOVA F-score.
    Rank(DataArgs),
    /// Train fixation and saccade classifiers on the whole cohort.
    Train(TrainArgs),
    /// Repeated balanced train/test evaluation.
    Evaluate(EvaluateArgs),
    /// Per-class descriptive measures with significance tests.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct LoadArgs {
    /// Cohort CSV (participant_id,gender,trial_id,t_ms,x_px,y_px).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    sample_rate: f64,
    /// Recording cap per participant in ms.
    #[arg(long, default_value_t = DEFAULT_CAP_MS)]
    cap_ms: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AggregateArg {
    Pooled,
    PerSegmentMean,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PipelineArgs {
    #[arg(long, default_value_t = 6)]
    sg_order: usize,
    #[arg(long, default_value_t = 15)]
    sg_frame: usize,
    /// Fixed velocity threshold in deg/s; selected from the grid when absent.
    #[arg(long)]
    vt: Option<f64>,
    /// Candidate thresholds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,15,20,25,30,35,40,45,50,55,60")]
    vt_grid: Vec<f64>,
    /// Minimum fixation duration in ms.
    #[arg(long, default_value_t = DEFAULT_MFD_MS)]
    mfd: f64,
    #[arg(long, value_enum, default_value = "pooled")]
    aggregate: AggregateArg,
    /// Screen geometry TOML; a 19 inch 1280x1024 display at 57 cm by default.
    #[arg(long)]
    geometry: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DataArgs {
    #[command(flatten)]
    load: LoadArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    load: LoadArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SynthArgs {
    /// Participants, even; half of each class.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 60_000.0)]
    duration_ms: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE_HZ)]
    sample_rate: f64,
    #[arg(long, default_value_t = 0.3)]
    noise_px: f64,
    /// Added to female fixation drift speed, deg/s.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    fix_effect: f64,
    /// Added to female saccade peak speed, deg/s.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sac_effect: f64,
    /// Added to the female probability of looking at the left eye.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    left_eye_bias: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ClassifierArgs {
    /// logreg or rf.
    #[arg(long, default_value = "logreg")]
    classifier: String,
    /// L2 penalty of logistic regression.
    #[arg(long, default_value_t = 1.0)]
    l2: f64,
    /// Forest sizes searched, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,300")]
    rf_trees: Vec<usize>,
    /// Forest depths searched; 0 means unlimited.
    #[arg(long, value_delimiter = ',', default_value = "3,5,0")]
    rf_depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    rf_min_leaf: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
}

impl ClassifierArgs {
    fn config(&self) -> Result<ClassifierConfig> {
        let kind: ClassifierKind = self.classifier.parse()?;
        let grid = GridSpec {
            n_trees: self.rf_trees.clone(),
            max_depth: self.rf_depth.iter().map(|&d| (d > 0).then_some(d)).collect(),
            min_leaf: self.rf_min_leaf.clone(),
        };
        grid.points()?;
        Ok(ClassifierConfig {
            kind,
            l2: self.l2,
            grid,
            cv_folds: self.cv_folds,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Top-ranked features per channel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 0.8)]
    split_ratio: f64,
    /// `equal`, `optimized`, or a manual pair `w_sac,w_fix`.
    #[arg(long, default_value = "equal")]
    weights: String,
    /// Shorthand for `--weights optimized`.
    #[arg(long)]
    optimize_weights: bool,
    /// train, or test-leaky to tune weights on the test split.
    #[arg(long, default_value = "train")]
    tune_on: String,
    /// train, or all to rank on the whole cohort.
    #[arg(long, default_value = "train")]
    rank_on: String,
    /// Draw this many participants (half per class) before splitting.
    #[arg(long)]
    subset: Option<usize>,
    /// Sweep these feature counts instead of a single k.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Compare against the six comparison features on a 20 F / 25 M subset.
    #[arg(long)]
    sota: bool,
    /// Accuracy SD for these cohort sizes, ascending.
    #[arg(long, value_delimiter = ',')]
    sd_curve: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// mannwhitney or ttest.
    #[arg(long, default_value = "mannwhitney")]
    stat_test: String,
    /// AOI TOML; face eye regions by default.
    #[arg(long)]
    aoi: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a, cli.seed),
        Command::Segment(a) => segment(cli, a),
        Command::Features(a) => features(cli, a),
        Command::Rank(a) => rank(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Stats(a) => stats(cli, a),
    }
}

fn load(args: &LoadArgs) -> Result<Vec<GazeTrajectory>> {
    let opts = LoadOptions {
        sample_rate_hz: args.sample_rate,
        cap_ms: args.cap_ms,
    };
    if !(opts.sample_rate_hz > 0.0 && opts.cap_ms > 0.0) {
        return Err(GazeError::InvalidConfig("sample rate and cap must be positive".into()));
    }
    load_cohort(&args.data, &opts)
}

fn pipeline_config(p: &PipelineArgs) -> Result<PipelineConfig> {
    let geometry = match &p.geometry {
        Some(path) => ScreenGeometry::load(path)?,
        None => ScreenGeometry::default(),
    };
    let smoothing = SmoothingConfig::new(p.sg_order, p.sg_frame)?;
    IvtParams::new(p.vt.unwrap_or(p.vt_grid.first().copied().unwrap_or(1.0)), p.mfd)?;
    Ok(PipelineConfig {
        smoothing,
        geometry,
        vt: p.vt,
        vt_grid: p.vt_grid.clone(),
        mfd_ms: p.mfd,
        aggregation: match p.aggregate {
            AggregateArg::Pooled => Aggregation::Pooled,
            AggregateArg::PerSegmentMean => Aggregation::PerSegmentMean,
        },
        ..PipelineConfig::default()
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| GazeError::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| GazeError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| GazeError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    created: String,
    inputs: Vec<InputDigest>,
    args: &'a C,
    pipeline: Option<&'a PipelineConfig>,
    experiment: Option<&'a ExperimentConfig>,
}

/// Creates `<out_root>/<timestamp>-seed<seed>` and writes its manifest
/// before any result exists.
fn open_run_dir<C: Serialize>(
    cli: &Cli,
    command: &str,
    inputs: &[&Path],
    args: &C,
    pipeline: Option<&PipelineConfig>,
    experiment: Option<&ExperimentConfig>,
) -> Result<PathBuf> {
    let inputs = inputs
        .iter()
        .map(|p| {
            Ok(InputDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let now = chrono::Local::now();
    let stem = format!("{}-seed{}", now.format("%Y%m%dT%H%M%S"), cli.seed);
    std::fs::create_dir_all(&cli.out_root).map_err(|e| GazeError::io(&cli.out_root, e))?;
    let mut dir = cli.out_root.join(&stem);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = cli.out_root.join(format!("{stem}-{n}"));
    }
    std::fs::create_dir(&dir).map_err(|e| GazeError::io(&dir, e))?;

    let manifest = Manifest {
        tool: "gazeforge",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        created: now.to_rfc3339(),
        inputs,
        args,
        pipeline,
        experiment,
    };
    let path = dir.join("manifest.json");
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| GazeError::Serialization(e.to_string()))?;
    w.flush().map_err(|e| GazeError::io(&path, e))?;
    Ok(dir)
}

fn data_inputs(data: &DataArgs) -> Vec<&Path> {
    let mut v = vec![data.load.data.as_path()];
    if let Some(g) = &data.pipeline.geometry {
        v.push(g.as_path());
    }
    v
}

fn prepared(data: &DataArgs, config: &PipelineConfig) -> Result<PreparedCohort> {
    let cohort = load(&data.load)?;
    prepare_cohort(&cohort, config)
}

fn ingest(a: &IngestArgs) -> Result<()> {
    let cohort = load(&a.load)?;
    let mut w = create(&a.out)?;
    write_cohort(&mut w, &cohort)?;
    w.flush().map_err(|e| GazeError::io(&a.out, e))?;
    let samples: usize = cohort.iter().map(|t| t.len()).sum();
    println!(
        "participants={} samples={} out={}",
        cohort.len(),
        samples,
        a.out.display()
    );
    Ok(())
}

fn synth(a: &SynthArgs, seed: u64) -> Result<()> {
    let spec = CohortSpec {
        n_participants: a.n,
        duration_ms: a.duration_ms,
        sample_rate_hz: a.sample_rate,
        class_effect: ClassEffect {
            female: KinematicOffsets {
                fixation_velocity_deg_s: a.fix_effect,
                saccade_velocity_deg_s: a.sac_effect,
                left_eye_bias: a.left_eye_bias,
            },
            male: KinematicOffsets::default(),
        },
        noise_sd_px: a.noise_px,
        seed,
        geometry: ScreenGeometry::default(),
    };
    let cohort = generate_synthetic_cohort(&spec)?;
    let mut w = create(&a.out)?;
    write_cohort(&mut w, &cohort)?;
    w.flush().map_err(|e| GazeError::io(&a.out, e))?;
    println!("participants={} seed={} out={}", cohort.len(), seed, a.out.display());
    Ok(())
}

fn segment(cli: &Cli, a: &DataArgs) -> Result<()> {
    let config = pipeline_config(&a.pipeline)?;
    let cohort = load(&a.load)?;
    let dir = open_run_dir(cli, "segment", &data_inputs(a), a, Some(&config), None)?;
    let staged = cohort
        .iter()
        .map(|traj| {
            let smooth = smooth_trajectory(traj, &config.smoothing)?;
            let series = kinematics(&smooth, &config.geometry)?;
            Ok((smooth.timestamps(), series))
        })
        .collect::<Result<Vec<_>>>()?;
    let vt = match config.vt {
        Some(vt) => vt,
        None => {
            let pairs: Vec<(&[f64], &[f64])> = staged.iter().map(|(t, s)| (s.v.as_slice(), t.as_slice())).collect();
            select_vt(&pairs, config.mfd_ms, &config.vt_grid)?
        }
    };
    let params = IvtParams::new(vt, config.mfd_ms)?;
    let path = dir.join("segments.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
    w.write_record([
        "participant_id",
        "gender",
        "kind",
        "start_idx",
        "end_idx",
        "start_ms",
        "duration_ms",
    ])
    .map_err(ser)?;
    let mut n_segments = 0;
    for (traj, (t, series)) in cohort.iter().zip(&staged) {
        for s in segment_series(series, t, &params) {
            n_segments += 1;
            w.write_record([
                traj.participant_id.clone(),
                traj.gender.code().to_string(),
                s.kind.name().to_string(),
                s.start_idx.to_string(),
                s.end_idx.to_string(),
                t[s.start_idx].to_string(),
                s.duration_ms.to_string(),
            ])
            .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| GazeError::io(&path, e))?;
    println!("vt={vt} segments={n_segments} dir={}", dir.display());
    Ok(())
}

fn features(cli: &Cli, a: &DataArgs) -> Result<()> {
    let config = pipeline_config(&a.pipeline)?;
    let dir = open_run_dir(cli, "features", &data_inputs(a), a, Some(&config), None)?;
    let cohort = prepared(a, &config)?;
    for channel in [Channel::Fixation, Channel::Saccade, Channel::Sota] {
        let table = cohort.table(channel)?;
        let path = dir.join(format!("{}.csv", channel.name()));
        let mut w = create(&path)?;
        table.write_csv(&mut w)?;
        w.flush().map_err(|e| GazeError::io(&path, e))?;
    }
    println!(
        "vt={} participants={} dir={}",
        cohort.vt,
        cohort.participants.len(),
        dir.display()
    );
    Ok(())
}

fn rank(cli: &Cli, a: &DataArgs) -> Result<()> {
    let config = pipeline_config(&a.pipeline)?;
    let dir = open_run_dir(cli, "rank", &data_inputs(a), a, Some(&config), None)?;
    let cohort = prepared(a, &config)?;
    let path = dir.join("ranking.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
    w.write_record(["channel", "rank", "feature", "f_score"]).map_err(ser)?;
    for channel in [Channel::Fixation, Channel::Saccade] {
        let ranking = anova_rank(&cohort.table(channel)?)?;
        for (i, (name, f)) in ranking.entries.iter().enumerate() {
            w.write_record([channel.name(), &(i + 1).to_string(), name, &f.to_string()])
                .map_err(ser)?;
        }
        if let Some((name, f)) = ranking.entries.first() {
            println!("{} top={name} f={f}", channel.name());
        }
    }
    w.flush().map_err(|e| GazeError::io(&path, e))?;
    println!("dir={}", dir.display());
    Ok(())
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let config = pipeline_config(&a.data.pipeline)?;
    let classifier = a.classifier.config()?;
    let dir = open_run_dir(cli, "train", &data_inputs(&a.data), a, Some(&config), None)?;
    let cohort = prepared(&a.data, &config)?;
    let eligible: Vec<&str> = cohort
        .eligible(&[Channel::Fixation, Channel::Saccade])
        .iter()
        .map(|p| p.id.as_str())
        .collect();
    for (i, channel) in [Channel::Fixation, Channel::Saccade].into_iter().enumerate() {
        let table = cohort.table(channel)?.subset(&eligible)?;
        let top = select_top_k(&anova_rank(&table)?, a.k as usize)?;
        let data = Dataset::from_table(&table.select(&top)?);
        let model = train(&data, &classifier, crate::rng::derive_seed(cli.seed, i as u64))?;
        save_model(&dir.join(format!("{}_model.json", channel.name())), &model)?;
        println!("{} features={}", channel.name(), top.join(";"));
    }
    println!("participants={} dir={}", eligible.len(), dir.display());
    Ok(())
}

fn weight_mode(a: &EvaluateArgs) -> Result<WeightMode> {
    if a.optimize_weights {
        return Ok(WeightMode::Optimized);
    }
    match a.weights.as_str() {
        "equal" => Ok(WeightMode::Equal),
        "optimized" => Ok(WeightMode::Optimized),
        pair => {
            let bad = || {
                GazeError::InvalidConfig(format!(
                    "--weights expects equal, optimized or w_sac,w_fix; got {pair:?}"
                ))
            };
            let (s, f) = pair.split_once(',').ok_or_else(bad)?;
            let w_sac: f64 = s.trim().parse().map_err(|_| bad())?;
            let w_fix: f64 = f.trim().parse().map_err(|_| bad())?;
            Ok(WeightMode::Manual {
                weights: EnsembleWeights::new(w_fix, w_sac)?,
            })
        }
    }
}

fn experiment_config(a: &EvaluateArgs, seed: u64) -> Result<ExperimentConfig> {
    let tune_on: TuneOn = a.tune_on.parse()?;
    let rank_on: RankOn = a.rank_on.parse()?;
    let config = ExperimentConfig {
        n_runs: a.runs as usize,
        split_ratio: a.split_ratio,
        k_features: a.k as usize,
        classifier: a.classifier.config()?,
        weight_mode: weight_mode(a)?,
        tune_on,
        rank_on,
        feature_set: FeatureSet::Pipeline,
        seed,
        subset: a.subset.map(SubsetSpec::balanced).transpose()?,
        ..ExperimentConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn write_report(dir: &Path, stem: &str, report: &EvalReport) -> Result<()> {
    let json = dir.join(format!("{stem}.json"));
    let mut w = create(&json)?;
    report.write_json(&mut w)?;
    w.flush().map_err(|e| GazeError::io(&json, e))?;
    let runs = dir.join(format!("{stem}_runs.csv"));
    report.write_runs_csv(create(&runs)?)
}

fn print_report(label: &str, r: &EvalReport) {
    let (lo, hi) = r.interval();
    print!(
        "{label} accuracy={:.4} sd={:.4} sem={:.4} interval=[{lo:.4},{hi:.4}] runs={} eligible={} excluded={}",
        r.mean_accuracy,
        r.sd,
        r.sem,
        r.runs.len(),
        r.n_eligible,
        r.n_excluded
    );
    if let Some(w) = r.mean_weights {
        print!(" w_fix={:.4} w_sac={:.4}", w.w_fix, w.w_sac);
    }
    if r.leaky {
        print!(" LEAKY");
    }
    println!();
}

fn write_xy(dir: &Path, name: &str, points: &[(f64, f64)]) -> Result<()> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    write_xy_csv(&mut w, points)?;
    w.flush().map_err(|e| GazeError::io(&path, e))
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<()> {
    let pipeline = pipeline_config(&a.data.pipeline)?;
    let config = experiment_config(a, cli.seed)?;
    let modes = [a.sweep.is_some(), a.sota, a.sd_curve.is_some()];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(GazeError::InvalidConfig(
            "--sweep, --sota and --sd-curve are exclusive".into(),
        ));
    }
    let dir = open_run_dir(
        cli,
        "evaluate",
        &data_inputs(&a.data),
        a,
        Some(&pipeline),
        Some(&config),
    )?;
    let cohort = prepared(&a.data, &pipeline)?;

    if let Some(ks) = &a.sweep {
        let rows = sweep_feature_counts(&cohort, ks, &config)?;
        for (k, r) in &rows {
            write_report(&dir, &format!("report_k{k}"), r)?;
            print_report(&format!("k={k}"), r);
        }
        let points: Vec<(f64, f64)> = rows.iter().map(|(k, r)| (*k as f64, r.mean_accuracy)).collect();
        write_xy(&dir, "sweep.csv", &points)?;
    } else if a.sota {
        let (pipe, sota) = sota_protocol(&cohort, &Default::default(), &config)?;
        write_report(&dir, "report_pipeline", &pipe)?;
        write_report(&dir, "report_sota", &sota)?;
        print_report("pipeline", &pipe);
        print_report("sota", &sota);
    } else if let Some(sizes) = &a.sd_curve {
        let curve = sd_vs_users(&cohort, sizes, &config)?;
        for (n, sd) in &curve {
            println!("users={n} sd={sd:.4}");
        }
        let points: Vec<(f64, f64)> = curve.iter().map(|&(n, sd)| (n as f64, sd)).collect();
        write_xy(&dir, "sd_curve.csv", &points)?;
    } else {
        let report = run_experiment(&cohort, &config)?;
        write_report(&dir, "report", &report)?;
        print_report("evaluate", &report);
    }
    println!("vt={} dir={}", cohort.vt, dir.display());
    Ok(())
}

fn stats(cli: &Cli, a: &StatsArgs) -> Result<()> {
    let pipeline = pipeline_config(&a.data.pipeline)?;
    let test: StatTest = a.stat_test.parse()?;
    let aoi = match &a.aoi {
        Some(p) => AoiSpec::load(p)?,
        None => AoiSpec::face_eyes(&pipeline.geometry),
    };
    aoi.validate(&pipeline.geometry)?;
    let mut inputs = data_inputs(&a.data);
    if let Some(p) = &a.aoi {
        inputs.push(p.as_path());
    }
    let dir = open_run_dir(cli, "stats", &inputs, a, Some(&pipeline), None)?;
    let cohort = prepared(&a.data, &pipeline)?;
    let s = cohort_stats(&cohort, &aoi, test)?;
    let path = dir.join("stats.csv");
    s.write_csv(create(&path)?)?;
    for r in &s.rows {
        println!(
            "{} female={:.4} male={:.4} p={:.4}",
            r.measure, r.female_mean, r.male_mean, r.p_value
        );
    }
    println!("dir={}", dir.display());
    Ok(())
}
