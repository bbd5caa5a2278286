use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{GazeError, Result};
use crate::features::stats::{mean, sample_sd};
use crate::ingest::{FaceLayout, Gender, Rect, ScreenGeometry};

use super::prepare::PreparedCohort;

/// Named screen rectangles, in px.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiSpec {
    pub regions: Vec<NamedRect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRect {
    pub name: String,
    #[serde(flatten)]
    pub rect: Rect,
}

impl AoiSpec {
    /// Eye regions of the synthetic face layout.
    pub fn face_eyes(geometry: &ScreenGeometry) -> Self {
        let face = FaceLayout::for_screen(geometry);
        AoiSpec {
            regions: vec![
                NamedRect {
                    name: "left_eye".into(),
                    rect: face.left_eye,
                },
                NamedRect {
                    name: "right_eye".into(),
                    rect: face.right_eye,
                },
            ],
        }
    }

    pub fn validate(&self, geometry: &ScreenGeometry) -> Result<()> {
        for r in &self.regions {
            if !(r.rect.x1 > r.rect.x0 && r.rect.y1 > r.rect.y0) || !r.rect.is_within(&geometry.bounds()) {
                return Err(GazeError::InvalidConfig(format!(
                    "AOI {} is empty or off screen",
                    r.name
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GazeError::InvalidConfig(format!("AOI config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GazeError::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatTest {
    #[default]
    MannWhitney,
    TTest,
}

impl std::str::FromStr for StatTest {
    type Err = GazeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mannwhitney" => Ok(StatTest::MannWhitney),
            "ttest" => Ok(StatTest::TTest),
            _ => Err(GazeError::InvalidConfig(format!("unknown test {s:?}"))),
        }
    }
}

/// Two-sided Mann-Whitney U p-value using the normal approximation with tie
/// and continuity corrections. Returns 1 when every value is tied.
pub fn mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_a += all[i..=j].iter().filter(|x| x.1).count() as f64 * avg;
        i = j + 1;
    }
    let u = rank_a - n1 * (n1 + 1.0) / 2.0;
    let mu = n1 * n2 / 2.0;
    let nf = n as f64;
    let var = n1 * n2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * std.sf(z)).min(1.0)
}

/// Two-sided Welch t-test p-value.
pub fn welch_t_p(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return 1.0;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (v1, v2) = (sample_sd(a).powi(2) / n1, sample_sd(b).powi(2) / n2);
    let diff = mean(a) - mean(b);
    let se2 = v1 + v2;
    if se2 == 0.0 {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub measure: String,
    pub female_mean: f64,
    pub female_sd: f64,
    pub female_n: usize,
    pub male_mean: f64,
    pub male_sd: f64,
    pub male_n: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub test: StatTest,
    pub rows: Vec<MeasureRow>,
}

impl CohortStats {
    pub fn row(&self, measure: &str) -> Option<&MeasureRow> {
        self.rows.iter().find(|r| r.measure == measure)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
        w.write_record([
            "measure",
            "female_mean",
            "female_sd",
            "female_n",
            "male_mean",
            "male_sd",
            "male_n",
            "p_value",
        ])
        .map_err(ser)?;
        for r in &self.rows {
            w.write_record([
                r.measure.clone(),
                r.female_mean.to_string(),
                r.female_sd.to_string(),
                r.female_n.to_string(),
                r.male_mean.to_string(),
                r.male_sd.to_string(),
                r.male_n.to_string(),
                r.p_value.to_string(),
            ])
            .map_err(ser)?;
        }
        w.flush().map_err(|e| GazeError::Serialization(e.to_string()))
    }
}

fn row(measure: String, female: &[f64], male: &[f64], test: StatTest) -> MeasureRow {
    let m = |v: &[f64]| if v.is_empty() { f64::NAN } else { mean(v) };
    MeasureRow {
        measure,
        female_mean: m(female),
        female_sd: sample_sd(female),
        female_n: female.len(),
        male_mean: m(male),
        male_sd: sample_sd(male),
        male_n: male.len(),
        p_value: match test {
            StatTest::MannWhitney => mann_whitney_p(female, male),
            StatTest::TTest => welch_t_p(female, male),
        },
    }
}

/// Per-gender path length, mean saccade amplitude and, for every AOI, the
/// percentage of fixations whose centroid lies inside it.
pub fn cohort_stats(cohort: &PreparedCohort, aoi: &AoiSpec, test: StatTest) -> Result<CohortStats> {
    let split = |f: &dyn Fn(&super::PreparedParticipant) -> Option<f64>| {
        let mut out = (Vec::new(), Vec::new());
        for p in &cohort.participants {
            if let Some(v) = f(p) {
                match p.gender {
                    Gender::Female => out.0.push(v),
                    Gender::Male => out.1.push(v),
                }
            }
        }
        out
    };
    let mut rows = Vec::new();
    let (f, m) = split(&|p| Some(p.path_length_px));
    rows.push(row("path_length_px".into(), &f, &m, test));
    let (f, m) = split(&|p| p.mean_saccade_amplitude_deg);
    rows.push(row("saccade_amplitude_deg".into(), &f, &m, test));
    for region in &aoi.regions {
        let share = |p: &super::PreparedParticipant| {
            let n = p.fixation_centroids.len();
            (n > 0).then(|| {
                let inside = p
                    .fixation_centroids
                    .iter()
                    .filter(|c| region.rect.contains(c.0, c.1))
                    .count();
                100.0 * inside as f64 / n as f64
            })
        };
        let (f, m) = split(&share);
        rows.push(row(format!("{}_share_pct", region.name), &f, &m, test));
    }
    Ok(CohortStats { test, rows })
}
