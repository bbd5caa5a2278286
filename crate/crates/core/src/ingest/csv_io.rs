use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{GazeError, Result};

use super::{concat_trials, natural_cmp, GazeSample, GazeTrajectory, Gender};

/// Required header of the gaze CSV schema, in column order.
pub const CSV_HEADER: [&str; 6] = ["participant_id", "gender", "trial_id", "t_ms", "x_px", "y_px"];

/// Markers accepted as a missing coordinate.
const MISSING: [&str; 4] = ["", "NA", "NaN", "nan"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    pub sample_rate_hz: f64,
    pub cap_ms: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            sample_rate_hz: super::DEFAULT_SAMPLE_RATE_HZ,
            cap_ms: super::DEFAULT_CAP_MS,
        }
    }
}

struct Row {
    line: u64,
    trial: String,
    sample: GazeSample,
}

struct Participant {
    gender: Gender,
    rows: Vec<Row>,
}

/// Loads a cohort file. One trajectory per participant, ordered by participant id.
pub fn load_cohort(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Vec<GazeTrajectory>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| GazeError::io(path, e))?;
    read_cohort(std::io::BufReader::new(file), opts)
}

pub fn read_cohort<R: Read>(reader: R, opts: &LoadOptions) -> Result<Vec<GazeTrajectory>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers().map_err(|e| GazeError::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(GazeError::MalformedRow {
            line: 1,
            message: format!("expected header {:?}, got {:?}", CSV_HEADER.join(","), header),
        });
    }

    let mut participants: BTreeMap<String, Participant> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| GazeError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| GazeError::MalformedRow { line, message };
        if record.len() != CSV_HEADER.len() {
            return Err(malformed(format!("expected 6 fields, found {}", record.len())));
        }

        let pid = record[0].to_string();
        if pid.is_empty() {
            return Err(malformed("empty participant_id".into()));
        }
        let gender = Gender::from_code(&record[1]).ok_or_else(|| GazeError::UnknownGender {
            line,
            code: record[1].to_string(),
        })?;
        let trial = record[2].to_string();
        let t: f64 = record[3]
            .parse()
            .map_err(|_| malformed(format!("t_ms {:?} is not a number", &record[3])))?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(malformed(format!("t_ms must be finite and non-negative, got {t}")));
        }
        let (Some(x), Some(y)) = (parse_coord(&record[4], line)?, parse_coord(&record[5], line)?) else {
            continue;
        };

        let entry = participants.entry(pid.clone()).or_insert_with(|| Participant {
            gender,
            rows: Vec::new(),
        });
        if entry.gender != gender {
            return Err(malformed(format!("participant {pid} has conflicting gender codes")));
        }
        entry.rows.push(Row {
            line,
            trial,
            sample: GazeSample { t, x, y },
        });
    }

    let mut ids: Vec<String> = participants.keys().cloned().collect();
    ids.sort_by(|a, b| natural_cmp(a, b));

    let mut out = Vec::with_capacity(ids.len());
    for pid in ids {
        let mut p = participants.remove(&pid).expect("id came from map");
        p.rows
            .sort_by(|a, b| natural_cmp(&a.trial, &b.trial).then(a.sample.t.total_cmp(&b.sample.t)));
        if let Some(w) = p
            .rows
            .windows(2)
            .find(|w| w[0].trial == w[1].trial && w[0].sample.t == w[1].sample.t)
        {
            return Err(GazeError::DuplicateKey {
                line: w[0].line.max(w[1].line),
                participant: pid,
                trial: w[1].trial.clone(),
                t_ms: w[1].sample.t,
            });
        }

        let mut trials: Vec<Vec<GazeSample>> = Vec::new();
        let mut current: Option<&str> = None;
        for row in &p.rows {
            if current != Some(row.trial.as_str()) {
                trials.push(Vec::new());
                current = Some(row.trial.as_str());
            }
            trials.last_mut().expect("pushed above").push(row.sample);
        }
        let samples = concat_trials(&trials, opts.cap_ms, opts.sample_rate_hz)?;
        out.push(GazeTrajectory::new(pid, p.gender, samples, opts.sample_rate_hz)?);
    }
    Ok(out)
}

fn parse_coord(field: &str, line: u64) -> Result<Option<f64>> {
    if MISSING.contains(&field) {
        return Ok(None);
    }
    let v: f64 = field.parse().map_err(|_| GazeError::MalformedRow {
        line,
        message: format!("coordinate {field:?} is not a number"),
    })?;
    Ok(v.is_finite().then_some(v))
}

/// Writes trajectories in the cohort schema, one trial per participant.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so reloading reproduces the trajectories exactly.
pub fn write_cohort<W: Write>(writer: W, cohort: &[GazeTrajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let ser = |e: csv::Error| GazeError::Serialization(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for traj in cohort {
        for s in &traj.samples {
            w.write_record([
                traj.participant_id.as_str(),
                traj.gender.code(),
                "0",
                &s.t.to_string(),
                &s.x.to_string(),
                &s.y.to_string(),
            ])
            .map_err(ser)?;
        }
    }
    w.flush().map_err(|e| GazeError::Serialization(e.to_string()))?;
    Ok(())
}
