//! Descriptive statistics used by the feature catalog.

/// Mean, median, max, min, SD, skewness, kurtosis of a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    /// Sample skewness g1; 0 when the variance vanishes.
    pub skewness: f64,
    /// Excess kurtosis g2; 0 when the variance vanishes.
    pub kurtosis: f64,
}

impl Summary {
    pub const FIELDS: [&'static str; 7] = ["mean", "median", "max", "min", "sd", "skewness", "kurtosis"];

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.mean,
            self.median,
            self.max,
            self.min,
            self.sd,
            self.skewness,
            self.kurtosis,
        ]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Summary of a non-empty slice.
pub fn summarize(values: &[f64]) -> Summary {
    assert!(!values.is_empty(), "summary of an empty sample");
    let n = values.len() as f64;
    let m = mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let degenerate = hi == lo || m2 <= f64::EPSILON * f64::EPSILON * m.abs().max(hi.abs()).powi(2);
    let (skewness, kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Summary {
        mean: m,
        median: median(values),
        max: hi,
        min: lo,
        sd: if hi == lo { 0.0 } else { sample_sd(values) },
        skewness,
        kurtosis,
    }
}
