//! Small descriptive statistics over `f64` samples.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolation quantile (type 7) of `q ∈ [0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Mean, median and interquartile range of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let q1 = quantile(xs, 0.25);
        let q3 = quantile(xs, 0.75);
        Self {
            count: xs.len(),
            mean: mean(xs),
            median: median(xs),
            q1,
            q3,
            iqr: q3 - q1,
        }
    }
}

/// One-sided 95% normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Lower one-sided 95% confidence bound for the mean of paired differences.
pub fn paired_lower_bound_95(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    mean(diffs) - Z_95_ONE_SIDED * (variance(diffs) / n).sqrt()
}
