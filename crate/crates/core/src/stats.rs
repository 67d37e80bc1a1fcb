//! Mergeable sample summaries and least-squares fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::mix64;

pub const RESERVOIR_CAPACITY: usize = 4096;

/// Integer-valued sample summary with an exact merge.
///
/// Sums are kept as integers, so merging partitions in any order gives the
/// same state. Quantiles come from a bottom-k sample keyed by a hash of the
/// trial index: exact while `count ≤ capacity`, approximate beyond.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: u64,
    #[serde(with = "decimal")]
    pub sum: u128,
    #[serde(with = "decimal")]
    pub sum_sq: u128,
    pub min: Option<u64>,
    pub max: Option<u64>,
    capacity: usize,
    /// `(hash(trial), value)`, sorted by hash, at most `capacity` long.
    reservoir: Vec<(u64, u64)>,
}

impl Default for Aggregate {
    fn default() -> Self {
        Aggregate::with_capacity(RESERVOIR_CAPACITY)
    }
}

impl Aggregate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Aggregate { count: 0, sum: 0, sum_sq: 0, min: None, max: None, capacity: capacity.max(1), reservoir: Vec::new() }
    }

    /// Adds the value observed in trial `trial`.
    pub fn push(&mut self, trial: u64, value: u64) {
        let v = u128::from(value);
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.min = Some(self.min.map_or(value, |m| m.min(value)));
        self.max = Some(self.max.map_or(value, |m| m.max(value)));
        let key = (mix64(trial), value);
        let pos = self.reservoir.partition_point(|e| *e < key);
        if pos < self.capacity {
            self.reservoir.insert(pos, key);
            self.reservoir.truncate(self.capacity);
        }
    }

    pub fn merge(&mut self, other: &Aggregate) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.min = match (self.min, other.min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max = match (self.max, other.max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let capacity = self.capacity.min(other.capacity);
        let mut merged = Vec::with_capacity(self.reservoir.len() + other.reservoir.len());
        merged.extend_from_slice(&self.reservoir);
        merged.extend_from_slice(&other.reservoir);
        merged.sort_unstable();
        merged.truncate(capacity);
        self.capacity = capacity;
        self.reservoir = merged;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum as f64 / self.count as f64
    }

    /// Unbiased sample variance, from the exact integer numerator.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let c = u128::from(self.count);
        let numerator = c * self.sum_sq - self.sum * self.sum;
        numerator as f64 / (c * (c - 1)) as f64
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Whether quantiles are computed from every observation.
    pub fn quantiles_exact(&self) -> bool {
        self.count as usize <= self.capacity
    }

    /// Nearest-rank quantile of the retained sample.
    pub fn quantile(&self, q: f64) -> Option<u64> {
        if self.reservoir.is_empty() {
            return None;
        }
        let mut values: Vec<u64> = self.reservoir.iter().map(|e| e.1).collect();
        values.sort_unstable();
        let rank = (q.clamp(0.0, 1.0) * values.len() as f64).ceil() as usize;
        Some(values[rank.saturating_sub(1).min(values.len() - 1)])
    }
}

mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope; zero with two points.
    pub stderr: f64,
    /// Range of the independent variable (before taking logs) that was used.
    pub window: (f64, f64),
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<ExponentFit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(invalid("linear fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite coordinates".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) {
        return Err(Error::DegenerateFit("no spread in x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    // Rounding leaves a residue of order ε² in syy for constant data.
    let flat = syy <= (f64::EPSILON * my.abs().max(1.0)).powi(2) * nf * 16.0;
    let r2 = if flat { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ExponentFit { slope, intercept, r2, stderr, window, points: n })
}

/// Fits `log₂ mean` against `log₂ n` over the points with `n` in `window`.
pub fn fit_exponent(table: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<ExponentFit> {
    let window = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<&(f64, f64)> = table.iter().filter(|(n, _)| *n >= window.0 && *n <= window.1).collect();
    if pts.len() < 3 {
        return Err(invalid(format!("exponent fit needs at least 3 points in the window, got {}", pts.len())));
    }
    if pts.iter().any(|(n, m)| *n <= 0.0 || *m <= 0.0) {
        return Err(Error::DegenerateFit("sizes and means must be positive".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|(n, _)| n.log2()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, m)| m.log2()).collect();
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    linear_fit(&xs, &ys, (lo, hi))
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F₁ − F₂|`.
pub fn ks_statistic(a: &[u64], b: &[u64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}
