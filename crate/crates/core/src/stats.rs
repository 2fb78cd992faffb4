use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use rand::Rng as _;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl EstimateWithError {
    pub fn exact(value: f64) -> Self {
        EstimateWithError { value, std_error: 0.0, n_samples: 0 }
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.value - 1.96 * self.std_error, self.value + 1.96 * self.std_error)
    }

    /// Number of standard errors separating the estimate from `target`.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.value == target { 0.0 } else { f64::INFINITY }
        } else {
            (self.value - target) / self.std_error
        }
    }
}

/// Running sums for a sample mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.sum / self.n as f64 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> EstimateWithError {
        let se = if self.n == 0 { 0.0 } else { (self.variance() / self.n as f64).sqrt() };
        EstimateWithError { value: self.mean(), std_error: se, n_samples: self.n }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for v in iter {
            m.push(v);
        }
        m
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn proportion(successes: u64, trials: u64) -> EstimateWithError {
    let n = trials.max(1) as f64;
    let p = successes as f64 / n;
    EstimateWithError { value: p, std_error: (p * (1.0 - p) / n).sqrt(), n_samples: trials }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci95: (f64, f64),
}

/// Weighted least squares line through `(x, y)`; `w` are inverse variances.
pub fn weighted_line_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len().min(w.len()) });
    }
    if x.len() < 2 {
        return Err(Error::FitRefused("need at least two points".into()));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitRefused("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = (1.0 / sxx).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        slope_ci95: (slope - 1.96 * slope_se, slope + 1.96 * slope_se),
    })
}

/// Ordinary least squares with the residual-based slope error.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w = vec![1.0; x.len()];
    let mut fit = weighted_line_fit(x, y, &w)?;
    let n = x.len();
    if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - fit.intercept - fit.slope * a).powi(2)).sum();
        let mx = x.iter().sum::<f64>() / n as f64;
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        fit.slope_se = (rss / (n as f64 - 2.0) / sxx).sqrt();
        fit.slope_ci95 = (fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se);
    }
    Ok(fit)
}

/// Percentile bootstrap interval for the mean of `values`.
pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, stream: &SeedStream) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut rng = stream.rng();
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let q = |p: f64| means[((p * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    (q(0.025), q(0.975))
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_hand_computed_value() {
        // 8 of 10 at z = 1.96
        let (lo, hi) = wilson_interval(8, 10, 1.96);
        assert!((lo - 0.4902).abs() < 1e-4, "{lo}");
        assert!((hi - 0.9433).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn exact_line_is_recovered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 0.5).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 0.5).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
    }

    #[test]
    fn moments_standard_error() {
        let m: Moments = [1.0, 2.0, 3.0, 4.0].into_iter().collect();
        let e = m.estimate();
        assert_eq!(e.value, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
