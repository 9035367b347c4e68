//! Goodness-of-fit statistics, power-law regression and test reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup |F_emp - F|` against a continuous target CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "KS needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    let v = sorted(samples);
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max))
}

/// Two-sample KS distance between empirical distributions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample Kolmogorov critical value `c(alpha) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c / (n as f64).sqrt()
}

/// Pearson statistic against equal class probabilities, with its degrees of
/// freedom.
pub fn chi_square_uniform(counts: &[u64]) -> Result<(f64, usize)> {
    if counts.len() < 2 {
        return Err(Error::InsufficientData("need at least two classes".into()));
    }
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    if expected < 5.0 {
        return Err(Error::SparseClasses { expected });
    }
    let stat = counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    Ok((stat, counts.len() - 1))
}

/// Upper `alpha` quantile of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_critical(dof: usize, alpha: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(1.0 - alpha)
}

/// One-dimensional star discrepancy of points in `[0, 1)`.
pub fn star_discrepancy(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InsufficientData("empty point set".into()));
    }
    let v = sorted(points);
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub coefficient: f64,
    pub exponent: f64,
    /// `sqrt(sum (D - c T^e)^2 / sum D^2)`
    pub relative_residual: f64,
}

/// Least squares of `D` against `c T^e` through the origin.
pub fn fit_power_law(points: &[(f64, f64)], exponent: f64) -> Result<PowerFit> {
    let mut ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 distinct T values, got {}",
            ts.len()
        )));
    }
    let sxx: f64 = points.iter().map(|(t, _)| t.powf(2.0 * exponent)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(Error::DegenerateDesign("T^e has no spread".into()));
    }
    let sxy: f64 = points.iter().map(|(t, d)| t.powf(exponent) * d).sum();
    let c = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|(t, d)| (d - c * t.powf(exponent)).powi(2))
        .sum();
    let ss_d: f64 = points.iter().map(|(_, d)| d * d).sum();
    let rel = if ss_d > 0.0 { (ss_res / ss_d).sqrt() } else { 0.0 };
    Ok(PowerFit {
        coefficient: c,
        exponent,
        relative_residual: rel,
    })
}

/// One fixed-threshold verdict: `passed` iff `statistic <= threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub sample_size: usize,
    pub target: String,
    pub passed: bool,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, sample_size: usize, target: impl Into<String>) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            threshold,
            sample_size,
            target: target.into(),
            passed: statistic <= threshold,
            seeds: Vec::new(),
            note: None,
        }
    }

    /// A structural check phrased as a report: statistic 0 on success.
    pub fn exact(name: impl Into<String>, ok: bool, sample_size: usize, target: impl Into<String>) -> Self {
        TestReport::new(name, if ok { 0.0 } else { 1.0 }, 0.0, sample_size, target)
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}
