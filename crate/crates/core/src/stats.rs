//! Sample statistics for Monte Carlo campaigns.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::walks::pairwise_sum;

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    pairwise_sum(&prods) / (xs.len() as f64 - 1.0)
}

pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs)
}

/// Leave-one-out jackknife standard error of [`covariance`].
pub fn jackknife_covariance_se(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let q = pairwise_sum(&prods);
    // Removing sample i shifts the centered cross sum by p_i N / (N - 1).
    let loo: Vec<f64> = prods
        .iter()
        .map(|p| (q - p * n / (n - 1.0)) / (n - 2.0))
        .collect();
    let m = mean(&loo);
    let dev: Vec<f64> = loo.iter().map(|c| (c - m) * (c - m)).collect();
    ((n - 1.0) / n * pairwise_sum(&dev)).sqrt()
}

/// Asymptotic Kolmogorov distribution tail `P(K > x)`.
pub fn kolmogorov_tail(x: f64) -> f64 {
    // The alternating series converges slowly near 0, where the tail is 1
    // to double precision anyway.
    if x < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        acc += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

/// KS p-value with Stephens' small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Set when every sample is equal; the fields below are then `None`.
    pub degenerate: bool,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    /// Spacing of the values when they sit on an arithmetic lattice; the KS
    /// distance then compares against the continuity-corrected normal.
    pub lattice_span: Option<f64>,
}

impl NormalityReport {
    /// `4 sqrt(6/N)` and `4 sqrt(24/N)`.
    pub fn moment_bands(&self) -> (f64, f64) {
        let n = self.n as f64;
        (4.0 * (6.0 / n).sqrt(), 4.0 * (24.0 / n).sqrt())
    }

    /// Skewness and excess kurtosis inside their bands and KS p-value above
    /// `p_min`. Degenerate samples do not pass.
    pub fn looks_normal(&self, p_min: f64) -> bool {
        let (bs, bk) = self.moment_bands();
        match (self.skewness, self.excess_kurtosis, self.ks_p_value) {
            (Some(s), Some(k), Some(p)) => s.abs() < bs && k.abs() < bk && p > p_min,
            _ => false,
        }
    }
}

const MAX_LATTICE_POINTS: usize = 5000;

/// Moments and a KS test against the normal law with the sample mean and
/// variance.
pub fn normality_report(samples: &[f64]) -> Result<NormalityReport> {
    let n = samples.len();
    if n < 100 {
        return Err(invalid!("normality report needs at least 100 samples, got {n}"));
    }
    let mu = mean(samples);
    let var = variance(samples);
    let mut report = NormalityReport {
        n,
        mean: mu,
        variance: var,
        degenerate: false,
        skewness: None,
        excess_kurtosis: None,
        ks_statistic: None,
        ks_p_value: None,
        lattice_span: None,
    };
    let spread = samples.iter().fold(0.0f64, |m, x| m.max((x - samples[0]).abs()));
    if spread == 0.0 || !(var > 0.0) {
        report.degenerate = true;
        return Ok(report);
    }
    let nf = n as f64;
    let pop_var = var * (nf - 1.0) / nf;
    let m3: Vec<f64> = samples.iter().map(|x| (x - mu).powi(3)).collect();
    let m4: Vec<f64> = samples.iter().map(|x| (x - mu).powi(4)).collect();
    report.skewness = Some(mean(&m3) / pop_var.powf(1.5));
    report.excess_kurtosis = Some(mean(&m4) / (pop_var * pop_var) - 3.0);

    let sd = var.sqrt();
    let normal = Normal::new(mu, sd).expect("positive variance");
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let span = lattice_span(&sorted, sd);
    report.lattice_span = span;
    let d = match span {
        None => {
            let mut d = 0.0f64;
            for (i, &x) in sorted.iter().enumerate() {
                let f = normal.cdf(x);
                d = d.max((i as f64 + 1.0) / nf - f).max(f - i as f64 / nf);
            }
            d
        }
        Some(h) => {
            let tol = 1e-6 * h;
            let mut d = 0.0f64;
            let mut i = 0;
            while i < n {
                let x = sorted[i];
                let mut j = i;
                while j < n && sorted[j] - x <= tol {
                    j += 1;
                }
                let below = i as f64 / nf;
                let upto = j as f64 / nf;
                d = d
                    .max((upto - normal.cdf(x + 0.5 * h)).abs())
                    .max((below - normal.cdf(x - 0.5 * h)).abs());
                i = j;
            }
            d
        }
    };
    report.ks_statistic = Some(d);
    report.ks_p_value = Some(ks_p_value(d, n));
    Ok(report)
}

/// Span `h` when the sorted values take few distinct values that all differ
/// by integer multiples of `h`.
fn lattice_span(sorted: &[f64], sd: f64) -> Option<f64> {
    let tol = 1e-9 * (sd + sorted.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let mut distinct: Vec<f64> = Vec::new();
    for &x in sorted {
        if distinct.last().is_none_or(|&l| x - l > tol) {
            distinct.push(x);
            if distinct.len() > MAX_LATTICE_POINTS || distinct.len() > sorted.len() / 4 {
                return None;
            }
        }
    }
    if distinct.len() < 2 {
        return None;
    }
    let h = distinct
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let on_lattice = distinct.iter().all(|&x| {
        let k = (x - distinct[0]) / h;
        (k - k.round()).abs() * h <= 1e3 * tol
    });
    on_lattice.then_some(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_reference_values() {
        // Critical values of the Kolmogorov distribution.
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
    }

    #[test]
    fn constant_samples_are_degenerate() {
        let r = normality_report(&[2.5; 200]).unwrap();
        assert!(r.degenerate);
        assert!(r.skewness.is_none());
        assert!(!r.looks_normal(0.01));
        assert!(normality_report(&[1.0; 10]).is_err());
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let ys: Vec<f64> = (0..50).map(|i| ((i * 13) % 7) as f64 + 0.1 * i as f64).collect();
        let n = xs.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let x: Vec<f64> = xs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
                let y: Vec<f64> = ys.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
                covariance(&x, &y)
            })
            .collect();
        let m = loo.iter().sum::<f64>() / n as f64;
        let brute = ((n as f64 - 1.0) / n as f64 * loo.iter().map(|c| (c - m).powi(2)).sum::<f64>()).sqrt();
        assert!((jackknife_covariance_se(&xs, &ys) - brute).abs() < 1e-12);
    }

    #[test]
    fn lattice_is_detected() {
        let xs: Vec<f64> = (0..1000).map(|i| 0.25 * ((i * 7919) % 13) as f64 - 1.0).collect();
        let r = normality_report(&xs).unwrap();
        assert!((r.lattice_span.unwrap() - 0.25).abs() < 1e-12);
        let ys: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.7).sin()).collect();
        assert!(normality_report(&ys).unwrap().lattice_span.is_none());
    }
}
