//! Small statistical helpers: moments, two-sample chi-square, KS distance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean and unbiased sample standard deviation, summed in order.
pub fn mean_and_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// `q`-quantile of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_quantile(dof: usize, q: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub threshold: f64,
    pub significance: f64,
    pub bins: usize,
    pub pass: bool,
}

/// Two-sample chi-square homogeneity test on integer-valued samples.
///
/// Adjacent values are merged until every bin has a pooled expected count of
/// at least 5 in the smaller sample.
pub fn two_sample_chi_square(a: &[i64], b: &[i64], significance: f64) -> ChiSquareReport {
    let mut counts: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &v in a {
        counts.entry(v).or_default().0 += 1.0;
    }
    for &v in b {
        counts.entry(v).or_default().1 += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let share = na.min(nb) / (na + nb);

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(ca, cb) in counts.values() {
        acc.0 += ca;
        acc.1 += cb;
        if (acc.0 + acc.1) * share >= 5.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => bins.push(acc),
        }
    }

    let ka = (nb / na).sqrt();
    let kb = (na / nb).sqrt();
    let statistic: f64 = bins
        .iter()
        .map(|&(ca, cb)| (ka * ca - kb * cb).powi(2) / (ca + cb))
        .sum();
    let dof = bins.len().saturating_sub(1);
    let threshold = if dof == 0 {
        0.0
    } else {
        chi_square_quantile(dof, 1.0 - significance)
    };
    ChiSquareReport {
        statistic,
        dof,
        threshold,
        significance,
        bins: bins.len(),
        pass: statistic <= threshold,
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// the uniform law on `[0, 1)`.
pub fn ks_uniform_distance(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let lo = u - i as f64 / n;
            let hi = (i + 1) as f64 / n - u;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let (m, s) = mean_and_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_std(&[3.0]), (3.0, 0.0));
    }

    #[test]
    fn chi_square_quantiles() {
        // tabulated 0.99 quantiles
        assert!((chi_square_quantile(1, 0.99) - 6.634_897).abs() < 1e-5);
        assert!((chi_square_quantile(10, 0.99) - 23.209_251).abs() < 1e-5);
    }

    #[test]
    fn identical_samples_pass() {
        let a: Vec<i64> = (0..1000).map(|i| i % 7).collect();
        let r = two_sample_chi_square(&a, &a, 0.01);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 6);
        assert!(r.pass);
    }

    #[test]
    fn shifted_samples_fail() {
        let a: Vec<i64> = (0..1000).map(|i| i % 7).collect();
        let b: Vec<i64> = a.iter().map(|v| v + 3).collect();
        assert!(!two_sample_chi_square(&a, &b, 0.01).pass);
    }

    #[test]
    fn sparse_tails_are_merged() {
        let mut a = vec![0i64; 500];
        a.push(100);
        let mut b = vec![0i64; 500];
        b.push(-100);
        let r = two_sample_chi_square(&a, &b, 0.01);
        assert!(r.bins <= 1);
        assert!(r.pass);
    }

    #[test]
    fn ks_of_a_grid() {
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform_distance(&grid) - 0.005).abs() < 1e-12);
    }
}
