//! Two-sample and goodness-of-fit tests used by the harness.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Result of a hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestResult {
    /// No evidence either way, for degenerate inputs.
    pub const TRIVIAL: TestResult = TestResult { statistic: 0.0, p_value: 1.0 };
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
///
/// With ties (discrete data) the test is conservative.
pub fn ks_two_sample<T: Copy + PartialOrd>(a: &[T], b: &[T]) -> TestResult {
    if a.is_empty() || b.is_empty() {
        return TestResult::TRIVIAL;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let cmp = |x: &T, y: &T| x.partial_cmp(y).expect("comparable samples");
    a.sort_unstable_by(cmp);
    b.sort_unstable_by(cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    TestResult { statistic: d, p_value: kolmogorov_q(lambda) }
}

/// Merges adjacent bins left to right until each merged bin reaches
/// `min_expected`; a short tail is folded into the last bin.
fn merge_bins(expected: &[f64], min_expected: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (k, &e) in expected.iter().enumerate() {
        acc += e;
        if acc >= min_expected {
            out.push(start..k + 1);
            start = k + 1;
            acc = 0.0;
        }
    }
    if start < expected.len() {
        match out.last_mut() {
            Some(last) => last.end = expected.len(),
            None => out.push(0..expected.len()),
        }
    }
    out
}

fn chi2_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    dist.sf(stat)
}

/// Chi-square test that two histograms over the same bins come from one
/// distribution. Bins are merged so each pooled bin expects at least 5.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> TestResult {
    let len = a.len().max(b.len());
    let get = |v: &[u64], k: usize| v.get(k).copied().unwrap_or(0) as f64;
    let (ta, tb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if ta == 0.0 || tb == 0.0 {
        return TestResult::TRIVIAL;
    }
    let total = ta + tb;
    // smaller expected side decides the merge
    let min_share = ta.min(tb) / total;
    let pooled: Vec<f64> = (0..len).map(|k| (get(a, k) + get(b, k)) * min_share).collect();
    let bins = merge_bins(&pooled, 5.0);
    if bins.len() < 2 {
        return TestResult::TRIVIAL;
    }
    let mut stat = 0.0;
    for r in &bins {
        let oa: f64 = r.clone().map(|k| get(a, k)).sum();
        let ob: f64 = r.clone().map(|k| get(b, k)).sum();
        let col = oa + ob;
        let (ea, eb) = (col * ta / total, col * tb / total);
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    TestResult { statistic: stat, p_value: chi2_p(stat, bins.len() - 1) }
}

/// Chi-square goodness of fit of observed counts to bin probabilities.
/// Probability mass missing from `probs` is treated as one extra bin.
pub fn chi2_goodness_of_fit(observed: &[u64], probs: &[f64]) -> TestResult {
    assert_eq!(observed.len(), probs.len(), "one probability per bin");
    let total = observed.iter().sum::<u64>() as f64;
    if total == 0.0 {
        return TestResult::TRIVIAL;
    }
    let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    let mut expected: Vec<f64> = probs.iter().map(|p| p * total).collect();
    let mut obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    if rest * total > 1e-9 {
        expected.push(rest * total);
        obs.push(0.0);
    }
    let bins = merge_bins(&expected, 5.0);
    if bins.len() < 2 {
        return TestResult::TRIVIAL;
    }
    let stat: f64 = bins
        .iter()
        .map(|r| {
            let o: f64 = obs[r.clone()].iter().sum();
            let e: f64 = expected[r.clone()].iter().sum();
            (o - e).powi(2) / e
        })
        .sum();
    TestResult { statistic: stat, p_value: chi2_p(stat, bins.len() - 1) }
}

/// Histogram of non-negative integers, index = value.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    #[test]
    fn kolmogorov_known_points() {
        // standard table values
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn ks_same_and_shifted() {
        let mut r = RngHandle::new(5);
        let a: Vec<f64> = (0..4000).map(|_| r.open_unit()).collect();
        let b: Vec<f64> = (0..4000).map(|_| r.open_unit()).collect();
        let c: Vec<f64> = (0..4000).map(|_| r.open_unit() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.001);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    }

    #[test]
    fn ks_statistic_by_hand() {
        let t = ks_two_sample(&[1, 2, 3], &[3, 4, 5]);
        assert!((t.statistic - 2.0 / 3.0).abs() < 1e-12);
        let t = ks_two_sample(&[1, 1, 2], &[1, 1, 2]);
        assert_eq!(t.statistic, 0.0);
    }

    #[test]
    fn chi2_homogeneity_detects_shift() {
        assert!(chi2_homogeneity(&[500, 500, 500], &[510, 490, 505]).p_value > 0.1);
        assert!(chi2_homogeneity(&[500, 500, 500], &[700, 400, 400]).p_value < 1e-6);
        assert_eq!(chi2_homogeneity(&[100], &[100]).p_value, 1.0);
    }

    #[test]
    fn chi2_fit_uniform() {
        assert!(chi2_goodness_of_fit(&[250, 260, 240, 250], &[0.25; 4]).p_value > 0.1);
        assert!(chi2_goodness_of_fit(&[400, 200, 200, 200], &[0.25; 4]).p_value < 1e-6);
    }

    #[test]
    fn merging_keeps_all_bins() {
        let bins = merge_bins(&[1.0, 1.0, 6.0, 2.0, 4.0], 5.0);
        assert_eq!(bins, vec![0..3, 3..5]);
    }

    #[test]
    fn histogram_counts() {
        assert_eq!(histogram([0, 2, 2, 5]), vec![1, 0, 2, 0, 0, 1]);
    }
}
