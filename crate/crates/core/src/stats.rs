//! Paired two-tailed significance tests.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Absolute tolerance used to detect zero and tied differences.
pub const DIFF_TOLERANCE: f64 = 1e-12;

/// Largest effective sample size for which Wilcoxon uses its exact null distribution.
pub const DEFAULT_WILCOXON_CUTOVER: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Approximate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub p_value: f64,
    pub statistic: f64,
    /// Observations used after dropping zero differences.
    pub n_effective: usize,
    pub method: Method,
    /// Set when the data carry no variation (all zero, or constant).
    pub degenerate: bool,
}

/// `ln C(n, i) - n ln 2` for every `i` in `0..=n`.
fn log_binomial_half(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut lp = -(n as f64) * std::f64::consts::LN_2;
    out.push(lp);
    for i in 0..n {
        lp += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        out.push(lp);
    }
    out
}

/// Exact two-tailed sign test of `n_pos` against `n_neg` at success probability 1/2.
///
/// The p value is twice the smaller binomial tail, capped at 1. Zero
/// differences must already be excluded by the caller.
pub fn sign_test(n_pos: u64, n_neg: u64) -> Result<TestResult> {
    let n = n_pos + n_neg;
    if n == 0 {
        return Err(Error::UndefinedTest(
            "sign test needs at least one non-tied observation".into(),
        ));
    }
    let pmf = log_binomial_half(n);
    let lo = n_pos.min(n_neg) as usize;
    // P(X <= lo), summed smallest terms first
    let tail: f64 = pmf[..=lo].iter().rev().map(|lp| lp.exp()).sum();
    Ok(TestResult {
        p_value: (2.0 * tail).min(1.0),
        statistic: n_pos as f64,
        n_effective: n as usize,
        method: Method::Exact,
        degenerate: false,
    })
}

/// Sign test on raw paired differences; zero differences are dropped.
pub fn sign_test_diffs(diffs: &[f64]) -> Result<TestResult> {
    let pos = diffs.iter().filter(|&&d| d > DIFF_TOLERANCE).count() as u64;
    let neg = diffs.iter().filter(|&&d| d < -DIFF_TOLERANCE).count() as u64;
    if pos + neg == 0 {
        if diffs.is_empty() {
            return Err(Error::UndefinedTest("sign test on an empty sample".into()));
        }
        return Ok(TestResult {
            p_value: 1.0,
            statistic: 0.0,
            n_effective: 0,
            method: Method::Exact,
            degenerate: true,
        });
    }
    sign_test(pos, neg)
}

/// Two-tailed paired Student t test on per-topic differences.
pub fn t_test_paired(diffs: &[f64]) -> Result<TestResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::UndefinedTest(format!(
            "t test needs at least 2 observations, got {n}"
        )));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let (min, max) = diffs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    if max - min <= DIFF_TOLERANCE * mean.abs().max(1.0) {
        let zero = mean.abs() <= DIFF_TOLERANCE;
        return Ok(TestResult {
            p_value: if zero { 1.0 } else { 0.0 },
            statistic: if zero { 0.0 } else { mean.signum() * f64::INFINITY },
            n_effective: n,
            method: Method::Exact,
            degenerate: true,
        });
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = mean / (var / n as f64).sqrt();
    let dist =
        StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::UndefinedTest(format!("t distribution: {e}")))?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok(TestResult {
        p_value: p.clamp(0.0, 1.0),
        statistic: t,
        n_effective: n,
        method: Method::Exact,
        degenerate: false,
    })
}

/// Wilcoxon signed-rank test with the default exact/approximate cutover.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<TestResult> {
    wilcoxon_signed_rank_with_cutover(diffs, DEFAULT_WILCOXON_CUTOVER)
}

/// Mid-ranks of `values` (ascending), with values within the tolerance tied.
fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - values[order[start]] <= DIFF_TOLERANCE {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// Two-tailed Wilcoxon signed-rank test.
///
/// Zero differences are dropped and tied magnitudes receive mid-ranks. The
/// statistic is the positive rank sum `W+`. Up to `exact_cutover` effective
/// observations the p value comes from the exact permutation distribution of
/// the (possibly tied) ranks; above it, a normal approximation with continuity
/// and tie corrections is used.
pub fn wilcoxon_signed_rank_with_cutover(diffs: &[f64], exact_cutover: usize) -> Result<TestResult> {
    if diffs.is_empty() {
        return Err(Error::UndefinedTest("Wilcoxon test on an empty sample".into()));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > DIFF_TOLERANCE).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(TestResult {
            p_value: 1.0,
            statistic: 0.0,
            n_effective: 0,
            method: Method::Exact,
            degenerate: true,
        });
    }
    let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, tie_sizes) = mid_ranks(&magnitudes);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    if n <= exact_cutover {
        // doubled mid-ranks are integers
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max_sum: usize = doubled.iter().sum();
        let mut ways = vec![0u64; max_sum + 1];
        ways[0] = 1;
        for &r in &doubled {
            for s in (r..=max_sum).rev() {
                ways[s] += ways[s - r];
            }
        }
        let observed = (2.0 * w_plus).round() as usize;
        let total = (1u64 << n) as f64;
        let lower: u64 = ways[..=observed].iter().sum();
        let upper: u64 = ways[observed..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total).min(1.0);
        return Ok(TestResult {
            p_value: p,
            statistic: w_plus,
            n_effective: n,
            method: Method::Exact,
            degenerate: false,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let dev = (w_plus - mean).abs();
    let z = (dev - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2);
    Ok(TestResult {
        p_value: p.clamp(0.0, 1.0),
        statistic: w_plus,
        n_effective: n,
        method: Method::Approximate,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sign_test_examples() {
        // reference values from scipy.stats.binomtest
        assert_abs_diff_eq!(
            sign_test(109, 81).unwrap().p_value,
            0.04985144161687206,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(sign_test(10, 0).unwrap().p_value, 0.001953125, epsilon = 1e-15);
        assert_abs_diff_eq!(sign_test(7, 3).unwrap().p_value, 0.34375, epsilon = 1e-15);
        assert_eq!(sign_test(5, 5).unwrap().p_value, 1.0);
        assert!(matches!(sign_test(0, 0), Err(Error::UndefinedTest(_))));
    }

    #[test]
    fn sign_test_large_n_does_not_underflow() {
        let r = sign_test(2000, 2000).unwrap();
        assert_eq!(r.p_value, 1.0);
        let r = sign_test(2100, 1900).unwrap();
        assert!(r.p_value > 0.0 && r.p_value < 0.01);
    }

    #[test]
    fn t_test_examples() {
        // scipy.stats.ttest_1samp
        let r = t_test_paired(&[0.1, 0.2, 0.15, 0.05]).unwrap();
        assert_abs_diff_eq!(r.statistic, 3.8729833462074184, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, 0.03046629166217095, epsilon = 1e-6);
        let r = t_test_paired(&[0.3, -0.1, 0.25, 0.0, 0.12, -0.05, 0.4]).unwrap();
        assert_abs_diff_eq!(r.p_value, 0.11825460000358462, epsilon = 1e-6);
        let r = t_test_paired(&[0.0; 5]).unwrap();
        assert!(r.degenerate && r.p_value == 1.0);
        let r = t_test_paired(&[0.1; 5]).unwrap();
        assert!(r.degenerate && r.p_value == 0.0);
        assert!(t_test_paired(&[0.3]).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, -1.0, 2.0, -2.0]).unwrap().p_value, 1.0);
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((r.p_value, r.statistic, r.method), (0.0625, 15.0, Method::Exact));
        // scipy.stats.wilcoxon(method="exact")
        let r = wilcoxon_signed_rank(&[1.5, -0.5, 2.5, 3.0, -1.0, 4.0, 2.0, 0.7, -3.5, 5.0]).unwrap();
        assert_abs_diff_eq!(r.p_value, 0.130859375, epsilon = 1e-12);
        let r = wilcoxon_signed_rank(&[0.0, 0.0]).unwrap();
        assert!(r.degenerate && r.p_value == 1.0);
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn wilcoxon_normal_approximation() {
        // scipy.stats.wilcoxon(zero_method="wilcox", correction=True, method="approx")
        let d = [
            0.1, -0.1, 0.2, 0.2, 0.3, -0.3, 0.1, 0.4, 0.5, -0.2, 0.1, 0.6, 0.7, 0.2, -0.1, 0.3, 0.3, 0.8, -0.4, 0.9,
            0.1, 0.2, 1.0, -0.5, 0.6, 0.4, 0.0, 0.3, 0.2, 0.1,
        ];
        let r = wilcoxon_signed_rank(&d).unwrap();
        assert_eq!((r.method, r.n_effective), (Method::Approximate, 29));
        assert_abs_diff_eq!(r.p_value, 0.0023842922496376106, epsilon = 1e-6);
        let d: Vec<f64> = (1..=30)
            .map(|i| if (i - 1) % 3 == 0 { -(i as f64) } else { i as f64 })
            .collect();
        assert_abs_diff_eq!(
            wilcoxon_signed_rank(&d).unwrap().p_value,
            0.07354309334531801,
            epsilon = 1e-6
        );
    }

    /// Full enumeration of the 2^n sign assignments over the observed mid-ranks.
    fn brute_force_wilcoxon(diffs: &[f64]) -> f64 {
        let nz: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > DIFF_TOLERANCE).collect();
        let mags: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
        let ranks: Vec<f64> = mags
            .iter()
            .map(|m| {
                let below = mags.iter().filter(|x| **x < m - DIFF_TOLERANCE).count() as f64;
                let same = mags.iter().filter(|x| (**x - m).abs() <= DIFF_TOLERANCE).count() as f64;
                below + (same + 1.0) / 2.0
            })
            .collect();
        let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
        let n = nz.len();
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..1 << n {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            le += (w <= observed + 1e-9) as u64;
            ge += (w >= observed - 1e-9) as u64;
        }
        (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
    }

    proptest! {
        #[test]
        fn exact_wilcoxon_matches_enumeration(raw in proptest::collection::vec(-4i32..=4, 1..=12)) {
            let diffs: Vec<f64> = raw.iter().map(|&x| x as f64 * 0.25).collect();
            let r = wilcoxon_signed_rank(&diffs).unwrap();
            prop_assert!((r.p_value - brute_force_wilcoxon(&diffs)).abs() < 1e-12);
        }

        #[test]
        fn sign_test_is_symmetric(a in 0u64..300, b in 0u64..300) {
            prop_assume!(a + b > 0);
            prop_assert_eq!(sign_test(a, b).unwrap().p_value, sign_test(b, a).unwrap().p_value);
        }

        #[test]
        fn sign_test_monotone_in_imbalance(n in 1u64..200, a in 0u64..200) {
            prop_assume!(a < n);
            // moving one success from the smaller to the larger side never raises p
            let lo = a.min(n - a);
            prop_assume!(lo > 0);
            let p_near = sign_test(lo, n - lo).unwrap().p_value;
            let p_far = sign_test(lo - 1, n - lo + 1).unwrap().p_value;
            prop_assert!(p_far <= p_near + 1e-15);
        }

        #[test]
        fn p_values_in_unit_interval(d in proptest::collection::vec(-1.0f64..1.0, 2..40)) {
            for r in [t_test_paired(&d).unwrap(), wilcoxon_signed_rank(&d).unwrap(), sign_test_diffs(&d).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
        }
    }
}
