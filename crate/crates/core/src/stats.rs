//! Statistics helpers for the Monte Carlo verifiers: standard errors for
//! frequency and mean estimates, and a pooled Pearson goodness-of-fit
//! statistic with its reference quantile.

use crate::error::{Error, Result};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard error of an empirical frequency from `reps` Bernoulli trials.
pub fn bernoulli_se(p_hat: f64, reps: usize) -> f64 {
    (p_hat * (1.0 - p_hat) / reps as f64).sqrt()
}

/// Standard error of a sample mean given the sample variance.
pub fn mean_se(sample_var: f64, reps: usize) -> f64 {
    (sample_var / reps as f64).sqrt()
}

/// Two-pass sample mean and unbiased sample variance.
pub fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let nf = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / nf;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (nf - 1.0))
}

/// A Pearson statistic after pooling sparse cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledChiSquare {
    /// Sum of (observed - expected)^2 / expected over kept cells.
    pub statistic: f64,
    /// Degrees of freedom: kept cells minus one.
    pub dof: usize,
    /// How many original cells were merged into the pooled bucket.
    pub pooled_cells: usize,
}

/// Pearson goodness-of-fit statistic of observed counts against expected
/// counts, pooling every cell whose expected count is below `min_expected`
/// into a single bucket first (the classic validity rule for the
/// chi-square approximation).
pub fn chi_square_pooled(
    observed: &[u64],
    expected: &[f64],
    min_expected: f64,
) -> Result<PooledChiSquare> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            left: format!("{} observed cells", observed.len()),
            right: format!("{} expected cells", expected.len()),
        });
    }
    if expected.iter().any(|&e| e < 0.0 || !e.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "expected",
            value: f64::NAN,
            expected: "finite nonnegative expected counts",
        });
    }
    let mut statistic = 0.0;
    let mut kept = 0usize;
    let mut pooled_cells = 0usize;
    let mut pooled_obs = 0u64;
    let mut pooled_exp = 0.0f64;
    for (&o, &e) in observed.iter().zip(expected) {
        if e < min_expected {
            pooled_cells += 1;
            pooled_obs += o;
            pooled_exp += e;
        } else {
            kept += 1;
            let diff = o as f64 - e;
            statistic += diff * diff / e;
        }
    }
    if pooled_cells > 0 && pooled_exp > 0.0 {
        kept += 1;
        let diff = pooled_obs as f64 - pooled_exp;
        statistic += diff * diff / pooled_exp;
    }
    if kept < 2 {
        return Err(Error::InvalidParameter {
            name: "min_expected",
            value: min_expected,
            expected: "at least two cells remaining after pooling",
        });
    }
    Ok(PooledChiSquare { statistic, dof: kept - 1, pooled_cells })
}

/// Upper-tail critical value of the chi-square distribution: the point
/// exceeded with probability `upper_tail` under `dof` degrees of freedom.
pub fn chi_square_critical(dof: usize, upper_tail: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidParameter {
            name: "dof",
            value: 0.0,
            expected: "dof >= 1",
        });
    }
    if !(upper_tail > 0.0 && upper_tail < 1.0) {
        return Err(Error::InvalidParameter {
            name: "upper_tail",
            value: upper_tail,
            expected: "upper_tail in (0, 1)",
        });
    }
    let dist = ChiSquared::new(dof as f64).map_err(|_| Error::InvalidParameter {
        name: "dof",
        value: dof as f64,
        expected: "valid chi-square degrees of freedom",
    })?;
    Ok(dist.inverse_cdf(1.0 - upper_tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_errors() {
        assert!((bernoulli_se(0.5, 10_000) - 0.005).abs() < 1e-15);
        assert_eq!(bernoulli_se(0.0, 100), 0.0);
        assert!((mean_se(4.0, 400) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mean_var_two_pass() {
        let (m, v) = sample_mean_var(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((m - 5.0).abs() < 1e-15);
        // sum of squares 32 over n-1 = 7
        assert!((v - 32.0 / 7.0).abs() < 1e-15);
        let (m1, v1) = sample_mean_var(&[3.5]);
        assert_eq!((m1, v1), (3.5, 0.0));
        assert!(sample_mean_var(&[]).0.is_nan());
    }

    #[test]
    fn pearson_statistic_hand_example() {
        // fair-die example: observed (8,9,19,6,8,10), expected 10 each
        let obs = [8u64, 9, 19, 6, 8, 10];
        let exp = [10.0; 6];
        let r = chi_square_pooled(&obs, &exp, 5.0).unwrap();
        assert_eq!(r.dof, 5);
        assert_eq!(r.pooled_cells, 0);
        let by_hand = (4.0 + 1.0 + 81.0 + 16.0 + 4.0 + 0.0) / 10.0;
        assert!((r.statistic - by_hand).abs() < 1e-12);
    }

    #[test]
    fn pooling_merges_sparse_cells() {
        let obs = [50u64, 45, 3, 2];
        let exp = [50.0, 44.0, 3.0, 3.0];
        let r = chi_square_pooled(&obs, &exp, 5.0).unwrap();
        assert_eq!(r.pooled_cells, 2);
        assert_eq!(r.dof, 2);
        // pooled bucket: observed 5 vs expected 6
        let by_hand = 0.0 + 1.0 / 44.0 + 1.0 / 6.0;
        assert!((r.statistic - by_hand).abs() < 1e-12);

        assert!(chi_square_pooled(&obs, &exp[..3], 5.0).is_err());
        assert!(chi_square_pooled(&[1, 1], &[0.5, 0.5], 5.0).is_err());
    }

    #[test]
    fn chi_square_reference_quantiles() {
        // textbook values
        let q = chi_square_critical(1, 0.05).unwrap();
        assert!((q - 3.841458820694124).abs() < 1e-9);
        let q = chi_square_critical(5, 0.01).unwrap();
        assert!((q - 15.08627246938899).abs() < 1e-8);
        assert!(chi_square_critical(0, 0.05).is_err());
        assert!(chi_square_critical(3, 0.0).is_err());
    }
}
