//! Pool-adjacent-violators for the decreasing chain v₁ ≥ v₂ ≥ … ≥ vₙ.
//!
//! The solver is generic over the per-block statistic so the same sweep
//! serves least squares (block mean) and the entropic variant used by the KL
//! permutahedron projection (block log-sum-exp).

use crate::scalar::Scalar;

/// Sufficient statistic of a pooled block.
pub(crate) trait PoolStat<F>: Sized {
    fn merge(&mut self, other: Self);
    /// Optimal common value of the block.
    fn value(&self) -> F;
}

/// Runs PAV and returns the fitted value of every position.
pub(crate) fn pav_decreasing<F: Scalar, S: PoolStat<F>>(stats: impl IntoIterator<Item = S>) -> Vec<F> {
    // (block length, statistic)
    let mut blocks: Vec<(usize, S)> = Vec::new();
    for stat in stats {
        blocks.push((1, stat));
        while blocks.len() >= 2 {
            let n = blocks.len();
            if blocks[n - 2].1.value() >= blocks[n - 1].1.value() {
                break;
            }
            let (len, last) = blocks.pop().unwrap();
            let prev = blocks.last_mut().unwrap();
            prev.0 += len;
            prev.1.merge(last);
        }
    }
    let mut out = Vec::new();
    for (len, stat) in &blocks {
        let v = stat.value();
        out.extend(std::iter::repeat_n(v, *len));
    }
    out
}

pub(crate) struct MeanStat<F> {
    sum: F,
    count: F,
}

impl<F: Scalar> MeanStat<F> {
    pub(crate) fn new(y: F) -> Self {
        Self { sum: y, count: F::one() }
    }
}

impl<F: Scalar> PoolStat<F> for MeanStat<F> {
    fn merge(&mut self, other: Self) {
        self.sum += other.sum;
        self.count += other.count;
    }

    fn value(&self) -> F {
        self.sum / self.count
    }
}

/// Least-squares fit of `y` by a nonincreasing sequence.
pub fn isotonic_regression_decreasing<F: Scalar>(y: &[F]) -> Vec<F> {
    pav_decreasing(y.iter().map(|&v| MeanStat::new(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(isotonic_regression_decreasing(&[3.0, 2.0, 1.0]), vec![3.0, 2.0, 1.0]);
        assert_eq!(isotonic_regression_decreasing(&[1.0, 2.0]), vec![1.5, 1.5]);
        let fit = isotonic_regression_decreasing(&[0.5, 0.8, -0.2]);
        assert_abs_diff_eq!(fit[0], 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(fit[1], 0.65, epsilon = 1e-15);
        assert_eq!(fit[2], -0.2);
        assert!(isotonic_regression_decreasing::<f64>(&[]).is_empty());
    }

    #[test]
    fn cascading_merges() {
        let fit = isotonic_regression_decreasing(&[1.0, 0.0, 5.0]);
        assert_abs_diff_eq!(fit[0], 2.0, epsilon = 1e-15);
        assert!(fit.windows(2).all(|w| w[0] == w[1]));
    }

    fn sq_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    proptest! {
        #[test]
        fn output_is_monotone_and_optimal(y in prop::collection::vec(-10.0f64..10.0, 1..12),
                                          probe in prop::collection::vec(-10.0f64..10.0, 12)) {
            let fit = isotonic_regression_decreasing(&y);
            prop_assert!(fit.windows(2).all(|w| w[0] >= w[1] - 1e-12));
            // Block averages preserve the total.
            let total: f64 = y.iter().sum();
            let fitted: f64 = fit.iter().sum();
            prop_assert!((total - fitted).abs() < 1e-9);
            // Any other nonincreasing candidate does no better.
            let mut cand: Vec<f64> = probe[..y.len()].to_vec();
            cand.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assert!(sq_err(&fit, &y) <= sq_err(&cand, &y) + 1e-9);
            // Optimality: the residual is orthogonal to the fit.
            let inner: f64 = fit.iter().zip(&y).map(|(f, v)| f * (v - f)).sum();
            prop_assert!(inner.abs() < 1e-8);
        }
    }
}
