//! Projections onto the order simplex {1 ≥ μ₁ ≥ … ≥ μ_d ≥ 0}.

use crate::scalar::Scalar;

use super::isotonic::isotonic_regression_decreasing;

/// clip(iso(θ), 0, 1).
pub fn project_order_simplex_euclidean<F: Scalar>(theta: &[F]) -> Vec<F> {
    isotonic_regression_decreasing(theta)
        .into_iter()
        .map(|v| v.max(F::zero()).min(F::one()))
        .collect()
}

/// min(1, exp(iso(θ) − 1)).
///
/// The entropic objective is separable with a shared convex term, so its
/// isotonic solution pools the same blocks as least squares on θ.
pub fn project_order_simplex_kl<F: Scalar>(theta: &[F]) -> Vec<F> {
    isotonic_regression_decreasing(theta)
        .into_iter()
        .map(|v| if v >= F::one() { F::one() } else { (v - F::one()).exp() })
        .collect()
}
