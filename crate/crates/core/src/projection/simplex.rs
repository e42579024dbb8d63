//! Projections onto the probability simplex (sparsemax / softmax), the unit
//! cube and row-stochastic matrices.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::scalar::Scalar;

/// Euclidean projection onto the simplex: μᵢ = max(θᵢ − τ, 0) with Σμ = 1.
pub fn project_simplex_euclidean<F: Scalar>(theta: &[F]) -> Vec<F> {
    if theta.is_empty() {
        return Vec::new();
    }
    let mut sorted = theta.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = F::zero();
    let mut tau = F::zero();
    for (i, &z) in sorted.iter().enumerate() {
        cumsum += z;
        let candidate = (cumsum - F::one()) / F::from_usize_lossy(i + 1);
        if z > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    theta.iter().map(|&t| (t - tau).max(F::zero())).collect()
}

/// KL projection onto the simplex, i.e. softmax(θ).
pub fn project_simplex_kl<F: Scalar>(theta: &[F]) -> Vec<F> {
    if theta.is_empty() {
        return Vec::new();
    }
    let m = theta.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = theta.iter().map(|&t| (t - m).exp()).collect();
    let z: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Euclidean: clip(θ, 0, 1). Shannon: min(1, e^{θ−1}).
pub fn project_cube<F: Scalar>(geometry: Geometry, theta: &[F]) -> Vec<F> {
    match geometry {
        Geometry::Euclidean => theta.iter().map(|&t| t.max(F::zero()).min(F::one())).collect(),
        Geometry::ShannonKl => theta
            .iter()
            .map(|&t| if t >= F::one() { F::one() } else { (t - F::one()).exp() })
            .collect(),
    }
}

/// Row-wise simplex projections of a row-major k × k matrix.
pub fn project_rowstochastic<F: Scalar>(geometry: Geometry, theta: &[F], k: usize) -> Result<Vec<F>> {
    if theta.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            got: theta.len(),
        });
    }
    let mut out = Vec::with_capacity(k * k);
    for row in theta.chunks(k.max(1)).take(k) {
        match geometry {
            Geometry::Euclidean => out.extend(project_simplex_euclidean(row)),
            Geometry::ShannonKl => out.extend(project_simplex_kl(row)),
        }
    }
    Ok(out)
}

/// argmin_{α ∈ Δ, α ≤ cap} ⟨α, log α⟩ − ⟨α, z⟩: softmax with an upper cap.
///
/// Sorting z descending, the `c` largest entries sit at the cap and the rest
/// follow a rescaled softmax; `c` is the smallest count for which the first
/// uncapped entry stays below the cap.
pub(crate) fn capped_softmax<F: Scalar>(z: &[F], cap: F) -> Vec<F> {
    let n = z.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap_or(Ordering::Equal));
    // suffix log-sum-exp over the sorted sequence
    let mut suffix = vec![F::neg_infinity(); n + 1];
    for pos in (0..n).rev() {
        suffix[pos] = log_add_exp(suffix[pos + 1], z[order[pos]]);
    }
    let log_cap = cap.ln();
    let mut out = vec![cap; n];
    for c in 0..n {
        let remaining = F::one() - F::from_usize_lossy(c) * cap;
        if remaining <= F::zero() {
            break;
        }
        let shift = remaining.ln() - suffix[c];
        if z[order[c]] + shift <= log_cap {
            for &i in &order[c..] {
                out[i] = (z[i] + shift).exp().min(cap);
            }
            return out;
        }
    }
    // Every entry capped: only possible when cap · n = 1.
    out
}

pub(crate) fn log_add_exp<F: Scalar>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn sparsemax_examples() {
        close(&project_simplex_euclidean(&[0.0, 0.0]), &[0.5, 0.5], 0.0);
        close(&project_simplex_euclidean(&[1.0, 0.0]), &[1.0, 0.0], 0.0);
        close(&project_simplex_euclidean(&[0.6, 0.4, -5.0]), &[0.6, 0.4, 0.0], 1e-15);
    }

    #[test]
    fn softmax_examples() {
        close(&project_simplex_kl(&[0.0, 0.0]), &[0.5, 0.5], 0.0);
        for c in [-800.0, 0.0, 3.5, 900.0] {
            close(&project_simplex_kl(&[c, c, c]), &[1.0 / 3.0; 3], 1e-15);
        }
        close(&project_simplex_kl(&[2f64.ln(), 0.0]), &[2.0 / 3.0, 1.0 / 3.0], 1e-15);
    }

    #[test]
    fn cube_examples() {
        close(&project_cube(Geometry::Euclidean, &[1.5, -0.3, 0.7]), &[1.0, 0.0, 0.7], 0.0);
        let kl = project_cube(Geometry::ShannonKl, &[1.0, 0.0]);
        assert_eq!(kl[0], 1.0);
        assert_abs_diff_eq!(kl[1], 0.367879441, epsilon = 1e-9);
        close(&project_cube(Geometry::Euclidean, &[0.2, 0.8]), &[0.2, 0.8], 0.0);
        assert_eq!(project_cube(Geometry::ShannonKl, &[1e6]), vec![1.0]);
    }

    #[test]
    fn rowstochastic_examples() {
        for g in [Geometry::Euclidean, Geometry::ShannonKl] {
            close(&project_rowstochastic(g, &[0.0; 4], 2).unwrap(), &[0.5; 4], 0.0);
        }
        close(
            &project_rowstochastic(Geometry::Euclidean, &[1.0, 0.0, 0.0, 0.0], 2).unwrap(),
            &[1.0, 0.0, 0.5, 0.5],
            0.0,
        );
        let l2 = 2f64.ln();
        close(
            &project_rowstochastic(Geometry::ShannonKl, &[l2, 0.0, l2, 0.0], 2).unwrap(),
            &[2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0],
            1e-15,
        );
        assert!(project_rowstochastic(Geometry::Euclidean, &[0.0; 5], 2).is_err());
    }

    #[test]
    fn capped_softmax_respects_cap() {
        let out = capped_softmax(&[5.0, 0.0, 0.0, 0.0], 0.5);
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-15);
        for &o in &out[1..] {
            assert_abs_diff_eq!(o, 0.5 / 3.0, epsilon = 1e-15);
        }
        // a loose cap gives plain softmax
        close(&capped_softmax(&[1.0, 0.0], 1.0), &project_simplex_kl(&[1.0, 0.0]), 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn sparsemax_kkt(theta in prop::collection::vec(-10.0f64..10.0, 1..10)) {
            let mu = project_simplex_euclidean(&theta);
            let s: f64 = mu.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            // θ − μ is constant (= τ) on the support and ≤ τ off it.
            let support: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 0.0).collect();
            let tau = theta[support[0]] - mu[support[0]];
            for i in 0..mu.len() {
                if mu[i] > 0.0 {
                    prop_assert!((theta[i] - mu[i] - tau).abs() < 1e-12);
                } else {
                    prop_assert!(theta[i] <= tau + 1e-12);
                }
            }
        }

        #[test]
        fn capped_softmax_feasible(z in prop::collection::vec(-5.0f64..5.0, 2..8), m in 1usize..8) {
            let n = z.len();
            let m = m.min(n);
            let cap = 1.0 / m as f64;
            let a = capped_softmax(&z, cap);
            let s: f64 = a.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(a.iter().all(|&x| x <= cap + 1e-15 && x > 0.0));
        }
    }
}
