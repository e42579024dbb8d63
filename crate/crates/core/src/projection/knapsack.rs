//! Projections onto the knapsack polytope {μ ∈ [0,1]ᵏ : l ≤ ⟨μ,1⟩ ≤ u}.
//!
//! Project onto the cube first; if the budget holds the result is optimal,
//! otherwise the active budget m ∈ {l, u} is enforced with equality.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::scalar::{sum, Scalar};

use super::simplex::{capped_softmax, project_cube};

/// Which branch of the three-case rule produced the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnapsackCase {
    /// The cube projection already satisfies the budget.
    Interior,
    /// Budget clamped at the upper bound.
    Upper,
    /// Budget raised to the lower bound.
    Lower,
}

pub fn project_knapsack<F: Scalar>(
    geometry: Geometry,
    theta: &[F],
    lower: usize,
    upper: usize,
) -> Result<Vec<F>> {
    project_knapsack_with_case(geometry, theta, lower, upper).map(|(mu, _)| mu)
}

pub fn project_knapsack_with_case<F: Scalar>(
    geometry: Geometry,
    theta: &[F],
    lower: usize,
    upper: usize,
) -> Result<(Vec<F>, KnapsackCase)> {
    let k = theta.len();
    if lower > upper {
        return Err(Error::InfeasibleBounds { lower, upper });
    }
    if upper > k {
        return Err(Error::InvalidPolytope(format!(
            "knapsack upper bound {upper} exceeds k = {k}"
        )));
    }
    let cube = project_cube(geometry, theta);
    let total = sum(&cube);
    let (budget, case) = if lower == upper {
        // Equality constraint: the cube projection cannot be trusted to hit it.
        let case = if total > F::from_usize_lossy(upper) {
            KnapsackCase::Upper
        } else {
            KnapsackCase::Lower
        };
        (lower, case)
    } else if total > F::from_usize_lossy(upper) {
        (upper, KnapsackCase::Upper)
    } else if total < F::from_usize_lossy(lower) {
        (lower, KnapsackCase::Lower)
    } else {
        return Ok((cube, KnapsackCase::Interior));
    };
    let mu = match geometry {
        Geometry::Euclidean => project_budget_euclidean(theta, budget),
        Geometry::ShannonKl => project_budget_kl(theta, budget),
    };
    Ok((mu, case))
}

/// Euclidean projection onto {μ ∈ [0,1]ᵏ : ⟨μ,1⟩ = m}: clip(θ − τ, 0, 1).
///
/// τ is located among the sorted breakpoints {θᵢ − 1, θᵢ}, then solved in
/// closed form from the coordinates strictly inside (0, 1).
pub(crate) fn project_budget_euclidean<F: Scalar>(theta: &[F], m: usize) -> Vec<F> {
    let k = theta.len();
    if m == 0 {
        return vec![F::zero(); k];
    }
    if m >= k {
        return vec![F::one(); k];
    }
    let target = F::from_usize_lossy(m);
    let mass = |tau: F| -> F {
        theta
            .iter()
            .map(|&t| (t - tau).max(F::zero()).min(F::one()))
            .sum()
    };
    let mut breaks: Vec<F> = theta.iter().flat_map(|&t| [t - F::one(), t]).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    // mass is nonincreasing in τ: find the last breakpoint with mass ≥ target.
    let (mut lo, mut hi) = (0usize, breaks.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if mass(breaks[mid]) >= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let left = breaks[lo];
    let right = breaks.get(lo + 1).copied().unwrap_or(left + F::one());
    let probe = (left + right) * F::lit(0.5);
    let mut free_sum = F::zero();
    let mut free_count = 0usize;
    let mut ones = 0usize;
    for &t in theta {
        if t - probe >= F::one() {
            ones += 1;
        } else if t - probe > F::zero() {
            free_sum += t;
            free_count += 1;
        }
    }
    let tau = if free_count == 0 {
        left
    } else {
        (free_sum + F::from_usize_lossy(ones) - target) / F::from_usize_lossy(free_count)
    };
    theta
        .iter()
        .map(|&t| (t - tau).max(F::zero()).min(F::one()))
        .collect()
}

/// KL projection onto {μ ∈ [0,1]ᵏ : ⟨μ,1⟩ = m}, through the rescaling
/// α = μ/m onto the simplex capped at 1/m, with scores z = θ − log m.
pub(crate) fn project_budget_kl<F: Scalar>(theta: &[F], m: usize) -> Vec<F> {
    let k = theta.len();
    if m == 0 {
        return vec![F::zero(); k];
    }
    if m >= k {
        return vec![F::one(); k];
    }
    let mf = F::from_usize_lossy(m);
    let log_m = mf.ln();
    let z: Vec<F> = theta.iter().map(|&t| t - log_m).collect();
    capped_softmax(&z, F::one() / mf)
        .into_iter()
        .map(|a| (a * mf).min(F::one()))
        .collect()
}
