//! Projections onto the permutahedron P(w) = conv{w_σ : σ a permutation}.
//!
//! Both geometries reduce to sorting θ followed by a decreasing isotonic
//! regression on the sorted sequence.

use crate::error::{check_dim, Error, Result};
use crate::polytope::argsort_desc;
use crate::scalar::Scalar;

use super::isotonic::{pav_decreasing, MeanStat, PoolStat};
use super::simplex::log_add_exp;

fn check_weights<F: Scalar>(theta: &[F], w: &[F]) -> Result<()> {
    check_dim(w.len(), theta.len())?;
    if w.windows(2).any(|p| p[0] < p[1]) {
        return Err(Error::InvalidPolytope(
            "permutahedron weights must be sorted in descending order".into(),
        ));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite scores".into()));
    }
    Ok(())
}

/// μ_{π(i)} = θ_{π(i)} − iso(θ_π − w)ᵢ, with π sorting θ in descending order.
pub fn project_permutahedron_euclidean<F: Scalar>(theta: &[F], w: &[F]) -> Result<Vec<F>> {
    check_weights(theta, w)?;
    let order = argsort_desc(theta);
    let dual = pav_decreasing(order.iter().zip(w).map(|(&i, &wi)| MeanStat::new(theta[i] - wi)));
    let mut mu = vec![F::zero(); theta.len()];
    for (pos, &i) in order.iter().enumerate() {
        mu[i] = theta[i] - dual[pos];
    }
    Ok(mu)
}

/// Block statistic of the entropic dual: value = LSE(θ_B) − log Σ_B w.
struct LseStat<F> {
    lse: F,
    weight: F,
}

impl<F: Scalar> PoolStat<F> for LseStat<F> {
    fn merge(&mut self, other: Self) {
        self.lse = log_add_exp(self.lse, other.lse);
        self.weight += other.weight;
    }

    fn value(&self) -> F {
        self.lse - self.weight.ln()
    }
}

/// argmin_{μ ∈ P(w)} ⟨μ, log μ⟩ − ⟨μ, θ⟩. Requires strictly positive weights.
pub fn project_permutahedron_kl<F: Scalar>(theta: &[F], w: &[F]) -> Result<Vec<F>> {
    check_weights(theta, w)?;
    if w.iter().any(|&x| x <= F::zero()) {
        return Err(Error::Domain(
            "KL projection onto the permutahedron needs positive weights".into(),
        ));
    }
    let order = argsort_desc(theta);
    let dual = pav_decreasing(order.iter().zip(w).map(|(&i, &wi)| LseStat {
        lse: theta[i],
        weight: wi,
    }));
    let mut mu = vec![F::zero(); theta.len()];
    for (pos, &i) in order.iter().enumerate() {
        mu[i] = (theta[i] - dual[pos]).exp();
    }
    Ok(mu)
}
