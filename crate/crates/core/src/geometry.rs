//! Bregman geometries: the generating function Ψ, its mirror map ∇Ψ* and the
//! divergence D_Ψ.
//!
//! * Euclidean: Ψ(u) = ½‖u‖², ∇Ψ*(θ) = θ, D_Ψ(u, v) = ½‖u − v‖².
//! * Shannon: Ψ(u) = ⟨u, log u⟩ on the nonnegative orthant,
//!   ∇Ψ*(θ) = exp(θ − 1), D_Ψ is the generalized Kullback-Leibler divergence.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    #[serde(rename = "kl")]
    ShannonKl,
}

impl Geometry {
    pub fn name(self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::ShannonKl => "kl",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "euc" | "l2" => Ok(Geometry::Euclidean),
            "kl" | "shannon" | "entropy" => Ok(Geometry::ShannonKl),
            other => Err(Error::InvalidArgument(format!("unknown geometry '{other}'"))),
        }
    }

    /// Mirror map ∇Ψ*(θ).
    pub fn grad_psi_star<F: Scalar>(self, theta: &[F]) -> Result<Vec<F>> {
        match self {
            Geometry::Euclidean => Ok(theta.to_vec()),
            Geometry::ShannonKl => theta.iter().map(|&t| guarded_exp(t - F::one())).collect(),
        }
    }

    /// ∇Ψ(u). Infinite (negative) where a Shannon coordinate is zero.
    pub fn grad_psi<F: Scalar>(self, u: &[F]) -> Result<Vec<F>> {
        match self {
            Geometry::Euclidean => Ok(u.to_vec()),
            Geometry::ShannonKl => u
                .iter()
                .map(|&x| {
                    if x < F::zero() {
                        Err(Error::Domain("negative entry under Shannon geometry".into()))
                    } else {
                        Ok(x.ln() + F::one())
                    }
                })
                .collect(),
        }
    }

    /// Ψ(u).
    pub fn psi<F: Scalar>(self, u: &[F]) -> Result<F> {
        match self {
            Geometry::Euclidean => Ok(u.iter().map(|&x| x * x).sum::<F>() * F::lit(0.5)),
            Geometry::ShannonKl => {
                let mut acc = F::zero();
                for &x in u {
                    acc += xlogx(x)?;
                }
                Ok(acc)
            }
        }
    }

    /// D_Ψ(u, v).
    pub fn bregman_div<F: Scalar>(self, u: &[F], v: &[F]) -> Result<F> {
        check_dim(u.len(), v.len())?;
        match self {
            Geometry::Euclidean => Ok(u
                .iter()
                .zip(v)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<F>()
                * F::lit(0.5)),
            Geometry::ShannonKl => {
                let mut acc = F::zero();
                for (&a, &b) in u.iter().zip(v) {
                    if a < F::zero() || b < F::zero() {
                        return Err(Error::Domain("negative entry under Shannon geometry".into()));
                    }
                    if a > F::zero() {
                        if b == F::zero() {
                            return Err(Error::Domain(
                                "KL divergence undefined: u > 0 where v = 0".into(),
                            ));
                        }
                        acc += a * (a / b).ln();
                    }
                    acc += b - a;
                }
                // Rounding can leave a tiny negative value when u ≈ v.
                Ok(acc.max(F::zero()))
            }
        }
    }
}

/// exp(t), refusing arguments whose result would overflow.
pub(crate) fn guarded_exp<F: Scalar>(t: F) -> Result<F> {
    if t.is_nan() {
        return Err(Error::Domain("NaN score".into()));
    }
    if t > F::exp_guard() {
        return Err(Error::Domain(format!("exponent {t} overflows")));
    }
    Ok(t.exp())
}

/// x log x with 0 log 0 = 0.
pub(crate) fn xlogx<F: Scalar>(x: F) -> Result<F> {
    if x < F::zero() {
        Err(Error::Domain("negative entry under Shannon geometry".into()))
    } else if x == F::zero() {
        Ok(F::zero())
    } else {
        Ok(x * x.ln())
    }
}
