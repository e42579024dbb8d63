//! Projection-based Fenchel-Young losses, their residual gradients and the
//! compositional loss D_Ψ(t, P(θ)).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Geometry;
use crate::polytope::Polytope;
use crate::projection::{project_with, ProjectOptions, ProjectionResult};
use crate::scalar::{dot, Scalar};

/// Tolerance used to decide whether a target lies in the projection set.
pub const TARGET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossEval<F> {
    pub value: F,
    /// μ − target.
    pub gradient: Vec<F>,
    pub projection: ProjectionResult<F>,
}

/// S(θ, t) = Ψ(t) − Ψ(μ) − ⟨θ, t − μ⟩ with μ = P(θ); gradient μ − t.
pub fn fy_loss<F: Scalar>(polytope: &Polytope<F>, geometry: Geometry, theta: &[F], target: &[F]) -> Result<LossEval<F>> {
    fy_loss_with(polytope, geometry, theta, target, &ProjectOptions::default())
}

pub fn fy_loss_with<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    target: &[F],
    opts: &ProjectOptions,
) -> Result<LossEval<F>> {
    check_dim(polytope.ambient_dim(), theta.len())?;
    check_dim(polytope.ambient_dim(), target.len())?;
    if matches!(polytope, Polytope::FullSpace(_)) && geometry == Geometry::Euclidean {
        return squared_loss(theta, target);
    }
    if !polytope.contains(target, F::lit(TARGET_TOL)) {
        return Err(Error::TargetOutsideSet);
    }
    let mut eval = fy_unchecked(polytope, geometry, theta, target, opts)?;
    // exact value is nonnegative; rounding may not be
    eval.value = eval.value.max(F::zero());
    Ok(eval)
}

/// The same formula as [`fy_loss_with`] without requiring the target to lie in
/// the set. Still convex in θ with gradient μ − t, but the value may be
/// negative when the target is outside.
pub fn fy_loss_relaxed<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    target: &[F],
    opts: &ProjectOptions,
) -> Result<LossEval<F>> {
    check_dim(polytope.ambient_dim(), theta.len())?;
    check_dim(polytope.ambient_dim(), target.len())?;
    if matches!(polytope, Polytope::FullSpace(_)) && geometry == Geometry::Euclidean {
        return squared_loss(theta, target);
    }
    fy_unchecked(polytope, geometry, theta, target, opts)
}

fn fy_unchecked<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    target: &[F],
    opts: &ProjectOptions,
) -> Result<LossEval<F>> {
    let projection = project_with(polytope, geometry, theta, opts)?;
    fy_loss_at(geometry, theta, target, projection)
}

/// The loss evaluated at an already computed projection of θ.
pub fn fy_loss_at<F: Scalar>(geometry: Geometry, theta: &[F], target: &[F], projection: ProjectionResult<F>) -> Result<LossEval<F>> {
    check_dim(theta.len(), target.len())?;
    check_dim(theta.len(), projection.mu.len())?;
    let mu = &projection.mu;
    let psi_target = match geometry {
        Geometry::Euclidean => geometry.psi(target)?,
        // entries within the feasibility tolerance below zero count as zero
        Geometry::ShannonKl => {
            let clamped: Vec<F> = target.iter().map(|x| x.max(F::zero())).collect();
            geometry.psi(&clamped)?
        }
    };
    let psi_mu = geometry.psi(mu)?;
    let diff: Vec<F> = target.iter().zip(mu).map(|(&t, &m)| t - m).collect();
    let value = psi_target - psi_mu - dot(theta, &diff);
    let gradient = mu.iter().zip(target).map(|(&m, &t)| m - t).collect();
    Ok(LossEval {
        value,
        gradient,
        projection,
    })
}

/// ½‖t − θ‖², gradient θ − t.
pub fn squared_loss<F: Scalar>(theta: &[F], target: &[F]) -> Result<LossEval<F>> {
    check_dim(theta.len(), target.len())?;
    let gradient: Vec<F> = theta.iter().zip(target).map(|(&a, &b)| a - b).collect();
    let value = dot(&gradient, &gradient) * F::lit(0.5);
    Ok(LossEval {
        value,
        gradient,
        projection: ProjectionResult::closed_form(theta.to_vec()),
    })
}

/// D_Ψ(t, P(θ)). Not convex in θ in general, so only the value is returned.
pub fn compositional_loss<F: Scalar>(polytope: &Polytope<F>, geometry: Geometry, theta: &[F], target: &[F]) -> Result<F> {
    compositional_loss_with(polytope, geometry, theta, target, &ProjectOptions::default())
}

pub fn compositional_loss_with<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    target: &[F],
    opts: &ProjectOptions,
) -> Result<F> {
    check_dim(polytope.ambient_dim(), target.len())?;
    if !polytope.contains(target, F::lit(TARGET_TOL)) {
        return Err(Error::TargetOutsideSet);
    }
    let mu = project_with(polytope, geometry, theta, opts)?.mu;
    match geometry {
        Geometry::Euclidean => geometry.bregman_div(target, &mu),
        Geometry::ShannonKl => {
            let clamped: Vec<F> = target.iter().map(|x| x.max(F::zero())).collect();
            geometry.bregman_div(&clamped, &mu)
        }
    }
}
