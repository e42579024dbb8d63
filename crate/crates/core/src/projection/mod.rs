//! Bregman projections P_C^Ψ(θ) = argmin_{u ∈ C} D_Ψ(u, ∇Ψ*(θ)).

mod birkhoff;
mod frank_wolfe;
mod isotonic;
mod knapsack;
mod order;
mod permutahedron;
mod simplex;

pub use birkhoff::project_birkhoff;
pub use frank_wolfe::project_fw;
pub use isotonic::isotonic_regression_decreasing;
pub use knapsack::{project_knapsack, project_knapsack_with_case, KnapsackCase};
pub use order::{project_order_simplex_euclidean, project_order_simplex_kl};
pub use permutahedron::{project_permutahedron_euclidean, project_permutahedron_kl};
pub use simplex::{project_cube, project_rowstochastic, project_simplex_euclidean, project_simplex_kl};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::Geometry;
use crate::polytope::Polytope;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult<F> {
    pub mu: Vec<F>,
    /// 0 for closed-form routines.
    pub iterations: usize,
    /// Constraint violation reported by iterative solvers, 0 otherwise.
    pub residual: F,
}

impl<F: Scalar> ProjectionResult<F> {
    pub fn closed_form(mu: Vec<F>) -> Self {
        Self {
            mu,
            iterations: 0,
            residual: F::zero(),
        }
    }
}

/// Stopping rule for the iterative (Birkhoff) solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProjectOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

/// Projects with the default solver options.
pub fn project<F: Scalar>(polytope: &Polytope<F>, geometry: Geometry, theta: &[F]) -> Result<ProjectionResult<F>> {
    project_with(polytope, geometry, theta, &ProjectOptions::default())
}

pub fn project_with<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    opts: &ProjectOptions,
) -> Result<ProjectionResult<F>> {
    polytope.validate()?;
    check_dim(polytope.ambient_dim(), theta.len())?;
    if theta.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let closed = ProjectionResult::closed_form;
    let euclid = geometry == Geometry::Euclidean;
    match polytope {
        Polytope::Simplex(_) => Ok(closed(if euclid {
            project_simplex_euclidean(theta)
        } else {
            project_simplex_kl(theta)
        })),
        Polytope::Cube(_) => Ok(closed(project_cube(geometry, theta))),
        Polytope::Knapsack { lower, upper, .. } => Ok(closed(project_knapsack(geometry, theta, *lower, *upper)?)),
        Polytope::Birkhoff(k) => project_birkhoff(geometry, theta, *k, opts),
        Polytope::RowStochastic(k) => Ok(closed(project_rowstochastic(geometry, theta, *k)?)),
        Polytope::Permutahedron(w) => Ok(closed(if euclid {
            project_permutahedron_euclidean(theta, w)?
        } else {
            project_permutahedron_kl(theta, w)?
        })),
        Polytope::OrderSimplex(_) => Ok(closed(if euclid {
            project_order_simplex_euclidean(theta)
        } else {
            project_order_simplex_kl(theta)
        })),
        Polytope::FullSpace(_) => {
            if euclid {
                Ok(closed(theta.to_vec()))
            } else {
                Err(Error::Unbounded(
                    "the Shannon projection onto the full space is undefined".into(),
                ))
            }
        }
    }
}
