//! Pairwise Frank-Wolfe for Euclidean projections onto any bounded set with
//! an LMO. Used to cross-check the dedicated routines.

use crate::error::{check_dim, Error, Result};
use crate::polytope::Polytope;
use crate::scalar::{dot, Scalar};

use super::ProjectionResult;

/// Minimizes ½‖μ − θ‖² over `polytope`; stops once the FW gap is ≤ `tol`.
pub fn project_fw<F: Scalar>(
    polytope: &Polytope<F>,
    theta: &[F],
    tol: F,
    max_iter: usize,
) -> Result<ProjectionResult<F>> {
    polytope.validate()?;
    if !polytope.is_bounded() {
        return Err(Error::Unbounded("Frank-Wolfe needs a bounded set".into()));
    }
    check_dim(polytope.ambient_dim(), theta.len())?;
    let n = theta.len();

    let start = polytope.lmo(theta)?.point;
    let mut active: Vec<(Vec<F>, F)> = vec![(start.clone(), F::one())];
    let mut mu = start;
    let mut gap = F::infinity();

    for it in 0..max_iter {
        let neg_grad: Vec<F> = (0..n).map(|i| theta[i] - mu[i]).collect();
        let s = polytope.lmo(&neg_grad)?.point;
        gap = dot(&neg_grad, &s) - dot(&neg_grad, &mu);
        if gap <= tol {
            return Ok(ProjectionResult {
                mu,
                iterations: it,
                residual: gap.max(F::zero()),
            });
        }
        // away vertex: worst active atom along the descent direction
        let (away, _) = active
            .iter()
            .enumerate()
            .map(|(j, (v, _))| (j, dot(&neg_grad, v)))
            .fold((0, F::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best });
        let d: Vec<F> = (0..n).map(|i| s[i] - active[away].0[i]).collect();
        let dd = dot(&d, &d);
        if dd <= F::zero() {
            // s already carries the largest correlation among active atoms
            return Ok(ProjectionResult {
                mu,
                iterations: it,
                residual: gap,
            });
        }
        let max_step = active[away].1;
        let step = (dot(&neg_grad, &d) / dd).min(max_step).max(F::zero());
        for i in 0..n {
            mu[i] += step * d[i];
        }
        active[away].1 -= step;
        match active.iter().position(|(v, _)| *v == s) {
            Some(j) => active[j].1 += step,
            None => active.push((s, step)),
        }
        if step >= max_step {
            active.swap_remove(away);
        }
    }
    Err(Error::NotConverged {
        best: mu.iter().map(|x| x.as_f64()).collect(),
        residual: gap.as_f64(),
        iterations: max_iter,
    })
}
