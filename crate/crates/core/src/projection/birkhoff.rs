//! Projections onto the Birkhoff polytope of doubly stochastic matrices.
//!
//! KL: Sinkhorn scaling of e^{θ−1} (log-domain potentials when scores are
//! large), finished by Newton's method on the dual when scaling stalls.
//! Euclidean: Dykstra's alternating projections between the
//! row-stochastic and column-stochastic sets.

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::polytope::{max_col_violation, max_row_violation};
use crate::scalar::{max_abs_diff, Scalar};

use super::simplex::{log_add_exp, project_simplex_euclidean};
use super::{ProjectOptions, ProjectionResult};

/// Scores above this magnitude switch Sinkhorn to log-domain updates.
const LOG_DOMAIN_THRESHOLD: f64 = 30.0;
/// Sinkhorn sweeps before switching to Newton polishing of the dual.
const SWEEPS_BEFORE_NEWTON: usize = 500;

pub fn project_birkhoff<F: Scalar>(
    geometry: Geometry,
    theta: &[F],
    k: usize,
    opts: &ProjectOptions,
) -> Result<ProjectionResult<F>> {
    if theta.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            got: theta.len(),
        });
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite score matrix".into()));
    }
    if k == 0 {
        return Ok(ProjectionResult::closed_form(Vec::new()));
    }
    match geometry {
        Geometry::ShannonKl => project_kl(theta, k, opts),
        Geometry::Euclidean => dykstra(theta, k, opts),
    }
}

fn not_converged<F: Scalar>(best: &[F], residual: F, iterations: usize) -> Error {
    Error::NotConverged {
        best: best.iter().map(|x| x.as_f64()).collect(),
        residual: residual.as_f64(),
        iterations,
    }
}

/// State of a KL solver: log μᵢⱼ = θᵢⱼ + fᵢ + gⱼ.
struct KlState<F> {
    mu: Vec<F>,
    f: Vec<F>,
    residual: F,
    iterations: usize,
}

fn project_kl<F: Scalar>(theta: &[F], k: usize, opts: &ProjectOptions) -> Result<ProjectionResult<F>> {
    let tol = F::lit(opts.tol);
    let budget = opts.max_iter.min(SWEEPS_BEFORE_NEWTON);
    let large = theta.iter().any(|x| x.abs() > F::lit(LOG_DOMAIN_THRESHOLD));
    let state = match (!large).then(|| sinkhorn(theta, k, tol, budget)).flatten() {
        Some(s) => s,
        None => sinkhorn_log(theta, k, tol, budget),
    };
    let state = if state.residual <= tol || state.iterations >= opts.max_iter {
        state
    } else {
        let remaining = opts.max_iter - state.iterations;
        let polished = newton(theta, k, tol, &state.f, remaining);
        if polished.residual < state.residual {
            KlState {
                iterations: state.iterations + polished.iterations,
                ..polished
            }
        } else {
            state
        }
    };
    if state.residual <= tol {
        Ok(ProjectionResult {
            mu: state.mu,
            iterations: state.iterations,
            residual: state.residual,
        })
    } else {
        Err(not_converged(&state.mu, state.residual, opts.max_iter))
    }
}

/// Plain Sinkhorn scaling of e^{θ−1}. `None` when the scalings leave the
/// floating point range.
fn sinkhorn<F: Scalar>(theta: &[F], k: usize, tol: F, budget: usize) -> Option<KlState<F>> {
    let kernel: Vec<F> = theta.iter().map(|&t| (t - F::one()).exp()).collect();
    let mut row_scale = vec![F::one(); k];
    let mut col_scale = vec![F::one(); k];
    let assemble = |r: &[F], c: &[F]| -> Vec<F> {
        (0..k * k).map(|idx| r[idx / k] * kernel[idx] * c[idx % k]).collect()
    };
    let mut mu = assemble(&row_scale, &col_scale);
    let mut residual = F::infinity();
    let mut sweeps = 0;
    while sweeps < budget {
        sweeps += 1;
        for i in 0..k {
            let s: F = (0..k).map(|j| kernel[i * k + j] * col_scale[j]).sum();
            row_scale[i] = F::one() / s;
        }
        for j in 0..k {
            let s: F = (0..k).map(|i| row_scale[i] * kernel[i * k + j]).sum();
            col_scale[j] = F::one() / s;
        }
        mu = assemble(&row_scale, &col_scale);
        residual = max_row_violation(&mu, k).max(max_col_violation(&mu, k));
        if !residual.is_finite() || row_scale.iter().chain(&col_scale).any(|s| !s.is_finite() || *s <= F::zero()) {
            return None;
        }
        if residual <= tol {
            break;
        }
    }
    // μ = rᵢ e^{θ−1} cⱼ, so fᵢ = log rᵢ − 1 up to the shift absorbed by g.
    let f = row_scale.iter().map(|r| r.ln() - F::one()).collect();
    Some(KlState {
        mu,
        f,
        residual,
        iterations: sweeps,
    })
}

fn sinkhorn_log<F: Scalar>(theta: &[F], k: usize, tol: F, budget: usize) -> KlState<F> {
    let mut f = vec![F::zero(); k];
    let mut g = vec![F::zero(); k];
    let assemble = |f: &[F], g: &[F]| -> Vec<F> {
        (0..k * k)
            .map(|idx| (theta[idx] + f[idx / k] + g[idx % k]).exp())
            .collect()
    };
    let mut mu = assemble(&f, &g);
    let mut residual = F::infinity();
    let mut sweeps = 0;
    while sweeps < budget {
        sweeps += 1;
        for i in 0..k {
            let lse = (0..k).fold(F::neg_infinity(), |acc, j| log_add_exp(acc, theta[i * k + j] + g[j]));
            f[i] = -lse;
        }
        for j in 0..k {
            let lse = (0..k).fold(F::neg_infinity(), |acc, i| log_add_exp(acc, theta[i * k + j] + f[i]));
            g[j] = -lse;
        }
        mu = assemble(&f, &g);
        residual = max_row_violation(&mu, k).max(max_col_violation(&mu, k));
        if residual <= tol {
            break;
        }
    }
    KlState {
        mu,
        f,
        residual,
        iterations: sweeps,
    }
}

/// Semi-dual h(f) = Σⱼ LSEᵢ(θᵢⱼ + fᵢ) − Σᵢ fᵢ with the column potentials
/// eliminated; returns (h, μ).
fn semi_dual<F: Scalar>(theta: &[F], k: usize, f: &[F]) -> (F, Vec<F>) {
    let mut mu = vec![F::zero(); k * k];
    let mut h = -f.iter().copied().sum::<F>();
    for j in 0..k {
        let lse = (0..k).fold(F::neg_infinity(), |acc, i| log_add_exp(acc, theta[i * k + j] + f[i]));
        h += lse;
        for i in 0..k {
            mu[i * k + j] = (theta[i * k + j] + f[i] - lse).exp();
        }
    }
    (h, mu)
}

/// Damped Newton on the semi-dual, with f₀ pinned to remove the shift
/// invariance. Converges quadratically where Sinkhorn crawls (nearly
/// degenerate kernels).
fn newton<F: Scalar>(theta: &[F], k: usize, tol: F, f0: &[F], budget: usize) -> KlState<F> {
    let mut f = f0.to_vec();
    let (mut h, mut mu) = semi_dual(theta, k, &f);
    let mut residual = max_row_violation(&mu, k).max(max_col_violation(&mu, k));
    let mut steps = 0;
    while steps < budget && residual > tol && k > 1 {
        steps += 1;
        let rows: Vec<F> = (0..k).map(|i| (0..k).map(|j| mu[i * k + j]).sum()).collect();
        let m = k - 1;
        let mut hess = vec![F::zero(); m * m];
        let mut rhs = vec![F::zero(); m];
        for a in 0..m {
            let i = a + 1;
            rhs[a] = F::one() - rows[i];
            for b in 0..m {
                let l = b + 1;
                let cross: F = (0..k).map(|j| mu[i * k + j] * mu[l * k + j]).sum();
                hess[a * m + b] = if a == b { rows[i] - cross } else { -cross };
            }
        }
        let scale = (0..m).fold(F::zero(), |acc, a| acc.max(hess[a * m + a]));
        for a in 0..m {
            hess[a * m + a] += F::lit(1e-14) * scale + F::min_positive_value();
        }
        let Some(step) = solve_dense(hess, rhs.clone(), m) else { break };
        let slope = -(0..m).map(|a| rhs[a] * step[a]).sum::<F>();
        let mut t = F::one();
        let mut accepted = false;
        while t > F::lit(1e-12) {
            let trial: Vec<F> = (0..k)
                .map(|i| if i == 0 { f[0] } else { f[i] + t * step[i - 1] })
                .collect();
            let (h_new, mu_new) = semi_dual(theta, k, &trial);
            let res_new = max_row_violation(&mu_new, k).max(max_col_violation(&mu_new, k));
            // near the optimum h is flat to rounding; a smaller residual is progress too
            if h_new <= h + F::lit(1e-4) * t * slope || res_new < residual {
                f = trial;
                h = h_new;
                mu = mu_new;
                residual = res_new;
                accepted = true;
                break;
            }
            t *= F::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    KlState {
        mu,
        f,
        residual,
        iterations: steps,
    }
}

/// Gaussian elimination with partial pivoting on a row-major m × m system.
fn solve_dense<F: Scalar>(mut a: Vec<F>, mut b: Vec<F>, m: usize) -> Option<Vec<F>> {
    for col in 0..m {
        let pivot = (col..m).max_by(|&x, &y| a[x * m + col].abs().partial_cmp(&a[y * m + col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[pivot * m + col] == F::zero() || !a[pivot * m + col].is_finite() {
            return None;
        }
        if pivot != col {
            for c in 0..m {
                a.swap(pivot * m + c, col * m + c);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..m {
            let factor = a[r * m + col] / a[col * m + col];
            if factor != F::zero() {
                for c in col..m {
                    let v = a[col * m + c];
                    a[r * m + c] -= factor * v;
                }
                let v = b[col];
                b[r] -= factor * v;
            }
        }
    }
    let mut x = vec![F::zero(); m];
    for r in (0..m).rev() {
        let s: F = (r + 1..m).map(|c| a[r * m + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * m + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn project_rows<F: Scalar>(x: &[F], k: usize) -> Vec<F> {
    x.chunks(k).flat_map(project_simplex_euclidean).collect()
}

fn project_cols<F: Scalar>(x: &[F], k: usize) -> Vec<F> {
    let mut out = vec![F::zero(); k * k];
    let mut col = vec![F::zero(); k];
    for j in 0..k {
        for i in 0..k {
            col[i] = x[i * k + j];
        }
        for (i, v) in project_simplex_euclidean(&col).into_iter().enumerate() {
            out[i * k + j] = v;
        }
    }
    out
}

/// Dykstra's algorithm with correction terms for both constraint blocks.
///
/// Stops once the row-projected and column-projected iterates agree with
/// each other and with the previous sweep, i.e. both corrections are
/// stationary. Checking the iterate alone is not enough: it can stall while
/// the corrections are still drifting.
fn dykstra<F: Scalar>(theta: &[F], k: usize, opts: &ProjectOptions) -> Result<ProjectionResult<F>> {
    let tol = F::lit(opts.tol);
    let n = k * k;
    let mut x = theta.to_vec();
    let mut p = vec![F::zero(); n];
    let mut q = vec![F::zero(); n];
    let mut residual = F::infinity();
    for sweep in 1..=opts.max_iter {
        let shifted: Vec<F> = (0..n).map(|i| x[i] + p[i]).collect();
        let y = project_rows(&shifted, k);
        for i in 0..n {
            p[i] = shifted[i] - y[i];
        }
        let shifted: Vec<F> = (0..n).map(|i| y[i] + q[i]).collect();
        let next = project_cols(&shifted, k);
        for i in 0..n {
            q[i] = shifted[i] - next[i];
        }
        let drift = max_abs_diff(&x, &y).max(max_abs_diff(&y, &next));
        x = next;
        residual = max_row_violation(&x, k);
        if residual <= tol && drift <= tol {
            return Ok(ProjectionResult {
                mu: x,
                iterations: sweep,
                residual,
            });
        }
    }
    Err(not_converged(&x, residual, opts.max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn kl_of_zero_scores_is_uniform() {
        let r = project_birkhoff(Geometry::ShannonKl, &[0.0f64; 4], 2, &ProjectOptions::default()).unwrap();
        for v in r.mu {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_fixed_point() {
        let theta: [f64; 9] = [0.2, 0.5, 0.3, 0.5, 0.25, 0.25, 0.3, 0.25, 0.45];
        let r = project_birkhoff(Geometry::Euclidean, &theta, 3, &ProjectOptions::default()).unwrap();
        assert!(r.iterations <= 2);
        assert!(r.residual <= 1e-15);
        for (a, b) in r.mu.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn large_scores_use_log_domain() {
        let theta: [f64; 4] = [800.0, 0.0, -800.0, 5.0];
        let r = project_birkhoff(Geometry::ShannonKl, &theta, 2, &ProjectOptions::default()).unwrap();
        assert!(r.mu.iter().all(|x| x.is_finite()));
        assert!(r.residual <= 1e-6);
        assert!((r.mu[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_inputs_reach_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(0.0, 3.0).unwrap();
        for _ in 0..20 {
            let theta: Vec<f64> = (0..25).map(|_| normal.sample(&mut rng)).collect();
            for g in [Geometry::Euclidean, Geometry::ShannonKl] {
                let r = project_birkhoff(g, &theta, 5, &ProjectOptions::default()).unwrap();
                assert!(r.residual <= 1e-6);
                assert!(r.mu.iter().all(|&v| v >= -1e-6));
            }
        }
    }

    #[test]
    fn stalled_scaling_is_finished_by_newton() {
        // two near-optimal permutations with a large gap to the rest
        let theta: [f64; 9] = [25.0, 24.9, 0.0, 24.95, 25.0, 0.0, 0.0, 0.0, 12.0];
        let opts = ProjectOptions { tol: 1e-12, max_iter: 10_000 };
        let r = project_birkhoff(Geometry::ShannonKl, &theta, 3, &opts).unwrap();
        assert!(r.residual <= 1e-12);
        // stationarity: log μ − θ = fᵢ + gⱼ has rank-one additive structure
        let l: Vec<f64> = r.mu.iter().zip(&theta).map(|(m, t)| m.ln() - t).collect();
        for i in 1..3 {
            for j in 1..3 {
                let cross = l[i * 3 + j] - l[i * 3] - l[j] + l[0];
                assert!(cross.abs() < 1e-8, "{cross}");
            }
        }
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let theta = [3.0, -1.0, 0.5, 2.0, 0.0, 1.0, -2.0, 4.0, 0.3];
        let opts = ProjectOptions { tol: 1e-14, max_iter: 2 };
        match project_birkhoff(Geometry::ShannonKl, &theta, 3, &opts) {
            Err(Error::NotConverged { best, residual, iterations }) => {
                assert_eq!(best.len(), 9);
                assert!(residual > 1e-14);
                assert_eq!(iterations, 2);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
