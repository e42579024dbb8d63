//! Independent oracles and numerical diagnostics: brute-force projections
//! over enumerated vertices, finite-difference gradients and sampled checks of
//! the excess-risk calibration inequality δℓ²/(8βσ²) ≤ δs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{calibrated_decode, LossDecomposition};
use crate::error::{check_dim, Error, Result};
use crate::geometry::Geometry;
use crate::loss::fy_loss;
use crate::polytope::{Polytope, DEFAULT_VERTEX_CAP};
use crate::projection::{project, project_simplex_euclidean};
use crate::scalar::{dot, max_abs_diff, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOptions {
    pub max_iter: usize,
    /// Stop once the Frank-Wolfe gap on the vertex weights falls below this.
    pub gap_tol: f64,
    pub vertex_cap: usize,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            gap_tol: 1e-13,
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

/// Vertex matrix A (one column per vertex) with products Aq and Aᵀr.
struct VertexMatrix<F> {
    cols: Vec<Vec<F>>,
    dim: usize,
}

impl<F: Scalar> VertexMatrix<F> {
    fn combine(&self, q: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim];
        for (col, &w) in self.cols.iter().zip(q) {
            if w != F::zero() {
                for (o, &c) in out.iter_mut().zip(col) {
                    *o += w * c;
                }
            }
        }
        out
    }

    fn correlate(&self, r: &[F]) -> Vec<F> {
        self.cols.iter().map(|col| dot(col, r)).collect()
    }

    /// ‖A‖₁‖A‖_∞ ≥ ‖A‖₂².
    fn lipschitz_bound(&self) -> F {
        let col_max = self
            .cols
            .iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<F>())
            .fold(F::zero(), F::max);
        let row_max = (0..self.dim)
            .map(|i| self.cols.iter().map(|c| c[i].abs()).sum::<F>())
            .fold(F::zero(), F::max);
        (col_max * row_max).max(F::min_positive_value())
    }
}

fn fw_gap<F: Scalar>(grad: &[F], q: &[F]) -> F {
    let min = grad.iter().copied().fold(F::infinity(), F::min);
    dot(grad, q) - min
}

/// argmin over conv(vertices) of D_Ψ(u, ∇Ψ*(θ)), solved on the weight simplex.
///
/// Euclidean: accelerated projected gradient with adaptive restart.
/// Shannon: exponentiated gradient with backtracking.
pub fn brute_force_projection<F: Scalar>(
    polytope: &Polytope<F>,
    geometry: Geometry,
    theta: &[F],
    opts: &BruteForceOptions,
) -> Result<Vec<F>> {
    check_dim(polytope.ambient_dim(), theta.len())?;
    let vertices = polytope.enumerate_vertices(opts.vertex_cap)?;
    let a = VertexMatrix {
        cols: vertices.into_iter().map(|v| v.point).collect(),
        dim: theta.len(),
    };
    let m = a.cols.len();
    if m == 0 {
        return Err(Error::InvalidPolytope("empty vertex set".into()));
    }
    let q0 = vec![F::one() / F::from_usize_lossy(m); m];
    let tol = F::lit(opts.gap_tol);
    let q = match geometry {
        Geometry::Euclidean => euclidean_weights(&a, theta, q0, tol, opts.max_iter),
        Geometry::ShannonKl => kl_weights(&a, theta, q0, tol, opts.max_iter)?,
    };
    Ok(a.combine(&q))
}

fn euclidean_weights<F: Scalar>(a: &VertexMatrix<F>, theta: &[F], q0: Vec<F>, tol: F, max_iter: usize) -> Vec<F> {
    let grad_at = |q: &[F]| {
        let r: Vec<F> = a.combine(q).iter().zip(theta).map(|(&u, &t)| u - t).collect();
        a.correlate(&r)
    };
    let step = F::one() / a.lipschitz_bound();
    let mut q = q0.clone();
    let mut y = q0;
    let mut t = F::one();
    for it in 0..max_iter {
        let g = grad_at(&y);
        let shifted: Vec<F> = y.iter().zip(&g).map(|(&yi, &gi)| yi - step * gi).collect();
        let next = project_simplex_euclidean(&shifted);
        // restart momentum when it points uphill
        let uphill = y
            .iter()
            .zip(&next)
            .zip(&q)
            .map(|((&yi, &ni), &qi)| (yi - ni) * (ni - qi))
            .sum::<F>()
            > F::zero();
        let t_next = if uphill {
            F::one()
        } else {
            (F::one() + (F::one() + F::lit(4.0) * t * t).sqrt()) * F::lit(0.5)
        };
        let beta = if uphill { F::zero() } else { (t - F::one()) / t_next };
        y = next
            .iter()
            .zip(&q)
            .map(|(&ni, &qi)| ni + beta * (ni - qi))
            .collect();
        q = next;
        t = t_next;
        if it % 10 == 9 && fw_gap(&grad_at(&q), &q) <= tol {
            break;
        }
    }
    q
}

fn kl_objective<F: Scalar>(u: &[F], theta: &[F]) -> F {
    // D(u, e^{θ−1}) up to constants in u: Σ u log u − u θ
    u.iter()
        .zip(theta)
        .map(|(&x, &t)| if x > F::zero() { x * x.ln() - x * t } else { F::zero() })
        .sum()
}

fn kl_weights<F: Scalar>(a: &VertexMatrix<F>, theta: &[F], q0: Vec<F>, tol: F, max_iter: usize) -> Result<Vec<F>> {
    let grad_at = |u: &[F]| {
        let r: Vec<F> = u
            .iter()
            .zip(theta)
            .map(|(&x, &t)| if x > F::zero() { x.ln() + F::one() - t } else { F::zero() })
            .collect();
        a.correlate(&r)
    };
    let mut q = q0;
    let mut u = a.combine(&q);
    let mut value = kl_objective(&u, theta);
    let mut eta = F::one();
    for _ in 0..max_iter {
        let g = grad_at(&u);
        if fw_gap(&g, &q) <= tol {
            break;
        }
        let gmin = g.iter().copied().fold(F::infinity(), F::min);
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand: Vec<F> = q
                .iter()
                .zip(&g)
                .map(|(&qi, &gi)| qi * (-(eta * (gi - gmin))).exp())
                .collect();
            let z: F = cand.iter().copied().sum();
            cand.iter_mut().for_each(|c| *c /= z);
            let cand_u = a.combine(&cand);
            let cand_value = kl_objective(&cand_u, theta);
            if cand_value <= value {
                q = cand;
                u = cand_u;
                value = cand_value;
                eta *= F::lit(1.5);
                accepted = true;
                break;
            }
            eta *= F::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("brute-force KL iterate diverged".into()));
    }
    Ok(q)
}

/// Central differences (f(θ + h eᵢ) − f(θ − h eᵢ)) / 2h.
pub fn finite_diff_grad<F: Scalar>(f: impl Fn(&[F]) -> Result<F>, theta: &[F], h: F) -> Result<Vec<F>> {
    if h.partial_cmp(&F::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let mut x = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let plus = f(&x)?;
        x[i] = theta[i] - h;
        let minus = f(&x)?;
        x[i] = theta[i];
        out.push((plus - minus) / (h + h));
    }
    Ok(out)
}

/// σ = max over outputs ŷ of ‖Vᵀψ(ŷ)‖_*: ℓ₂ for the Euclidean geometry, ℓ_∞
/// (dual of ℓ₁) for the Shannon geometry.
pub fn sigma_constant<F: Scalar>(decomposition: &LossDecomposition<F>, geometry: Geometry) -> Result<F> {
    let outputs = decomposition.output_polytope().enumerate_vertices(DEFAULT_VERTEX_CAP)?;
    let mut sigma = F::zero();
    for v in outputs {
        let z = decomposition.v.apply_transpose(&v.point)?;
        let norm = match geometry {
            Geometry::Euclidean => dot(&z, &z).sqrt(),
            Geometry::ShannonKl => z.iter().fold(F::zero(), |acc, x| acc.max(x.abs())),
        };
        sigma = sigma.max(norm);
    }
    Ok(sigma)
}

/// A pointwise calibration check at scores θ and label distribution q.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProbe<F> {
    pub polytope: Polytope<F>,
    pub geometry: Geometry,
    pub decomposition: LossDecomposition<F>,
    /// Distribution over the enumerated vertices of `polytope`, in enumeration order.
    pub q: Vec<F>,
    pub theta: Vec<F>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCheck<F> {
    /// δℓ, excess target risk of the decoded prediction.
    pub delta_loss: F,
    /// δs, excess surrogate risk.
    pub delta_surrogate: F,
    /// δℓ² / (8βσ²).
    pub lhs: F,
    pub rhs: F,
    pub holds: bool,
}

pub const CALIBRATION_SLACK: f64 = 1e-9;

pub fn check_calibration<F: Scalar>(probe: &CalibrationProbe<F>) -> Result<CalibrationCheck<F>> {
    let vertices = probe.polytope.enumerate_vertices(DEFAULT_VERTEX_CAP)?;
    check_dim(vertices.len(), probe.q.len())?;
    if probe.q.iter().any(|&x| x < F::zero()) || (probe.q.iter().copied().sum::<F>() - F::one()).abs() > F::lit(1e-9) {
        return Err(Error::InvalidArgument("q must be a probability vector".into()));
    }
    let p = probe.polytope.ambient_dim();
    let mut mu_q = vec![F::zero(); p];
    for (v, &w) in vertices.iter().zip(&probe.q) {
        for (m, &x) in mu_q.iter_mut().zip(&v.point) {
            *m += w * x;
        }
    }
    let d = &probe.decomposition;
    let delta_surrogate = fy_loss(&probe.polytope, probe.geometry, &probe.theta, &mu_q)?.value;

    let decode_set = d.output_polytope();
    let mu = project(&probe.polytope, probe.geometry, &probe.theta)?.mu;
    let predicted = calibrated_decode(d, &decode_set, &mu)?;
    let bayes = calibrated_decode(d, &decode_set, &mu_q)?;
    let psi_pred = d.output.encode(&predicted)?;
    let psi_bayes = d.output.encode(&bayes)?;
    let mut risk = d.v.apply(&mu_q)?;
    for (r, &b) in risk.iter_mut().zip(&d.b) {
        *r += b;
    }
    let diff: Vec<F> = psi_pred.iter().zip(&psi_bayes).map(|(&a, &b)| a - b).collect();
    let delta_loss = dot(&diff, &risk);

    let beta = probe.polytope.smoothness_constant(probe.geometry)?;
    let sigma = sigma_constant(d, probe.geometry)?;
    let denom = F::lit(8.0) * beta * sigma * sigma;
    let lhs = if denom > F::zero() { delta_loss * delta_loss / denom } else { F::zero() };
    let rhs = delta_surrogate;
    Ok(CalibrationCheck {
        delta_loss,
        delta_surrogate,
        lhs,
        rhs,
        holds: lhs <= rhs + F::lit(CALIBRATION_SLACK),
    })
}

/// Aggregate of a batch of sampled calibration probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub trials: usize,
    pub violations: usize,
    /// min over trials of rhs − lhs.
    pub worst_margin: f64,
    /// Whether any δℓ or δs came out below −1e−9.
    pub negative_risk: bool,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// θ ~ N(0, 2²) entrywise, q ~ flat Dirichlet over the vertices.
pub fn calibration_trials(
    polytope: &Polytope<f64>,
    geometry: Geometry,
    decomposition: &LossDecomposition<f64>,
    trials: usize,
    seed: u64,
) -> Result<CalibrationSummary> {
    let m = polytope.enumerate_vertices(DEFAULT_VERTEX_CAP)?.len();
    let p = polytope.ambient_dim();
    let normal = Normal::new(0.0, 2.0).expect("valid normal");
    let checks: Vec<CalibrationCheck<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let theta: Vec<f64> = (0..p).map(|_| normal.sample(&mut rng)).collect();
            let mut q: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
            let z: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= z);
            check_calibration(&CalibrationProbe {
                polytope: polytope.clone(),
                geometry,
                decomposition: decomposition.clone(),
                q,
                theta,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CalibrationSummary {
        trials,
        violations: checks.iter().filter(|c| !c.holds).count(),
        worst_margin: checks.iter().map(|c| c.rhs - c.lhs).fold(f64::INFINITY, f64::min),
        negative_risk: checks
            .iter()
            .any(|c| c.delta_loss < -CALIBRATION_SLACK || c.delta_surrogate < -CALIBRATION_SLACK),
    })
}

/// Largest ℓ∞ gap between the dedicated Euclidean projection and the
/// brute-force oracle over `trials` draws θ ~ N(0, 3²).
pub fn oracle_discrepancy(polytope: &Polytope<f64>, geometry: Geometry, trials: usize, seed: u64) -> Result<f64> {
    let p = polytope.ambient_dim();
    let normal = Normal::new(0.0, 3.0).expect("valid normal");
    let opts = BruteForceOptions::default();
    let gaps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let theta: Vec<f64> = (0..p).map(|_| normal.sample(&mut rng)).collect();
            let fast = project(polytope, geometry, &theta)?.mu;
            let slow = brute_force_projection(polytope, geometry, &theta, &opts)?;
            Ok(max_abs_diff(&fast, &slow))
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Draws a point with i.i.d. N(0, scale²) entries.
pub fn gaussian_point<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, scale).expect("valid normal");
    (0..dim).map(|_| normal.sample(rng)).collect()
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub points: usize,
    /// max over points of ‖fd − g‖_∞ / max(‖g‖_∞, ‖fd‖_∞).
    pub max_rel_error: f64,
    /// Draws rejected because a Euclidean projection kink was within reach.
    pub resampled: usize,
}

/// Tolerance the gradient check is held to for `polytope`: iterative
/// (Birkhoff) projections are only accurate to their stopping tolerance.
pub fn gradcheck_tolerance(polytope: &Polytope<f64>) -> f64 {
    if matches!(polytope, Polytope::Birkhoff(_)) {
        1e-3
    } else {
        1e-5
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_target<R: Rng>(rng: &mut R, polytope: &Polytope<f64>) -> Result<Vec<f64>> {
    let dir = gaussian_point(rng, polytope.ambient_dim(), 1.0);
    if polytope.is_bounded() {
        Ok(polytope.lmo(&dir)?.point)
    } else {
        Ok(dir)
    }
}

/// Compares fy_loss gradients with central differences (h = 1e−5) at
/// `points` draws θ ~ N(0, 1) with vertex targets.
///
/// The loss values fed to the differences use a tight projection tolerance;
/// the gradients under test use the defaults. Euclidean draws lying within
/// 1e−3 of a change of active face are redrawn. The error at each point is
/// ‖fd − g‖∞ / max(‖g‖∞, ‖fd‖∞, 1), so points where the loss vanishes and the
/// gradient is zero are measured absolutely. `corrupt` perturbs the analytic
/// gradient (a negative control that must fail).
pub fn gradient_check(
    polytope: &Polytope<f64>,
    geometry: Geometry,
    points: usize,
    seed: u64,
    corrupt: bool,
) -> Result<GradCheckReport> {
    use crate::loss::fy_loss_with;
    let tight = TIGHT_PROJECTION;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = polytope.ambient_dim();
    let mut worst = 0.0f64;
    let mut resampled = 0;
    let mut done = 0;
    while done < points {
        if resampled > 100 * points.max(1) {
            return Err(Error::InvalidArgument("could not draw points away from projection kinks".into()));
        }
        let theta = gaussian_point(&mut rng, p, 1.0);
        let target = random_target(&mut rng, polytope)?;
        let grad_at = |t: &[f64]| fy_loss_with(polytope, geometry, t, &target, &tight).map(|e| e.gradient);
        if geometry == Geometry::Euclidean {
            // piecewise-affine gradient: any curvature signals a nearby kink
            let g0 = grad_at(&theta)?;
            let mut kink = false;
            let mut x = theta.clone();
            for i in 0..p {
                x[i] = theta[i] + 1e-3;
                let gp = grad_at(&x)?;
                x[i] = theta[i] - 1e-3;
                let gm = grad_at(&x)?;
                x[i] = theta[i];
                if (0..p).any(|j| (gp[j] + gm[j] - 2.0 * g0[j]).abs() > 1e-8) {
                    kink = true;
                    break;
                }
            }
            if kink {
                resampled += 1;
                continue;
            }
        }
        let mut analytic = fy_loss(polytope, geometry, &theta, &target)?.gradient;
        if corrupt {
            analytic[0] += 0.1;
        }
        let fd = finite_diff_grad(
            |t: &[f64]| fy_loss_with(polytope, geometry, t, &target, &tight).map(|e| e.value),
            &theta,
            1e-5,
        )?;
        let diff: Vec<f64> = fd.iter().zip(&analytic).map(|(a, b)| a - b).collect();
        let scale = inf_norm(&analytic).max(inf_norm(&fd)).max(1.0);
        worst = worst.max(inf_norm(&diff) / scale);
        done += 1;
    }
    Ok(GradCheckReport {
        points,
        max_rel_error: worst,
        resampled,
    })
}

/// Projection tolerance used by the inequality checks below, so that
/// iterative solvers do not dominate the 1e−9 slack.
pub const TIGHT_PROJECTION: crate::projection::ProjectOptions = crate::projection::ProjectOptions {
    tol: 1e-13,
    max_iter: 200_000,
};

/// Largest violation of compositional ≤ S ≤ D_Ψ(t, ∇Ψ*(θ)) over `trials`
/// draws θ ~ N(0, 2²) with vertex targets.
pub fn sandwich_violation(polytope: &Polytope<f64>, geometry: Geometry, trials: usize, seed: u64) -> Result<f64> {
    use crate::loss::{compositional_loss_with, fy_loss_with};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let theta = gaussian_point(&mut rng, polytope.ambient_dim(), 2.0);
        let target = random_target(&mut rng, polytope)?;
        let s = fy_loss_with(polytope, geometry, &theta, &target, &TIGHT_PROJECTION)?.value;
        let lower = compositional_loss_with(polytope, geometry, &theta, &target, &TIGHT_PROJECTION)?;
        let upper = geometry.bregman_div(&target, &geometry.grad_psi_star(&theta)?)?;
        worst = worst.max(lower - s).max(s - upper);
    }
    Ok(worst)
}

/// Largest violation of S_{C₁} ≤ S_{C₂} ≤ … along a chain of nested sets,
/// with targets drawn among the vertices of the smallest set.
pub fn monotonicity_violation(chain: &[Polytope<f64>], geometry: Geometry, trials: usize, seed: u64) -> Result<f64> {
    let Some(first) = chain.first() else {
        return Ok(f64::NEG_INFINITY);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let theta = gaussian_point(&mut rng, first.ambient_dim(), 2.0);
        let target = random_target(&mut rng, first)?;
        let values = chain
            .iter()
            .map(|c| crate::loss::fy_loss_with(c, geometry, &theta, &target, &TIGHT_PROJECTION).map(|e| e.value))
            .collect::<Result<Vec<f64>>>()?;
        for w in values.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decomposition_for;
    use crate::loss::{fy_loss, squared_loss};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn brute_force_examples() {
        let o = BruteForceOptions::default();
        let r = brute_force_projection(&Polytope::Simplex(2), Geometry::Euclidean, &[0.0, 0.0], &o).unwrap();
        assert!(close(&r, &[0.5, 0.5], 1e-6));
        let r = brute_force_projection(&Polytope::Cube(2), Geometry::Euclidean, &[2.0, -1.0], &o).unwrap();
        assert!(close(&r, &[1.0, 0.0], 1e-5));
        let r = brute_force_projection(&Polytope::OrderSimplex(4), Geometry::Euclidean, &[0.5, 0.8, -0.2], &o).unwrap();
        assert!(close(&r, &[0.65, 0.65, 0.0], 1e-4));
        let r = brute_force_projection(&Polytope::Simplex(2), Geometry::ShannonKl, &[2f64.ln(), 0.0], &o).unwrap();
        assert!(close(&r, &[2.0 / 3.0, 1.0 / 3.0], 1e-6));
    }

    #[test]
    fn brute_force_refuses_large_sets() {
        let o = BruteForceOptions::default();
        assert!(matches!(
            brute_force_projection(&Polytope::Birkhoff(8), Geometry::Euclidean, &[0.0; 64], &o),
            Err(Error::TooManyVertices { .. })
        ));
    }

    #[test]
    fn finite_difference_examples() {
        let target = [1.0, 0.0];
        let f = |t: &[f64]| squared_loss(t, &target).map(|e| e.value);
        let g = finite_diff_grad(f, &[0.3, -0.2], 1e-5).unwrap();
        assert!(close(&g, &[-0.7, -0.2], 1e-9));
        let f = |t: &[f64]| fy_loss(&Polytope::Simplex(2), Geometry::Euclidean, t, &target).map(|e| e.value);
        let g = finite_diff_grad(f, &[0.0, 0.0], 1e-5).unwrap();
        assert!(close(&g, &[-0.5, 0.5], 1e-7));
        assert!(finite_diff_grad(f, &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn sigma_examples() {
        let d = decomposition_for::<f64>("hamming_multilabel", 2).unwrap();
        assert!((sigma_constant(&d, Geometry::Euclidean).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let d = decomposition_for::<f64>("zero_one", 2).unwrap();
        assert_eq!(sigma_constant(&d, Geometry::Euclidean).unwrap(), 1.0);
        let d = LossDecomposition::from_loss_matrix(vec![0.0; 4], 2, 2).unwrap();
        assert_eq!(sigma_constant(&d, Geometry::ShannonKl).unwrap(), 0.0);
    }

    #[test]
    fn probe_at_the_projection_is_tight() {
        let poly = Polytope::Simplex(3);
        let d = decomposition_for::<f64>("zero_one", 3).unwrap();
        // softmax(θ) = q
        let q = vec![0.5, 0.3, 0.2];
        let theta: Vec<f64> = q.iter().map(|x: &f64| x.ln()).collect();
        let c = check_calibration(&CalibrationProbe {
            polytope: poly,
            geometry: Geometry::ShannonKl,
            decomposition: d,
            q,
            theta,
        })
        .unwrap();
        assert!(c.delta_surrogate.abs() < 1e-12);
        assert_eq!(c.delta_loss, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn calibration_on_a_small_batch() {
        let d = decomposition_for::<f64>("zero_one", 3).unwrap();
        let s = calibration_trials(&Polytope::Simplex(3), Geometry::Euclidean, &d, 500, 1).unwrap();
        assert_eq!(s.violations, 0);
        assert!(!s.negative_risk);
    }
}
