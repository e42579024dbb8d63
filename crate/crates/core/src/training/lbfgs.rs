//! Limited-memory BFGS with a strong Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub memory: usize,
    /// Stop when ‖∇f‖_∞ falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Converged,
    /// Iteration cap reached before the gradient tolerance.
    NotConverged,
    /// No step satisfying the Wolfe conditions was found; `x` is the best iterate.
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub status: LbfgsStatus,
    /// Objective after every accepted step, starting with f(x₀).
    pub history: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if cfg.memory == 0 {
        return Err(Error::InvalidArgument("L-BFGS memory must be positive".into()));
    }
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::Domain("objective is not finite at the starting point".into()));
    }
    let mut history = vec![fx];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = LbfgsStatus::NotConverged;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        if inf_norm(&g) <= cfg.grad_tol {
            status = LbfgsStatus::Converged;
            break;
        }
        let mut d = two_loop(&g, &pairs);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // memory lost positive definiteness numerically: restart from steepest descent
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let initial = if pairs.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let Some(step) = strong_wolfe(&mut f, &x, fx, slope, &d, initial)? else {
            status = LbfgsStatus::LineSearchFailed;
            break;
        };
        let (alpha, x_new, f_new, g_new) = step;
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        iterations += 1;
    }
    if status == LbfgsStatus::NotConverged && inf_norm(&g) <= cfg.grad_tol {
        status = LbfgsStatus::Converged;
    }
    Ok(LbfgsResult {
        grad_inf_norm: inf_norm(&g),
        x,
        value: fx,
        iterations,
        status,
        history,
    })
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

type Step = (f64, Vec<f64>, f64, Vec<f64>);

/// Line search along `d` returning a step meeting the strong Wolfe conditions.
fn strong_wolfe<F>(f: &mut F, x: &[f64], f0: f64, slope0: f64, d: &[f64], initial: f64) -> Result<Option<Step>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut eval = |alpha: f64| -> Result<Step> {
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (fa, ga) = f(&xa)?;
        Ok((alpha, xa, fa, ga))
    };
    let mut prev: (f64, f64, f64) = (0.0, f0, slope0); // (alpha, f, slope)
    let mut alpha = initial;
    let mut evals = 0;
    loop {
        if evals >= MAX_LINE_EVALS {
            return Ok(None);
        }
        let cur = eval(alpha)?;
        evals += 1;
        let slope = dot(&cur.3, d);
        if !cur.2.is_finite() || cur.2 > f0 + C1 * alpha * slope0 || (evals > 1 && cur.2 >= prev.1) {
            return zoom(&mut eval, f0, slope0, d, prev, (alpha, cur.2, slope), evals);
        }
        if slope.abs() <= -C2 * slope0 {
            return Ok(Some(cur));
        }
        if slope >= 0.0 {
            return zoom(&mut eval, f0, slope0, d, (alpha, cur.2, slope), prev, evals);
        }
        prev = (alpha, cur.2, slope);
        alpha *= 2.0;
    }
}

fn zoom<E>(
    eval: &mut E,
    f0: f64,
    slope0: f64,
    d: &[f64],
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    mut evals: usize,
) -> Result<Option<Step>>
where
    E: FnMut(f64) -> Result<Step>,
{
    while evals < MAX_LINE_EVALS {
        let alpha = interpolate(lo, hi);
        let cur = eval(alpha)?;
        evals += 1;
        let slope = dot(&cur.3, d);
        if !cur.2.is_finite() || cur.2 > f0 + C1 * alpha * slope0 || cur.2 >= lo.1 {
            hi = (alpha, cur.2, slope);
        } else {
            if slope.abs() <= -C2 * slope0 {
                return Ok(Some(cur));
            }
            if slope * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, cur.2, slope);
        }
        if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
    }
    // Accept the best sufficient-decrease point if the curvature test never passed.
    if lo.0 > 0.0 {
        let cur = eval(lo.0)?;
        if cur.2 < f0 {
            return Ok(Some(cur));
        }
    }
    Ok(None)
}

/// Minimizer of the cubic through both end points, safeguarded to the
/// interior of the bracket; falls back to bisection.
fn interpolate(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    let (x0, f0, g0) = a;
    let (x1, f1, g1) = b;
    let d1 = g0 + g1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = d1 * d1 - g0 * g1;
    let lo = x0.min(x1);
    let hi = x0.max(x1);
    let mid = 0.5 * (x0 + x1);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (x1 - x0).signum() * disc.sqrt();
    let t = x1 - (x1 - x0) * (g1 + d2 - d1) / (g1 - g0 + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}
