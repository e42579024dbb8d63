//! Regularized empirical risk minimization with a linear model, λ selection
//! on a validation split and the data preparation around it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::{lbfgs_minimize, LbfgsConfig, LbfgsStatus};
use super::pipeline::Pipeline;
use crate::dataio::RawDataset;
use crate::error::{check_dim, Error, Result};
use crate::structure::StructuredLabel;

/// θ = W x with `W` stored row-major as `rows × cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            w: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, w: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, w.len())?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite model weight".into()));
        }
        Ok(Self { rows, cols, w })
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        scores(&self.w, self.cols, x)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn scores(w: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    w.chunks_exact(cols)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Per-feature centering and scaling fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant features.
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], d: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 { s } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    /// Standardized row with a trailing constant 1 for the bias.
    pub fn design_row(&self, row: &[f64]) -> Vec<f64> {
        let mut out = self.transform(row);
        out.push(1.0);
        out
    }
}

/// Index partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub const TEST_FRACTION: f64 = 0.2;
pub const VAL_FRACTION: f64 = 0.25;

/// Shuffles under `seed`, holds out 20% for test (unless the data declares a
/// test partition) and then 25% of the rest for validation.
pub fn split(n: usize, seed: u64, declared_test: Option<&[bool]>) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rest, test) = match declared_test {
        Some(mask) => {
            check_dim(n, mask.len())?;
            let test: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let rest: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
            (rest, test)
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let n_test = (n as f64 * TEST_FRACTION).round() as usize;
            let test = all[..n_test].to_vec();
            (all[n_test..].to_vec(), test)
        }
    };
    rest.shuffle(&mut rng);
    let n_val = (rest.len() as f64 * VAL_FRACTION).round() as usize;
    let val = rest[..n_val].to_vec();
    let train = rest[n_val..].to_vec();
    Ok(Split { train, val, test })
}

/// Design rows and encoded targets ready for optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Examples {
    pub x: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub labels: Vec<StructuredLabel>,
}

impl Examples {
    pub fn new(pipeline: &Pipeline, x: Vec<Vec<f64>>, labels: Vec<StructuredLabel>) -> Result<Self> {
        check_dim(x.len(), labels.len())?;
        let targets = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                pipeline.encode(l).map_err(|e| Error::AtSample {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { x, targets, labels })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.x.extend(other.x.iter().cloned());
        out.targets.extend(other.targets.iter().cloned());
        out.labels.extend(other.labels.iter().cloned());
        out
    }
}

/// (1/n) Σ S(W xᵢ, φ(yᵢ)) + (λ/2)‖W‖² and its gradient, with `w` row-major
/// `dim × cols`.
///
/// Per-sample terms are computed in parallel and summed in sample order, so
/// the result does not depend on the number of threads.
pub fn objective_and_grad(pipeline: &Pipeline, w: &[f64], cols: usize, data: &Examples, lambda: f64) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::InvalidDataset("objective over zero samples".into()));
    }
    check_dim(pipeline.dim() * cols, w.len())?;
    let terms: Vec<(f64, Vec<f64>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let theta = scores(w, cols, &data.x[i]);
            pipeline
                .loss(&theta, &data.targets[i])
                .map(|e| (e.value, e.gradient))
                .map_err(|e| Error::AtSample {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let inv_n = 1.0 / data.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; w.len()];
    for ((v, g), x) in terms.iter().zip(&data.x) {
        value += v;
        for (r, gr) in g.iter().enumerate() {
            if *gr != 0.0 {
                for (acc, xc) in grad[r * cols..(r + 1) * cols].iter_mut().zip(x) {
                    *acc += gr * xc;
                }
            }
        }
    }
    let sq: f64 = w.iter().map(|v| v * v).sum();
    value = value * inv_n + 0.5 * lambda * sq;
    for (gi, wi) in grad.iter_mut().zip(w) {
        *gi = *gi * inv_n + lambda * wi;
    }
    Ok((value, grad))
}

/// Ten log-spaced values from 1e-4 to 1e4.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-4.0 + 8.0 * i as f64 / 9.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_grid: Vec<f64>,
    pub lbfgs: LbfgsConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_grid: default_lambda_grid(),
            lbfgs: LbfgsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: LinearModel,
    pub objective: f64,
    pub iterations: usize,
    pub status: LbfgsStatus,
}

/// Minimizes the regularized objective from W = 0.
pub fn train(pipeline: &Pipeline, data: &Examples, lambda: f64, lbfgs: &LbfgsConfig) -> Result<TrainedModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    let cols = data.x.first().map_or(0, |x| x.len());
    let rows = pipeline.dim();
    let objective = |w: &[f64]| match objective_and_grad(pipeline, w, cols, data, lambda) {
        // overflowing trial points are treated as infinitely bad so the line search backs off
        Err(Error::AtSample { source, .. }) if matches!(*source, Error::Domain(_)) => Ok((f64::INFINITY, vec![0.0; w.len()])),
        other => other,
    };
    let result = lbfgs_minimize(objective, &vec![0.0; rows * cols], lbfgs)?;
    Ok(TrainedModel {
        model: LinearModel::from_vec(rows, cols, result.x)?,
        objective: result.value,
        iterations: result.iterations,
        status: result.status,
    })
}

pub fn predict_all(pipeline: &Pipeline, model: &LinearModel, x: &[Vec<f64>]) -> Result<Vec<StructuredLabel>> {
    x.par_iter()
        .enumerate()
        .map(|(i, row)| {
            pipeline.predict(&model.scores(row)).map_err(|e| Error::AtSample {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn evaluate(pipeline: &Pipeline, model: &LinearModel, data: &Examples) -> Result<BTreeMap<String, f64>> {
    let predicted = predict_all(pipeline, model, &data.x)?;
    pipeline.spec.task.metrics(&predicted, &data.labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    /// Validation selection score (lower is better).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub model: LinearModel,
    pub lambda: f64,
    /// Validation metrics of the chosen λ; `None` when no selection ran.
    pub val_metrics: Option<BTreeMap<String, f64>>,
    pub candidates: Vec<LambdaScore>,
    pub status: LbfgsStatus,
    pub iterations: usize,
}

/// Trains one model per λ on `train`, keeps the λ with the best validation
/// score (ties to the smaller λ) and refits on train ∪ val.
pub fn fit(pipeline: &Pipeline, train_set: &Examples, val: &Examples, cfg: &TrainConfig) -> Result<FitOutcome> {
    if cfg.lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    if train_set.is_empty() {
        return Err(Error::InvalidDataset("empty training split".into()));
    }
    let mut grid = cfg.lambda_grid.clone();
    grid.sort_by(|a, b| a.total_cmp(b));
    let task = pipeline.spec.task;
    let mut candidates = Vec::new();
    let mut best: Option<(f64, f64, BTreeMap<String, f64>)> = None;
    if grid.len() > 1 {
        if val.is_empty() {
            return Err(Error::InvalidDataset("λ selection needs a nonempty validation split".into()));
        }
        for &lambda in &grid {
            let trained = train(pipeline, train_set, lambda, &cfg.lbfgs)?;
            let metrics = evaluate(pipeline, &trained.model, val)?;
            let score = task.selection_score(&metrics);
            candidates.push(LambdaScore { lambda, score });
            if best.as_ref().is_none_or(|(_, s, _)| score < *s) {
                best = Some((lambda, score, metrics));
            }
        }
    }
    let (lambda, val_metrics) = match best {
        Some((l, _, m)) => (l, Some(m)),
        None => (grid[0], None),
    };
    let all = train_set.concat(val);
    let refit = train(pipeline, &all, lambda, &cfg.lbfgs)?;
    Ok(FitOutcome {
        model: refit.model,
        lambda,
        val_metrics,
        candidates,
        status: refit.status,
        iterations: refit.iterations,
    })
}

/// Everything produced by one split → standardize → fit → test run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub pipeline: Pipeline,
    pub standardizer: Standardizer,
    pub fit: FitOutcome,
    pub test_metrics: BTreeMap<String, f64>,
    pub split: Split,
}

pub fn run_experiment(data: &RawDataset, pipeline_spec: &super::PipelineSpec, cfg: &TrainConfig, seed: u64) -> Result<ExperimentRun> {
    if pipeline_spec.task != data.task {
        return Err(Error::InvalidArgument(format!(
            "pipeline task {:?} does not match dataset task {:?}",
            pipeline_spec.task, data.task
        )));
    }
    let parts = split(data.len(), seed, data.declared_test.as_deref())?;
    if parts.test.is_empty() {
        return Err(Error::InvalidDataset("test split is empty".into()));
    }
    let train_rows: Vec<Vec<f64>> = parts.train.iter().map(|&i| data.features[i].clone()).collect();
    let standardizer = Standardizer::fit(&train_rows, data.n_features);
    let train_labels: Vec<StructuredLabel> = parts.train.iter().map(|&i| data.labels[i].clone()).collect();
    let pipeline = Pipeline::build(pipeline_spec, &train_labels)?;
    let examples = |idx: &[usize]| -> Result<Examples> {
        let x = idx.iter().map(|&i| standardizer.design_row(&data.features[i])).collect();
        let labels = idx.iter().map(|&i| data.labels[i].clone()).collect();
        Examples::new(&pipeline, x, labels)
    };
    let train_ex = examples(&parts.train)?;
    let val_ex = examples(&parts.val)?;
    let test_x: Vec<Vec<f64>> = parts.test.iter().map(|&i| standardizer.design_row(&data.features[i])).collect();
    let test_labels: Vec<StructuredLabel> = parts.test.iter().map(|&i| data.labels[i].clone()).collect();
    let outcome = fit(&pipeline, &train_ex, &val_ex, cfg)?;
    let predicted = predict_all(&pipeline, &outcome.model, &test_x)?;
    let test_metrics = data.task.metrics(&predicted, &test_labels)?;
    Ok(ExperimentRun {
        pipeline,
        standardizer,
        fit: outcome,
        test_metrics,
        split: parts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::loss::fy_loss;
    use crate::polytope::Polytope;
    use crate::task::Task;
    use crate::training::PipelineSpec;

    fn pipeline(task: Task, projection: &str, decoding: &str, geometry: Geometry) -> Pipeline {
        let spec = PipelineSpec {
            task,
            projection: projection.into(),
            decoding: decoding.into(),
            geometry,
        };
        Pipeline::build(&spec, &[]).unwrap()
    }

    #[test]
    fn lambda_grid() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-4).abs() < 1e-18 && (g[9] - 1e4).abs() < 1e-9);
        for w in g.windows(2) {
            assert!(((w[1] / w[0]).log10() - 8.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = split(100, 7, None).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 20, 20));
        assert_eq!(s, split(100, 7, None).unwrap());
        assert_ne!(s, split(100, 8, None).unwrap());
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let mask: Vec<bool> = (0..10).map(|i| i >= 8).collect();
        let s = split(10, 1, Some(&mask)).unwrap();
        assert_eq!(s.test, vec![8, 9]);
        assert_eq!(s.train.len() + s.val.len(), 8);
    }

    #[test]
    fn standardize_examples() {
        let st = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]], 2);
        assert_eq!(st.transform(&[1.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(st.transform(&[3.0, 5.0]), vec![1.0, 0.0]);
        // test rows use the training statistics
        assert_eq!(st.transform(&[5.0, 6.0]), vec![3.0, 1.0]);
    }

    #[test]
    fn zero_weights_give_the_loss_at_the_origin() {
        let p = pipeline(Task::Multiclass { k: 3 }, "simplex", "simplex", Geometry::Euclidean);
        let x = vec![vec![0.5, -2.0, 1.0]];
        let ex = Examples::new(&p, x.clone(), vec![StructuredLabel::Class(1)]).unwrap();
        let (v, g) = objective_and_grad(&p, &[0.0; 9], 3, &ex, 3.0).unwrap();
        let reference = fy_loss(&Polytope::Simplex(3), Geometry::Euclidean, &[0.0; 3], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(v, reference.value);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(g[r * 3 + c], reference.gradient[r] * x[0][c]);
            }
        }
    }

    #[test]
    fn full_space_gradient_is_ridge() {
        let p = pipeline(Task::Ordinal { k: 5 }, "full", "round", Geometry::Euclidean);
        let x = vec![vec![0.3, -1.2]];
        let ex = Examples::new(&p, x.clone(), vec![StructuredLabel::Ordinal(3)]).unwrap();
        let w = [0.7, -0.4];
        let lambda = 0.25;
        let (_, g) = objective_and_grad(&p, &w, 2, &ex, lambda).unwrap();
        let residual = w[0] * x[0][0] + w[1] * x[0][1] - 4.0;
        for c in 0..2 {
            assert_eq!(g[c], residual * x[0][c] + lambda * w[c]);
        }
    }

    #[test]
    fn empty_data_is_rejected() {
        let p = pipeline(Task::Multiclass { k: 2 }, "simplex", "simplex", Geometry::Euclidean);
        let ex = Examples::new(&p, vec![], vec![]).unwrap();
        assert!(matches!(objective_and_grad(&p, &[0.0; 2], 1, &ex, 1.0), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn errors_name_the_sample() {
        let p = pipeline(Task::Multiclass { k: 2 }, "simplex", "simplex", Geometry::ShannonKl);
        let ex = Examples::new(&p, vec![vec![1.0], vec![1.0]], vec![StructuredLabel::Class(0); 2]).unwrap();
        let mut ex2 = ex.clone();
        ex2.x[1] = vec![f64::NAN];
        let err = objective_and_grad(&p, &[1.0, 1.0], 1, &ex2, 1.0).unwrap_err();
        assert!(matches!(err, Error::AtSample { index: 1, .. }), "{err:?}");
    }
}
