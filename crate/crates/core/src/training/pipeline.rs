//! Task-specific wiring of encoding, projection set and decoder.

use serde::{Deserialize, Serialize};

use crate::decode::{calibrated_decode, decomposition_for, round_ordinal, ConstantTerm, LinearMap, LossDecomposition, TargetEncoding};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::loss::{fy_loss_at, fy_loss_relaxed, fy_loss_with, LossEval};
use crate::polytope::Polytope;
use crate::projection::{project_with, ProjectOptions, ProjectionResult};
use crate::structure::{default_rank_weights, Encoding, StructuredLabel};
use crate::task::Task;

/// Largest marginal violation accepted from a solver that hit its iteration cap.
pub const ACCEPTED_RESIDUAL: f64 = 1e-4;

/// Textual description of a pipeline, as found in configs and model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub task: Task,
    /// Projection set identifier (`full` means no projection).
    pub projection: String,
    /// Decoding set identifier, or `round` for ordinal regression by rounding.
    pub decoding: String,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoder {
    /// MAP(−Vμ − b) over `set`.
    Calibrated {
        decomposition: LossDecomposition<f64>,
        set: Polytope<f64>,
    },
    /// Nearest level of a scalar score on the 1..k scale.
    Round { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub spec: PipelineSpec,
    pub encoding: Encoding<f64>,
    pub projection: Polytope<f64>,
    pub decoder: Decoder,
    /// Targets may fall outside the projection set (knapsack with a data-driven
    /// budget); the loss is then evaluated without the containment check.
    pub relaxed: bool,
    pub options: ProjectOptions,
}

/// ⌈E|Y| + √Var|Y|⌉ over the given label sets, capped at k.
pub fn knapsack_upper_bound(labels: &[StructuredLabel], k: usize) -> usize {
    let sizes: Vec<f64> = labels
        .iter()
        .map(|l| match l {
            StructuredLabel::LabelSet(s) => s.len() as f64,
            _ => 0.0,
        })
        .collect();
    if sizes.is_empty() {
        return k;
    }
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = sizes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    ((mean + var.sqrt()).ceil() as usize).min(k)
}

fn base(id: &str) -> &str {
    id.split(':').next().unwrap_or(id)
}

/// Spearman-style loss on permuted weights: ‖w‖² − ⟨w_π̂, w_π⟩.
fn rank_weight_decomposition(weights: Vec<f64>) -> LossDecomposition<f64> {
    let norm = weights.iter().map(|w| w * w).sum();
    LossDecomposition {
        name: "rank_weights".into(),
        v: LinearMap::ScaledIdentity(-1.0),
        b: vec![0.0; weights.len()],
        c: ConstantTerm::Constant(norm),
        output: Encoding::PermutedWeights { weights: weights.clone() },
        target: TargetEncoding::Standard(Encoding::PermutedWeights { weights }),
    }
}

impl Pipeline {
    /// Resolves a spec. `train_labels` provide the default knapsack budget.
    pub fn build(spec: &PipelineSpec, train_labels: &[StructuredLabel]) -> Result<Self> {
        let k = spec.task.k();
        if k < 2 {
            return Err(Error::InvalidArgument("tasks need at least two classes".into()));
        }
        let bad = |msg: &str| Error::InvalidArgument(format!("{} task: {msg}", spec.task.name()));
        let proj_id = spec.projection.to_ascii_lowercase();
        let dec_id = spec.decoding.to_ascii_lowercase();
        let mut relaxed = false;

        let (encoding, decoder) = match spec.task {
            Task::Multiclass { .. } => {
                if base(&dec_id) != "simplex" {
                    return Err(bad("decoding set must be 'simplex'"));
                }
                let d = decomposition_for("zero_one", k)?;
                (Encoding::OneHot { k }, Decoder::Calibrated { set: Polytope::Simplex(k), decomposition: d })
            }
            Task::Multilabel { .. } => {
                let set = match base(&dec_id) {
                    "cube" => Polytope::Cube(k),
                    "knapsack" => knapsack_for(&dec_id, k, train_labels)?,
                    _ => return Err(bad("decoding set must be 'cube' or 'knapsack'")),
                };
                let d = decomposition_for("hamming_multilabel", k)?;
                (Encoding::Indicator { k }, Decoder::Calibrated { set, decomposition: d })
            }
            Task::Ranking { .. } => {
                if base(&dec_id) == "permutahedron" || base(&proj_id) == "permutahedron" {
                    if base(&dec_id) != "permutahedron" || !matches!(base(&proj_id), "permutahedron" | "full") {
                        return Err(bad("the permutahedron pairs only with itself or 'full'"));
                    }
                    let w = default_rank_weights::<f64>(k);
                    let set = Polytope::Permutahedron(w.clone());
                    (
                        Encoding::PermutedWeights { weights: w.clone() },
                        Decoder::Calibrated { set, decomposition: rank_weight_decomposition(w) },
                    )
                } else {
                    let set = match base(&dec_id) {
                        "birkhoff" => Polytope::Birkhoff(k),
                        "simplex" | "rowstochastic" | "row_stochastic" => Polytope::RowStochastic(k),
                        "cube" => Polytope::Cube(k * k),
                        _ => return Err(bad("decoding set must be birkhoff, simplex, cube or permutahedron")),
                    };
                    (
                        Encoding::PermutationMatrix { k },
                        Decoder::Calibrated { set, decomposition: LossDecomposition::entrywise_hamming(k) },
                    )
                }
            }
            Task::Ordinal { .. } => {
                if dec_id == "round" {
                    (Encoding::Scalar { k }, Decoder::Round { k })
                } else if base(&dec_id) == "ordersimplex" || base(&dec_id) == "order_simplex" {
                    let d = decomposition_for("absolute_ordinal", k)?;
                    (
                        Encoding::Thresholds { k },
                        Decoder::Calibrated { set: Polytope::OrderSimplex(k), decomposition: d },
                    )
                } else {
                    return Err(bad("decoding must be 'ordersimplex' or 'round'"));
                }
            }
        };

        let dim = encoding.dim();
        let projection = match (spec.task, base(&proj_id)) {
            (Task::Ranking { .. }, "simplex") => Polytope::RowStochastic(k),
            (Task::Multilabel { .. }, "knapsack") if !proj_id.contains(':') => {
                relaxed = true;
                knapsack_for(&proj_id, k, train_labels)?
            }
            (Task::Multilabel { .. } | Task::Multiclass { .. }, "knapsack") => {
                relaxed = true;
                Polytope::parse(&proj_id, dim)?
            }
            _ => Polytope::parse(&proj_id, dim)?,
        };
        if matches!(decoder, Decoder::Round { .. }) && !matches!(projection, Polytope::FullSpace(_)) {
            return Err(bad("rounding decodes only unprojected scalar scores ('full')"));
        }
        if matches!(projection, Polytope::FullSpace(_)) && spec.geometry == Geometry::ShannonKl {
            return Err(Error::Unbounded("the KL projection onto the full space does not exist".into()));
        }
        if spec.geometry == Geometry::ShannonKl {
            if let Polytope::Permutahedron(w) = &projection {
                if w.iter().any(|&x| x <= 0.0) {
                    return Err(bad("KL permutahedron needs positive weights"));
                }
            }
        }
        Ok(Self {
            spec: spec.clone(),
            encoding,
            projection,
            decoder,
            relaxed,
            options: ProjectOptions::default(),
        })
    }

    /// Output dimension of the linear model.
    pub fn dim(&self) -> usize {
        self.encoding.dim()
    }

    pub fn encode(&self, label: &StructuredLabel) -> Result<Vec<f64>> {
        self.encoding.encode(label)
    }

    /// Surrogate loss and its gradient in θ.
    ///
    /// An iterative projection that stops at its iteration cap with a
    /// residual below [`ACCEPTED_RESIDUAL`] is used as is.
    pub fn loss(&self, theta: &[f64], target: &[f64]) -> Result<LossEval<f64>> {
        let result = if self.relaxed {
            fy_loss_relaxed(&self.projection, self.spec.geometry, theta, target, &self.options)
        } else {
            fy_loss_with(&self.projection, self.spec.geometry, theta, target, &self.options)
        };
        match result {
            Err(Error::NotConverged { best, residual, iterations }) if residual <= ACCEPTED_RESIDUAL => {
                let projection = ProjectionResult { mu: best, iterations, residual };
                fy_loss_at(self.spec.geometry, theta, target, projection)
            }
            other => other,
        }
    }

    /// μ = P(θ), with the same fallback as [`Pipeline::loss`].
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>> {
        match (&self.projection, self.spec.geometry) {
            (Polytope::FullSpace(_), Geometry::Euclidean) => Ok(theta.to_vec()),
            (p, g) => match project_with(p, g, theta, &self.options) {
                Ok(r) => Ok(r.mu),
                Err(Error::NotConverged { best, residual, .. }) if residual <= ACCEPTED_RESIDUAL => Ok(best),
                Err(e) => Err(e),
            },
        }
    }

    /// Prediction from scores θ: projection followed by decoding.
    pub fn predict(&self, theta: &[f64]) -> Result<StructuredLabel> {
        let mu = self.project(theta)?;
        match &self.decoder {
            Decoder::Calibrated { decomposition, set } => calibrated_decode(decomposition, set, &mu),
            Decoder::Round { k } => Ok(round_ordinal(mu[0], *k)),
        }
    }
}

fn knapsack_for(id: &str, k: usize, train_labels: &[StructuredLabel]) -> Result<Polytope<f64>> {
    if id.contains(':') {
        Polytope::parse(id, k)
    } else {
        let upper = knapsack_upper_bound(train_labels, k);
        Ok(Polytope::Knapsack { k, lower: 0, upper })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(task: Task, projection: &str, decoding: &str) -> PipelineSpec {
        PipelineSpec {
            task,
            projection: projection.into(),
            decoding: decoding.into(),
            geometry: Geometry::Euclidean,
        }
    }

    #[test]
    fn knapsack_budget_from_labels() {
        let labels = vec![
            StructuredLabel::LabelSet(vec![0]),
            StructuredLabel::LabelSet(vec![0, 1]),
            StructuredLabel::LabelSet(vec![0, 1, 2]),
        ];
        // mean 2, std √(2/3) ≈ 0.816
        assert_eq!(knapsack_upper_bound(&labels, 5), 3);
        let p = Pipeline::build(&spec(Task::Multilabel { k: 5 }, "knapsack", "cube"), &labels).unwrap();
        assert_eq!(p.projection, Polytope::Knapsack { k: 5, lower: 0, upper: 3 });
        assert!(p.relaxed);
        let target = p.encode(&StructuredLabel::LabelSet(vec![0, 1, 2, 3])).unwrap();
        assert!(p.loss(&[0.0; 5], &target).is_ok());
    }

    #[test]
    fn ranking_sets() {
        let t = Task::Ranking { k: 3 };
        let p = Pipeline::build(&spec(t, "simplex", "birkhoff"), &[]).unwrap();
        assert_eq!(p.projection, Polytope::RowStochastic(3));
        assert_eq!(p.dim(), 9);
        let p = Pipeline::build(&spec(t, "permutahedron", "permutahedron"), &[]).unwrap();
        assert_eq!(p.dim(), 3);
        let y = p.predict(&[0.1, 3.0, -1.0]).unwrap();
        assert_eq!(y, StructuredLabel::Permutation(vec![1, 0, 2]));
        assert!(Pipeline::build(&spec(t, "birkhoff", "permutahedron"), &[]).is_err());
    }

    #[test]
    fn birkhoff_decoding_returns_permutations() {
        let p = Pipeline::build(&spec(Task::Ranking { k: 2 }, "full", "birkhoff"), &[]).unwrap();
        let y = p.predict(&[0.1, 0.9, 0.8, 0.2]).unwrap();
        assert_eq!(y, StructuredLabel::Permutation(vec![1, 0]));
    }

    #[test]
    fn ordinal_decoders() {
        let t = Task::Ordinal { k: 5 };
        let ridge = Pipeline::build(&spec(t, "full", "round"), &[]).unwrap();
        assert_eq!(ridge.predict(&[3.4]).unwrap(), StructuredLabel::Ordinal(2));
        assert_eq!(ridge.predict(&[-7.0]).unwrap(), StructuredLabel::Ordinal(0));
        let os = Pipeline::build(&spec(t, "ordersimplex", "ordersimplex"), &[]).unwrap();
        assert_eq!(os.predict(&[0.9, 0.8, 0.1, 0.0]).unwrap(), StructuredLabel::Ordinal(2));
        assert!(Pipeline::build(&spec(t, "cube", "round"), &[]).is_err());
    }

    #[test]
    fn kl_on_full_space_is_rejected() {
        let mut s = spec(Task::Multiclass { k: 3 }, "full", "simplex");
        s.geometry = Geometry::ShannonKl;
        assert!(matches!(Pipeline::build(&s, &[]), Err(Error::Unbounded(_))));
    }
}
