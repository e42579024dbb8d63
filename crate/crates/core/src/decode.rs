//! MAP oracles, affine decompositions of target losses and calibrated
//! decoding.
//!
//! A target loss is decomposed as L(ŷ, y) = ⟨ψ(ŷ), Vφ(y) + b⟩ + c(y); a point
//! u estimating E[φ(Y)] is then decoded as MAP(−Vu − b).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::polytope::{argsort_desc, Polytope};
use crate::scalar::{dot, sum, Scalar};
use crate::structure::{Encoding, StructuredLabel};

/// argmax_y ⟨θ, φ(y)⟩ over the vertices of `polytope`.
pub fn map_oracle<F: Scalar>(polytope: &Polytope<F>, theta: &[F]) -> Result<StructuredLabel> {
    let vertex = polytope.lmo(theta)?;
    vertex
        .structure
        .ok_or_else(|| Error::InvalidPolytope("vertex carries no structure".into()))
}

/// Linear map V of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinearMap<F> {
    /// s·I.
    ScaledIdentity(F),
    /// 1 − I (the 0-1 cost matrix).
    OnesMinusIdentity,
    /// Row-major `rows × cols` matrix.
    Dense { rows: usize, cols: usize, data: Vec<F> },
}

impl<F: Scalar> LinearMap<F> {
    pub fn apply(&self, u: &[F]) -> Result<Vec<F>> {
        match self {
            LinearMap::ScaledIdentity(s) => Ok(u.iter().map(|&x| *s * x).collect()),
            LinearMap::OnesMinusIdentity => {
                let total = sum(u);
                Ok(u.iter().map(|&x| total - x).collect())
            }
            LinearMap::Dense { rows, cols, data } => {
                check_dim(*cols, u.len())?;
                Ok((0..*rows).map(|r| dot(&data[r * cols..(r + 1) * cols], u)).collect())
            }
        }
    }

    /// Vᵀx.
    pub fn apply_transpose(&self, x: &[F]) -> Result<Vec<F>> {
        match self {
            LinearMap::Dense { rows, cols, data } => {
                check_dim(*rows, x.len())?;
                Ok((0..*cols)
                    .map(|c| (0..*rows).map(|r| data[r * cols + c] * x[r]).sum())
                    .collect())
            }
            // symmetric
            _ => self.apply(x),
        }
    }
}

/// Label-dependent constant c(y), evaluated on φ(y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstantTerm<F> {
    Zero,
    Constant(F),
    /// ⟨φ(y), 1⟩.
    TargetSum,
}

/// How ground-truth labels are embedded for a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TargetEncoding<F> {
    Standard(Encoding<F>),
    /// y / N(y) for relevance scores, N(y) = ⟨sort(y), w⟩.
    NormalizedRelevance { weights: Vec<F> },
    /// y / min(k, |y|) for binary relevance.
    PrecisionRelevance { top: usize },
}

impl<F: Scalar> TargetEncoding<F> {
    pub fn encode(&self, label: &StructuredLabel) -> Result<Vec<F>> {
        match self {
            TargetEncoding::Standard(e) => e.encode(label),
            TargetEncoding::NormalizedRelevance { weights } => {
                let StructuredLabel::Relevance(rel) = label else {
                    return Err(Error::InvalidLabel(format!("{label:?} is not a relevance vector")));
                };
                check_dim(weights.len(), rel.len())?;
                let mut sorted = rel.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let norm: F = sorted
                    .iter()
                    .zip(weights)
                    .map(|(&r, &w)| F::lit(r as f64) * w)
                    .sum();
                if norm <= F::zero() {
                    return Err(Error::InvalidLabel("relevance vector with zero normalization".into()));
                }
                Ok(rel.iter().map(|&r| F::lit(r as f64) / norm).collect())
            }
            TargetEncoding::PrecisionRelevance { top } => {
                let StructuredLabel::Relevance(rel) = label else {
                    return Err(Error::InvalidLabel(format!("{label:?} is not a relevance vector")));
                };
                if rel.iter().any(|&r| r > 1) {
                    return Err(Error::InvalidLabel("precision needs binary relevance".into()));
                }
                let positives = rel.iter().filter(|&&r| r == 1).count();
                let denom = (*top).min(positives);
                if denom == 0 {
                    return Err(Error::InvalidLabel("no relevant item".into()));
                }
                let d = F::from_usize_lossy(denom);
                Ok(rel.iter().map(|&r| F::lit(r as f64) / d).collect())
            }
        }
    }
}

/// L(ŷ, y) = ⟨ψ(ŷ), Vφ(y) + b⟩ + c(y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDecomposition<F> {
    pub name: String,
    pub v: LinearMap<F>,
    pub b: Vec<F>,
    pub c: ConstantTerm<F>,
    /// ψ, the output-side encoding.
    pub output: Encoding<F>,
    /// φ, the ground-truth encoding.
    pub target: TargetEncoding<F>,
}

/// The discount weights wᵢ = 1 / log₂(1 + i).
pub fn ndcg_weights<F: Scalar>(m: usize) -> Vec<F> {
    (1..=m).map(|i| F::one() / F::from_usize_lossy(1 + i).log2()).collect()
}

/// Looks up a named target loss over `k` items.
///
/// Names: `zero_one`, `hamming_multilabel`, `hamming_ranking`,
/// `absolute_ordinal`, `ndcg`, `precision@N`.
pub fn decomposition_for<F: Scalar>(name: &str, k: usize) -> Result<LossDecomposition<F>> {
    let zeros = |n: usize| vec![F::zero(); n];
    let ones = |n: usize| vec![F::one(); n];
    let d = match name {
        "zero_one" => LossDecomposition {
            name: name.into(),
            v: LinearMap::OnesMinusIdentity,
            b: zeros(k),
            c: ConstantTerm::Zero,
            output: Encoding::OneHot { k },
            target: TargetEncoding::Standard(Encoding::OneHot { k }),
        },
        "hamming_multilabel" => LossDecomposition {
            name: name.into(),
            v: LinearMap::ScaledIdentity(F::lit(-2.0)),
            b: ones(k),
            c: ConstantTerm::TargetSum,
            output: Encoding::Indicator { k },
            target: TargetEncoding::Standard(Encoding::Indicator { k }),
        },
        "hamming_ranking" => LossDecomposition {
            name: name.into(),
            v: LinearMap::ScaledIdentity(-F::one()),
            b: zeros(k * k),
            c: ConstantTerm::Constant(F::from_usize_lossy(k)),
            output: Encoding::PermutationMatrix { k },
            target: TargetEncoding::Standard(Encoding::PermutationMatrix { k }),
        },
        "absolute_ordinal" => LossDecomposition {
            name: name.into(),
            v: LinearMap::ScaledIdentity(F::lit(-2.0)),
            b: ones(k.saturating_sub(1)),
            c: ConstantTerm::TargetSum,
            output: Encoding::Thresholds { k },
            target: TargetEncoding::Standard(Encoding::Thresholds { k }),
        },
        "ndcg" => {
            let weights = ndcg_weights(k);
            LossDecomposition {
                name: name.into(),
                v: LinearMap::ScaledIdentity(-F::one()),
                b: zeros(k),
                c: ConstantTerm::Constant(F::one()),
                output: Encoding::PermutedWeights { weights: weights.clone() },
                target: TargetEncoding::NormalizedRelevance { weights },
            }
        }
        other => {
            let top = other
                .strip_prefix("precision@")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1 && n <= k)
                .ok_or_else(|| Error::UnknownLoss(other.to_string()))?;
            let weights = (0..k).map(|i| if i < top { F::one() } else { F::zero() }).collect();
            LossDecomposition {
                name: name.into(),
                v: LinearMap::ScaledIdentity(-F::one()),
                b: zeros(k),
                c: ConstantTerm::Constant(F::one()),
                output: Encoding::PermutedWeights { weights },
                target: TargetEncoding::PrecisionRelevance { top },
            }
        }
    };
    Ok(d)
}

impl<F: Scalar> LossDecomposition<F> {
    /// V = loss matrix with one-hot ψ and φ, for small finite spaces.
    pub fn from_loss_matrix(matrix: Vec<F>, outputs: usize, labels: usize) -> Result<Self> {
        check_dim(outputs * labels, matrix.len())?;
        Ok(Self {
            name: "general".into(),
            v: LinearMap::Dense {
                rows: outputs,
                cols: labels,
                data: matrix,
            },
            b: vec![F::zero(); outputs],
            c: ConstantTerm::Zero,
            output: Encoding::OneHot { k: outputs },
            target: TargetEncoding::Standard(Encoding::OneHot { k: labels }),
        })
    }

    /// Entrywise Hamming loss on k × k 0/1 matrices (V = −2I, b = 1).
    ///
    /// On permutation matrices this is twice the ranking Hamming loss, and
    /// unlike it the decomposition stays valid for any 0/1 matrix output.
    pub fn entrywise_hamming(k: usize) -> Self {
        let mut d = decomposition_for::<F>("hamming_multilabel", k * k).expect("known loss");
        d.name = "hamming_entrywise".into();
        d
    }

    /// Set over which decoding maximizes: the convex hull of ψ(O).
    pub fn output_polytope(&self) -> Polytope<F> {
        self.output
            .marginal_polytope()
            .expect("decomposition outputs always have a marginal polytope")
    }

    /// The decoding direction −Vu − b.
    pub fn decoding_scores(&self, u: &[F]) -> Result<Vec<F>> {
        check_dim(self.b.len(), self.v_rows(u.len()))?;
        let vu = self.v.apply(u)?;
        Ok(vu.iter().zip(&self.b).map(|(&a, &b)| -a - b).collect())
    }

    fn v_rows(&self, cols: usize) -> usize {
        match &self.v {
            LinearMap::Dense { rows, .. } => *rows,
            _ => cols,
        }
    }

    /// c(y) given φ(y).
    pub fn constant(&self, phi: &[F]) -> F {
        match &self.c {
            ConstantTerm::Zero => F::zero(),
            ConstantTerm::Constant(c) => *c,
            ConstantTerm::TargetSum => sum(phi),
        }
    }

    /// ⟨ψ, Vφ + b⟩ + c, for already encoded ψ(ŷ) and φ(y).
    pub fn evaluate_encoded(&self, psi: &[F], phi: &[F]) -> Result<F> {
        let mut z = self.v.apply(phi)?;
        check_dim(z.len(), self.b.len())?;
        for (zi, &bi) in z.iter_mut().zip(&self.b) {
            *zi += bi;
        }
        check_dim(z.len(), psi.len())?;
        Ok(dot(psi, &z) + self.constant(phi))
    }

    /// L(ŷ, y) through the decomposition.
    pub fn evaluate(&self, predicted: &StructuredLabel, truth: &StructuredLabel) -> Result<F> {
        let psi = self.output.encode(predicted)?;
        let phi = self.target.encode(truth)?;
        self.evaluate_encoded(&psi, &phi)
    }
}

/// MAP(−Vu − b) over `polytope`.
pub fn calibrated_decode<F: Scalar>(
    decomposition: &LossDecomposition<F>,
    polytope: &Polytope<F>,
    u: &[F],
) -> Result<StructuredLabel> {
    let scores = decomposition.decoding_scores(u)?;
    map_oracle(polytope, &scores)
}

/// Nearest ordinal level to a real-valued regression output (1-based scale).
pub fn round_ordinal<F: Scalar>(value: F, k: usize) -> StructuredLabel {
    let v = value.round().max(F::one()).min(F::from_usize_lossy(k.max(1)));
    StructuredLabel::Ordinal(v.as_f64() as usize - 1)
}

/// Ranking (item → rank) induced by sorting scores in decreasing order.
pub fn ranking_from_scores<F: Scalar>(scores: &[F]) -> Vec<usize> {
    let order = argsort_desc(scores);
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos;
    }
    ranks
}
