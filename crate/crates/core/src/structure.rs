//! Structured labels and their vector encodings φ(y).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::scalar::Scalar;

/// A structured output. All indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructuredLabel {
    /// One class out of `k`.
    Class(usize),
    /// Sorted, duplicate-free subset of `0..k`.
    LabelSet(Vec<usize>),
    /// `perm[i]` is the position (rank, 0 = best) given to item `i`.
    Permutation(Vec<usize>),
    /// `assign[i]` is the column picked in row `i`; not necessarily a bijection.
    RowAssignment(Vec<usize>),
    /// Ordinal level in `0..k`.
    Ordinal(usize),
    /// Integer relevance scores, one per document.
    Relevance(Vec<u32>),
}

impl StructuredLabel {
    /// Builds a validated label set; duplicates are rejected.
    pub fn label_set(mut items: Vec<usize>, k: usize) -> Result<Self> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLabel("duplicate label in set".into()));
        }
        if let Some(&last) = items.last() {
            if last >= k {
                return Err(Error::InvalidLabel(format!("label {last} out of range 0..{k}")));
            }
        }
        Ok(StructuredLabel::LabelSet(items))
    }

    pub fn permutation(perm: Vec<usize>) -> Result<Self> {
        validate_permutation(&perm)?;
        Ok(StructuredLabel::Permutation(perm))
    }
}

pub(crate) fn validate_permutation(perm: &[usize]) -> Result<()> {
    let k = perm.len();
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::InvalidLabel(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// How a task maps labels to vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoding<F> {
    /// eᵧ ∈ ℝᵏ.
    OneHot { k: usize },
    /// Label indicator vector in {0,1}ᵏ.
    Indicator { k: usize },
    /// k × k permutation matrix, row-major, row = item, column = rank.
    PermutationMatrix { k: usize },
    /// (w_{π₁}, …, w_{π_k}) for a descending weight vector `w`.
    PermutedWeights { weights: Vec<F> },
    /// Σ_{i<y} eᵢ ∈ ℝ^{k−1} (all-threshold encoding).
    Thresholds { k: usize },
    /// The ordinal level itself as a 1-based real number (regression baseline).
    Scalar { k: usize },
}

impl<F: Scalar> Encoding<F> {
    pub fn dim(&self) -> usize {
        match self {
            Encoding::OneHot { k } | Encoding::Indicator { k } => *k,
            Encoding::PermutationMatrix { k } => k * k,
            Encoding::PermutedWeights { weights } => weights.len(),
            Encoding::Thresholds { k } => k.saturating_sub(1),
            Encoding::Scalar { .. } => 1,
        }
    }

    /// The convex hull of the encoded output space, when it is one of the
    /// supported polytopes.
    pub fn marginal_polytope(&self) -> Option<Polytope<F>> {
        match self {
            Encoding::OneHot { k } => Some(Polytope::Simplex(*k)),
            Encoding::Indicator { k } => Some(Polytope::Cube(*k)),
            Encoding::PermutationMatrix { k } => Some(Polytope::Birkhoff(*k)),
            Encoding::PermutedWeights { weights } => Some(Polytope::Permutahedron(weights.clone())),
            Encoding::Thresholds { k } => Some(Polytope::OrderSimplex(*k)),
            Encoding::Scalar { .. } => None,
        }
    }

    /// φ(y).
    pub fn encode(&self, label: &StructuredLabel) -> Result<Vec<F>> {
        use StructuredLabel as L;
        let bad = || Error::InvalidLabel(format!("{label:?} does not fit encoding {self:?}"));
        match (self, label) {
            (Encoding::OneHot { k }, L::Class(y)) => {
                if y >= k {
                    return Err(bad());
                }
                let mut out = vec![F::zero(); *k];
                out[*y] = F::one();
                Ok(out)
            }
            (Encoding::Indicator { k }, L::LabelSet(set)) => {
                let mut out = vec![F::zero(); *k];
                for &i in set {
                    if i >= *k || out[i] == F::one() {
                        return Err(bad());
                    }
                    out[i] = F::one();
                }
                Ok(out)
            }
            (Encoding::PermutationMatrix { k }, L::Permutation(perm)) => {
                if perm.len() != *k {
                    return Err(bad());
                }
                validate_permutation(perm)?;
                let mut out = vec![F::zero(); k * k];
                for (i, &r) in perm.iter().enumerate() {
                    out[i * k + r] = F::one();
                }
                Ok(out)
            }
            (Encoding::PermutedWeights { weights }, L::Permutation(perm)) => {
                if perm.len() != weights.len() {
                    return Err(bad());
                }
                validate_permutation(perm)?;
                Ok(perm.iter().map(|&r| weights[r]).collect())
            }
            (Encoding::Thresholds { k }, L::Ordinal(y)) => {
                if y >= k {
                    return Err(bad());
                }
                Ok((0..k - 1)
                    .map(|i| if i < *y { F::one() } else { F::zero() })
                    .collect())
            }
            (Encoding::Scalar { k }, L::Ordinal(y)) => {
                if y >= k {
                    return Err(bad());
                }
                Ok(vec![F::from_usize_lossy(y + 1)])
            }
            _ => Err(bad()),
        }
    }
}

/// The 0/1 matrix (row-major) of a ranking-like label over `k` items.
pub fn assignment_matrix<F: Scalar>(label: &StructuredLabel, k: usize) -> Result<Vec<F>> {
    let mut out = vec![F::zero(); k * k];
    match label {
        StructuredLabel::Permutation(cols) | StructuredLabel::RowAssignment(cols) => {
            if cols.len() != k || cols.iter().any(|&c| c >= k) {
                return Err(Error::InvalidLabel(format!("{label:?} is not a {k}-row assignment")));
            }
            for (i, &c) in cols.iter().enumerate() {
                out[i * k + c] = F::one();
            }
        }
        StructuredLabel::LabelSet(cells) => {
            for &c in cells {
                if c >= k * k {
                    return Err(Error::InvalidLabel(format!("cell {c} outside a {k}x{k} matrix")));
                }
                out[c] = F::one();
            }
        }
        _ => {
            return Err(Error::InvalidLabel(format!(
                "{label:?} cannot be read as a {k}x{k} matrix"
            )))
        }
    }
    Ok(out)
}

/// Weights (k, k−1, …, 1) used for rankings on the permutahedron.
pub fn default_rank_weights<F: Scalar>(k: usize) -> Vec<F> {
    (0..k).map(|i| F::from_usize_lossy(k - i)).collect()
}
