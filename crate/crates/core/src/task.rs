//! Prediction tasks and their evaluation metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{assignment_matrix, StructuredLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    Multiclass { k: usize },
    Multilabel { k: usize },
    Ranking { k: usize },
    Ordinal { k: usize },
}

impl Task {
    pub fn k(&self) -> usize {
        match *self {
            Task::Multiclass { k } | Task::Multilabel { k } | Task::Ranking { k } | Task::Ordinal { k } => k,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Multiclass { .. } => "multiclass",
            Task::Multilabel { .. } => "multilabel",
            Task::Ranking { .. } => "ranking",
            Task::Ordinal { .. } => "ordinal",
        }
    }

    pub fn parse(name: &str, k: usize) -> Result<Self> {
        match name {
            "multiclass" => Ok(Task::Multiclass { k }),
            "multilabel" => Ok(Task::Multilabel { k }),
            "ranking" | "label_ranking" => Ok(Task::Ranking { k }),
            "ordinal" => Ok(Task::Ordinal { k }),
            other => Err(Error::InvalidArgument(format!("unknown task '{other}'"))),
        }
    }

    /// Checks that a ground-truth label is well formed for this task.
    pub fn validate_label(&self, label: &StructuredLabel) -> Result<()> {
        let k = self.k();
        let ok = match (self, label) {
            (Task::Multiclass { .. }, StructuredLabel::Class(y)) => *y < k,
            (Task::Ordinal { .. }, StructuredLabel::Ordinal(y)) => *y < k,
            (Task::Multilabel { .. }, StructuredLabel::LabelSet(s)) => {
                s.windows(2).all(|w| w[0] < w[1]) && s.last().is_none_or(|&m| m < k)
            }
            (Task::Ranking { .. }, StructuredLabel::Permutation(p)) => {
                p.len() == k && crate::structure::validate_permutation(p).is_ok()
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidLabel(format!("{label:?} is not a valid {} label (k = {k})", self.name())))
        }
    }

    /// Name of the metric used for model selection and reported as primary.
    pub fn primary_metric(&self) -> &'static str {
        match self {
            Task::Multiclass { .. } => "error",
            Task::Multilabel { .. } => "f1",
            Task::Ranking { .. } => "hamming",
            Task::Ordinal { .. } => "mae",
        }
    }

    /// Score to minimize during validation, derived from the primary metric.
    pub fn selection_score(&self, metrics: &BTreeMap<String, f64>) -> f64 {
        let v = metrics[self.primary_metric()];
        match self {
            Task::Multilabel { .. } => 100.0 - v,
            _ => v,
        }
    }

    /// Task metrics of `predicted` against `truth`.
    ///
    /// * multiclass: `error`, 100 × fraction of wrong classes.
    /// * multilabel: `accuracy`, 100 × mean per-label agreement, and `f1`,
    ///   example-based F1 × 100 (both empty counts as 100).
    /// * ranking: `hamming`, 100 × mean fraction of items whose predicted
    ///   assignment row differs from the truth.
    /// * ordinal: `mae`, mean |ŷ − y|.
    pub fn metrics(&self, predicted: &[StructuredLabel], truth: &[StructuredLabel]) -> Result<BTreeMap<String, f64>> {
        if predicted.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::InvalidDataset("no samples to evaluate".into()));
        }
        let n = truth.len() as f64;
        let k = self.k();
        let mut out = BTreeMap::new();
        match self {
            Task::Multiclass { .. } => {
                let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
                out.insert("error".into(), 100.0 * wrong as f64 / n);
            }
            Task::Multilabel { .. } => {
                let (mut acc, mut f1) = (0.0, 0.0);
                for (p, t) in predicted.iter().zip(truth) {
                    let (StructuredLabel::LabelSet(p), StructuredLabel::LabelSet(t)) = (p, t) else {
                        return Err(Error::InvalidLabel("multilabel metrics need label sets".into()));
                    };
                    let inter = p.iter().filter(|i| t.contains(i)).count();
                    let disagree = p.len() + t.len() - 2 * inter;
                    acc += (k - disagree) as f64 / k as f64;
                    f1 += if p.is_empty() && t.is_empty() {
                        1.0
                    } else {
                        2.0 * inter as f64 / (p.len() + t.len()) as f64
                    };
                }
                out.insert("accuracy".into(), 100.0 * acc / n);
                out.insert("f1".into(), 100.0 * f1 / n);
            }
            Task::Ranking { .. } => {
                let mut total = 0.0;
                for (p, t) in predicted.iter().zip(truth) {
                    let pm = assignment_matrix::<f64>(p, k)?;
                    let tm = assignment_matrix::<f64>(t, k)?;
                    let differing = (0..k).filter(|&i| pm[i * k..(i + 1) * k] != tm[i * k..(i + 1) * k]).count();
                    total += differing as f64 / k as f64;
                }
                out.insert("hamming".into(), 100.0 * total / n);
            }
            Task::Ordinal { .. } => {
                let mut total = 0.0;
                for (p, t) in predicted.iter().zip(truth) {
                    let (StructuredLabel::Ordinal(p), StructuredLabel::Ordinal(t)) = (p, t) else {
                        return Err(Error::InvalidLabel("ordinal metrics need ordinal labels".into()));
                    };
                    total += (*p as f64 - *t as f64).abs();
                }
                out.insert("mae".into(), total / n);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StructuredLabel::*;

    #[test]
    fn perfect_predictions() {
        let t = Task::Multilabel { k: 3 };
        let y = vec![LabelSet(vec![0]), LabelSet(vec![])];
        let m = t.metrics(&y, &y).unwrap();
        assert_eq!((m["accuracy"], m["f1"]), (100.0, 100.0));
        let t = Task::Ranking { k: 3 };
        let y = vec![Permutation(vec![2, 0, 1])];
        assert_eq!(t.metrics(&y, &y).unwrap()["hamming"], 0.0);
        let t = Task::Ordinal { k: 3 };
        let y = vec![Ordinal(2)];
        assert_eq!(t.metrics(&y, &y).unwrap()["mae"], 0.0);
    }

    #[test]
    fn ranking_hamming_example() {
        let t = Task::Ranking { k: 2 };
        let truth = vec![Permutation(vec![0, 1]), Permutation(vec![0, 1])];
        let pred = vec![Permutation(vec![0, 1]), Permutation(vec![1, 0])];
        assert_eq!(t.metrics(&pred, &truth).unwrap()["hamming"], 50.0);
        // a cube decoding that leaves a row empty counts that row as wrong
        let pred = vec![LabelSet(vec![0, 3]), LabelSet(vec![0])];
        assert_eq!(t.metrics(&pred, &truth).unwrap()["hamming"], 25.0);
    }

    #[test]
    fn multilabel_example() {
        let t = Task::Multilabel { k: 3 };
        let m = t.metrics(&[LabelSet(vec![0, 1])], &[LabelSet(vec![0])]).unwrap();
        assert!((m["accuracy"] - 200.0 / 3.0).abs() < 1e-12);
        assert!((m["f1"] - 200.0 / 3.0).abs() < 1e-12);
        let m = t.metrics(&[LabelSet(vec![])], &[LabelSet(vec![1])]).unwrap();
        assert_eq!(m["f1"], 0.0);
    }

    #[test]
    fn ordinal_mae() {
        let t = Task::Ordinal { k: 5 };
        let m = t.metrics(&[Ordinal(0), Ordinal(4)], &[Ordinal(2), Ordinal(4)]).unwrap();
        assert_eq!(m["mae"], 1.0);
    }

    #[test]
    fn label_validation() {
        assert!(Task::Ranking { k: 3 }.validate_label(&Permutation(vec![0, 1, 1])).is_err());
        assert!(Task::Ordinal { k: 3 }.validate_label(&Ordinal(3)).is_err());
        assert!(Task::Multilabel { k: 3 }.validate_label(&LabelSet(vec![0, 2])).is_ok());
    }
}
