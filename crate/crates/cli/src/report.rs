//! JSON report documents. Field order is fixed by the struct definitions and
//! maps are sorted, so identical runs serialize to identical bytes.

use std::collections::BTreeMap;

use projloss::training::LambdaScore;
use serde::{Deserialize, Serialize};

pub type Metrics = BTreeMap<String, f64>;

/// Human-readable definitions of every metric, embedded in each report.
pub fn metric_definitions() -> BTreeMap<String, String> {
    [
        ("error", "100 × fraction of misclassified samples"),
        ("hamming", "100 × mean fraction of items whose predicted rank differs from the true rank"),
        ("mae", "mean absolute difference between predicted and true ordinal levels"),
        ("accuracy", "100 × mean per-label agreement (Hamming accuracy)"),
        (
            "f1",
            "100 × example-based F1 averaged over samples; empty prediction and empty truth score 100, exactly one empty side scores 0",
        ),
        (
            "selection",
            "λ minimizes the task's primary metric on the validation split (100 − F1 for multilabel); ties go to the smaller λ",
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub status: String,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub kind: String,
    pub dataset: String,
    pub task: String,
    pub k: usize,
    pub projection: String,
    pub decoding: String,
    pub geometry: String,
    pub seed: u64,
    pub selection_metric: String,
    pub chosen_lambda: f64,
    pub val_metrics: Option<Metrics>,
    pub test_metrics: Metrics,
    pub candidates: Vec<LambdaScore>,
    pub split: SplitSizes,
    pub optimizer: OptimizerSummary,
    pub definitions: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: String,
    pub model: String,
    pub dataset: String,
    pub task: String,
    pub samples: usize,
    pub metrics: Metrics,
    pub definitions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub dataset: String,
    pub projection: String,
    pub decoding: String,
    pub geometry: String,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
    pub lambda: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub name: String,
    pub task: String,
    pub k: usize,
    pub rows: Vec<ExperimentRow>,
    pub definitions: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timing_seconds: Option<f64>,
}

/// One pipeline of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub projection: String,
    pub decoding: String,
    #[serde(default)]
    pub geometry: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Path relative to the configuration file, or synthetic:ordinal /
    /// synthetic:separable.
    pub dataset: String,
    #[serde(default)]
    pub test_dataset: Option<String>,
    pub task: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_geometry")]
    pub geometry: String,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    pub runs: Vec<RunConfig>,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_geometry() -> String {
    "euclidean".into()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
