//! Dataset parsers and writers, and the binary model file format.
//!
//! Labels are 1-based on disk and 0-based in memory.
//!
//! * Multilabel: one sample per line, `l1,l2,… i1:v1 i2:v2 …` with 1-based
//!   feature indices; a line starting with whitespace has no labels.
//! * Ranking CSV: `d` feature columns, then `k` columns where column `j`
//!   holds the 1-based rank of item `j`.
//! * Ordinal / multiclass CSV: feature columns, then an integer label.
//!
//! Blank lines and lines starting with `#` are skipped. A first CSV row that
//! is not numeric is taken as a header.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::StructuredLabel;
use crate::task::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDataset {
    /// Dense n × d feature rows.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<StructuredLabel>,
    pub task: Task,
    pub n_features: usize,
    /// `Some(mask)` when the source declared a test partition (true = test).
    pub declared_test: Option<Vec<bool>>,
}

impl RawDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<StructuredLabel>, task: Task, n_features: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        for (i, (row, label)) in features.iter().zip(&labels).enumerate() {
            if row.len() != n_features {
                return Err(Error::InvalidDataset(format!("row {}: expected {n_features} features", i + 1)));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {}: non-finite feature", i + 1)));
            }
            task.validate_label(label).map_err(|e| Error::AtSample {
                index: i,
                source: Box::new(e),
            })?;
        }
        Ok(Self {
            features,
            labels,
            task,
            n_features,
            declared_test: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows at `idx`, in that order, without a declared split.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            task: self.task,
            n_features: self.n_features,
            declared_test: None,
        }
    }

    /// Concatenates a training file and a test file, recording the partition.
    pub fn with_test(train: Self, test: Self) -> Result<Self> {
        if train.task != test.task || train.n_features != test.n_features {
            return Err(Error::InvalidDataset("train and test files disagree on task or feature count".into()));
        }
        let mut mask = vec![false; train.len()];
        mask.extend(std::iter::repeat_n(true, test.len()));
        let mut features = train.features;
        features.extend(test.features);
        let mut labels = train.labels;
        labels.extend(test.labels);
        Ok(Self {
            features,
            labels,
            task: train.task,
            n_features: train.n_features,
            declared_test: Some(mask),
        })
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parses the sparse multilabel format. `n_features` defaults to the largest
/// index seen.
pub fn parse_multilabel_sparse_str(text: &str, k: usize, n_features: Option<usize>) -> Result<RawDataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0;
    for (line, raw) in data_lines(text) {
        let (label_field, feature_field) = if raw.starts_with(char::is_whitespace) {
            ("", raw.trim())
        } else {
            match raw.split_once(char::is_whitespace) {
                Some((l, f)) => (l, f.trim()),
                None => (raw, ""),
            }
        };
        let mut set = Vec::new();
        if !label_field.is_empty() {
            for tok in label_field.split(',') {
                let v: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad label '{tok}'")))?;
                if v == 0 || v > k {
                    return Err(Error::IndexOutOfRange { line, index: v, limit: k });
                }
                set.push(v - 1);
            }
        }
        let label = StructuredLabel::label_set(set, k).map_err(|e| parse_err(line, e.to_string()))?;
        let mut row = Vec::new();
        for tok in feature_field.split_whitespace() {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(line, format!("expected index:value, got '{tok}'")))?;
            let i: usize = i.parse().map_err(|_| parse_err(line, format!("bad feature index '{i}'")))?;
            let v: f64 = v.parse().map_err(|_| parse_err(line, format!("bad feature value '{v}'")))?;
            if i == 0 {
                return Err(Error::IndexOutOfRange { line, index: 0, limit: n_features.unwrap_or(0) });
            }
            if let Some(d) = n_features {
                if i > d {
                    return Err(Error::IndexOutOfRange { line, index: i, limit: d });
                }
            }
            max_index = max_index.max(i);
            row.push((i - 1, v));
        }
        rows.push(row);
        labels.push(label);
    }
    let d = n_features.unwrap_or(max_index);
    let features = rows
        .into_iter()
        .map(|row| {
            let mut dense = vec![0.0; d];
            for (i, v) in row {
                dense[i] = v;
            }
            dense
        })
        .collect();
    RawDataset::new(features, labels, Task::Multilabel { k }, d)
}

/// Splits CSV text into numeric rows, skipping a non-numeric header.
fn numeric_rows(text: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    for (idx, (line, raw)) in data_lines(text).enumerate() {
        let cells: Vec<String> = raw.split(',').map(|c| c.trim().to_string()).collect();
        if idx == 0 && cells.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        out.push((line, cells));
    }
    Ok(out)
}

fn parse_features(line: usize, cells: &[String]) -> Result<Vec<f64>> {
    cells
        .iter()
        .map(|c| c.parse::<f64>().map_err(|_| parse_err(line, format!("bad number '{c}'"))))
        .collect()
}

fn parse_int(line: usize, cell: &str) -> Result<usize> {
    cell.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected a positive integer, got '{cell}'")))
}

/// Parses a label-ranking CSV with `k` rank columns.
pub fn parse_ranking_csv_str(text: &str, k: usize) -> Result<RawDataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut d = None;
    for (row, (line, cells)) in numeric_rows(text)?.into_iter().enumerate() {
        if cells.len() <= k {
            return Err(parse_err(line, format!("expected more than {k} columns")));
        }
        let nf = cells.len() - k;
        if *d.get_or_insert(nf) != nf {
            return Err(parse_err(line, "inconsistent column count"));
        }
        features.push(parse_features(line, &cells[..nf])?);
        let ranks = cells[nf..]
            .iter()
            .map(|c| parse_int(line, c))
            .collect::<Result<Vec<usize>>>()?;
        if ranks.iter().any(|&r| r == 0 || r > k) {
            return Err(Error::NotAPermutation { row: row + 1, k });
        }
        let perm: Vec<usize> = ranks.into_iter().map(|r| r - 1).collect();
        let label = StructuredLabel::permutation(perm).map_err(|_| Error::NotAPermutation { row: row + 1, k })?;
        labels.push(label);
    }
    RawDataset::new(features, labels, Task::Ranking { k }, d.unwrap_or(0))
}

/// Parses a CSV whose last column is an integer label in 1..k, for ordinal or
/// multiclass tasks. `k` defaults to the largest label.
pub fn parse_labeled_csv_str(text: &str, task_name: &str, k: Option<usize>) -> Result<RawDataset> {
    let rows = numeric_rows(text)?;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    let mut d = None;
    for (line, cells) in rows {
        if cells.len() < 2 {
            return Err(parse_err(line, "expected features and a label"));
        }
        let nf = cells.len() - 1;
        if *d.get_or_insert(nf) != nf {
            return Err(parse_err(line, "inconsistent column count"));
        }
        features.push(parse_features(line, &cells[..nf])?);
        let y = parse_int(line, &cells[nf])?;
        if y == 0 || k.is_some_and(|k| y > k) {
            return Err(Error::IndexOutOfRange {
                line,
                index: y,
                limit: k.unwrap_or(usize::MAX),
            });
        }
        raw_labels.push(y - 1);
    }
    let k = k.unwrap_or_else(|| raw_labels.iter().max().map_or(0, |m| m + 1));
    let task = Task::parse(task_name, k)?;
    let labels = raw_labels
        .into_iter()
        .map(|y| match task {
            Task::Ordinal { .. } => Ok(StructuredLabel::Ordinal(y)),
            Task::Multiclass { .. } => Ok(StructuredLabel::Class(y)),
            _ => Err(Error::InvalidArgument(format!("'{task_name}' is not a single-label task"))),
        })
        .collect::<Result<Vec<_>>>()?;
    RawDataset::new(features, labels, task, d.unwrap_or(0))
}

pub fn parse_multilabel_sparse(path: &Path, k: usize, n_features: Option<usize>) -> Result<RawDataset> {
    parse_multilabel_sparse_str(&read_to_string(path)?, k, n_features)
}

pub fn parse_ranking_csv(path: &Path, k: usize) -> Result<RawDataset> {
    parse_ranking_csv_str(&read_to_string(path)?, k)
}

pub fn parse_ordinal_csv(path: &Path, k: Option<usize>) -> Result<RawDataset> {
    parse_labeled_csv_str(&read_to_string(path)?, "ordinal", k)
}

/// Loads a dataset of the given task from disk, picking the parser by task.
pub fn load_dataset(path: &Path, task: &str, k: usize) -> Result<RawDataset> {
    match task {
        "multilabel" => parse_multilabel_sparse(path, k, None),
        "ranking" | "label_ranking" => parse_ranking_csv(path, k),
        "ordinal" | "multiclass" => parse_labeled_csv_str(&read_to_string(path)?, task, Some(k)),
        other => Err(Error::InvalidArgument(format!("unknown task '{other}'"))),
    }
}

fn fmt_num(x: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{x:?}")
}

/// Serializes a dataset in the on-disk format of its task.
pub fn write_dataset_string(data: &RawDataset) -> Result<String> {
    let mut out = String::new();
    for (row, label) in data.features.iter().zip(&data.labels) {
        match (data.task, label) {
            (Task::Multilabel { .. }, StructuredLabel::LabelSet(set)) => {
                let labels: Vec<String> = set.iter().map(|l| (l + 1).to_string()).collect();
                out.push_str(&labels.join(","));
                for (i, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        let _ = write!(out, " {}:{}", i + 1, fmt_num(*v));
                    }
                }
                if set.is_empty() && row.iter().all(|v| *v == 0.0) {
                    // keep the line non-blank so it survives a re-parse
                    out.push(' ');
                    let _ = write!(out, "1:{}", fmt_num(0.0));
                }
            }
            (Task::Ranking { .. }, StructuredLabel::Permutation(perm)) => {
                let mut cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
                cells.extend(perm.iter().map(|r| (r + 1).to_string()));
                out.push_str(&cells.join(","));
            }
            (Task::Ordinal { .. }, StructuredLabel::Ordinal(y)) | (Task::Multiclass { .. }, StructuredLabel::Class(y)) => {
                let mut cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
                cells.push((y + 1).to_string());
                out.push_str(&cells.join(","));
            }
            _ => return Err(Error::InvalidLabel(format!("{label:?} does not match task {:?}", data.task))),
        }
        out.push('\n');
    }
    Ok(out)
}

pub const MODEL_MAGIC: &[u8; 8] = b"PROJLOSS";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Metadata stored ahead of the weights in a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub task: Task,
    pub projection: String,
    pub decoding: String,
    pub geometry: String,
    pub loss: String,
    pub lambda: f64,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub header: ModelHeader,
    /// Row-major `rows × cols` weights.
    pub weights: Vec<f64>,
}

/// Layout: magic, u32 LE header length, JSON header, then rows × cols f64 LE.
pub fn write_model<W: Write>(mut w: W, model: &ModelFile) -> Result<()> {
    if model.weights.len() != model.header.rows * model.header.cols {
        return Err(Error::Format("weight count does not match the header dimensions".into()));
    }
    let header = serde_json::to_vec(&model.header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for v in &model.weights {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(mut r: R) -> Result<ModelFile> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let truncated = || Error::Format("file is truncated".into());
    if bytes.len() < 12 {
        return Err(truncated());
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(Error::Format("not a projloss model file".into()));
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(12..12 + len).ok_or_else(truncated)?;
    let value: serde_json::Value = serde_json::from_slice(body).map_err(|e| Error::Format(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format("header lacks format_version".into()))? as u32;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let header: ModelHeader = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let n = header.rows * header.cols;
    let data = &bytes[12 + len..];
    if data.len() < n * 8 {
        return Err(truncated());
    }
    if data.len() > n * 8 {
        return Err(Error::Format("trailing bytes after the weights".into()));
    }
    let weights = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(ModelFile { header, weights })
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_model(std::io::BufWriter::new(file), model)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_model(std::io::BufReader::new(file))
}
