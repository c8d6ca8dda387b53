//! Extractor selection strategies over a board of past MIX scores, and
//! run-level evaluation.
//!
//! Indices are zero-based throughout; ties always go to the lowest index.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Partition;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// MIX scores of `M` extractors on `P` datasets (`scores[p][m]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBoard {
    pub dataset_names: Vec<String>,
    pub extractor_names: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreBoard {
    pub fn new(dataset_names: Vec<String>, extractor_names: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if scores.len() != dataset_names.len() {
            return Err(Error::LengthMismatch {
                left: scores.len(),
                right: dataset_names.len(),
            });
        }
        for (p, row) in scores.iter().enumerate() {
            if row.len() != extractor_names.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: extractor_names.len(),
                });
            }
            if let Some(bad) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::invalid(format!(
                    "score {bad} for dataset {} is outside [0, 1]",
                    dataset_names[p]
                )));
            }
        }
        Ok(ScoreBoard {
            dataset_names,
            extractor_names,
            scores,
        })
    }

    pub fn n_datasets(&self) -> usize {
        self.scores.len()
    }

    pub fn n_extractors(&self) -> usize {
        self.extractor_names.len()
    }

    pub fn dataset_index(&self, name: &str) -> Option<usize> {
        self.dataset_names.iter().position(|d| d == name)
    }

    /// Reads the CSV fixture format: a header `dataset,<extractor>...` and
    /// one row per dataset.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let headers = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
        if headers.len() < 2 {
            return Err(Error::format(path, "header needs a dataset column and at least one extractor"));
        }
        let extractor_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut dataset_names = Vec::new();
        let mut scores = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::format(path, e.to_string()))?;
            dataset_names.push(record[0].to_string());
            let row = record
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|_| Error::format(path, format!("not a number: {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            scores.push(row);
        }
        Self::new(dataset_names, extractor_names, scores)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let mut header = vec!["dataset".to_string()];
        header.extend(self.extractor_names.iter().cloned());
        w.write_record(&header).map_err(|e| Error::format(path, e.to_string()))?;
        for (name, row) in self.dataset_names.iter().zip(&self.scores) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| Error::format(path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Leading network: the extractor with the best mean score over every
/// dataset except `holdout`.
pub fn lnet_select(board: &ScoreBoard, holdout: Option<usize>) -> Result<usize> {
    let p = board.n_datasets();
    if p < 2 {
        return Err(Error::invalid(format!("LNet needs at least two datasets, board has {p}")));
    }
    if let Some(h) = holdout {
        if h >= p {
            return Err(Error::invalid(format!("holdout {h} out of range 0..{p}")));
        }
    }
    if board.n_extractors() == 0 {
        return Err(Error::invalid("board has no extractors"));
    }
    let rows: Vec<&Vec<f64>> = board
        .scores
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != holdout)
        .map(|(_, r)| r)
        .collect();
    let count = rows.len() as f64;
    let means = (0..board.n_extractors()).map(|m| rows.iter().map(|r| r[m]).sum::<f64>() / count);
    Ok(argmax(means).expect("at least one extractor"))
}

/// LNet choice for every dataset, each computed on the other `P - 1`.
pub fn lnet_leave_one_out(board: &ScoreBoard) -> Result<Vec<usize>> {
    (0..board.n_datasets()).map(|h| lnet_select(board, Some(h))).collect()
}

/// Best and worst extractor on one board row.
pub fn bnet_wnet(row: &[f64]) -> Result<(usize, usize)> {
    let best = argmax(row.iter().copied()).ok_or_else(|| Error::invalid("empty score row"))?;
    let worst = argmax(row.iter().map(|v| -v)).expect("non-empty");
    Ok((best, worst))
}

/// All five external metrics for one predicted partition.
pub fn evaluate_run(y_true: &Partition, y_pred: &Partition) -> Result<MetricsReport> {
    MetricsReport::compute(y_true, y_pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub dataset: String,
    pub lnet: String,
    pub lnet_score: f64,
    pub bnet: String,
    pub bnet_score: f64,
    pub wnet: String,
    pub wnet_score: f64,
}

/// LNet (leave-one-out), BNet and WNet for every dataset on the board.
pub fn summarize(board: &ScoreBoard) -> Result<Vec<SelectionSummary>> {
    let lnets = lnet_leave_one_out(board)?;
    board
        .dataset_names
        .iter()
        .zip(&board.scores)
        .zip(lnets)
        .map(|((name, row), l)| {
            let (b, w) = bnet_wnet(row)?;
            Ok(SelectionSummary {
                dataset: name.clone(),
                lnet: board.extractor_names[l].clone(),
                lnet_score: row[l],
                bnet: board.extractor_names[b].clone(),
                bnet_score: row[b],
                wnet: board.extractor_names[w].clone(),
                wnet_score: row[w],
            })
        })
        .collect()
}
