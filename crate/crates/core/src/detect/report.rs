use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{label_regions, merge_regions, overlaps, Region};
use crate::ingest::{Label, LogWindow};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("labels csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn ratio(num: usize, den: usize) -> Option<f64> {
        (den > 0).then(|| num as f64 / den as f64)
    }

    /// Derived metrics. Undefined ratios (no flags, no positives) count as
    /// zero, except balanced accuracy, which falls back to whichever of the
    /// two rates is defined.
    pub fn metrics(&self) -> Metrics {
        let precision = Self::ratio(self.tp, self.tp + self.fp).unwrap_or(0.0);
        let recall = Self::ratio(self.tp, self.tp + self.fn_).unwrap_or(0.0);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let tpr = Self::ratio(self.tp, self.tp + self.fn_);
        let tnr = Self::ratio(self.tn, self.tn + self.fp);
        let balanced_accuracy = match (tpr, tnr) {
            (Some(a), Some(b)) => a / 2.0 + b / 2.0,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0.0,
        };
        Metrics {
            precision,
            recall,
            f_measure,
            balanced_accuracy,
        }
    }

    /// `fp / (fp + tn)`, zero when there are no negatives.
    pub fn false_positive_rate(&self) -> f64 {
        Self::ratio(self.fp, self.fp + self.tn).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub counts: Confusion,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Runs of anomalous windows in the labels.
    pub truth_regions: Vec<Region>,
    /// Share of truth regions that overlap a detected region; `None` when
    /// the labels hold no anomalous window.
    pub region_recall: Option<f64>,
}

/// Flags, merged regions and, when labels are known, the evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub windows: usize,
    pub flagged: Vec<usize>,
    pub regions: Vec<Region>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
}

impl DetectionReport {
    pub fn new(windows: usize, flags: &BTreeSet<usize>, gap_bridge: usize) -> Self {
        DetectionReport {
            windows,
            flagged: flags.iter().copied().collect(),
            regions: merge_regions(flags, gap_bridge),
            evaluation: None,
        }
    }

    /// Scores the flags against per-window labels (`true` = anomalous).
    pub fn with_labels(mut self, labels: &[bool]) -> Result<Self, DetectError> {
        if labels.len() != self.windows {
            return Err(DetectError::InvalidInput(format!(
                "{} labels for {} windows",
                labels.len(),
                self.windows
            )));
        }
        let flags: BTreeSet<usize> = self.flagged.iter().copied().collect();
        let mut counts = Confusion::default();
        for (i, &anomalous) in labels.iter().enumerate() {
            match (flags.contains(&i), anomalous) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fp += 1,
                (false, true) => counts.fn_ += 1,
                (false, false) => counts.tn += 1,
            }
        }
        let truth_regions = label_regions(labels);
        let region_recall = region_recall(&truth_regions, &self.regions);
        self.evaluation = Some(Evaluation {
            counts,
            metrics: counts.metrics(),
            truth_regions,
            region_recall,
        });
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-window confusion matrix and metrics.
pub fn evaluate(flags: &BTreeSet<usize>, labels: &[bool]) -> Result<DetectionReport, DetectError> {
    if let Some(&max) = flags.iter().next_back() {
        if max >= labels.len() {
            return Err(DetectError::InvalidInput(format!(
                "flagged window {max} but only {} labels",
                labels.len()
            )));
        }
    }
    DetectionReport::new(labels.len(), flags, 0).with_labels(labels)
}

/// Fraction of `truth` regions overlapping at least one `detected` region.
pub fn region_recall(truth: &[Region], detected: &[Region]) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let hit = truth
        .iter()
        .filter(|t| detected.iter().any(|d| overlaps(**t, *d)))
        .count();
    Some(hit as f64 / truth.len() as f64)
}

/// A window is anomalous iff any of its records is labeled anomalous.
pub fn labels_from_windows(windows: &[LogWindow]) -> Vec<bool> {
    windows.iter().map(LogWindow::is_anomalous).collect()
}

/// Writes `window,label` rows.
pub fn write_labels_csv<W: Write>(labels: &[bool], out: W) -> Result<(), DetectError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "label"])?;
    for (i, &a) in labels.iter().enumerate() {
        let label = if a { Label::Anomalous } else { Label::Normal };
        w.write_record([i.to_string(), label.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads `window,label` rows; windows must appear as 0, 1, 2, … in order.
/// Labels are `normal`/`anomalous` (or `0`/`1`).
pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<bool>, DetectError> {
    let mut r = csv::Reader::from_reader(input);
    let mut labels = Vec::new();
    for (row, rec) in r.deserialize::<(usize, String)>().enumerate() {
        let (index, label) = rec?;
        if index != row {
            return Err(DetectError::InvalidInput(format!(
                "label row {}: window {index}, expected {row}",
                row + 1
            )));
        }
        let label: Label = label.parse().map_err(DetectError::InvalidInput)?;
        labels.push(label.is_anomalous());
    }
    Ok(labels)
}
