//! Outlier flagging on entropy timelines and scoring against ground truth.

mod hampel;
mod report;

use std::collections::BTreeSet;

pub use hampel::{hampel_flag, median_mad, HampelConfig};
pub use report::{
    evaluate, labels_from_windows, read_labels_csv, region_recall, write_labels_csv, Confusion,
    DetectError, DetectionReport, Evaluation, Metrics,
};

/// Inclusive run of window indices.
pub type Region = (usize, usize);

/// Merges flagged indices into maximal runs.
///
/// With `gap_bridge = g`, runs separated by at most `g` unflagged indices
/// are joined.
pub fn merge_regions(flags: &BTreeSet<usize>, gap_bridge: usize) -> Vec<Region> {
    let mut regions: Vec<Region> = Vec::new();
    for &i in flags {
        match regions.last_mut() {
            Some((_, end)) if i - *end <= gap_bridge + 1 => *end = i,
            _ => regions.push((i, i)),
        }
    }
    regions
}

/// Maximal runs of `true` in a per-window label vector.
pub fn label_regions(labels: &[bool]) -> Vec<Region> {
    let flagged: BTreeSet<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(i, _)| i)
        .collect();
    merge_regions(&flagged, 0)
}

pub fn overlaps(a: Region, b: Region) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}
