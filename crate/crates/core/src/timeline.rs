//! Per-window entropy timelines.
//!
//! Every window is scored on its own: its records are masked, tokenized and
//! padded individually, and the window's entropy is the total surprisal of
//! its tokens divided by their count. This equals the token-weighted mean of
//! the per-record entropies. Nothing carries over between windows, so
//! windows can be scored in any order or in parallel.
//!
//! The model and the timeline must use the same mask rules; a mismatch
//! cannot be detected and simply inflates entropy.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{LogWindow, MaskSet, TokenSequence};
use crate::ngram::{ModelError, NGramModel};

pub const CSV_HEADER: [&str; 5] = ["window", "start", "end", "tokens", "entropy"];

#[derive(Debug, Error)]
pub enum TimelineError {
    #[error("window {window}: {source}")]
    Score {
        window: usize,
        #[source]
        source: ModelError,
    },
    #[error("timeline csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("timeline csv row {row}: {message}")]
    Format { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub index: usize,
    pub span: (u64, u64),
    pub tokens: usize,
    /// Bits per token; 0 for windows without tokens.
    pub entropy: f64,
}

impl TimelinePoint {
    pub fn is_empty(&self) -> bool {
        self.tokens == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EntropyTimeline {
    pub points: Vec<TimelinePoint>,
    pub model_id: String,
    pub corpus_id: String,
}

impl EntropyTimeline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.entropy).collect()
    }

    /// Indices of windows that held no tokens.
    pub fn empty_windows(&self) -> Vec<usize> {
        self.points
            .iter()
            .filter(|p| p.is_empty())
            .map(|p| p.index)
            .collect()
    }

    pub fn with_corpus_id(mut self, id: impl Into<String>) -> Self {
        self.corpus_id = id.into();
        self
    }
}

/// Scores one window.
pub fn score_window(
    model: &NGramModel,
    window: &LogWindow,
    rules: &MaskSet,
) -> Result<TimelinePoint, TimelineError> {
    let mut bits = 0.0;
    let mut tokens = 0usize;
    for record in &window.records {
        let seq = TokenSequence::from_record(record, rules);
        let (b, n) = model
            .record_bits(&seq.tokens)
            .map_err(|source| TimelineError::Score {
                window: window.index,
                source,
            })?;
        bits += b;
        tokens += n;
    }
    let entropy = if tokens == 0 {
        0.0
    } else {
        bits / tokens as f64
    };
    Ok(TimelinePoint {
        index: window.index,
        span: window.span,
        tokens,
        entropy,
    })
}

fn assemble(model: &NGramModel, points: Vec<TimelinePoint>) -> EntropyTimeline {
    EntropyTimeline {
        points,
        model_id: model.fingerprint(),
        corpus_id: String::new(),
    }
}

/// Scores windows sequentially, in the order given.
pub fn score_timeline(
    model: &NGramModel,
    windows: &[LogWindow],
    rules: &MaskSet,
) -> Result<EntropyTimeline, TimelineError> {
    let points = windows
        .iter()
        .map(|w| score_window(model, w, rules))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(model, points))
}

/// Same result as [`score_timeline`], scoring windows on the rayon pool.
pub fn score_timeline_par(
    model: &NGramModel,
    windows: &[LogWindow],
    rules: &MaskSet,
) -> Result<EntropyTimeline, TimelineError> {
    let points = windows
        .par_iter()
        .map(|w| score_window(model, w, rules))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(model, points))
}

/// Writes the timeline as CSV: `window,start,end,tokens,entropy`, entropy
/// with six decimals.
pub fn export_timeline<W: Write>(timeline: &EntropyTimeline, out: W) -> Result<(), TimelineError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &timeline.points {
        w.write_record([
            p.index.to_string(),
            p.span.0.to_string(),
            p.span.1.to_string(),
            p.tokens.to_string(),
            format!("{:.6}", p.entropy),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a timeline written by [`export_timeline`].
pub fn import_timeline<R: BufRead>(input: R) -> Result<EntropyTimeline, TimelineError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(TimelineError::Format {
            row: 0,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut points = Vec::new();
    for (row, rec) in r.deserialize::<(usize, u64, u64, usize, f64)>().enumerate() {
        let (index, start, end, tokens, entropy) = rec?;
        if index != row {
            return Err(TimelineError::Format {
                row: row + 1,
                message: format!("window index {index}, expected {row}"),
            });
        }
        if !entropy.is_finite() || entropy < 0.0 {
            return Err(TimelineError::Format {
                row: row + 1,
                message: format!("entropy {entropy} is not a finite non-negative value"),
            });
        }
        points.push(TimelinePoint {
            index,
            span: (start, end),
            tokens,
            entropy,
        });
    }
    Ok(EntropyTimeline {
        points,
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{window, LogRecord};

    fn point(index: usize, entropy: f64) -> TimelinePoint {
        TimelinePoint {
            index,
            span: (index as u64 * 10, index as u64 * 10 + 10),
            tokens: 3,
            entropy,
        }
    }

    fn export_string(t: &EntropyTimeline) -> String {
        let mut buf = Vec::new();
        export_timeline(t, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn export_has_header_and_rows() {
        let t = EntropyTimeline {
            points: vec![point(0, 1.25), point(1, 0.0)],
            ..Default::default()
        };
        let text = export_string(&t);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "window,start,end,tokens,entropy");
        assert_eq!(lines[1], "0,0,10,3,1.250000");
    }

    #[test]
    fn empty_timeline_exports_header_only() {
        assert_eq!(
            export_string(&EntropyTimeline::default()),
            "window,start,end,tokens,entropy\n"
        );
    }

    #[test]
    fn import_reverses_export() {
        let t = EntropyTimeline {
            points: vec![point(0, 0.5), point(1, 2.125)],
            ..Default::default()
        };
        let back = import_timeline(export_string(&t).as_bytes()).unwrap();
        assert_eq!(back.points, t.points);
    }

    #[test]
    fn import_rejects_gaps_and_bad_headers() {
        assert!(
            import_timeline("window,start,end,tokens,entropy\n1,0,1,1,0.1\n".as_bytes()).is_err()
        );
        assert!(import_timeline("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn windows_without_tokens_score_zero() {
        let model = NGramModel::new(2, 1.0).unwrap();
        let recs = vec![LogRecord::plain(0, "   "), LogRecord::plain(4, "")];
        let windows: Vec<_> = window(recs, 1).collect();
        let t = score_timeline(&model, &windows, &MaskSet::default()).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.points.iter().all(|p| p.entropy == 0.0));
        assert_eq!(t.empty_windows(), vec![0, 1]);
    }

    #[test]
    fn unseen_events_carry_window_index() {
        let train = TokenSequence::new(vec!["a".into(), "b".into()], (0, 0));
        let model = NGramModel::train([&train], 2, 0.0).unwrap();
        let recs = vec![LogRecord::plain(0, "a b"), LogRecord::plain(4, "a c")];
        let windows: Vec<_> = window(recs, 1).collect();
        match score_timeline(&model, &windows, &MaskSet::empty()) {
            Err(TimelineError::Score { window, .. }) => assert_eq!(window, 1),
            other => panic!("expected score error, got {other:?}"),
        }
    }
}
