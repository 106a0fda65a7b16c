use std::fmt;
use std::io::{self, BufRead};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Label, LogRecord};

/// Source format of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// One record per line; the whole line is the message.
    #[default]
    Plain,
    /// One JSON object per line with fields `ts`, `node`, `level`, `msg`,
    /// `session`, `label`. Only `msg` is required.
    Structured,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" | "text" => Ok(Format::Plain),
            "structured" | "jsonl" | "json" => Ok(Format::Structured),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

/// Record timestamp as found in structured input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Seconds(f64),
    Text(String),
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Seconds(s) => write!(f, "{s}"),
            Timestamp::Text(t) => f.write_str(t),
        }
    }
}

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    /// 1-based line number in the source.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// What [`read_all`] does with malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    #[default]
    Abort,
    Skip,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct StructuredLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub msg: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl LogRecord {
    /// Renders the record as one structured JSON line, without terminator.
    pub fn to_structured_line(&self) -> String {
        let line = StructuredLine {
            ts: self.ts.clone(),
            node: self.node.clone(),
            level: self.level.clone(),
            msg: self.raw.clone(),
            session: self.session.clone(),
            label: self.label,
        };
        serde_json::to_string(&line).expect("structured line serializes")
    }
}

/// Streams records out of `source` in source order.
///
/// Each item is either a record or a per-line error; iteration continues
/// after an error so callers can decide between skipping and aborting.
/// I/O failures end the stream after being reported once.
pub fn read_corpus<R: BufRead>(source: R, format: Format) -> RecordIter<R> {
    RecordIter {
        source,
        format,
        offset: 0,
        line: 0,
        buf: Vec::new(),
        done: false,
    }
}

pub struct RecordIter<R> {
    source: R,
    format: Format,
    offset: u64,
    line: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> Iterator for RecordIter<R> {
    type Item = Result<LogRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            self.buf.clear();
            let n = match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(n) => n,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            let offset = self.offset;
            self.offset += n as u64;
            self.line += 1;

            let mut content: &[u8] = &self.buf;
            if let Some(rest) = content.strip_suffix(b"\n") {
                content = rest;
            }
            if let Some(rest) = content.strip_suffix(b"\r") {
                content = rest;
            }
            let text = String::from_utf8_lossy(content);

            match self.format {
                Format::Plain => {
                    let mut rec = LogRecord::plain(offset, text);
                    rec.len = n as u64;
                    return Some(Ok(rec));
                }
                Format::Structured => {
                    if text.trim().is_empty() {
                        continue;
                    }
                    return Some(
                        parse_structured(&text, offset, n as u64).map_err(|message| {
                            RecordError {
                                line: self.line,
                                message,
                            }
                            .into()
                        }),
                    );
                }
            }
        }
    }
}

fn parse_structured(text: &str, offset: u64, len: u64) -> Result<LogRecord, String> {
    let line: StructuredLine = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok(LogRecord {
        offset,
        len,
        raw: line.msg.replace(['\r', '\n'], " "),
        ts: line.ts,
        node: line.node,
        level: line.level,
        session: line.session,
        label: line.label,
    })
}

/// Reads a whole corpus into memory.
///
/// Returns the records and the number of malformed lines that were skipped
/// (always zero under [`ErrorPolicy::Abort`]).
pub fn read_all<R: BufRead>(
    source: R,
    format: Format,
    policy: ErrorPolicy,
) -> Result<(Vec<LogRecord>, usize), IngestError> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for item in read_corpus(source, format) {
        match item {
            Ok(r) => records.push(r),
            Err(IngestError::Record(_)) if policy == ErrorPolicy::Skip => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((records, skipped))
}
