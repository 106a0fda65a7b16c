//! Reading, masking, tokenizing and windowing of log corpora.

mod mask;
mod reader;
mod window;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use mask::{mask, MaskConfigError, MaskRule, MaskSet, Placeholder};
pub use reader::{read_all, read_corpus, ErrorPolicy, Format, IngestError, RecordError, Timestamp};
pub use window::{window, LogWindow, Windows, DEFAULT_WINDOW_BYTES};

/// Ground-truth tag carried by structured records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn is_anomalous(self) -> bool {
        self == Label::Anomalous
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "normal" | "0" => Ok(Label::Normal),
            "anomalous" | "1" => Ok(Label::Anomalous),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// One log event as it appears in its source.
///
/// `offset` and `len` locate the record in the source byte stream; `len`
/// includes the line terminator. For structured input `raw` is the message
/// text, while `offset`/`len` refer to the whole JSON line.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub offset: u64,
    pub len: u64,
    pub raw: String,
    pub ts: Option<Timestamp>,
    pub node: Option<String>,
    pub level: Option<String>,
    pub session: Option<String>,
    pub label: Option<Label>,
}

impl LogRecord {
    /// A plain-text record occupying `raw` plus one newline byte.
    pub fn plain(offset: u64, raw: impl Into<String>) -> Self {
        let raw = raw.into();
        LogRecord {
            offset,
            len: raw.len() as u64 + 1,
            raw,
            ts: None,
            node: None,
            level: None,
            session: None,
            label: None,
        }
    }

    pub fn end(&self) -> u64 {
        self.offset + self.len
    }

    pub fn is_anomalous(&self) -> bool {
        self.label.is_some_and(Label::is_anomalous)
    }
}

/// Masked, tokenized view of a span of log text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub span: (u64, u64),
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>, span: (u64, u64)) -> Self {
        TokenSequence { tokens, span }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Masks and tokenizes a record, keeping its source span.
    pub fn from_record(record: &LogRecord, rules: &MaskSet) -> Self {
        let masked = mask(&record.raw, rules);
        let mut seq = tokenize(&masked);
        seq.span = (record.offset, record.end());
        seq
    }
}

/// Splits on runs of ASCII whitespace.
///
/// Only ASCII whitespace separates tokens; any other byte, including
/// non-ASCII, stays inside its token.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text.split_ascii_whitespace().map(str::to_owned).collect();
    TokenSequence::new(tokens, (0, text.len() as u64))
}

/// Grouping key produced by [`group_by_session`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SessionKey {
    Session(String),
    /// Records without a session identifier.
    Ungrouped,
}

/// Partitions records by session identifier, preserving source order
/// inside each group.
pub fn group_by_session<I>(records: I) -> BTreeMap<SessionKey, Vec<LogRecord>>
where
    I: IntoIterator<Item = LogRecord>,
{
    let mut groups: BTreeMap<SessionKey, Vec<LogRecord>> = BTreeMap::new();
    for record in records {
        let key = match &record.session {
            Some(s) => SessionKey::Session(s.clone()),
            None => SessionKey::Ungrouped,
        };
        groups.entry(key).or_default().push(record);
    }
    groups
}
