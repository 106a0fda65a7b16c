//! Information-gain analysis of execution logs.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] reads plain or structured (JSON lines) corpora, masks dynamic
//!   content into placeholders, tokenizes and cuts the stream into
//!   record-aligned byte windows.
//! * [`ngram`] trains order-n token models and scores sequences in bits/token.
//! * [`timeline`] scores every window of a corpus into an entropy timeline.
//! * [`detect`] flags high-entropy windows with a Hampel filter and scores the
//!   flags against ground truth.
//! * [`failgen`] generates labeled synthetic cluster logs with injected
//!   failures, so the whole pipeline can be exercised without a cluster.

pub mod detect;
pub mod failgen;
pub mod ingest;
pub mod ngram;
pub mod timeline;

pub use detect::{evaluate, hampel_flag, merge_regions, DetectionReport, HampelConfig};
pub use ingest::{
    group_by_session, mask, read_corpus, tokenize, window, Format, Label, LogRecord, LogWindow,
    MaskRule, MaskSet, TokenSequence,
};
pub use ngram::{char_entropy, kfold_split, NGramModel, SplitPlan};
pub use timeline::{export_timeline, score_timeline, EntropyTimeline};
