//! Order-n token language models.
//!
//! A model predicts each token from its `n - 1` predecessors using count
//! ratios, `p(a | h) = count(h·a) / count(h)`. Every record is left-padded
//! with a reserved start token, so the first tokens of a record have a full
//! history too, and n-grams never cross record boundaries.
//!
//! With `alpha > 0` the estimate is additively smoothed per context over the
//! training vocabulary plus one unknown token:
//! `(count(h·a) + alpha) / (count(h) + alpha * (|V| + 1))`.
//! With `alpha == 0` the raw ratio is used and unseen events are errors.

mod charent;
mod persist;
mod split;

use std::collections::HashMap;

use thiserror::Error;

use crate::ingest::TokenSequence;

pub use charent::char_entropy;
pub use persist::FORMAT_VERSION;
pub use split::{cross_validate, kfold_split, Fold, SplitPlan, XvalRow};

/// Default model order; entropy curves flatten from here on.
pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_ALPHA: f64 = 1.0;

pub(crate) const START: u32 = 0;
pub(crate) const UNKNOWN: u32 = 1;
const FIRST_TOKEN_ID: u32 = 2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unseen event{}: {detail}", position.map(|p| format!(" at token {p}")).unwrap_or_default())]
    UnseenEvent {
        position: Option<usize>,
        detail: String,
    },
    #[error("unsupported model format version: expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },
    #[error("corrupt model: {0}")]
    Corrupt(String),
    #[error("model i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Successors {
    pub(crate) total: u64,
    pub(crate) counts: HashMap<u32, u64>,
}

/// Successor-count tables for every `(n - 1)`-token history seen in
/// training.
///
/// Only full-length (padded) histories are stored; counts for shorter
/// grams are recovered by marginalizing over the stored histories, see
/// [`NGramModel::count`].
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab: Vec<String>,
    ids: HashMap<String, u32>,
    contexts: HashMap<Box<[u32]>, Successors>,
    total_tokens: u64,
}

fn check_alpha(alpha: f64) -> Result<(), ModelError> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )))
    }
}

impl NGramModel {
    /// An untrained model.
    pub fn new(order: usize, alpha: f64) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::InvalidParameter(
                "order must be at least 1".into(),
            ));
        }
        check_alpha(alpha)?;
        Ok(NGramModel {
            order,
            alpha,
            vocab: Vec::new(),
            ids: HashMap::new(),
            contexts: HashMap::new(),
            total_tokens: 0,
        })
    }

    /// Trains a model over independent records.
    pub fn train<'a, I>(records: I, order: usize, alpha: f64) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut model = NGramModel::new(order, alpha)?;
        for seq in records {
            model.observe(&seq.tokens);
        }
        Ok(model)
    }

    /// Accumulates the counts of one record.
    pub fn observe<S: AsRef<str>>(&mut self, tokens: &[S]) {
        if tokens.is_empty() {
            return;
        }
        let ctx = self.order - 1;
        let mut padded = vec![START; ctx];
        padded.reserve(tokens.len());
        for t in tokens {
            let id = self.intern(t.as_ref());
            padded.push(id);
        }
        for i in 0..tokens.len() {
            let history = &padded[i..i + ctx];
            let next = padded[i + ctx];
            let entry = match self.contexts.get_mut(history) {
                Some(e) => e,
                None => self.contexts.entry(history.into()).or_default(),
            };
            entry.total += 1;
            *entry.counts.entry(next).or_insert(0) += 1;
        }
        self.total_tokens += tokens.len() as u64;
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = FIRST_TOKEN_ID + self.vocab.len() as u32;
        self.vocab.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    fn lookup(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNKNOWN)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), ModelError> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(())
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Distinct training tokens, excluding the reserved start and unknown
    /// tokens.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    fn matches_suffix(history: &[u32], suffix: &[u32]) -> bool {
        history.len() >= suffix.len() && &history[history.len() - suffix.len()..] == suffix
    }

    /// Occurrences of a gram of training tokens, `1 <= gram.len() <= order`.
    ///
    /// Only grams inside a single record are counted. An empty gram counts
    /// every training token.
    pub fn count(&self, gram: &[&str]) -> u64 {
        let Some((last, prefix)) = gram.split_last() else {
            return self.total_tokens;
        };
        if gram.len() > self.order {
            return 0;
        }
        let Some(&next) = self.ids.get(*last) else {
            return 0;
        };
        let Some(prefix) = self.ids_of(prefix) else {
            return 0;
        };
        self.contexts
            .iter()
            .filter(|(h, _)| Self::matches_suffix(h, &prefix))
            .map(|(_, s)| s.counts.get(&next).copied().unwrap_or(0))
            .sum()
    }

    /// Number of times `history` was followed by any token,
    /// `history.len() < order`. Equals the sum of `count(history·a)` over `a`.
    pub fn history_count(&self, history: &[&str]) -> u64 {
        if history.len() >= self.order {
            return 0;
        }
        let Some(h) = self.ids_of(history) else {
            return 0;
        };
        self.contexts
            .iter()
            .filter(|(k, _)| Self::matches_suffix(k, &h))
            .map(|(_, s)| s.total)
            .sum()
    }

    fn ids_of(&self, tokens: &[&str]) -> Option<Vec<u32>> {
        tokens.iter().map(|t| self.ids.get(*t).copied()).collect()
    }

    fn context_ids(&self, history: &[&str]) -> Result<Vec<u32>, ModelError> {
        let ctx = self.order - 1;
        if history.len() > ctx {
            return Err(ModelError::InvalidInput(format!(
                "history has {} tokens, order-{} model takes at most {ctx}",
                history.len(),
                self.order
            )));
        }
        let mut ids = vec![START; ctx - history.len()];
        ids.extend(history.iter().map(|t| self.lookup(t)));
        Ok(ids)
    }

    /// `p(next | history)`. Histories shorter than `order - 1` are
    /// left-padded with the start token; unseen tokens map to the unknown
    /// token.
    pub fn prob(&self, history: &[&str], next: &str) -> Result<f64, ModelError> {
        let h = self.context_ids(history)?;
        self.prob_ids(&h, self.lookup(next))
            .map_err(|detail| ModelError::UnseenEvent {
                position: None,
                detail,
            })
    }

    fn prob_ids(&self, history: &[u32], next: u32) -> Result<f64, String> {
        let succ = self.contexts.get(history);
        let (c_ha, c_h) = match succ {
            Some(s) => (s.counts.get(&next).copied().unwrap_or(0), s.total),
            None => (0, 0),
        };
        if self.alpha > 0.0 {
            let outcomes = (self.vocab.len() + 1) as f64;
            Ok((c_ha as f64 + self.alpha) / (c_h as f64 + self.alpha * outcomes))
        } else if c_h == 0 {
            Err("history never observed in training".into())
        } else if c_ha == 0 {
            Err("token never followed this history in training".into())
        } else {
            Ok(c_ha as f64 / c_h as f64)
        }
    }

    /// Total surprisal of one record in bits, `-Σ log2 p(a_i | history)`,
    /// and its token count. The record is padded on its own.
    pub fn record_bits<S: AsRef<str>>(&self, tokens: &[S]) -> Result<(f64, usize), ModelError> {
        let ctx = self.order - 1;
        let mut padded = vec![START; ctx];
        padded.extend(tokens.iter().map(|t| self.lookup(t.as_ref())));
        let mut bits = 0.0;
        for i in 0..tokens.len() {
            let p = self
                .prob_ids(&padded[i..i + ctx], padded[i + ctx])
                .map_err(|detail| ModelError::UnseenEvent {
                    position: Some(i),
                    detail: format!("{detail} (token {:?})", tokens[i].as_ref()),
                })?;
            bits -= p.log2();
        }
        Ok((bits, tokens.len()))
    }

    /// Average surprisal in bits per token,
    /// `H = -(1/N) Σ log2 p(a_i | a_{i-1} … a_{i-n+1})`.
    pub fn sequence_entropy(&self, seq: &TokenSequence) -> Result<f64, ModelError> {
        if seq.is_empty() {
            return Err(ModelError::InvalidInput(
                "cannot score an empty token sequence".into(),
            ));
        }
        let (bits, n) = self.record_bits(&seq.tokens)?;
        Ok(bits / n as f64)
    }

    /// Token-weighted entropy of several independent records.
    pub fn corpus_entropy<'a, I>(&self, records: I) -> Result<f64, ModelError>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut bits = 0.0;
        let mut n = 0usize;
        for (r, seq) in records.into_iter().enumerate() {
            let (b, k) = self.record_bits(&seq.tokens).map_err(|e| match e {
                ModelError::UnseenEvent { position, detail } => ModelError::UnseenEvent {
                    position,
                    detail: format!("record {r}: {detail}"),
                },
                other => other,
            })?;
            bits += b;
            n += k;
        }
        if n == 0 {
            return Err(ModelError::InvalidInput("no tokens to score".into()));
        }
        Ok(bits / n as f64)
    }
}
