//! Model file format.
//!
//! A model is stored as one JSON document:
//!
//! ```json
//! {"format":"logent-ngram","version":1,"order":2,"alpha":1.0,
//!  "total_tokens":5,"vocab":["a","b"],
//!  "contexts":[{"history":["a"],"next":{"b":2}}, …]}
//! ```
//!
//! `null` inside a history is the start-of-record padding token. Contexts
//! are written in sorted order so identical models serialize to identical
//! bytes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelError, NGramModel, Successors, START};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "logent-ngram";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    alpha: f64,
    total_tokens: u64,
    vocab: Vec<String>,
    contexts: Vec<ContextEntry>,
}

#[derive(Serialize, Deserialize)]
struct ContextEntry {
    history: Vec<Option<String>>,
    next: BTreeMap<String, u64>,
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::Corrupt(msg.into())
}

impl NGramModel {
    fn to_file(&self) -> ModelFile {
        let name = |id: u32| -> Option<String> {
            (id != START).then(|| self.vocab[(id - super::FIRST_TOKEN_ID) as usize].clone())
        };
        let mut contexts: Vec<ContextEntry> = self
            .contexts
            .iter()
            .map(|(h, s)| ContextEntry {
                history: h.iter().map(|&id| name(id)).collect(),
                next: s
                    .counts
                    .iter()
                    .map(|(&id, &c)| (name(id).expect("start is never a successor"), c))
                    .collect(),
            })
            .collect();
        contexts.sort_by(|a, b| a.history.cmp(&b.history));
        let mut vocab = self.vocab.clone();
        vocab.sort();
        ModelFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            order: self.order,
            alpha: self.alpha,
            total_tokens: self.total_tokens,
            vocab,
            contexts,
        }
    }

    /// Writes the model in the versioned text format.
    pub fn save<W: Write>(&self, mut out: W) -> Result<(), ModelError> {
        serde_json::to_writer(&mut out, &self.to_file()).map_err(|e| ModelError::Io(e.into()))?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    /// Reads a model written by [`NGramModel::save`]. Either the whole
    /// model is recovered or an error is returned.
    pub fn load<R: Read>(mut input: R) -> Result<Self, ModelError> {
        let mut text = String::new();
        input
            .read_to_string(&mut text)
            .map_err(|e| corrupt(format!("unreadable model stream: {e}")))?;
        Self::from_text(&text)
    }

    fn from_text(text: &str) -> Result<Self, ModelError> {
        let header: Header =
            serde_json::from_str(text).map_err(|e| corrupt(format!("cannot parse header: {e}")))?;
        if header.format != FORMAT_TAG {
            return Err(corrupt(format!(
                "expected format {FORMAT_TAG:?}, found {:?}",
                header.format
            )));
        }
        if header.version != FORMAT_VERSION {
            return Err(ModelError::Version {
                expected: FORMAT_VERSION,
                found: header.version,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        Self::from_file(file)
    }

    fn from_file(file: ModelFile) -> Result<Self, ModelError> {
        let mut model =
            NGramModel::new(file.order, file.alpha).map_err(|e| corrupt(e.to_string()))?;
        let mut seen = HashSet::new();
        for tok in &file.vocab {
            if !seen.insert(tok.as_str()) {
                return Err(corrupt(format!("duplicate vocabulary entry {tok:?}")));
            }
            model.intern(tok);
        }
        let ctx = model.order - 1;
        let mut total = 0u64;
        for entry in file.contexts {
            if entry.history.len() != ctx {
                return Err(corrupt(format!(
                    "history of length {} in an order-{} model",
                    entry.history.len(),
                    model.order
                )));
            }
            let padding = entry.history.iter().take_while(|t| t.is_none()).count();
            if entry.history[padding..].iter().any(Option::is_none) {
                return Err(corrupt("start token inside a history"));
            }
            let key: Vec<u32> = entry
                .history
                .iter()
                .map(|t| match t {
                    None => Ok(START),
                    Some(t) => model.ids.get(t).copied().ok_or_else(|| {
                        corrupt(format!("history token {t:?} missing from vocabulary"))
                    }),
                })
                .collect::<Result<_, _>>()?;
            let mut succ = Successors {
                total: 0,
                counts: HashMap::with_capacity(entry.next.len()),
            };
            for (tok, count) in entry.next {
                let id = *model
                    .ids
                    .get(&tok)
                    .ok_or_else(|| corrupt(format!("successor {tok:?} missing from vocabulary")))?;
                if count == 0 {
                    return Err(corrupt("zero count stored"));
                }
                succ.total += count;
                succ.counts.insert(id, count);
            }
            if succ.counts.is_empty() {
                return Err(corrupt("context without successors"));
            }
            total += succ.total;
            if model.contexts.insert(key.into(), succ).is_some() {
                return Err(corrupt("duplicate history"));
            }
        }
        if total != file.total_tokens {
            return Err(corrupt(format!(
                "count tables hold {total} tokens but header says {}",
                file.total_tokens
            )));
        }
        model.total_tokens = total;
        Ok(model)
    }

    /// Short content hash of the serialized model.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TokenSequence;

    fn seq(tokens: &[&str]) -> TokenSequence {
        TokenSequence::new(tokens.iter().map(|s| s.to_string()).collect(), (0, 0))
    }

    #[test]
    fn round_trip_preserves_probabilities() {
        let m = NGramModel::train([&seq(&["a", "b", "a", "b", "a"])], 2, 1.0).unwrap();
        let back = NGramModel::load(m.to_bytes().as_slice()).unwrap();
        for h in ["a", "b", "zz"] {
            for t in ["a", "b", "zz"] {
                assert_eq!(m.prob(&[h], t).unwrap(), back.prob(&[h], t).unwrap());
            }
        }
        assert_eq!(back.total_tokens(), 5);
        assert_eq!(m.to_bytes(), back.to_bytes());
    }

    #[test]
    fn empty_model_round_trips() {
        let m = NGramModel::new(4, 0.5).unwrap();
        let back = NGramModel::load(m.to_bytes().as_slice()).unwrap();
        assert_eq!(back.vocab_size(), 0);
        assert_eq!(back.order(), 4);
        assert_eq!(back.alpha(), 0.5);
    }

    #[test]
    fn truncated_stream_fails() {
        let m = NGramModel::train([&seq(&["a", "b", "c"])], 3, 1.0).unwrap();
        let bytes = m.to_bytes();
        for cut in [0, 1, bytes.len() / 2, bytes.len() - 3] {
            assert!(NGramModel::load(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let m = NGramModel::new(2, 1.0).unwrap();
        let text = String::from_utf8(m.to_bytes())
            .unwrap()
            .replace("\"version\":1", "\"version\":7");
        match NGramModel::load(text.as_bytes()) {
            Err(ModelError::Version { expected, found }) => {
                assert_eq!((expected, found), (1, 7));
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn tampered_counts_are_rejected() {
        let m = NGramModel::train([&seq(&["a", "b"])], 2, 1.0).unwrap();
        let text = String::from_utf8(m.to_bytes())
            .unwrap()
            .replace("\"total_tokens\":2", "\"total_tokens\":3");
        assert!(matches!(
            NGramModel::load(text.as_bytes()),
            Err(ModelError::Corrupt(_))
        ));
    }

    #[test]
    fn start_token_is_null_in_histories() {
        let m = NGramModel::train([&seq(&["a"])], 3, 1.0).unwrap();
        let text = String::from_utf8(m.to_bytes()).unwrap();
        assert!(text.contains("\"history\":[null,null]"), "{text}");
    }

    #[test]
    fn fingerprint_is_stable() {
        let a = NGramModel::train([&seq(&["x", "y"])], 2, 1.0).unwrap();
        let b = NGramModel::train([&seq(&["x", "y"])], 2, 1.0).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
