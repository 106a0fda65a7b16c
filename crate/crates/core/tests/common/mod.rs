//! Properties and reference oracles shared by the property suite and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use logent::failgen::{generate, FailureKind, ScenarioSpec};
use logent::{hampel_flag, window, HampelConfig, LogRecord, NGramModel, TokenSequence};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type PropResult = Result<(), TestCaseError>;

/// Token used to query the unknown-token slot.
pub const UNSEEN: &str = "\u{1}never-seen";

pub fn seqs(records: &[Vec<String>]) -> Vec<TokenSequence> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| TokenSequence::new(r.clone(), (i as u64, i as u64 + 1)))
        .collect()
}

/// Records over a small alphabet, at most `max_tokens` tokens in total.
pub fn corpus(alphabet: usize, max_tokens: usize) -> impl Strategy<Value = Vec<Vec<String>>> {
    (1..=alphabet).prop_flat_map(move |a| {
        prop::collection::vec(
            prop::collection::vec((0..a).prop_map(|i| format!("t{i}")), 1..=20),
            1..=10,
        )
        .prop_map(move |mut records| {
            let mut budget = max_tokens;
            records.retain_mut(|r| {
                if budget == 0 {
                    return false;
                }
                r.truncate(budget);
                budget -= r.len();
                true
            });
            records
        })
    })
}

/// Brute-force MLE entropy of `test` under order-`n` statistics of `train`,
/// counted directly over padded n-gram tuples. `None` when an event of
/// `test` never occurs in `train`.
pub fn oracle_entropy(train: &[Vec<String>], test: &[String], n: usize) -> Option<f64> {
    let pad = |r: &[String]| -> Vec<Option<String>> {
        std::iter::repeat_n(None, n - 1)
            .chain(r.iter().cloned().map(Some))
            .collect()
    };
    let mut grams: HashMap<Vec<Option<String>>, u64> = HashMap::new();
    for r in train {
        let p = pad(r);
        for g in p.windows(n) {
            *grams.entry(g.to_vec()).or_default() += 1;
        }
    }
    let mut histories: HashMap<Vec<Option<String>>, u64> = HashMap::new();
    for (g, c) in &grams {
        *histories.entry(g[..n - 1].to_vec()).or_default() += c;
    }
    let p = pad(test);
    let mut bits = 0.0;
    for g in p.windows(n) {
        let c = *grams.get(g)?;
        let h = histories[&g[..n - 1]];
        bits -= (c as f64 / h as f64).log2();
    }
    Some(bits / test.len() as f64)
}

pub fn prop_oracle_equivalence(records: &[Vec<String>], order: usize) -> PropResult {
    let model = NGramModel::train(seqs(records).iter(), order, 0.0).unwrap();
    for r in records {
        let got = model
            .sequence_entropy(&TokenSequence::new(r.clone(), (0, 0)))
            .unwrap();
        let want = oracle_entropy(records, r, order).expect("training events are seen");
        prop_assert!(
            (got - want).abs() <= 1e-9,
            "order {order}: model {got} oracle {want}"
        );
    }
    Ok(())
}

/// Exact dyadic values, so an affine map by a power of two and a
/// quarter-integer shift is computed without rounding.
pub fn prop_hampel_affine(
    xs: &[i16],
    shift: i16,
    exponent: i32,
    negate: bool,
    half_width: usize,
    one_sided: bool,
) -> PropResult {
    let base: Vec<f64> = xs.iter().map(|&x| x as f64 / 4.0).collect();
    let a = 2f64.powi(exponent) * if negate && !one_sided { -1.0 } else { 1.0 };
    let b = shift as f64 / 4.0;
    let moved: Vec<f64> = base.iter().map(|x| a * x + b).collect();
    let cfg = HampelConfig {
        half_width,
        one_sided,
        ..Default::default()
    };
    prop_assert_eq!(hampel_flag(&base, &cfg), hampel_flag(&moved, &cfg));
    Ok(())
}

pub fn prop_hampel_k_monotone(xs: &[f64], k1: f64, k2: f64, one_sided: bool) -> PropResult {
    let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
    let cfg = |k| HampelConfig {
        k,
        one_sided,
        ..Default::default()
    };
    let loose = hampel_flag(xs, &cfg(lo));
    let strict = hampel_flag(xs, &cfg(hi));
    prop_assert!(
        strict.is_subset(&loose),
        "k {hi}: {strict:?} not within k {lo}: {loose:?}"
    );
    Ok(())
}

/// Σ p(a | h) over vocab and the unknown token, for one history.
pub fn prop_normalization(
    records: &[Vec<String>],
    order: usize,
    alpha: f64,
    history: &[String],
) -> PropResult {
    let model = NGramModel::train(seqs(records).iter(), order, alpha).unwrap();
    let h: Vec<&str> = history.iter().map(String::as_str).collect();
    let h = &h[..h.len().min(order - 1)];
    let mut total = model.prob(h, UNSEEN).unwrap();
    for a in model.vocab() {
        total += model.prob(h, a).unwrap();
    }
    prop_assert!((total - 1.0).abs() <= 1e-9, "sum {total}");
    Ok(())
}

/// Records of the given line lengths, separated by `gaps` bytes of
/// unreadable lines.
pub fn records_with_gaps(lens: &[(u16, u8)]) -> Vec<LogRecord> {
    let mut offset = 0;
    lens.iter()
        .map(|&(len, gap)| {
            offset += gap as u64;
            let r = LogRecord::plain(offset, "x".repeat(len as usize));
            offset = r.end();
            r
        })
        .collect()
}

pub fn prop_window_tiling(lens: &[(u16, u8)], target: u64) -> PropResult {
    let records = records_with_gaps(lens);
    let windows: Vec<_> = window(records.clone(), target).collect();
    if records.is_empty() {
        prop_assert!(windows.is_empty());
        return Ok(());
    }
    prop_assert_eq!(windows[0].span.0, records[0].offset);
    prop_assert_eq!(
        windows.last().unwrap().span.1,
        records.last().unwrap().end()
    );
    let mut flat = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        prop_assert_eq!(w.index, i);
        prop_assert!(!w.records.is_empty());
        if i > 0 {
            prop_assert_eq!(w.span.0, windows[i - 1].span.1);
        }
        prop_assert_eq!(w.span.1, w.records.last().unwrap().end());
        prop_assert!(w.records[0].offset >= w.span.0);
        let last = i + 1 == windows.len();
        if !last {
            prop_assert!(w.byte_len() >= target);
        }
        if w.records.len() > 1 {
            let before_last = w.records[w.records.len() - 2].end() - w.span.0;
            prop_assert!(before_last < target, "window {} closed late", i);
        }
        flat.extend(w.records.iter().cloned());
    }
    prop_assert_eq!(flat, records);
    Ok(())
}

pub fn prop_save_load(records: &[Vec<String>], order: usize, alpha: f64) -> PropResult {
    let model = NGramModel::train(seqs(records).iter(), order, alpha).unwrap();
    let bytes = model.to_bytes();
    let loaded = NGramModel::load(bytes.as_slice()).unwrap();
    prop_assert_eq!(loaded.to_bytes(), bytes);
    prop_assert_eq!(loaded.fingerprint(), model.fingerprint());
    let vocab: Vec<&str> = model.vocab().chain([UNSEEN]).collect();
    for r in records {
        let seq = TokenSequence::new(r.clone(), (0, 0));
        let a = model.sequence_entropy(&seq).map_err(|e| e.to_string());
        let b = loaded.sequence_entropy(&seq).map_err(|e| e.to_string());
        prop_assert_eq!(a, b);
        for (i, _) in r.iter().enumerate() {
            let lo = i.saturating_sub(order - 1);
            let h: Vec<&str> = r[lo..i].iter().map(String::as_str).collect();
            for &next in &vocab {
                let a = model.prob(&h, next).map_err(|e| e.to_string());
                let b = loaded.prob(&h, next).map_err(|e| e.to_string());
                prop_assert_eq!(a, b);
            }
        }
    }
    Ok(())
}

pub fn prop_generator_determinism(seed: u64, kind: FailureKind) -> PropResult {
    let spec = ScenarioSpec::with_default_failure(seed, kind);
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
    prop_assert_eq!(a.truth_regions, b.truth_regions);
    Ok(())
}

pub fn kinds() -> impl Strategy<Value = FailureKind> {
    prop_oneof![
        Just(FailureKind::ComputeNode),
        Just(FailureKind::StorageNode),
        Just(FailureKind::Interference),
        Just(FailureKind::Combined),
    ]
}

pub fn flag_set(xs: &[bool]) -> BTreeSet<usize> {
    xs.iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i)
        .collect()
}
