use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ModelError, NGramModel};
use crate::ingest::TokenSequence;

/// How records are split into cross-validation folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub fold_count: usize,
    /// Expected share of records in each test fold.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    /// `fold_count` folds, each holding out `1 / fold_count` of the records.
    pub fn new(fold_count: usize, seed: u64) -> Self {
        SplitPlan {
            fold_count,
            holdout_fraction: 1.0 / fold_count.max(1) as f64,
            seed,
        }
    }

    /// Ten folds of 90% train / 10% test.
    pub fn ten_fold(seed: u64) -> Self {
        SplitPlan::new(10, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministic k-fold partition of `0..records`.
///
/// Indices are shuffled with a seeded generator and cut into `fold_count`
/// test sets whose sizes differ by at most one; each fold trains on the
/// rest. Index lists are sorted.
pub fn kfold_split(records: usize, plan: &SplitPlan) -> Result<Vec<Fold>, ModelError> {
    let k = plan.fold_count;
    if k < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if records < k {
        return Err(ModelError::InvalidParameter(format!(
            "{records} records cannot fill {k} folds"
        )));
    }
    if !(plan.holdout_fraction > 0.0 && plan.holdout_fraction < 1.0) {
        return Err(ModelError::InvalidParameter(format!(
            "holdout fraction {} outside (0, 1)",
            plan.holdout_fraction
        )));
    }
    let expected = plan.holdout_fraction * records as f64;
    let (small, large) = (records / k, records.div_ceil(k));
    if (small as f64 - expected).abs() > 1.0 || (large as f64 - expected).abs() > 1.0 {
        return Err(ModelError::InvalidParameter(format!(
            "holdout fraction {} is inconsistent with {k} folds over {records} records",
            plan.holdout_fraction
        )));
    }

    let mut order: Vec<usize> = (0..records).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(plan.seed));

    let extra = records % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = small + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = order[..start]
            .iter()
            .chain(&order[start + size..])
            .copied()
            .collect();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

/// One row of a cross-validation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct XvalRow {
    pub order: usize,
    /// Mean over folds of the held-out entropy (bits/token).
    pub mean_entropy: f64,
    pub fold_entropies: Vec<f64>,
}

/// Trains one model per fold and order and scores the held-out records.
///
/// Each fold's entropy is token-weighted over its test records; the row
/// reports the plain mean across folds. Folds are evaluated in parallel but
/// summed in fold order, so results do not depend on scheduling.
pub fn cross_validate(
    records: &[TokenSequence],
    orders: impl IntoIterator<Item = usize>,
    plan: &SplitPlan,
    alpha: f64,
) -> Result<Vec<XvalRow>, ModelError> {
    let folds = kfold_split(records.len(), plan)?;
    orders
        .into_iter()
        .map(|order| {
            let fold_entropies = folds
                .par_iter()
                .map(|fold| {
                    let model =
                        NGramModel::train(fold.train.iter().map(|&i| &records[i]), order, alpha)?;
                    model.corpus_entropy(fold.test.iter().map(|&i| &records[i]))
                })
                .collect::<Result<Vec<f64>, ModelError>>()?;
            let mean_entropy = fold_entropies.iter().sum::<f64>() / fold_entropies.len() as f64;
            Ok(XvalRow {
                order,
                mean_entropy,
                fold_entropies,
            })
        })
        .collect()
}
