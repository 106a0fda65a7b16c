use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Hampel filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HampelConfig {
    /// Neighbours on each side of a point.
    pub half_width: usize,
    /// Threshold in scaled MADs.
    pub k: f64,
    /// MAD-to-sigma constant for Gaussian data.
    pub scale: f64,
    /// Only flag points above the local median.
    pub one_sided: bool,
}

impl Default for HampelConfig {
    fn default() -> Self {
        HampelConfig {
            half_width: 10,
            k: 3.0,
            scale: 1.4826,
            one_sided: true,
        }
    }
}

impl HampelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.half_width < 1 {
            return Err("hampel half width must be at least 1".into());
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(format!("hampel k must be positive, got {}", self.k));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(format!("hampel scale must be positive, got {}", self.scale));
        }
        Ok(())
    }
}

/// Median of a non-empty slice; sorts it in place.
pub fn median_in_place(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty slice");
    xs.sort_unstable_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

/// Median and median absolute deviation about it.
pub fn median_mad(xs: &[f64]) -> (f64, f64) {
    let mut buf = xs.to_vec();
    let med = median_in_place(&mut buf);
    for (b, &x) in buf.iter_mut().zip(xs) {
        *b = (x - med).abs();
    }
    (med, median_in_place(&mut buf))
}

/// Flags outliers against a sliding median.
///
/// Point `i` is flagged when `|x_i - med_i| > k * scale * MAD_i` over the
/// window `[i - half_width, i + half_width]` truncated at the series ends.
/// Series shorter than `2 * half_width + 1` use the whole series as every
/// point's neighbourhood. In one-sided mode only `x_i > med_i` can flag.
pub fn hampel_flag(values: &[f64], cfg: &HampelConfig) -> BTreeSet<usize> {
    let n = values.len();
    let mut flagged = BTreeSet::new();
    if n == 0 {
        return flagged;
    }
    let whole = n < 2 * cfg.half_width + 1;
    let global = whole.then(|| median_mad(values));
    for (i, &x) in values.iter().enumerate() {
        let (med, mad) = match global {
            Some(mm) => mm,
            None => {
                let lo = i.saturating_sub(cfg.half_width);
                let hi = (i + cfg.half_width + 1).min(n);
                median_mad(&values[lo..hi])
            }
        };
        let dev = if cfg.one_sided {
            x - med
        } else {
            (x - med).abs()
        };
        if dev > cfg.k * cfg.scale * mad {
            flagged.insert(i);
        }
    }
    flagged
}
