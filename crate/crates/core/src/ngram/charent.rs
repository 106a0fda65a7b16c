use super::ModelError;

/// Shannon entropy of the byte distribution of `bytes`, in bits per byte.
pub fn char_entropy(bytes: &[u8]) -> Result<f64, ModelError> {
    if bytes.is_empty() {
        return Err(ModelError::InvalidInput(
            "character entropy of an empty span is undefined".into(),
        ));
    }
    let mut freq = [0u64; 256];
    for &b in bytes {
        freq[b as usize] += 1;
    }
    let total = bytes.len() as f64;
    let h = freq
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>();
    // a single symbol sums to -0.0
    Ok(h.max(0.0))
}
