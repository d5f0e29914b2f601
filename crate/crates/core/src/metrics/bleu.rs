use std::collections::HashMap;

use crate::error::{contract, Result};
use crate::vocab::TokenId;

fn ngram_counts(seq: &[TokenId], n: usize) -> HashMap<&[TokenId], usize> {
    let mut counts = HashMap::new();
    if seq.len() >= n {
        for w in seq.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU with add-one smoothing on every order's modified
/// precision; an order the hypothesis is too short to contain contributes
/// a factor of 1. Tokens are compared as given, so strip EOS first.
pub fn sentence_bleu(hypothesis: &[TokenId], reference: &[TokenId], max_n: usize) -> Result<f64> {
    if reference.is_empty() {
        return Err(contract("BLEU reference is empty"));
    }
    if max_n == 0 {
        return Err(contract("BLEU max_n must be at least 1"));
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        if hypothesis.len() < n {
            continue;
        }
        let hyp = ngram_counts(hypothesis, n);
        let refc = ngram_counts(reference, n);
        let matched: usize = hyp.iter().map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0))).sum();
        let total = hypothesis.len() + 1 - n;
        log_sum += ((matched + 1) as f64 / (total + 1) as f64).ln();
    }
    let (c, r) = (hypothesis.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    Ok((bp * (log_sum / max_n as f64).exp()).clamp(0.0, 1.0))
}
