use std::collections::HashMap;

use crate::error::Result;
use crate::vocab::{TokenId, Vocabulary};

pub const CHRF_ORDER: usize = 6;
pub const CHRF_BETA: f64 = 3.0;

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Character n-gram F-score. Precision and recall are averaged over the
/// orders `1..=max_n` that both strings are long enough to contain, then
/// combined as `F_β`. Spaces count as characters.
pub fn chrf(hypothesis: &str, reference: &str, max_n: usize, beta: f64) -> f64 {
    let hyp: Vec<char> = hypothesis.chars().collect();
    let refc: Vec<char> = reference.chars().collect();
    if hyp.is_empty() || refc.is_empty() {
        return 0.0;
    }
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0usize);
    for n in 1..=max_n {
        if hyp.len() < n || refc.len() < n {
            break;
        }
        let h = char_ngrams(&hyp, n);
        let r = char_ngrams(&refc, n);
        let matched: usize = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
        p_sum += matched as f64 / (hyp.len() + 1 - n) as f64;
        r_sum += matched as f64 / (refc.len() + 1 - n) as f64;
        orders += 1;
    }
    let (p, r) = (p_sum / orders as f64, r_sum / orders as f64);
    if p + r == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    ((1.0 + b2) * p * r / (b2 * p + r)).clamp(0.0, 1.0)
}

/// chrF3 of token sequences rendered through `vocab`.
pub fn chrf3(hypothesis: &[TokenId], reference: &[TokenId], vocab: &Vocabulary) -> Result<f64> {
    crate::vocab::check_tokens(hypothesis, vocab.len())?;
    crate::vocab::check_tokens(reference, vocab.len())?;
    Ok(chrf(&vocab.render(hypothesis), &vocab.render(reference), CHRF_ORDER, CHRF_BETA))
}
