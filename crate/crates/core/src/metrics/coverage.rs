use std::collections::BTreeSet;

use serde::Serialize;

use super::{RewardKind, RewardScore};
use crate::error::{contract, Result};
use crate::generator::{argmax, AttentionMatrix, Generator, TranslationResult};
use crate::vocab::TokenId;

/// Source positions selected by hard alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageSet {
    positions: BTreeSet<usize>,
    source_len: usize,
}

impl CoverageSet {
    pub fn new(positions: impl IntoIterator<Item = usize>, source_len: usize) -> Result<Self> {
        let positions: BTreeSet<usize> = positions.into_iter().collect();
        if let Some(&p) = positions.iter().find(|&&p| p >= source_len) {
            return Err(contract(format!("coverage position {p} outside source of length {source_len}")));
        }
        Ok(Self { positions, source_len })
    }

    pub fn empty(source_len: usize) -> Self {
        Self {
            positions: BTreeSet::new(),
            source_len,
        }
    }

    pub fn positions(&self) -> &BTreeSet<usize> {
        &self.positions
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.positions.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn contains(&self, p: usize) -> bool {
        self.positions.contains(&p)
    }
}

/// Most-attended source position for every target row; ties go to the lowest index.
pub fn alignment(attention: &AttentionMatrix) -> Vec<usize> {
    attention.rows().iter().map(|r| argmax(r)).collect()
}

pub fn hard_align(attention: &AttentionMatrix) -> CoverageSet {
    CoverageSet {
        positions: alignment(attention).into_iter().collect(),
        source_len: attention.source_len(),
    }
}

/// Coverage of a decoded or forced path, ignoring rows that emitted `eos`.
pub fn coverage_of(attention: &AttentionMatrix, tokens: &[TokenId], eos: TokenId) -> Result<CoverageSet> {
    if tokens.len() != attention.target_len() {
        return Err(contract(format!(
            "{} tokens but {} attention rows",
            tokens.len(),
            attention.target_len()
        )));
    }
    let positions = attention
        .rows()
        .iter()
        .zip(tokens)
        .filter(|(_, &t)| t != eos)
        .map(|(r, _)| argmax(r));
    CoverageSet::new(positions, attention.source_len())
}

/// `1 − |C_ref \ C_gen| / |C_ref|`, or 1.0 flagged degenerate when `C_ref` is empty.
pub fn cdr(c_gen: &CoverageSet, c_ref: &CoverageSet) -> Result<RewardScore> {
    if c_gen.source_len != c_ref.source_len {
        return Err(contract(format!(
            "coverage sets over different source lengths ({} vs {})",
            c_gen.source_len, c_ref.source_len
        )));
    }
    if c_ref.is_empty() {
        return Ok(RewardScore {
            value: 1.0,
            kind: RewardKind::Cdr,
            degenerate: true,
        });
    }
    let missed = c_ref.positions.difference(&c_gen.positions).count();
    Ok(RewardScore::new(1.0 - missed as f64 / c_ref.len() as f64, RewardKind::Cdr))
}

/// CDR from two attention paths and the tokens they emitted.
pub fn cdr_for_attention(
    hyp_attention: &AttentionMatrix,
    hyp_tokens: &[TokenId],
    ref_attention: &AttentionMatrix,
    ref_tokens: &[TokenId],
    eos: TokenId,
) -> Result<RewardScore> {
    let c_gen = coverage_of(hyp_attention, hyp_tokens, eos)?;
    let c_ref = coverage_of(ref_attention, ref_tokens, eos)?;
    cdr(&c_gen, &c_ref)
}

/// CDR of `hypothesis` against the reference's force-decoded attention under `model`.
pub fn cdr_for_pair(
    model: &Generator,
    source: &[TokenId],
    reference: &[TokenId],
    hypothesis: &TranslationResult,
) -> Result<RewardScore> {
    let (_, ref_attention) = model.force_decode(source, reference)?;
    cdr_for_attention(
        &hypothesis.attention,
        &hypothesis.tokens,
        &ref_attention,
        reference,
        model.config.eos,
    )
}
