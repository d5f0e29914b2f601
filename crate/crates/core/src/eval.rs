//! Greedy-decoding evaluation with per-length-bucket breakdowns.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{contract, Result};
use crate::generator::Generator;
use crate::metrics::{cdr_for_pair, chrf3, sentence_bleu};
use crate::train::{decode_limit, Pair};
use crate::vocab::{strip_eos, Vocabulary};

/// Finite lower edges; bucket `k` is `(edges[k], edges[k+1]]` and the last is open above.
pub const DEFAULT_BUCKET_EDGES: [usize; 4] = [0, 15, 30, 45];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SentenceScores {
    pub source_len: usize,
    pub bleu: f64,
    pub cdr: f64,
    pub chrf3: f64,
    pub cdr_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketReport {
    pub lower: usize,
    /// `None` for the open-ended last bucket.
    pub upper: Option<usize>,
    pub count: usize,
    pub mean_bleu: Option<f64>,
    pub mean_cdr: Option<f64>,
    pub mean_chrf3: Option<f64>,
}

impl BucketReport {
    pub fn label(&self) -> String {
        match self.upper {
            Some(u) => format!("{}-{}", self.lower, u),
            None => format!("{}-inf", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub count: usize,
    pub mean_bleu: f64,
    pub mean_cdr: f64,
    pub mean_chrf3: f64,
    pub degenerate_cdr: usize,
    pub buckets: Vec<BucketReport>,
}

/// Greedy-decode every source and score it against its reference.
pub fn score_sentences(generator: &Generator, corpus: &[Pair], tgt_vocab: &Vocabulary) -> Result<Vec<SentenceScores>> {
    corpus
        .iter()
        .map(|(src, reference)| {
            let hyp = generator.greedy_decode(src, decode_limit(src.len()))?;
            let c = cdr_for_pair(generator, src, reference, &hyp)?;
            Ok(SentenceScores {
                source_len: src.len(),
                bleu: sentence_bleu(strip_eos(&hyp.tokens), strip_eos(reference), 4)?,
                cdr: c.value,
                chrf3: chrf3(&hyp.tokens, reference, tgt_vocab)?,
                cdr_degenerate: c.degenerate,
            })
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn aggregate(scores: &[SentenceScores], edges: &[usize]) -> Result<EvalReport> {
    if scores.is_empty() {
        return Err(contract("nothing to evaluate"));
    }
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(contract("bucket edges must be nonempty and strictly increasing"));
    }
    let buckets = (0..edges.len())
        .map(|k| {
            let (lo, hi) = (edges[k], edges.get(k + 1).copied());
            let members: Vec<&SentenceScores> = scores
                .iter()
                .filter(|s| s.source_len > lo && hi.is_none_or(|h| s.source_len <= h))
                .collect();
            BucketReport {
                lower: lo,
                upper: hi,
                count: members.len(),
                mean_bleu: mean(members.iter().map(|s| s.bleu)),
                mean_cdr: mean(members.iter().map(|s| s.cdr)),
                mean_chrf3: mean(members.iter().map(|s| s.chrf3)),
            }
        })
        .collect();
    Ok(EvalReport {
        count: scores.len(),
        mean_bleu: mean(scores.iter().map(|s| s.bleu)).unwrap_or(0.0),
        mean_cdr: mean(scores.iter().map(|s| s.cdr)).unwrap_or(0.0),
        mean_chrf3: mean(scores.iter().map(|s| s.chrf3)).unwrap_or(0.0),
        degenerate_cdr: scores.iter().filter(|s| s.cdr_degenerate).count(),
        buckets,
    })
}

pub fn evaluate(generator: &Generator, corpus: &[Pair], tgt_vocab: &Vocabulary, edges: &[usize]) -> Result<EvalReport> {
    aggregate(&score_sentences(generator, corpus, tgt_vocab)?, edges)
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

impl EvalReport {
    /// Bucket table with a trailing overall row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,lower,upper,count,mean_bleu,mean_cdr,mean_chrf3\n");
        for b in &self.buckets {
            let upper = b.upper.map(|u| u.to_string()).unwrap_or_else(|| "inf".into());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.label(),
                b.lower,
                upper,
                b.count,
                cell(b.mean_bleu),
                cell(b.mean_cdr),
                cell(b.mean_chrf3)
            );
        }
        let _ = writeln!(
            out,
            "all,,,{},{:.6},{:.6},{:.6}",
            self.count, self.mean_bleu, self.mean_cdr, self.mean_chrf3
        );
        out
    }
}
