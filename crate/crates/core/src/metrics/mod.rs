//! Adequacy and overlap rewards: coverage difference ratio, smoothed
//! sentence BLEU and character n-gram F-score.

mod bleu;
mod chrf;
mod coverage;

use serde::{Deserialize, Serialize};

pub use bleu::sentence_bleu;
pub use chrf::{chrf, chrf3, CHRF_BETA, CHRF_ORDER};
pub use coverage::{alignment, cdr, cdr_for_attention, cdr_for_pair, coverage_of, hard_align, CoverageSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Cdr,
    Bleu,
    Chrf3,
}

impl std::str::FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cdr" => Ok(Self::Cdr),
            "bleu" => Ok(Self::Bleu),
            "chrf3" | "chrf" => Ok(Self::Chrf3),
            other => Err(format!("unknown reward kind {other:?}")),
        }
    }
}

/// A reward value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScore {
    pub value: f64,
    pub kind: RewardKind,
    /// Set when the score is defined by convention rather than measured,
    /// e.g. CDR against an empty reference coverage.
    pub degenerate: bool,
}

impl RewardScore {
    pub(crate) fn new(value: f64, kind: RewardKind) -> Self {
        debug_assert!((0.0..=1.0).contains(&value), "{kind:?} score {value}");
        Self {
            value,
            kind,
            degenerate: false,
        }
    }
}
