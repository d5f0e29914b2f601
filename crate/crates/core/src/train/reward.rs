use crate::discriminator::Discriminator;
use crate::error::{CoreError, Result};
use crate::generator::{Generator, TranslationResult};
use crate::metrics::{cdr_for_pair, chrf3, sentence_bleu};
use crate::vocab::{strip_eos, TokenId, Vocabulary};

/// Scores a sampled translation; values must lie in `[0, 1]`.
pub trait RewardFunction {
    fn name(&self) -> &'static str;

    fn reward(
        &mut self,
        generator: &Generator,
        source: &[TokenId],
        reference: &[TokenId],
        hypothesis: &TranslationResult,
    ) -> Result<f64>;
}

pub(crate) fn checked(value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(CoreError::RewardOutOfRange { value })
    }
}

/// Coverage difference ratio against the force-decoded reference.
#[derive(Debug, Clone, Copy, Default)]
pub struct CdrReward;

impl RewardFunction for CdrReward {
    fn name(&self) -> &'static str {
        "cdr"
    }

    fn reward(&mut self, g: &Generator, source: &[TokenId], reference: &[TokenId], hyp: &TranslationResult) -> Result<f64> {
        Ok(cdr_for_pair(g, source, reference, hyp)?.value)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BleuReward;

impl RewardFunction for BleuReward {
    fn name(&self) -> &'static str {
        "bleu"
    }

    fn reward(&mut self, _: &Generator, _: &[TokenId], reference: &[TokenId], hyp: &TranslationResult) -> Result<f64> {
        sentence_bleu(strip_eos(&hyp.tokens), strip_eos(reference), 4)
    }
}

pub struct Chrf3Reward<'a> {
    pub vocab: &'a Vocabulary,
}

impl RewardFunction for Chrf3Reward<'_> {
    fn name(&self) -> &'static str {
        "chrf3"
    }

    fn reward(&mut self, _: &Generator, _: &[TokenId], reference: &[TokenId], hyp: &TranslationResult) -> Result<f64> {
        chrf3(&hyp.tokens, reference, self.vocab)
    }
}

/// `D(x, ŷ)` from a frozen discriminator.
pub struct DiscriminatorReward<'a> {
    pub discriminator: &'a Discriminator,
}

impl RewardFunction for DiscriminatorReward<'_> {
    fn name(&self) -> &'static str {
        "discriminator"
    }

    fn reward(&mut self, _: &Generator, source: &[TokenId], _: &[TokenId], hyp: &TranslationResult) -> Result<f64> {
        self.discriminator.score(source, &hyp.tokens)
    }
}

/// Fixed reward, counting how often it is queried.
#[derive(Debug, Clone, Copy)]
pub struct ConstantReward {
    pub value: f64,
    pub calls: usize,
}

impl ConstantReward {
    pub fn new(value: f64) -> Self {
        Self { value, calls: 0 }
    }
}

impl RewardFunction for ConstantReward {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn reward(&mut self, _: &Generator, _: &[TokenId], _: &[TokenId], _: &TranslationResult) -> Result<f64> {
        self.calls += 1;
        Ok(self.value)
    }
}

impl<F> RewardFunction for F
where
    F: FnMut(&Generator, &[TokenId], &[TokenId], &TranslationResult) -> Result<f64>,
{
    fn name(&self) -> &'static str {
        "custom"
    }

    fn reward(&mut self, g: &Generator, source: &[TokenId], reference: &[TokenId], hyp: &TranslationResult) -> Result<f64> {
        self(g, source, reference, hyp)
    }
}
