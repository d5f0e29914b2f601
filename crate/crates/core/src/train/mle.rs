use rand::seq::SliceRandom;
use rand::Rng;

use super::adversarial::{disc_data, discriminator_epoch, DiscData};
use super::{Pair, StepStats, TrainConfig, TrainLog};
use crate::discriminator::Discriminator;
use crate::error::{contract, Result};
use crate::generator::Generator;
use crate::optim::Optimizer;

pub fn mle_step(generator: &mut Generator, batch: &[Pair], opt: &mut Optimizer) -> Result<StepStats> {
    let (loss, grads) = generator.mle_loss_and_grad(batch)?;
    let norm = opt.step(&mut generator.params, grads);
    Ok(StepStats {
        mean_reward: None,
        loss,
        grad_norm: norm,
        reward_calls: 0,
    })
}

pub(crate) fn shuffled_batches(n: usize, batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

pub(crate) fn gather(corpus: &[Pair], idx: &[usize]) -> Vec<Pair> {
    idx.iter().map(|&i| corpus[i].clone()).collect()
}

/// One shuffled pass of MLE updates; returns the mean batch loss.
pub fn mle_epoch(
    generator: &mut Generator,
    corpus: &[Pair],
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(contract("training corpus is empty"));
    }
    let batches = shuffled_batches(corpus.len(), cfg.batch_size, rng);
    let mut total = 0.0;
    for idx in &batches {
        let stats = mle_step(generator, &gather(corpus, idx), opt)?;
        log.record("mle", &stats)?;
        total += stats.loss;
    }
    Ok(total / batches.len() as f64)
}

/// Negative log-likelihood per target token over `corpus`.
pub fn per_token_loss(generator: &Generator, corpus: &[Pair]) -> Result<f64> {
    let mut nll = 0.0;
    let mut tokens = 0;
    for (src, tgt) in corpus {
        nll -= generator.force_decode(src, tgt)?.0;
        tokens += tgt.len();
    }
    Ok(nll / tokens as f64)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PretrainReport {
    /// Per-token validation loss after each generator epoch.
    pub valid_losses: Vec<f64>,
    /// Epoch index whose parameters were kept.
    pub best_epoch: usize,
    /// Discriminator loss over its fixed sample set after each epoch.
    pub disc_losses: Vec<f64>,
}

/// MLE epochs until validation loss fails to improve for `cfg.patience`
/// epochs (or `cfg.max_mle_epochs`); the best parameters are restored.
pub fn pretrain_generator(
    generator: &mut Generator,
    train: &[Pair],
    valid: &[Pair],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<PretrainReport> {
    let mut opt = cfg.generator_optimizer();
    let mut report = PretrainReport::default();
    let mut best = (f64::INFINITY, generator.params.clone());
    let mut stale = 0;
    for epoch in 0..cfg.max_mle_epochs {
        mle_epoch(generator, train, cfg, &mut opt, rng, log)?;
        let v = per_token_loss(generator, if valid.is_empty() { train } else { valid })?;
        report.valid_losses.push(v);
        if v < best.0 {
            best = (v, generator.params.clone());
            report.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience.max(1) {
                break;
            }
        }
    }
    if best.0.is_finite() {
        generator.params = best.1;
    }
    Ok(report)
}

/// Train the discriminator on a fixed set of samples from the frozen generator.
/// Returns the loss over that set after each epoch.
pub fn pretrain_discriminator(
    generator: &Generator,
    discriminator: &mut Discriminator,
    corpus: &[Pair],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<Vec<f64>> {
    let data = disc_data(generator, corpus, cfg, rng)?;
    let mut opt = cfg.discriminator_optimizer();
    let mut losses = Vec::with_capacity(cfg.disc_pretrain_epochs);
    for _ in 0..cfg.disc_pretrain_epochs {
        discriminator_epoch(discriminator, &data, cfg, &mut opt, rng, log)?;
        losses.push(data.loss(discriminator)?);
    }
    Ok(losses)
}

/// Generator to a validation plateau, then the discriminator on its samples.
pub fn pretrain(
    generator: &mut Generator,
    discriminator: &mut Discriminator,
    train: &[Pair],
    valid: &[Pair],
    cfg: &TrainConfig,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<PretrainReport> {
    let mut report = pretrain_generator(generator, train, valid, cfg, rng, log)?;
    report.disc_losses = pretrain_discriminator(generator, discriminator, train, cfg, rng, log)?;
    Ok(report)
}

impl DiscData {
    pub(crate) fn loss(&self, d: &Discriminator) -> Result<f64> {
        match self {
            DiscData::Regression(pairs) => d.regression_loss(pairs),
            DiscData::Binary { human, generated } => Ok(d.adversarial_loss_and_grad(human, generated)?.0),
        }
    }
}
