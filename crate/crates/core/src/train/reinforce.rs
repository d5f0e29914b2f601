use adequa_autodiff::Tape;
use rand::Rng;

use super::reward::{checked, CdrReward, RewardFunction};
use super::{Pair, StepStats, TrainConfig};
use crate::error::{contract, Result};
use crate::generator::{Generator, TranslationResult};
use crate::optim::Optimizer;
use crate::params::GradSet;

/// Score-function gradient of `−mean((reward − baseline) · log G(ŷ|x))`
/// with one sample `ŷ` per sentence. Also returns the samples.
pub fn reinforce_gradient(
    generator: &Generator,
    batch: &[Pair],
    reward: &mut dyn RewardFunction,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<(GradSet, StepStats, Vec<TranslationResult>)> {
    if batch.is_empty() {
        return Err(contract("policy-gradient batch is empty"));
    }
    let mut tape = Tape::new();
    let (bound, v) = generator.bind(&mut tape, true)?;
    let weight = 1.0 / batch.len() as f64;
    let mut loss = None;
    let mut loss_value = 0.0;
    let mut reward_sum = 0.0;
    let mut samples = Vec::with_capacity(batch.len());
    for (src, reference) in batch {
        let (hyp, log_prob) = generator.sample_on(&mut tape, &v, src, cfg.decode_len(src.len()), cfg.sharpness, rng)?;
        let r_raw = checked(reward.reward(generator, src, reference, &hyp)?)?;
        reward_sum += r_raw;
        let r = r_raw - cfg.reward_baseline;
        if r != 0.0 {
            let term = tape.scale(log_prob, -r * weight)?;
            loss_value += tape.item(term);
            loss = Some(match loss {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
        }
        samples.push(hyp);
    }
    let grads = match loss {
        Some(l) => {
            let g = tape.backward(l)?;
            bound.collect(&g, &generator.params)
        }
        None => GradSet::zeros_like(&generator.params),
    };
    let stats = StepStats {
        mean_reward: Some(reward_sum * weight),
        loss: loss_value,
        grad_norm: grads.norm(),
        reward_calls: batch.len(),
    };
    Ok((grads, stats, samples))
}

/// One policy-gradient update. An all-zero gradient leaves parameters untouched.
pub fn reinforce_step(
    generator: &mut Generator,
    batch: &[Pair],
    reward: &mut dyn RewardFunction,
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
) -> Result<StepStats> {
    let (grads, mut stats, _) = reinforce_gradient(generator, batch, reward, cfg, rng)?;
    if !grads.is_zero() {
        stats.grad_norm = opt.step(&mut generator.params, grads);
    }
    Ok(stats)
}

/// Policy-gradient update rewarded directly by CDR.
pub fn orientator_only_step(
    generator: &mut Generator,
    batch: &[Pair],
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
) -> Result<StepStats> {
    reinforce_step(generator, batch, &mut CdrReward, cfg, opt, rng)
}
