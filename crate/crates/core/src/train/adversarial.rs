use rand::Rng;

use super::mle::{gather, mle_step, shuffled_batches};
use super::reinforce::reinforce_step;
use super::reward::{DiscriminatorReward, RewardFunction};
use super::{DiscMode, Pair, StepStats, TrainConfig, TrainLog};
use crate::discriminator::{Discriminator, ScoredPair};
use crate::error::{contract, Result};
use crate::generator::Generator;
use crate::metrics::cdr_for_pair;
use crate::optim::Optimizer;

/// One sampled translation per pair, each labeled with its CDR.
pub fn scored_samples(generator: &Generator, corpus: &[Pair], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Vec<ScoredPair>> {
    corpus
        .iter()
        .map(|(src, reference)| {
            let hyp = generator.sample_decode(src, cfg.decode_len(src.len()), cfg.sharpness, rng)?;
            let c = cdr_for_pair(generator, src, reference, &hyp)?;
            ScoredPair::new(src.clone(), hyp.tokens, c.value)
        })
        .collect()
}

fn generated_samples(generator: &Generator, corpus: &[Pair], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Vec<Pair>> {
    corpus
        .iter()
        .map(|(src, _)| {
            let hyp = generator.sample_decode(src, cfg.decode_len(src.len()), cfg.sharpness, rng)?;
            Ok((src.clone(), hyp.tokens))
        })
        .collect()
}

/// Discriminator training data drawn from a frozen generator.
#[derive(Debug, Clone)]
pub enum DiscData {
    Regression(Vec<ScoredPair>),
    Binary { human: Vec<Pair>, generated: Vec<Pair> },
}

impl DiscData {
    fn len(&self) -> usize {
        match self {
            DiscData::Regression(p) => p.len(),
            DiscData::Binary { human, .. } => human.len(),
        }
    }
}

pub fn disc_data(generator: &Generator, corpus: &[Pair], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<DiscData> {
    if corpus.is_empty() {
        return Err(contract("discriminator corpus is empty"));
    }
    Ok(match cfg.disc_mode {
        DiscMode::Regression => DiscData::Regression(scored_samples(generator, corpus, cfg, rng)?),
        DiscMode::Binary => DiscData::Binary {
            human: corpus.to_vec(),
            generated: generated_samples(generator, corpus, cfg, rng)?,
        },
    })
}

fn disc_step(d: &mut Discriminator, data: &DiscData, idx: &[usize], opt: &mut Optimizer) -> Result<StepStats> {
    let loss = match data {
        DiscData::Regression(pairs) => {
            let batch: Vec<ScoredPair> = idx.iter().map(|&i| pairs[i].clone()).collect();
            d.train_regression(&batch, opt)?
        }
        DiscData::Binary { human, generated } => d.train_adversarial(&gather(human, idx), &gather(generated, idx), opt)?,
    };
    Ok(StepStats {
        mean_reward: None,
        loss,
        grad_norm: 0.0,
        reward_calls: 0,
    })
}

/// One shuffled pass over fixed discriminator data; returns the mean batch loss.
pub fn discriminator_epoch(
    discriminator: &mut Discriminator,
    data: &DiscData,
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<f64> {
    let batches = shuffled_batches(data.len(), cfg.batch_size, rng);
    let mut total = 0.0;
    for idx in &batches {
        let stats = disc_step(discriminator, data, idx, opt)?;
        log.record(disc_mode_name(cfg.disc_mode), &stats)?;
        total += stats.loss;
    }
    Ok(total / batches.len() as f64)
}

fn disc_mode_name(m: DiscMode) -> &'static str {
    match m {
        DiscMode::Binary => "disc-binary",
        DiscMode::Regression => "disc-regression",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundStats {
    pub g_steps: usize,
    pub d_steps: usize,
    pub mle_batches: usize,
    pub rl_batches: usize,
    pub reward_calls: usize,
    pub mean_reward: Option<f64>,
    pub mean_disc_loss: Option<f64>,
}

fn cycling_batches(n: usize, steps: Option<usize>, cfg: &TrainConfig, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut out = shuffled_batches(n, cfg.batch_size, rng);
    let want = steps.unwrap_or(out.len());
    while out.len() < want {
        out.extend(shuffled_batches(n, cfg.batch_size, rng));
    }
    out.truncate(want);
    out
}

/// Generator phase: each minibatch is trained with MLE with probability
/// `cfg.mle_mix_ratio`, otherwise by policy gradient against `reward`.
pub fn generator_phase(
    generator: &mut Generator,
    corpus: &[Pair],
    steps: Option<usize>,
    reward: &mut dyn RewardFunction,
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<RoundStats> {
    let mut stats = RoundStats::default();
    let mut reward_sum = 0.0;
    for idx in cycling_batches(corpus.len(), steps, cfg, rng) {
        let batch = gather(corpus, &idx);
        let use_mle = rng.gen::<f64>() < cfg.mle_mix_ratio;
        let s = if use_mle {
            stats.mle_batches += 1;
            let s = mle_step(generator, &batch, opt)?;
            log.record("mle", &s)?;
            s
        } else {
            stats.rl_batches += 1;
            let s = reinforce_step(generator, &batch, reward, cfg, opt, rng)?;
            log.record(reward.name(), &s)?;
            reward_sum += s.mean_reward.unwrap_or(0.0) * s.reward_calls as f64;
            s
        };
        stats.reward_calls += s.reward_calls;
        stats.g_steps += 1;
    }
    if stats.reward_calls > 0 {
        stats.mean_reward = Some(reward_sum / stats.reward_calls as f64);
    }
    Ok(stats)
}

/// One alternation: generator steps rewarded by the frozen discriminator,
/// then discriminator steps on samples from the frozen generator. In
/// regression mode the targets are CDR values under the current generator.
#[allow(clippy::too_many_arguments)]
pub fn adversarial_round(
    generator: &mut Generator,
    discriminator: &mut Discriminator,
    corpus: &[Pair],
    cfg: &TrainConfig,
    gen_opt: &mut Optimizer,
    disc_opt: &mut Optimizer,
    rng: &mut impl Rng,
    log: &mut TrainLog,
) -> Result<RoundStats> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(contract("training corpus is empty"));
    }
    let mut reward = DiscriminatorReward {
        discriminator: &*discriminator,
    };
    let mut stats = generator_phase(generator, corpus, cfg.schedule.g_steps, &mut reward, cfg, gen_opt, rng, log)?;

    let frozen: &Generator = generator;
    let mut loss_sum = 0.0;
    for idx in cycling_batches(corpus.len(), cfg.schedule.d_steps, cfg, rng) {
        let data = disc_data(frozen, &gather(corpus, &idx), cfg, rng)?;
        let all: Vec<usize> = (0..idx.len()).collect();
        let s = disc_step(discriminator, &data, &all, disc_opt)?;
        log.record(disc_mode_name(cfg.disc_mode), &s)?;
        loss_sum += s.loss;
        stats.d_steps += 1;
    }
    if stats.d_steps > 0 {
        stats.mean_disc_loss = Some(loss_sum / stats.d_steps as f64);
    }
    Ok(stats)
}
