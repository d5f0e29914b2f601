use adequa_autodiff::{softmax_into, Tape, Tensor};
use rand::Rng;

use super::reward::{checked, RewardFunction};
use super::{Pair, StepStats, TrainConfig};
use crate::error::{contract, Result};
use crate::generator::Generator;
use crate::optim::Optimizer;
use crate::params::GradSet;
use crate::vocab::TokenId;

/// A source with its candidate set and per-candidate cost `1 − reward`.
#[derive(Debug, Clone, PartialEq)]
pub struct MrtItem {
    pub source: Vec<TokenId>,
    pub samples: Vec<Vec<TokenId>>,
    pub deltas: Vec<f64>,
}

/// `Σ Q(y) Δ(y)` with `Q ∝ exp(α log P(y))` over the candidates.
pub fn expected_risk(log_probs: &[f64], deltas: &[f64], alpha: f64) -> f64 {
    let scaled: Vec<f64> = log_probs.iter().map(|l| alpha * l).collect();
    let mut q = vec![0.0; scaled.len()];
    softmax_into(&scaled, &mut q);
    q.iter().zip(deltas).map(|(q, d)| q * d).sum()
}

/// Mean expected risk over `items` and its gradient.
pub fn mrt_risk_and_grad(generator: &Generator, items: &[MrtItem], alpha: f64) -> Result<(f64, GradSet)> {
    if items.is_empty() {
        return Err(contract("MRT batch is empty"));
    }
    let mut tape = Tape::new();
    let (bound, v) = generator.bind(&mut tape, true)?;
    let mut total = None;
    for item in items {
        if item.samples.is_empty() || item.samples.len() != item.deltas.len() {
            return Err(contract("MRT item needs one cost per candidate"));
        }
        let enc = generator.encode_on(&mut tape, &v, &item.source)?;
        let lps = item
            .samples
            .iter()
            .map(|s| {
                let lp = generator.sequence_log_prob_on(&mut tape, &v, &enc, s)?.log_prob;
                Ok(tape.select(lp, &[0])?)
            })
            .collect::<Result<Vec<_>>>()?;
        let row = tape.concat(&lps, 1)?;
        let row = tape.scale(row, alpha)?;
        let q = tape.row_softmax(row)?;
        let d = tape.constant(Tensor::row(item.deltas.clone()))?;
        let weighted = tape.mul(q, d)?;
        let risk = tape.sum(weighted)?;
        total = Some(match total {
            None => risk,
            Some(acc) => tape.add(acc, risk)?,
        });
    }
    let loss = tape.scale(total.expect("nonempty batch"), 1.0 / items.len() as f64)?;
    let value = tape.item(loss);
    let g = tape.backward(loss)?;
    Ok((value, bound.collect(&g, &generator.params)))
}

/// Draw candidates, score them, and take one step on the expected risk.
pub fn mrt_step(
    generator: &mut Generator,
    batch: &[Pair],
    reward: &mut dyn RewardFunction,
    cfg: &TrainConfig,
    opt: &mut Optimizer,
    rng: &mut impl Rng,
) -> Result<StepStats> {
    let mut items = Vec::with_capacity(batch.len());
    let mut reward_sum = 0.0;
    let mut calls = 0;
    for (src, reference) in batch {
        let mut samples = Vec::with_capacity(cfg.mrt_sample_size);
        let mut deltas = Vec::with_capacity(cfg.mrt_sample_size);
        for _ in 0..cfg.mrt_sample_size {
            let hyp = generator.sample_decode(src, cfg.decode_len(src.len()), cfg.sharpness, rng)?;
            let r = checked(reward.reward(generator, src, reference, &hyp)?)?;
            reward_sum += r;
            calls += 1;
            deltas.push(1.0 - r);
            samples.push(hyp.tokens);
        }
        items.push(MrtItem {
            source: src.clone(),
            samples,
            deltas,
        });
    }
    let (risk, grads) = mrt_risk_and_grad(generator, &items, cfg.mrt_alpha)?;
    let norm = opt.step(&mut generator.params, grads);
    Ok(StepStats {
        mean_reward: Some(reward_sum / calls as f64),
        loss: risk,
        grad_norm: norm,
        reward_calls: calls,
    })
}
