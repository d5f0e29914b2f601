//! Dual recurrent encoder scoring (source, translation) pairs in (0, 1).
//!
//! Each side has its own embedding table and a stack of recurrent layers;
//! the top layer's final hidden state summarizes the sentence. The head is
//! `w2 · tanh(W1 [s_x; s_y] + b1) + b2` followed by a logistic squash.

use adequa_autodiff::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, CoreError, Result};
use crate::generator::check_layout;
use crate::nn::{Cell, CellKind};
use crate::optim::Optimizer;
use crate::params::{Bound, GradSet, ParamSet};
use crate::vocab::{check_tokens, TokenId};

/// Scores are kept this far from 0 and 1.
pub const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    #[serde(default = "default_embed")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_hidden")]
    pub head_dim: usize,
    #[serde(default)]
    pub cell: CellKind,
}

fn default_embed() -> usize {
    16
}
fn default_hidden() -> usize {
    32
}
fn default_layers() -> usize {
    2
}

impl DiscriminatorConfig {
    pub fn new(src_vocab: usize, tgt_vocab: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            embed_dim: default_embed(),
            hidden_dim: default_hidden(),
            layers: default_layers(),
            head_dim: default_hidden(),
            cell: CellKind::Gru,
        }
    }

    pub fn tiny(src_vocab: usize, tgt_vocab: usize, dim: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            embed_dim: dim,
            hidden_dim: dim,
            layers: 2,
            head_dim: dim,
            cell: CellKind::Gru,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.src_vocab == 0
            || self.tgt_vocab == 0
            || [self.embed_dim, self.hidden_dim, self.layers, self.head_dim].contains(&0)
        {
            return Err(contract(format!("invalid discriminator config {self:?}")));
        }
        Ok(())
    }
}

/// A pair with its training target in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub source: Vec<TokenId>,
    pub translation: Vec<TokenId>,
    pub target_score: f64,
}

impl ScoredPair {
    pub fn new(source: Vec<TokenId>, translation: Vec<TokenId>, target_score: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&target_score) {
            return Err(CoreError::RewardOutOfRange { value: target_score });
        }
        Ok(Self {
            source,
            translation,
            target_score,
        })
    }
}

fn as_refs(b: &[(Vec<TokenId>, Vec<TokenId>)]) -> Vec<(&[TokenId], &[TokenId])> {
    b.iter().map(|(x, y)| (&x[..], &y[..])).collect()
}

#[derive(Debug, Clone)]
pub struct DiscVars {
    src_emb: Var,
    tgt_emb: Var,
    src_layers: Vec<Cell>,
    tgt_layers: Vec<Cell>,
    w1: Var,
    b1: Var,
    w2: Var,
    b2: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub config: DiscriminatorConfig,
    pub params: ParamSet,
}

fn layer_name(side: &str, k: usize) -> String {
    format!("{side}_enc.l{k}")
}

impl Discriminator {
    pub fn new(config: DiscriminatorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = Self::layout(&config, rng);
        Ok(Self { config, params })
    }

    pub fn seeded(config: DiscriminatorConfig, seed: u64) -> Result<Self> {
        Self::new(config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_params(config: DiscriminatorConfig, params: ParamSet) -> Result<Self> {
        config.validate()?;
        check_layout(&Self::layout(&config, &mut ChaCha8Rng::seed_from_u64(0)), &params)?;
        Ok(Self { config, params })
    }

    fn layout(c: &DiscriminatorConfig, rng: &mut impl Rng) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert_uniform("src_emb", &[c.src_vocab, c.embed_dim], 0.1, rng);
        p.insert_uniform("tgt_emb", &[c.tgt_vocab, c.embed_dim], 0.1, rng);
        for side in ["src", "tgt"] {
            for k in 0..c.layers {
                let input = if k == 0 { c.embed_dim } else { c.hidden_dim };
                Cell::register(c.cell, &mut p, &layer_name(side, k), input, c.hidden_dim, rng);
            }
        }
        let fan = 2 * c.hidden_dim;
        p.insert_uniform("head.w1", &[fan, c.head_dim], 1.0 / (fan as f64).sqrt(), rng);
        p.insert_zeros("head.b1", &[1, c.head_dim]);
        p.insert_uniform("head.w2", &[c.head_dim, 1], 1.0 / (c.head_dim as f64).sqrt(), rng);
        p.insert_zeros("head.b2", &[1, 1]);
        p
    }

    /// Zero the output layer so every pair scores exactly 0.5.
    pub fn zero_head(&mut self) {
        for name in ["head.w2", "head.b2"] {
            let t = self.params.get_mut(name).expect("head parameter");
            t.values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<(Bound, DiscVars)> {
        let b = self.params.bind(tape, trainable)?;
        let layers = |side: &str| -> Result<Vec<Cell>> {
            (0..self.config.layers)
                .map(|k| Cell::bind(self.config.cell, &b, &layer_name(side, k)))
                .collect()
        };
        let vars = DiscVars {
            src_emb: b.var("src_emb")?,
            tgt_emb: b.var("tgt_emb")?,
            src_layers: layers("src")?,
            tgt_layers: layers("tgt")?,
            w1: b.var("head.w1")?,
            b1: b.var("head.b1")?,
            w2: b.var("head.w2")?,
            b2: b.var("head.b2")?,
        };
        Ok((b, vars))
    }

    fn summarize(&self, tape: &mut Tape, emb: Var, layers: &[Cell], seq: &[TokenId], vocab: usize) -> Result<Var> {
        if seq.is_empty() {
            return Err(contract("discriminator input sequence is empty"));
        }
        check_tokens(seq, vocab)?;
        let e = self.config.embed_dim;
        let table = tape.embedding_lookup(emb, seq)?;
        let mut inputs: Vec<Var> = (0..seq.len())
            .map(|j| tape.select(table, &(j * e..(j + 1) * e).collect::<Vec<_>>()))
            .collect::<std::result::Result<_, _>>()?;
        for cell in layers {
            let mut state = cell.zero_state(tape, self.config.hidden_dim)?;
            let mut outputs = Vec::with_capacity(inputs.len());
            for &x in &inputs {
                state = cell.step(tape, x, state)?;
                outputs.push(state.h);
            }
            inputs = outputs;
        }
        Ok(*inputs.last().expect("nonempty sequence"))
    }

    /// Pre-squash logit `[1, 1]` for one pair.
    pub fn logit_on(&self, tape: &mut Tape, v: &DiscVars, source: &[TokenId], translation: &[TokenId]) -> Result<Var> {
        let sx = self.summarize(tape, v.src_emb, &v.src_layers, source, self.config.src_vocab)?;
        let sy = self.summarize(tape, v.tgt_emb, &v.tgt_layers, translation, self.config.tgt_vocab)?;
        let joined = tape.concat(&[sx, sy], 1)?;
        let hidden = tape.matmul(joined, v.w1)?;
        let hidden = tape.add(hidden, v.b1)?;
        let hidden = tape.tanh(hidden)?;
        let z = tape.matmul(hidden, v.w2)?;
        Ok(tape.add(z, v.b2)?)
    }

    /// `D(x, y)`, strictly inside (0, 1).
    pub fn score(&self, source: &[TokenId], translation: &[TokenId]) -> Result<f64> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let z = self.logit_on(&mut tape, &v, source, translation)?;
        Ok(adequa_autodiff::sigmoid(tape.item(z)).clamp(SCORE_EPS, 1.0 - SCORE_EPS))
    }

    fn logits_row(&self, tape: &mut Tape, v: &DiscVars, pairs: &[(&[TokenId], &[TokenId])]) -> Result<Var> {
        let zs = pairs
            .iter()
            .map(|(x, y)| self.logit_on(tape, v, x, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(tape.concat(&zs, 1)?)
    }

    /// Mean of `(target − D)²` over `batch`.
    pub fn regression_loss_on(&self, tape: &mut Tape, v: &DiscVars, batch: &[ScoredPair]) -> Result<Var> {
        if batch.is_empty() {
            return Err(contract("regression batch is empty"));
        }
        let pairs: Vec<_> = batch.iter().map(|p| (&p.source[..], &p.translation[..])).collect();
        let z = self.logits_row(tape, v, &pairs)?;
        let d = tape.sigmoid(z)?;
        let t = tape.constant(Tensor::row(batch.iter().map(|p| p.target_score).collect()))?;
        let se = tape.squared_error(d, t)?;
        Ok(tape.scale(se, 1.0 / batch.len() as f64)?)
    }

    /// Negated adversarial objective:
    /// `−(mean log D(x, y) + mean log(1 − D(x, ŷ)))`.
    pub fn adversarial_loss_on(
        &self,
        tape: &mut Tape,
        v: &DiscVars,
        human: &[(Vec<TokenId>, Vec<TokenId>)],
        generated: &[(Vec<TokenId>, Vec<TokenId>)],
    ) -> Result<Var> {
        if human.is_empty() || generated.is_empty() {
            return Err(contract("adversarial batches must be nonempty"));
        }
        let zh = self.logits_row(tape, v, &as_refs(human))?;
        let lh = tape.log_sigmoid(zh)?;
        let lh = tape.mean(lh)?;
        let zg = self.logits_row(tape, v, &as_refs(generated))?;
        let neg = tape.scale(zg, -1.0)?;
        let lg = tape.log_sigmoid(neg)?;
        let lg = tape.mean(lg)?;
        let objective = tape.add(lh, lg)?;
        Ok(tape.scale(objective, -1.0)?)
    }

    pub fn regression_loss(&self, batch: &[ScoredPair]) -> Result<f64> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let l = self.regression_loss_on(&mut tape, &v, batch)?;
        Ok(tape.item(l))
    }

    pub fn regression_loss_and_grad(&self, batch: &[ScoredPair]) -> Result<(f64, GradSet)> {
        let mut tape = Tape::new();
        let (bound, v) = self.bind(&mut tape, true)?;
        let l = self.regression_loss_on(&mut tape, &v, batch)?;
        let value = tape.item(l);
        let g = tape.backward(l)?;
        Ok((value, bound.collect(&g, &self.params)))
    }

    pub fn adversarial_loss_and_grad(
        &self,
        human: &[(Vec<TokenId>, Vec<TokenId>)],
        generated: &[(Vec<TokenId>, Vec<TokenId>)],
    ) -> Result<(f64, GradSet)> {
        let mut tape = Tape::new();
        let (bound, v) = self.bind(&mut tape, true)?;
        let l = self.adversarial_loss_on(&mut tape, &v, human, generated)?;
        let value = tape.item(l);
        let g = tape.backward(l)?;
        Ok((value, bound.collect(&g, &self.params)))
    }

    /// One descent step on the regression loss; returns the pre-step MSE.
    pub fn train_regression(&mut self, batch: &[ScoredPair], opt: &mut Optimizer) -> Result<f64> {
        let (loss, grads) = self.regression_loss_and_grad(batch)?;
        opt.step(&mut self.params, grads);
        Ok(loss)
    }

    /// One ascent step on the adversarial objective; returns the pre-step
    /// negated objective.
    pub fn train_adversarial(
        &mut self,
        human: &[(Vec<TokenId>, Vec<TokenId>)],
        generated: &[(Vec<TokenId>, Vec<TokenId>)],
        opt: &mut Optimizer,
    ) -> Result<f64> {
        let (loss, grads) = self.adversarial_loss_and_grad(human, generated)?;
        opt.step(&mut self.params, grads);
        Ok(loss)
    }
}
