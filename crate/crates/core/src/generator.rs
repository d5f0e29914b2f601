//! Attention-based recurrent encoder-decoder.
//!
//! The encoder is a bidirectional GRU; annotation `h_j` concatenates the
//! forward and backward states at position `j`. At decoder step `i` the
//! additive scorer `e_ij = v · tanh(W s_{i-1} + U h_j + b)` is normalized
//! into `α_i`, the context is `c_i = Σ_j α_ij h_j`, the GRU decoder reads
//! `[emb(y_{i-1}); c_i]` to produce `s_i`, and the token distribution is
//! `softmax(W_o tanh(W_r [emb(y_{i-1}); s_i; c_i] + b_r) + b_o)`.
//! The initial decoder state is `tanh(W_init b_1 + b_init)` where `b_1` is
//! the backward encoder state after reading the whole source.

use adequa_autodiff::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, CoreError, Result};
use crate::nn::{Gru, Linear};
use crate::params::{Bound, GradSet, ParamSet};
use crate::vocab::{check_tokens, TokenId, BOS, EOS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    #[serde(default = "default_embed")]
    pub embed_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_hidden")]
    pub attention_dim: usize,
    #[serde(default = "default_hidden")]
    pub readout_dim: usize,
    #[serde(default = "default_bos")]
    pub bos: TokenId,
    #[serde(default = "default_eos")]
    pub eos: TokenId,
}

fn default_embed() -> usize {
    16
}
fn default_hidden() -> usize {
    32
}
fn default_bos() -> TokenId {
    BOS
}
fn default_eos() -> TokenId {
    EOS
}

impl GeneratorConfig {
    pub fn new(src_vocab: usize, tgt_vocab: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            embed_dim: default_embed(),
            hidden_dim: default_hidden(),
            attention_dim: default_hidden(),
            readout_dim: default_hidden(),
            bos: BOS,
            eos: EOS,
        }
    }

    /// A tiny configuration for exhaustive-enumeration tests.
    pub fn tiny(src_vocab: usize, tgt_vocab: usize, dim: usize) -> Self {
        Self {
            src_vocab,
            tgt_vocab,
            embed_dim: dim,
            hidden_dim: dim,
            attention_dim: dim,
            readout_dim: dim,
            bos: 1.min(tgt_vocab - 1),
            eos: tgt_vocab - 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let dims = [self.embed_dim, self.hidden_dim, self.attention_dim, self.readout_dim];
        if self.src_vocab == 0 || self.tgt_vocab < 2 || dims.contains(&0) {
            return Err(contract(format!("invalid generator config {self:?}")));
        }
        if self.bos >= self.tgt_vocab || self.eos >= self.tgt_vocab {
            return Err(contract("bos/eos outside target vocabulary"));
        }
        Ok(())
    }
}

/// Per-target-step attention distributions over source positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMatrix {
    rows: Vec<Vec<f64>>,
    source_len: usize,
}

impl AttentionMatrix {
    /// Validates every row is a distribution over `source_len` positions.
    pub fn new(rows: Vec<Vec<f64>>, source_len: usize) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != source_len {
                return Err(contract(format!("attention row {i} has {} entries, expected {source_len}", r.len())));
            }
            let total: f64 = r.iter().sum();
            if r.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(contract(format!("attention row {i} is not a distribution (sum {total})")));
            }
        }
        Ok(Self { rows, source_len })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.rows.len()
    }
}

/// Output of greedy or sampled decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationResult {
    pub tokens: Vec<TokenId>,
    /// Model log-probability of each emitted token.
    pub step_log_probs: Vec<f64>,
    pub attention: AttentionMatrix,
    pub total_log_prob: f64,
}

/// Encoder output for one source sentence: a `[J, 2H]` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderAnnotations {
    pub matrix: Tensor,
}

impl EncoderAnnotations {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub distribution: Vec<f64>,
    pub state: Tensor,
    pub attention: Vec<f64>,
}

/// Generator parameters bound to a tape.
#[derive(Debug, Clone, Copy)]
pub struct GenVars {
    src_emb: Var,
    tgt_emb: Var,
    enc_fwd: Gru,
    enc_bwd: Gru,
    init: Linear,
    att_ws: Var,
    att_b: Var,
    att_uh: Var,
    att_v: Var,
    dec: Gru,
    readout: Linear,
    out: Linear,
}

/// Encoded source on a tape, ready for decoding.
#[derive(Debug, Clone, Copy)]
pub struct Encoded {
    pub annotations: Var,
    projected: Var,
    ones: Var,
    pub init_state: Var,
    pub len: usize,
}

/// One decoder step on a tape.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    /// `[1, V]` log-distribution over the next token.
    pub log_probs: Var,
    pub state: Var,
    /// `[1, J]` attention weights used for this step.
    pub attention: Var,
}

/// Teacher-forced path on a tape.
#[derive(Debug, Clone)]
pub struct ForcedPath {
    pub log_prob: Var,
    pub step_log_probs: Vec<f64>,
    pub attention: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub params: ParamSet,
}

impl Generator {
    pub fn new(config: GeneratorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = Self::layout(&config, rng);
        Ok(Self { config, params })
    }

    pub fn seeded(config: GeneratorConfig, seed: u64) -> Result<Self> {
        Self::new(config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Wrap existing parameters after checking names and shapes against `config`.
    pub fn from_params(config: GeneratorConfig, params: ParamSet) -> Result<Self> {
        config.validate()?;
        let reference = Self::layout(&config, &mut ChaCha8Rng::seed_from_u64(0));
        check_layout(&reference, &params)?;
        Ok(Self { config, params })
    }

    fn layout(c: &GeneratorConfig, rng: &mut impl Rng) -> ParamSet {
        let (e, h, a) = (c.embed_dim, c.hidden_dim, c.attention_dim);
        let mut p = ParamSet::new();
        p.insert_uniform("src_emb", &[c.src_vocab, e], 0.1, rng);
        p.insert_uniform("tgt_emb", &[c.tgt_vocab, e], 0.1, rng);
        Gru::register(&mut p, "enc_fwd", e, h, rng);
        Gru::register(&mut p, "enc_bwd", e, h, rng);
        Linear::register(&mut p, "init", h, h, rng);
        p.insert_uniform("att.w_s", &[h, a], 1.0 / (h as f64).sqrt(), rng);
        p.insert_zeros("att.b", &[1, a]);
        p.insert_uniform("att.u_h", &[2 * h, a], 1.0 / (2.0 * h as f64).sqrt(), rng);
        p.insert_uniform("att.v", &[a, 1], 1.0 / (a as f64).sqrt(), rng);
        Gru::register(&mut p, "dec", e + 2 * h, h, rng);
        Linear::register(&mut p, "readout", e + 3 * h, c.readout_dim, rng);
        Linear::register(&mut p, "out", c.readout_dim, c.tgt_vocab, rng);
        p
    }

    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<(Bound, GenVars)> {
        let b = self.params.bind(tape, trainable)?;
        let vars = GenVars {
            src_emb: b.var("src_emb")?,
            tgt_emb: b.var("tgt_emb")?,
            enc_fwd: Gru::bind(&b, "enc_fwd")?,
            enc_bwd: Gru::bind(&b, "enc_bwd")?,
            init: Linear::bind(&b, "init")?,
            att_ws: b.var("att.w_s")?,
            att_b: b.var("att.b")?,
            att_uh: b.var("att.u_h")?,
            att_v: b.var("att.v")?,
            dec: Gru::bind(&b, "dec")?,
            readout: Linear::bind(&b, "readout")?,
            out: Linear::bind(&b, "out")?,
        };
        Ok((b, vars))
    }

    fn check_source(&self, source: &[TokenId]) -> Result<()> {
        if source.is_empty() {
            return Err(contract("source sentence is empty"));
        }
        check_tokens(source, self.config.src_vocab)
    }

    fn check_target_token(&self, t: TokenId) -> Result<()> {
        if t >= self.config.tgt_vocab {
            return Err(CoreError::InvalidToken {
                index: t,
                size: self.config.tgt_vocab,
            });
        }
        Ok(())
    }

    /// Run both encoder directions over `source`.
    pub fn encode_on(&self, tape: &mut Tape, v: &GenVars, source: &[TokenId]) -> Result<Encoded> {
        self.check_source(source)?;
        let h = self.config.hidden_dim;
        let emb = tape.embedding_lookup(v.src_emb, source)?;
        let rows: Vec<Var> = (0..source.len())
            .map(|j| tape.select(emb, &row_indices(j, self.config.embed_dim)))
            .collect::<std::result::Result<_, _>>()?;
        let zero = tape.constant(Tensor::zeros(&[1, h]))?;
        let mut fwd = Vec::with_capacity(rows.len());
        let mut s = zero;
        for &x in &rows {
            s = v.enc_fwd.step(tape, x, s)?;
            fwd.push(s);
        }
        let mut bwd = vec![zero; rows.len()];
        let mut s = zero;
        for j in (0..rows.len()).rev() {
            s = v.enc_bwd.step(tape, rows[j], s)?;
            bwd[j] = s;
        }
        let per_pos: Vec<Var> = fwd
            .iter()
            .zip(&bwd)
            .map(|(&f, &b)| tape.concat(&[f, b], 1))
            .collect::<std::result::Result<_, _>>()?;
        let annotations = tape.concat(&per_pos, 0)?;
        let init = v.init.forward(tape, bwd[0])?;
        let init_state = tape.tanh(init)?;
        self.encoded_from(tape, v, annotations, init_state)
    }

    fn encoded_from(&self, tape: &mut Tape, v: &GenVars, annotations: Var, init_state: Var) -> Result<Encoded> {
        let len = tape.value(annotations).rows();
        let projected = tape.matmul(annotations, v.att_uh)?;
        let ones = tape.constant(Tensor::filled(&[len, 1], 1.0))?;
        Ok(Encoded {
            annotations,
            projected,
            ones,
            init_state,
            len,
        })
    }

    /// Attention weights `[1, J]` and context `[1, 2H]` for decoder state `state`.
    pub fn attend_on(&self, tape: &mut Tape, v: &GenVars, enc: &Encoded, state: Var) -> Result<(Var, Var)> {
        let ws = tape.matmul(state, v.att_ws)?;
        let ws = tape.add(ws, v.att_b)?;
        let rep = tape.matmul(enc.ones, ws)?;
        let pre = tape.add(enc.projected, rep)?;
        let act = tape.tanh(pre)?;
        let scores = tape.matmul(act, v.att_v)?;
        let scores = tape.transpose(scores)?;
        let weights = tape.row_softmax(scores)?;
        let context = tape.matmul(weights, enc.annotations)?;
        Ok((context, weights))
    }

    pub fn step_on(&self, tape: &mut Tape, v: &GenVars, enc: &Encoded, prev: TokenId, state: Var) -> Result<Step> {
        self.check_target_token(prev)?;
        let e = tape.embedding_lookup(v.tgt_emb, &[prev])?;
        let (context, attention) = self.attend_on(tape, v, enc, state)?;
        let x = tape.concat(&[e, context], 1)?;
        let s = v.dec.step(tape, x, state)?;
        let r_in = tape.concat(&[e, s, context], 1)?;
        let r = v.readout.forward(tape, r_in)?;
        let r = tape.tanh(r)?;
        let logits = v.out.forward(tape, r)?;
        let log_probs = tape.log_softmax(logits)?;
        Ok(Step {
            log_probs,
            state: s,
            attention,
        })
    }

    /// Teacher-forced log-probability of `tokens` (need not end in EOS).
    pub fn sequence_log_prob_on(
        &self,
        tape: &mut Tape,
        v: &GenVars,
        enc: &Encoded,
        tokens: &[TokenId],
    ) -> Result<ForcedPath> {
        if tokens.is_empty() {
            return Err(contract("target sequence is empty"));
        }
        check_tokens(tokens, self.config.tgt_vocab)?;
        let mut prev = self.config.bos;
        let mut state = enc.init_state;
        let mut picked = Vec::with_capacity(tokens.len());
        let mut step_log_probs = Vec::with_capacity(tokens.len());
        let mut attention = Vec::with_capacity(tokens.len());
        for &y in tokens {
            let step = self.step_on(tape, v, enc, prev, state)?;
            let lp = tape.select(step.log_probs, &[y])?;
            step_log_probs.push(tape.item(lp));
            picked.push(lp);
            attention.push(tape.value(step.attention).values().to_vec());
            state = step.state;
            prev = y;
        }
        let joined = tape.concat(&picked, 1)?;
        Ok(ForcedPath {
            log_prob: tape.sum(joined)?,
            step_log_probs,
            attention,
        })
    }

    /// Annotations for `source`.
    pub fn encode(&self, source: &[TokenId]) -> Result<EncoderAnnotations> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let enc = self.encode_on(&mut tape, &v, source)?;
        Ok(EncoderAnnotations {
            matrix: tape.value(enc.annotations).clone(),
        })
    }

    /// Initial decoder state derived from annotations (backward half of `h_1`).
    pub fn initial_state(&self, ann: &EncoderAnnotations) -> Result<Tensor> {
        let h = self.config.hidden_dim;
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let b1 = tape.constant(Tensor::row(ann.matrix.row_slice(0)[h..].to_vec()))?;
        let init = v.init.forward(&mut tape, b1)?;
        let s = tape.tanh(init)?;
        Ok(tape.value(s).clone())
    }

    fn plain_encoded(&self, tape: &mut Tape, v: &GenVars, ann: &EncoderAnnotations, state: &Tensor) -> Result<(Encoded, Var)> {
        if ann.is_empty() {
            return Err(contract("no annotations"));
        }
        if ann.matrix.cols() != 2 * self.config.hidden_dim || state.shape() != [1, self.config.hidden_dim] {
            return Err(contract("annotation or state shape does not match the generator"));
        }
        let a = tape.constant(ann.matrix.clone())?;
        let s = tape.constant(state.clone())?;
        Ok((self.encoded_from(tape, v, a, s)?, s))
    }

    /// Context vector and attention weights for `state` over `ann`.
    pub fn attend(&self, state: &Tensor, ann: &EncoderAnnotations) -> Result<(Tensor, Vec<f64>)> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let (enc, s) = self.plain_encoded(&mut tape, &v, ann, state)?;
        let (ctx, w) = self.attend_on(&mut tape, &v, &enc, s)?;
        Ok((tape.value(ctx).clone(), tape.value(w).values().to_vec()))
    }

    pub fn decode_step(&self, prev: TokenId, state: &Tensor, ann: &EncoderAnnotations) -> Result<StepOutput> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let (enc, s) = self.plain_encoded(&mut tape, &v, ann, state)?;
        let step = self.step_on(&mut tape, &v, &enc, prev, s)?;
        Ok(StepOutput {
            distribution: tape.value(step.log_probs).values().iter().map(|l| l.exp()).collect(),
            state: tape.value(step.state).clone(),
            attention: tape.value(step.attention).values().to_vec(),
        })
    }

    /// Decode on `tape`, choosing each token from the step log-distribution.
    /// Returns the result and a `[1]` var holding its total log-probability.
    pub fn decode_on(
        &self,
        tape: &mut Tape,
        v: &GenVars,
        source: &[TokenId],
        max_len: usize,
        mut choose: impl FnMut(&[f64]) -> TokenId,
    ) -> Result<(TranslationResult, Var)> {
        if max_len == 0 {
            return Err(contract("max_len must be at least 1"));
        }
        let enc = self.encode_on(tape, v, source)?;
        let mut prev = self.config.bos;
        let mut state = enc.init_state;
        let mut tokens = Vec::new();
        let mut step_log_probs = Vec::new();
        let mut picked = Vec::new();
        let mut rows = Vec::new();
        let mut total = 0.0;
        while tokens.len() < max_len {
            let step = self.step_on(tape, v, &enc, prev, state)?;
            let y = choose(tape.value(step.log_probs).values());
            let lp = tape.select(step.log_probs, &[y])?;
            let lpv = tape.item(lp);
            tokens.push(y);
            step_log_probs.push(lpv);
            picked.push(lp);
            total += lpv;
            rows.push(tape.value(step.attention).values().to_vec());
            state = step.state;
            prev = y;
            if y == self.config.eos {
                break;
            }
        }
        let joined = tape.concat(&picked, 1)?;
        let total_var = tape.sum(joined)?;
        let result = TranslationResult {
            tokens,
            step_log_probs,
            attention: AttentionMatrix::new(rows, source.len())?,
            total_log_prob: total,
        };
        Ok((result, total_var))
    }

    fn decode_with(&self, source: &[TokenId], max_len: usize, choose: impl FnMut(&[f64]) -> TokenId) -> Result<TranslationResult> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        Ok(self.decode_on(&mut tape, &v, source, max_len, choose)?.0)
    }

    /// Sampling decode on `tape`; see [`Generator::sample_decode`].
    pub fn sample_on(
        &self,
        tape: &mut Tape,
        v: &GenVars,
        source: &[TokenId],
        max_len: usize,
        sharpness: f64,
        rng: &mut impl Rng,
    ) -> Result<(TranslationResult, Var)> {
        if !(sharpness > 0.0) || !sharpness.is_finite() {
            return Err(contract(format!("sharpness must be positive, got {sharpness}")));
        }
        let mut weights = Vec::new();
        self.decode_on(tape, v, source, max_len, |lp| {
            let max = lp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            weights.clear();
            weights.extend(lp.iter().map(|&l| ((l - max) * sharpness).exp()));
            sample_index(&weights, rng.gen::<f64>())
        })
    }

    /// Argmax decoding until EOS or `max_len` tokens.
    pub fn greedy_decode(&self, source: &[TokenId], max_len: usize) -> Result<TranslationResult> {
        self.decode_with(source, max_len, argmax)
    }

    /// Draw each token from `p^sharpness` (renormalized); the recorded
    /// log-probabilities are those of the unsharpened model.
    pub fn sample_decode(
        &self,
        source: &[TokenId],
        max_len: usize,
        sharpness: f64,
        rng: &mut impl Rng,
    ) -> Result<TranslationResult> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        Ok(self.sample_on(&mut tape, &v, source, max_len, sharpness, rng)?.0)
    }

    pub fn sample_decode_seeded(&self, source: &[TokenId], max_len: usize, sharpness: f64, seed: u64) -> Result<TranslationResult> {
        self.sample_decode(source, max_len, sharpness, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// `log P(target | source)` and the attention of every target step.
    /// The target must end in EOS.
    pub fn force_decode(&self, source: &[TokenId], target: &[TokenId]) -> Result<(f64, AttentionMatrix)> {
        if target.last() != Some(&self.config.eos) {
            return Err(contract("force_decode target must end with EOS"));
        }
        self.sequence_log_prob(source, target)
    }

    /// Like [`Generator::force_decode`] but without the EOS requirement,
    /// so length-capped prefixes can be scored.
    pub fn sequence_log_prob(&self, source: &[TokenId], tokens: &[TokenId]) -> Result<(f64, AttentionMatrix)> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let enc = self.encode_on(&mut tape, &v, source)?;
        let path = self.sequence_log_prob_on(&mut tape, &v, &enc, tokens)?;
        Ok((tape.item(path.log_prob), AttentionMatrix::new(path.attention, source.len())?))
    }

    /// Force-decode `target` and package the path like a decoding result.
    pub fn forced_result(&self, source: &[TokenId], target: &[TokenId]) -> Result<TranslationResult> {
        if target.last() != Some(&self.config.eos) {
            return Err(contract("force_decode target must end with EOS"));
        }
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let enc = self.encode_on(&mut tape, &v, source)?;
        let path = self.sequence_log_prob_on(&mut tape, &v, &enc, target)?;
        Ok(TranslationResult {
            tokens: target.to_vec(),
            total_log_prob: tape.item(path.log_prob),
            step_log_probs: path.step_log_probs,
            attention: AttentionMatrix::new(path.attention, source.len())?,
        })
    }

    /// Negative mean sentence log-likelihood of `batch` on `tape`.
    pub fn mle_loss_on(&self, tape: &mut Tape, v: &GenVars, batch: &[(Vec<TokenId>, Vec<TokenId>)]) -> Result<Var> {
        if batch.is_empty() {
            return Err(contract("MLE batch is empty"));
        }
        let mut total: Option<Var> = None;
        for (src, tgt) in batch {
            if tgt.last() != Some(&self.config.eos) {
                return Err(contract("MLE target must end with EOS"));
            }
            let enc = self.encode_on(tape, v, src)?;
            let lp = self.sequence_log_prob_on(tape, v, &enc, tgt)?.log_prob;
            total = Some(match total {
                None => lp,
                Some(acc) => tape.add(acc, lp)?,
            });
        }
        Ok(tape.scale(total.expect("nonempty batch"), -1.0 / batch.len() as f64)?)
    }

    pub fn mle_loss(&self, batch: &[(Vec<TokenId>, Vec<TokenId>)]) -> Result<f64> {
        let mut tape = Tape::new();
        let (_, v) = self.bind(&mut tape, false)?;
        let loss = self.mle_loss_on(&mut tape, &v, batch)?;
        Ok(tape.item(loss))
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn mle_loss_and_grad(&self, batch: &[(Vec<TokenId>, Vec<TokenId>)]) -> Result<(f64, GradSet)> {
        let mut tape = Tape::new();
        let (bound, v) = self.bind(&mut tape, true)?;
        let loss = self.mle_loss_on(&mut tape, &v, batch)?;
        let value = tape.item(loss);
        let grads = tape.backward(loss)?;
        Ok((value, bound.collect(&grads, &self.params)))
    }
}

pub(crate) fn check_layout(reference: &ParamSet, params: &ParamSet) -> Result<()> {
    if reference.names() != params.names() {
        return Err(contract("parameter names do not match the configuration"));
    }
    for ((name, a), b) in reference.iter().zip(params.tensors()) {
        if a.shape() != b.shape() {
            return Err(contract(format!("parameter {name}: shape {:?}, expected {:?}", b.shape(), a.shape())));
        }
        if !b.is_finite() {
            return Err(contract(format!("parameter {name} holds non-finite values")));
        }
    }
    Ok(())
}

fn row_indices(row: usize, cols: usize) -> Vec<usize> {
    (row * cols..(row + 1) * cols).collect()
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from unnormalized nonnegative `weights` at uniform `u`.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if target < acc {
            return i;
        }
    }
    last_positive
}
