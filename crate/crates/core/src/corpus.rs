//! Synthetic parallel corpora built to provoke under-translation, and the
//! plain-text corpus/vocabulary file formats.
//!
//! A source sentence is a run of common tokens, optionally followed by a
//! short clause of rare tokens. The target maps every token through a fixed
//! bijective lexicon, shuffles the common part within local windows, and
//! keeps the rare clause in order at the end, so references are always
//! complete translations.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, CoreError, Result};
use crate::train::Pair;
use crate::vocab::{TokenId, Vocabulary, EOS, RESERVED};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTaskSpec {
    /// Ordinary tokens per side, rare ones included.
    pub vocab_size: usize,
    /// Inclusive range for the common-token part of a source sentence.
    pub min_len: usize,
    pub max_len: usize,
    /// Common tokens are permuted within consecutive blocks of this size.
    pub reorder_window: usize,
    /// Probability that a sentence carries a rare clause.
    pub distractor_rate: f64,
    /// Tokens at the end of the vocabulary reserved for rare clauses.
    pub rare_vocab_size: usize,
    pub clause_min: usize,
    pub clause_max: usize,
    pub seed: u64,
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        Self {
            vocab_size: 50,
            min_len: 4,
            max_len: 12,
            reorder_window: 2,
            distractor_rate: 0.3,
            rare_vocab_size: 15,
            clause_min: 2,
            clause_max: 4,
            seed: 7,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(contract(format!("invalid task spec: {m}")));
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad("length range is empty");
        }
        if self.rare_vocab_size >= self.vocab_size {
            return bad("rare sub-vocabulary must leave common tokens");
        }
        if !(0.0..=1.0).contains(&self.distractor_rate) {
            return bad("distractor_rate must lie in [0, 1]");
        }
        if self.distractor_rate > 0.0 && (self.rare_vocab_size == 0 || self.clause_min == 0 || self.clause_min > self.clause_max) {
            return bad("distractor clauses need a rare vocabulary and a nonempty clause length range");
        }
        if self.reorder_window == 0 {
            return bad("reorder_window must be at least 1");
        }
        Ok(())
    }

    fn common(&self) -> usize {
        self.vocab_size - self.rare_vocab_size
    }
}

/// Parallel sentences as token ids without EOS.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParallelCorpus {
    pub sources: Vec<Vec<TokenId>>,
    pub targets: Vec<Vec<TokenId>>,
    /// Whether each pair carries a rare clause; empty when read from files.
    pub has_distractor: Vec<bool>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    /// Training pairs with EOS appended to every target.
    pub fn pairs(&self) -> Vec<Pair> {
        self.sources
            .iter()
            .zip(&self.targets)
            .map(|(s, t)| {
                let mut t = t.clone();
                t.push(EOS);
                (s.clone(), t)
            })
            .collect()
    }

    pub fn slice(&self, lo: usize, hi: usize) -> Self {
        Self {
            sources: self.sources[lo..hi].to_vec(),
            targets: self.targets[lo..hi].to_vec(),
            has_distractor: if self.has_distractor.is_empty() {
                Vec::new()
            } else {
                self.has_distractor[lo..hi].to_vec()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: ParallelCorpus,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    /// `lexicon[k]` is the target ordinary index of source ordinary index `k`.
    pub lexicon: Vec<usize>,
}

const OFFSET: usize = RESERVED.len();

pub fn generate_corpus(spec: &SyntheticTaskSpec, n_pairs: usize) -> Result<SyntheticCorpus> {
    spec.validate()?;
    if n_pairs == 0 {
        return Err(contract("n_pairs must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let src_vocab = Vocabulary::new((0..spec.vocab_size).map(|i| format!("s{i}")))?;
    let tgt_vocab = Vocabulary::new((0..spec.vocab_size).map(|i| format!("t{i}")))?;
    // Common tokens map to common tokens and rare to rare, shuffled within each group.
    let mut lexicon: Vec<usize> = (0..spec.common()).collect();
    lexicon.shuffle(&mut rng);
    let mut rare: Vec<usize> = (spec.common()..spec.vocab_size).collect();
    rare.shuffle(&mut rng);
    lexicon.extend(rare);

    let mut corpus = ParallelCorpus::default();
    for _ in 0..n_pairs {
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let core: Vec<usize> = (0..len).map(|_| rng.gen_range(0..spec.common())).collect();
        let distract = spec.distractor_rate > 0.0 && rng.gen_bool(spec.distractor_rate);
        let clause: Vec<usize> = if distract {
            let n = rng.gen_range(spec.clause_min..=spec.clause_max);
            (0..n).map(|_| rng.gen_range(spec.common()..spec.vocab_size)).collect()
        } else {
            Vec::new()
        };
        let mut mapped: Vec<usize> = core.iter().map(|&k| lexicon[k]).collect();
        if spec.reorder_window > 1 {
            for block in mapped.chunks_mut(spec.reorder_window) {
                block.shuffle(&mut rng);
            }
        }
        mapped.extend(clause.iter().map(|&k| lexicon[k]));
        corpus.sources.push(core.iter().chain(&clause).map(|k| k + OFFSET).collect());
        corpus.targets.push(mapped.into_iter().map(|k| k + OFFSET).collect());
        corpus.has_distractor.push(distract);
    }
    Ok(SyntheticCorpus {
        corpus,
        src_vocab,
        tgt_vocab,
        lexicon,
    })
}

fn write_side(path: &Path, seqs: &[Vec<TokenId>], vocab: &Vocabulary) -> Result<()> {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&vocab.render(s));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write `{name}.src` and `{name}.tgt` under `dir`.
pub fn write_parallel(dir: &Path, name: &str, corpus: &ParallelCorpus, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_side(&dir.join(format!("{name}.src")), &corpus.sources, src_vocab)?;
    write_side(&dir.join(format!("{name}.tgt")), &corpus.targets, tgt_vocab)
}

fn read_side(path: &Path, vocab: &Vocabulary) -> Result<Vec<Vec<TokenId>>> {
    Ok(fs::read_to_string(path)?.lines().map(|l| vocab.encode(l)).collect())
}

/// Read aligned `{name}.src` / `{name}.tgt` from `dir`.
pub fn read_parallel(dir: &Path, name: &str, src_vocab: &Vocabulary, tgt_vocab: &Vocabulary) -> Result<ParallelCorpus> {
    let sources = read_side(&dir.join(format!("{name}.src")), src_vocab)?;
    let targets = read_side(&dir.join(format!("{name}.tgt")), tgt_vocab)?;
    if sources.len() != targets.len() {
        return Err(CoreError::Parse(format!(
            "{name}: {} source lines but {} target lines",
            sources.len(),
            targets.len()
        )));
    }
    if let Some(i) = sources.iter().position(Vec::is_empty) {
        return Err(CoreError::Parse(format!("{name}: source line {} is empty", i + 1)));
    }
    Ok(ParallelCorpus {
        sources,
        targets,
        has_distractor: Vec::new(),
    })
}

pub fn load_vocabs(dir: &Path) -> Result<(Vocabulary, Vocabulary)> {
    Ok((Vocabulary::load(&dir.join("vocab.src"))?, Vocabulary::load(&dir.join("vocab.tgt"))?))
}

/// Split sizes written by [`write_splits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

/// Generate one corpus and write it as train/valid/test splits plus vocabularies.
pub fn write_splits(dir: &Path, spec: &SyntheticTaskSpec, sizes: SplitSizes) -> Result<SyntheticCorpus> {
    let total = sizes.train + sizes.valid + sizes.test;
    let synth = generate_corpus(spec, total)?;
    fs::create_dir_all(dir)?;
    let mut lo = 0;
    for (name, n) in [("train", sizes.train), ("valid", sizes.valid), ("test", sizes.test)] {
        write_parallel(dir, name, &synth.corpus.slice(lo, lo + n), &synth.src_vocab, &synth.tgt_vocab)?;
        lo += n;
    }
    synth.src_vocab.save(&dir.join("vocab.src"))?;
    synth.tgt_vocab.save(&dir.join("vocab.tgt"))?;
    Ok(synth)
}
