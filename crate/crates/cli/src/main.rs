use std::fs;
use std::path::{Path, PathBuf};

use adequa_core::checkpoint::Checkpoint;
use adequa_core::corpus::{load_vocabs, read_parallel, write_splits, SplitSizes, SyntheticTaskSpec};
use adequa_core::discriminator::{Discriminator, DiscriminatorConfig};
use adequa_core::eval::{evaluate, EvalReport, DEFAULT_BUCKET_EDGES};
use adequa_core::metrics::{alignment, cdr, coverage_of, CoverageSet, RewardKind};
use adequa_core::train::{
    adversarial_round, generator_phase, mrt_step, pretrain_discriminator, pretrain_generator, BleuReward, CdrReward,
    Chrf3Reward, DiscMode, Pair, RewardFunction, TrainConfig, TrainLog,
};
use adequa_core::{Generator, GeneratorConfig, Vocabulary};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "adequa", version, about = "Adequacy-oriented training for toy attention translation models")]
struct Cli {
    /// Seed for every random choice; overrides the seed in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus as train/valid/test splits plus vocabularies.
    GenCorpus(GenCorpus),
    /// Likelihood pretraining to a validation plateau.
    TrainMle(TrainMle),
    /// Policy-gradient fine-tuning with a metric reward.
    TrainRl(TrainRl),
    /// Minimum-risk fine-tuning over sampled candidate sets.
    TrainMrt(TrainMrt),
    /// Alternating generator/discriminator training.
    TrainAdv(TrainAdv),
    /// Greedy-decode a split and print the report as JSON.
    Evaluate(Evaluate),
    /// Coverage difference ratio of two coverage sets.
    Cdr(CdrArgs),
    /// Dump hard alignments of one greedy translation.
    Align(Align),
    /// Per-length-bucket table as CSV.
    Report(Evaluate),
}

#[derive(Args)]
struct GenCorpus {
    #[arg(long)]
    out: PathBuf,
    /// JSON task spec; unspecified fields take defaults.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    train: usize,
    #[arg(long, default_value_t = 200)]
    valid: usize,
    #[arg(long, default_value_t = 200)]
    test: usize,
}

#[derive(Args)]
struct Common {
    /// Directory written by gen-corpus.
    #[arg(long)]
    data: PathBuf,
    /// JSON training config; unspecified fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Where to write the trained checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// JSON-lines training log.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct TrainMle {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 16)]
    embed_dim: usize,
    #[arg(long, default_value_t = 32)]
    hidden_dim: usize,
}

#[derive(Args)]
struct TrainRl {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    init: PathBuf,
    #[arg(long, default_value = "cdr")]
    reward: RewardKind,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
}

#[derive(Args)]
struct TrainMrt {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    init: PathBuf,
    #[arg(long, default_value = "bleu")]
    reward: RewardKind,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
}

#[derive(Args)]
struct TrainAdv {
    #[command(flatten)]
    common: Common,
    /// Pretrained checkpoint; a discriminator is pretrained if it has none.
    #[arg(long)]
    init: PathBuf,
    #[arg(long, default_value = "regression")]
    disc_mode: DiscMode,
    #[arg(long, default_value_t = 5)]
    rounds: usize,
}

#[derive(Args)]
struct Evaluate {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    /// Comma-separated finite lower bucket edges.
    #[arg(long, value_delimiter = ',')]
    edges: Option<Vec<usize>>,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CdrArgs {
    /// Comma-separated source positions covered by the hypothesis.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    cgen: Vec<usize>,
    /// Comma-separated source positions covered by the reference.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    cref: Vec<usize>,
    /// Source length; defaults to one past the largest position.
    #[arg(long)]
    source_len: Option<usize>,
}

#[derive(Args)]
struct Align {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Whitespace-tokenized source sentence.
    #[arg(long, conflicts_with = "index")]
    source: Option<String>,
    /// Reference translation for --source; enables the CDR summary.
    #[arg(long, requires = "source")]
    reference: Option<String>,
    /// Take source and reference from this line of --split instead.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long, default_value = "test")]
    split: String,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::GenCorpus(a) => gen_corpus(a, seed),
        Command::TrainMle(a) => train_mle(a, seed),
        Command::TrainRl(a) => train_rl(a, seed),
        Command::TrainMrt(a) => train_mrt(a, seed),
        Command::TrainAdv(a) => train_adv(a, seed),
        Command::Evaluate(a) => {
            let r = report_for(&a)?;
            emit(a.out.as_deref(), &(serde_json::to_string_pretty(&r)? + "\n"))
        }
        Command::Report(a) => {
            let r = report_for(&a)?;
            emit(a.out.as_deref(), &r.to_csv())
        }
        Command::Cdr(a) => cdr_cmd(a),
        Command::Align(a) => align(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

fn train_config(path: Option<&Path>, seed: Option<u64>) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = read_json(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Data {
    src_vocab: Vocabulary,
    tgt_vocab: Vocabulary,
}

impl Data {
    fn load(dir: &Path) -> Result<Self> {
        let (src_vocab, tgt_vocab) = load_vocabs(dir).with_context(|| format!("loading vocabularies from {}", dir.display()))?;
        Ok(Self { src_vocab, tgt_vocab })
    }

    fn split(&self, dir: &Path, name: &str) -> Result<Vec<Pair>> {
        let c = read_parallel(dir, name, &self.src_vocab, &self.tgt_vocab)
            .with_context(|| format!("reading split {name:?} from {}", dir.display()))?;
        Ok(c.pairs())
    }
}

fn open_log(path: Option<&Path>) -> Result<TrainLog> {
    Ok(match path {
        Some(p) => TrainLog::to_file(p)?,
        None => TrainLog::new(),
    })
}

fn gen_corpus(a: GenCorpus, seed: Option<u64>) -> Result<()> {
    let mut spec: SyntheticTaskSpec = read_json(a.spec.as_deref())?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let sizes = SplitSizes {
        train: a.train,
        valid: a.valid,
        test: a.test,
    };
    let synth = write_splits(&a.out, &spec, sizes)?;
    fs::write(a.out.join("spec.json"), serde_json::to_string_pretty(&spec)? + "\n")?;
    println!("wrote {} pairs to {}", synth.corpus.len(), a.out.display());
    Ok(())
}

fn train_mle(a: TrainMle, seed: Option<u64>) -> Result<()> {
    let c = &a.common;
    let cfg = train_config(c.config.as_deref(), seed)?;
    let data = Data::load(&c.data)?;
    let train = data.split(&c.data, "train")?;
    let valid = data.split(&c.data, "valid")?;
    let gcfg = GeneratorConfig {
        embed_dim: a.embed_dim,
        hidden_dim: a.hidden_dim,
        attention_dim: a.hidden_dim,
        readout_dim: a.hidden_dim,
        ..GeneratorConfig::new(data.src_vocab.len(), data.tgt_vocab.len())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = Generator::new(gcfg, &mut rng)?;
    let mut log = open_log(c.log.as_deref())?;
    let report = pretrain_generator(&mut g, &train, &valid, &cfg, &mut rng, &mut log)?;
    log.flush()?;
    Checkpoint::new(&g, None).save(&c.out)?;
    println!(
        "epochs {} best {} valid loss {:.6}",
        report.valid_losses.len(),
        report.best_epoch,
        report.valid_losses[report.best_epoch]
    );
    Ok(())
}

fn metric_reward(kind: RewardKind, vocab: &Vocabulary) -> Box<dyn RewardFunction + '_> {
    match kind {
        RewardKind::Cdr => Box::new(CdrReward),
        RewardKind::Bleu => Box::new(BleuReward),
        RewardKind::Chrf3 => Box::new(Chrf3Reward { vocab }),
    }
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn train_rl(a: TrainRl, seed: Option<u64>) -> Result<()> {
    let c = &a.common;
    let cfg = train_config(c.config.as_deref(), seed)?;
    let data = Data::load(&c.data)?;
    let train = data.split(&c.data, "train")?;
    let ck = load_checkpoint(&a.init)?;
    let mut g = ck.generator()?;
    let mut reward = metric_reward(a.reward, &data.tgt_vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = cfg.generator_optimizer();
    let mut log = open_log(c.log.as_deref())?;
    for epoch in 0..a.epochs {
        let s = generator_phase(&mut g, &train, None, reward.as_mut(), &cfg, &mut opt, &mut rng, &mut log)?;
        println!("epoch {epoch} rl_batches {} mle_batches {} mean_reward {:?}", s.rl_batches, s.mle_batches, s.mean_reward);
    }
    log.flush()?;
    Checkpoint::new(&g, ck.discriminator()?.as_ref()).save(&c.out)?;
    Ok(())
}

fn train_mrt(a: TrainMrt, seed: Option<u64>) -> Result<()> {
    let c = &a.common;
    let cfg = train_config(c.config.as_deref(), seed)?;
    let data = Data::load(&c.data)?;
    let train = data.split(&c.data, "train")?;
    let ck = load_checkpoint(&a.init)?;
    let mut g = ck.generator()?;
    let mut reward = metric_reward(a.reward, &data.tgt_vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = cfg.generator_optimizer();
    let mut log = open_log(c.log.as_deref())?;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..a.epochs {
        order.shuffle(&mut rng);
        let mut risk = 0.0;
        let mut n = 0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<Pair> = idx.iter().map(|&i| train[i].clone()).collect();
            let s = mrt_step(&mut g, &batch, reward.as_mut(), &cfg, &mut opt, &mut rng)?;
            log.record("mrt", &s)?;
            risk += s.loss;
            n += 1;
        }
        println!("epoch {epoch} mean risk {:.6}", risk / n as f64);
    }
    log.flush()?;
    Checkpoint::new(&g, ck.discriminator()?.as_ref()).save(&c.out)?;
    Ok(())
}

fn train_adv(a: TrainAdv, seed: Option<u64>) -> Result<()> {
    let c = &a.common;
    let mut cfg = train_config(c.config.as_deref(), seed)?;
    cfg.disc_mode = a.disc_mode;
    let data = Data::load(&c.data)?;
    let train = data.split(&c.data, "train")?;
    let ck = load_checkpoint(&a.init)?;
    let mut g = ck.generator()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = open_log(c.log.as_deref())?;
    let mut d = match ck.discriminator()? {
        Some(d) => d,
        None => {
            let dcfg = DiscriminatorConfig::new(data.src_vocab.len(), data.tgt_vocab.len());
            let mut d = Discriminator::new(dcfg, &mut rng)?;
            let losses = pretrain_discriminator(&g, &mut d, &train, &cfg, &mut rng, &mut log)?;
            println!("discriminator pretraining losses {losses:?}");
            d
        }
    };
    let mut gen_opt = cfg.generator_optimizer();
    let mut disc_opt = cfg.discriminator_optimizer();
    for round in 0..a.rounds {
        let s = adversarial_round(&mut g, &mut d, &train, &cfg, &mut gen_opt, &mut disc_opt, &mut rng, &mut log)?;
        println!(
            "round {round} g_steps {} d_steps {} mean_reward {:?} disc_loss {:?}",
            s.g_steps, s.d_steps, s.mean_reward, s.mean_disc_loss
        );
    }
    log.flush()?;
    Checkpoint::new(&g, Some(&d)).save(&c.out)?;
    Ok(())
}

fn report_for(a: &Evaluate) -> Result<EvalReport> {
    let data = Data::load(&a.data)?;
    let pairs = data.split(&a.data, &a.split)?;
    let g = load_checkpoint(&a.model)?.generator()?;
    let edges = a.edges.clone().unwrap_or_else(|| DEFAULT_BUCKET_EDGES.to_vec());
    Ok(evaluate(&g, &pairs, &data.tgt_vocab, &edges)?)
}

fn cdr_cmd(a: CdrArgs) -> Result<()> {
    let largest = a.cgen.iter().chain(&a.cref).max().copied().unwrap_or(0);
    let j = a.source_len.unwrap_or(largest + 1);
    let score = cdr(&CoverageSet::new(a.cgen, j)?, &CoverageSet::new(a.cref, j)?)?;
    println!("{:.4}", score.value);
    Ok(())
}

fn align(a: Align) -> Result<()> {
    let data = Data::load(&a.data)?;
    let g = load_checkpoint(&a.model)?.generator()?;
    let (src, reference) = match (&a.source, a.index) {
        (Some(s), None) => (data.src_vocab.encode(s), a.reference.as_deref().map(|r| data.tgt_vocab.encode_target(r))),
        (None, Some(i)) => {
            let pairs = data.split(&a.data, &a.split)?;
            let Some((s, r)) = pairs.get(i).cloned() else {
                bail!("split {:?} has {} lines, no index {i}", a.split, pairs.len());
            };
            (s, Some(r))
        }
        _ => bail!("give either --source or --index"),
    };
    if src.is_empty() {
        bail!("source sentence is empty");
    }
    let hyp = g.greedy_decode(&src, adequa_core::train::decode_limit(src.len()))?;
    let token = |v: &Vocabulary, t| v.token(t).unwrap_or("<?>").to_string();
    for (&t, j) in hyp.tokens.iter().zip(alignment(&hyp.attention)) {
        println!("{}\t{}", token(&data.tgt_vocab, t), token(&data.src_vocab, src[j]));
    }
    let c_gen = coverage_of(&hyp.attention, &hyp.tokens, g.config.eos)?;
    let summary = match reference {
        Some(r) => {
            let (_, att) = g.force_decode(&src, &r)?;
            let c_ref = coverage_of(&att, &r, g.config.eos)?;
            let score = cdr(&c_gen, &c_ref)?;
            serde_json::json!({"c_gen": c_gen.to_vec(), "c_ref": c_ref.to_vec(), "cdr": score.value})
        }
        None => serde_json::json!({"c_gen": c_gen.to_vec(), "c_ref": null, "cdr": null}),
    };
    println!("{summary}");
    Ok(())
}
