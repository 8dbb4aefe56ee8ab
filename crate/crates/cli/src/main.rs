//! `arbortok` command-line tool.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad input data, missing
//! trees, alignment mismatches), 2 on usage errors (bad flags or settings).

mod io;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use arbortok::builder::build_vocabulary_traced;
use arbortok::metrics::{corpus_entropy, corpus_stats, mean_morpheme_recall, TokenDistribution};
use arbortok::treeio::{
    load_gold, load_trees, load_vocabulary, read_corpus, read_gold, read_merges, read_sentences, read_token_stream,
    write_merges, write_segmentations, write_trees, write_vocabulary,
};
use arbortok::{
    bpe_tokenize, bpe_train, fallback_tree, renyi_efficiency, segmentation_accuracy, tokenize_corpus, tokenize_word,
    Error as CoreError, FallbackStrategy, MergeList, ParseNode, ToolConfig, TokenizerModel, TreeBank, TreeRecord,
    TreeSource,
};
use clap::{Args, Parser, Subcommand};

use crate::io::{open_input, Output};

#[derive(Parser)]
#[command(name = "arbortok", version, about = "Tree-constrained subword tokenizer")]
struct Cli {
    /// Flat `key = value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary from word trees and a corpus.
    BuildVocab(BuildVocabArgs),
    /// Tokenize running text with a vocabulary and word trees.
    Tokenize(TokenizeArgs),
    /// Segment a word list, writing `word<TAB>tokens` lines.
    Segment(SegmentArgs),
    /// Write deterministic fallback trees for every word of a corpus.
    Parse(ParseArgs),
    /// Train the BPE baseline.
    BpeTrain(BpeTrainArgs),
    /// Evaluation metrics, printed as `metric<TAB>value`.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args, Default)]
struct Shared {
    /// Lowercase input text (true|false).
    #[arg(long)]
    lowercase: Option<bool>,
    /// Tree strategy for words without a tree: right|left|balanced|random[:SEED].
    #[arg(long)]
    fallback: Option<FallbackStrategy>,
}

#[derive(Args)]
struct BuildVocabArgs {
    #[arg(long)]
    trees: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    pair_threshold: Option<u64>,
    #[arg(long)]
    prune_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct TokenizeArgs {
    /// Vocabulary file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    trees: PathBuf,
    #[arg(long)]
    text: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Word cache capacity; 0 disables caching.
    #[arg(long)]
    cache: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct SegmentArgs {
    /// Words, one per line; only the first tab-separated column is used, so
    /// gold files work directly.
    #[arg(long)]
    words: PathBuf,
    /// Vocabulary file (tree-based segmentation).
    #[arg(long, requires = "trees", conflicts_with = "merges")]
    model: Option<PathBuf>,
    #[arg(long)]
    trees: Option<PathBuf>,
    /// BPE merge list (baseline segmentation).
    #[arg(long, required_unless_present = "model")]
    merges: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "right")]
    strategy: String,
    /// Seed for the random strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lowercase: Option<bool>,
}

#[derive(Args)]
struct BpeTrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    merges_out: PathBuf,
    #[arg(long)]
    vocab_out: PathBuf,
    #[arg(long)]
    lowercase: Option<bool>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Exact-match accuracy of predicted against gold segmentations.
    SegAccuracy {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Word-averaged recall of gold morphs among tree spans.
    MorphRecall {
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        fallback: Option<FallbackStrategy>,
    },
    /// Rényi efficiency of a tokenized corpus.
    Renyi {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sentence and token counts of a tokenized corpus.
    Stats {
        #[arg(long)]
        tokens: PathBuf,
        /// Vocabulary used to count unknown tokens.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Shannon entropy of a vocabulary's counts.
    Entropy {
        #[arg(long)]
        model: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.into())
    }
}

type CmdResult = Result<(), Failure>;

/// Settings resolved from defaults, the config file and flags, in that order.
struct Settings {
    config: ToolConfig,
    fallback: Option<FallbackStrategy>,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut settings = Settings {
        config: ToolConfig::default(),
        fallback: None,
    };
    let mut threads = cli.threads;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let (config, extra) =
            ToolConfig::parse_flat(&text, &["threads", "fallback"]).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        settings.config = config;
        for (key, value) in extra {
            match key.as_str() {
                "threads" if threads.is_none() => {
                    threads = Some(value.parse().map_err(|_| usage(format!("bad threads value {value:?}")))?)
                }
                "fallback" => settings.fallback = Some(value.parse().map_err(usage)?),
                _ => {}
            }
        }
    }
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(settings)
}

fn apply_shared(settings: &mut Settings, shared: &Shared) {
    if let Some(l) = shared.lowercase {
        settings.config.lowercase = l;
    }
    if shared.fallback.is_some() {
        settings.fallback = shared.fallback;
    }
}

fn validated(config: &ToolConfig) -> Result<(), Failure> {
    config.validate().map_err(|e| usage(e.to_string()))
}

fn print_metric(out: &mut dyn Write, name: &str, value: impl std::fmt::Debug) -> CmdResult {
    writeln!(out, "{name}\t{value:?}")?;
    Ok(())
}

fn load_bank(path: &Path) -> Result<TreeBank, Failure> {
    Ok(TreeBank::from_records(load_trees(path)?)?)
}

fn build_vocab(mut settings: Settings, args: BuildVocabArgs) -> CmdResult {
    apply_shared(&mut settings, &args.shared);
    let config = &mut settings.config;
    if let Some(n) = args.vocab_size {
        config.target_vocab_size = n;
    }
    if let Some(k) = args.pair_threshold {
        config.pair_threshold = k;
    }
    if let Some(r) = args.prune_rate {
        config.prune_rate = r;
    }
    validated(config)?;
    let bank = load_bank(&args.trees)?;
    let corpus = read_corpus(open_input(&args.corpus)?, &args.corpus, config.lowercase)?;
    let mut trees = Vec::with_capacity(corpus.word_freq.len());
    for (word, freq) in corpus.sorted_words() {
        let tree = match bank.get(word) {
            Some(t) => t.clone(),
            None => settings
                .fallback
                .and_then(|s| fallback_tree(word, s))
                .ok_or_else(|| CoreError::MissingTree(word.to_owned()))?,
        };
        trees.push((TreeRecord::new(word, tree)?, freq));
    }
    let mut rounds = 0usize;
    let vocab = build_vocabulary_traced(&trees, config, |_| rounds += 1)?;
    if vocab.len() < config.target_vocab_size {
        eprintln!(
            "warning: initial vocabulary has only {} entries, below the target {}",
            vocab.len(),
            config.target_vocab_size
        );
    }
    let mut out = Output::create(&args.out)?;
    write_vocabulary(&mut out, &vocab)?;
    out.commit()?;
    eprintln!("vocab-size\t{}\nrounds\t{rounds}", vocab.len());
    Ok(())
}

fn tokenize(mut settings: Settings, args: TokenizeArgs) -> CmdResult {
    apply_shared(&mut settings, &args.shared);
    if let Some(c) = args.cache {
        settings.config.cache_capacity = c;
    }
    validated(&settings.config)?;
    let lowercase = settings.config.lowercase;
    let model = TokenizerModel::load(&args.model, settings.config)?;
    let bank = load_bank(&args.trees)?;
    let sentences = read_sentences(open_input(&args.text)?, &args.text, lowercase)?;
    let source = TreeSource {
        bank: &bank,
        fallback: settings.fallback,
    };
    let (stream, stats) = tokenize_corpus(&model, source, &sentences)?;
    let mut out = Output::create(&args.out)?;
    for sentence in &stream {
        writeln!(out, "{}", sentence.join(" "))?;
    }
    let to_stdout = !out.is_stdout();
    out.commit()?;
    let mut report: Box<dyn Write> = if to_stdout {
        Box::new(std::io::stdout())
    } else {
        Box::new(std::io::stderr())
    };
    print_metric(&mut report, "sentences", stats.sentences)?;
    print_metric(&mut report, "total-tokens", stats.total_tokens)?;
    print_metric(&mut report, "avg-tokens", stats.average_tokens())?;
    print_metric(&mut report, "unk-rate", stats.unk_rate())?;
    Ok(())
}

fn segment(mut settings: Settings, args: SegmentArgs) -> CmdResult {
    apply_shared(&mut settings, &args.shared);
    validated(&settings.config)?;
    let mut words = Vec::new();
    for line in std::io::BufRead::lines(open_input(&args.words)?) {
        let line = line.with_context(|| format!("reading {}", args.words.display()))?;
        let word = line.split('\t').next().unwrap_or("").trim();
        if !word.is_empty() {
            let word = if settings.config.lowercase { word.to_lowercase() } else { word.to_owned() };
            words.push(word);
        }
    }
    let mut rows: Vec<(String, Vec<String>)> = Vec::with_capacity(words.len());
    if let Some(merges) = &args.merges {
        let merges = MergeList::new(read_merges(open_input(merges)?, merges)?);
        for w in words {
            let toks = bpe_tokenize(&w, &merges);
            rows.push((w, toks));
        }
    } else {
        let (Some(model_path), Some(trees_path)) = (&args.model, &args.trees) else {
            return Err(usage("--model and --trees are required without --merges"));
        };
        let model = TokenizerModel::load(model_path, settings.config.clone())?;
        let bank = load_bank(trees_path)?;
        for w in words {
            let fallback;
            let tree: &ParseNode = match bank.get(&w) {
                Some(t) => t,
                None => {
                    fallback = settings
                        .fallback
                        .and_then(|s| fallback_tree(&w, s))
                        .ok_or_else(|| CoreError::MissingTree(w.clone()))?;
                    &fallback
                }
            };
            let toks = tokenize_word(&model, &w, tree)?.tokens.clone();
            rows.push((w, toks));
        }
    }
    let mut out = Output::create(&args.out)?;
    write_segmentations(&mut out, rows.iter().map(|(w, t)| (w.as_str(), t.as_slice())))?;
    out.commit()?;
    Ok(())
}

fn parse(settings: Settings, args: ParseArgs) -> CmdResult {
    let strategy: FallbackStrategy = match args.strategy.as_str() {
        "random" => FallbackStrategy::Random(args.seed),
        other => other.parse().map_err(usage)?,
    };
    let lowercase = args.lowercase.unwrap_or(settings.config.lowercase);
    let corpus = read_corpus(open_input(&args.corpus)?, &args.corpus, lowercase)?;
    let words: BTreeSet<&str> = corpus.word_freq.keys().map(String::as_str).collect();
    let records: Vec<TreeRecord> = words
        .into_iter()
        .filter_map(|w| fallback_tree(w, strategy).map(|t| TreeRecord { word: w.to_owned(), tree: t }))
        .collect();
    let mut out = Output::create(&args.out)?;
    write_trees(&mut out, &records)?;
    out.commit()?;
    Ok(())
}

fn bpe(settings: Settings, args: BpeTrainArgs) -> CmdResult {
    let lowercase = args.lowercase.unwrap_or(settings.config.lowercase);
    let size = args.vocab_size.unwrap_or(settings.config.target_vocab_size);
    let corpus = read_corpus(open_input(&args.corpus)?, &args.corpus, lowercase)?;
    let chars: BTreeSet<char> = corpus.word_freq.keys().flat_map(|w| w.chars()).collect();
    if size < chars.len() {
        return Err(CoreError::TargetBelowCharacterFloor {
            target: size,
            characters: chars.len(),
        }
        .into());
    }
    let (merges, vocab) = bpe_train(&corpus, size);
    let mut m_out = Output::create(&args.merges_out)?;
    write_merges(&mut m_out, merges.merges())?;
    let mut v_out = Output::create(&args.vocab_out)?;
    write_vocabulary(&mut v_out, &vocab)?;
    m_out.commit()?;
    v_out.commit()?;
    Ok(())
}

fn eval(settings: Settings, cmd: EvalCommand) -> CmdResult {
    let mut stdout = std::io::stdout();
    match cmd {
        EvalCommand::SegAccuracy { pred, gold } => {
            let preds = read_gold(open_input(&pred)?, &pred)?;
            let golds = load_gold(&gold)?;
            if preds.len() != golds.len() {
                return Err(CoreError::LengthMismatch {
                    left: preds.len(),
                    right: golds.len(),
                }
                .into());
            }
            if let Some((index, (p, g))) = preds.iter().zip(&golds).enumerate().find(|(_, (p, g))| p.word != g.word) {
                return Err(CoreError::AlignmentMismatch {
                    index,
                    left: p.word.clone(),
                    right: g.word.clone(),
                }
                .into());
            }
            let tokens: Vec<Vec<String>> = preds.into_iter().map(|p| p.morphs).collect();
            print_metric(&mut stdout, "seg-accuracy", segmentation_accuracy(&tokens, &golds)?)
        }
        EvalCommand::MorphRecall { trees, gold, fallback } => {
            let bank = load_bank(&trees)?;
            let golds = load_gold(&gold)?;
            let fallback = fallback.or(settings.fallback);
            let mut resolved = Vec::with_capacity(golds.len());
            for g in &golds {
                let tree = match bank.get(&g.word) {
                    Some(t) => t.clone(),
                    None => fallback
                        .and_then(|s| fallback_tree(&g.word, s))
                        .ok_or_else(|| CoreError::MissingTree(g.word.clone()))?,
                };
                resolved.push(tree);
            }
            let recall = mean_morpheme_recall(resolved.iter().zip(&golds))?;
            match recall {
                Some(r) => print_metric(&mut stdout, "morph-recall", r),
                None => {
                    writeln!(stdout, "morph-recall\tn/a")?;
                    Ok(())
                }
            }
        }
        EvalCommand::Renyi { tokens, alpha } => {
            let alpha = alpha.unwrap_or(settings.config.renyi_alpha);
            if alpha.is_nan() || alpha <= 0.0 || alpha == 1.0 || !alpha.is_finite() {
                return Err(usage(CoreError::InvalidAlpha(alpha).to_string()));
            }
            let stream = read_token_stream(open_input(&tokens)?, &tokens)?;
            let dist = TokenDistribution::from_token_stream(&stream);
            print_metric(&mut stdout, "renyi", renyi_efficiency(&dist, alpha)?)
        }
        EvalCommand::Stats { tokens, model } => {
            let stream = read_token_stream(open_input(&tokens)?, &tokens)?;
            let vocab = model.as_deref().map(load_vocabulary).transpose()?;
            let stats = corpus_stats(&stream, vocab.as_ref());
            print_metric(&mut stdout, "sentences", stats.sentences)?;
            print_metric(&mut stdout, "total-tokens", stats.total_tokens)?;
            print_metric(&mut stdout, "avg-tokens", stats.average_tokens())?;
            print_metric(&mut stdout, "unk-rate", stats.unk_rate())
        }
        EvalCommand::Entropy { model } => {
            let vocab = load_vocabulary(&model)?;
            if vocab.total() == 0 {
                return Err(anyhow!("vocabulary has zero total count").into());
            }
            print_metric(&mut stdout, "corpus-entropy", corpus_entropy(&vocab))
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let settings = load_settings(&cli)?;
    match cli.command {
        Command::BuildVocab(a) => build_vocab(settings, a),
        Command::Tokenize(a) => tokenize(settings, a),
        Command::Segment(a) => segment(settings, a),
        Command::Parse(a) => parse(settings, a),
        Command::BpeTrain(a) => bpe(settings, a),
        Command::Eval(c) => eval(settings, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
