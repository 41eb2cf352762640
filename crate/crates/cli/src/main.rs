use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use segtext::corpus::{build_vocabulary, encode, load_corpus, Corpus, Segmentation, Vocabulary, DEFAULT_DELIMITER};
use segtext::features::{extract_events, generate_candidates, CandidateIndex, DEFAULT_MAX_WORD_RANK};
use segtext::induction::{induce, BoundaryModel, InduceOptions, DEFAULT_IIS_ITERS, DEFAULT_IIS_TOL, DEFAULT_REFIT_EVERY};
use segtext::metric::{baseline, evaluate, BaselineKind, MetricReport};
use segtext::relevance::relevance_profile;
use segtext::segmenter::{decide, score_gaps, tune_on_probs, write_probs, SegmenterConfig};
use segtext::synth::{generate, SynthConfig};
use segtext::trigger::{
    read_triggers, select_triggers, train_triggers_iis, write_triggers, SelectOptions, TriggerModel, DEFAULT_MIN_COOCCUR,
    DEFAULT_MIN_WORD_FREQ, DEFAULT_WINDOW,
};
use segtext::trigram::{train_trigram, TrigramModel, DEFAULT_CUTOFF};

#[derive(Parser)]
#[command(name = "segtext", version, about = "Statistical text segmentation")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "SEGTEXT_THREADS")]
    threads: Option<usize>,

    /// Line that separates documents in corpus files
    #[arg(long, global = true, default_value = DEFAULT_DELIMITER)]
    delimiter: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted topics, triggers and cues
    Synth {
        #[arg(long, default_value_t = 200)]
        docs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 18)]
        mean_doc_len: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a frequency-ranked vocabulary
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a Katz backoff trigram model (ARPA output)
    TrainTrigram {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank trigger pairs by mutual information
    SelectTriggers {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = 10_000)]
        max_pairs: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_COOCCUR)]
        min_cooccur: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_WORD_FREQ)]
        min_word_freq: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit trigger weights by iterative scaling
    TrainTriggers {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean sentence relevance by offset from segment starts
    RelevanceProfile {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long, default_value_t = 20)]
        max_offset: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one labeled event per gap with its sentence relevance
    ExtractEvents {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Induce a boundary model
    Induce {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long, default_value_t = 50)]
        num_features: usize,
        #[arg(long, default_value_t = DEFAULT_REFIT_EVERY)]
        refit_every: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_WORD_RANK)]
        max_word_rank: usize,
        #[arg(long, default_value_t = DEFAULT_IIS_ITERS)]
        iis_iters: usize,
        #[arg(long, default_value_t = DEFAULT_IIS_TOL)]
        iis_tol: f64,
        /// Prior boundary probability (default: training boundary rate)
        #[arg(long)]
        q0: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Selection trace (rank, feature, e^lambda)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Choose threshold and minimum separation on heldout text
    Tune {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long)]
        model: PathBuf,
        /// Distance decay (default: 1 / mean heldout document length)
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment a corpus (its document delimiters are ignored)
    Segment {
        #[command(flatten)]
        lm: LmArgs,
        #[arg(long)]
        model: PathBuf,
        /// Decision settings written by `tune`
        #[arg(long, conflicts_with_all = ["alpha", "epsilon"])]
        config: Option<PathBuf>,
        #[arg(long, requires = "epsilon")]
        alpha: Option<f64>,
        #[arg(long, requires = "alpha")]
        epsilon: Option<usize>,
        /// Per-gap boundary probabilities
        #[arg(long)]
        probs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Reference segmentation taken from the corpus delimiters
        #[arg(long)]
        ref_out: Option<PathBuf>,
    },
    /// Compare a hypothesis segmentation with a reference
    Evaluate {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long)]
        mu: f64,
        /// Print TSV instead of a table
        #[arg(long)]
        tsv: bool,
    },
    /// Produce a baseline segmentation sized after a reference
    Baseline {
        #[arg(long)]
        kind: BaselineKind,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Segment length for the even baseline
        #[arg(long, default_value_t = 18)]
        mean_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct LmArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Trigram model in ARPA format
    #[arg(long)]
    lm: PathBuf,
    #[arg(long)]
    triggers: PathBuf,
    /// History window; overrides the trigger file's header
    #[arg(long)]
    window: Option<usize>,
}

struct Loaded {
    vocab: Vocabulary,
    corpus: Corpus,
    trigger: TriggerModel,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn read_corpus(path: &Path, delimiter: &str) -> Result<segtext::corpus::SurfaceCorpus> {
    load_corpus(open(path)?, delimiter).with_context(|| format!("reading corpus {}", path.display()))
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read(open(path)?).with_context(|| format!("reading vocabulary {}", path.display()))
}

fn read_segmentation(path: &Path) -> Result<Segmentation> {
    Segmentation::read(open(path)?).with_context(|| format!("reading segmentation {}", path.display()))
}

fn load(args: &LmArgs, delimiter: &str) -> Result<Loaded> {
    let vocab = read_vocab(&args.vocab)?;
    let corpus = encode(&read_corpus(&args.corpus, delimiter)?, &vocab);
    let lm = TrigramModel::read_arpa(open(&args.lm)?, &vocab).with_context(|| format!("reading {}", args.lm.display()))?;
    let (pairs, window) =
        read_triggers(open(&args.triggers)?, &vocab).with_context(|| format!("reading {}", args.triggers.display()))?;
    let window = args.window.or(window).unwrap_or(DEFAULT_WINDOW);
    let trigger = TriggerModel::new(Arc::new(lm), pairs, window)?;
    Ok(Loaded { vocab, corpus, trigger })
}

fn save(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> segtext::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_config(path: &Path) -> Result<SegmenterConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with("alpha"))
        .with_context(|| format!("{} holds no settings", path.display()))?;
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 2 {
        bail!("{}: expected alpha<TAB>epsilon", path.display());
    }
    let alpha: f64 = fields[0].parse().context("bad alpha")?;
    let epsilon: usize = fields[1].parse().context("bad epsilon")?;
    Ok(SegmenterConfig::new(alpha, epsilon)?)
}

fn run(cli: Cli) -> Result<()> {
    let delim = cli.delimiter.as_str();
    match cli.command {
        Command::Synth { docs, seed, mean_doc_len, out } => {
            let cfg = SynthConfig { docs, seed, mean_doc_len, ..Default::default() };
            let (corpus, _) = generate(&cfg)?;
            save(&out, &render(|b| corpus.write(b, delim))?)?;
        }
        Command::BuildVocab { corpus, size, out } => {
            let surface = read_corpus(&corpus, delim)?;
            let vocab = build_vocabulary(surface.tokens(), size)?;
            save(&out, &render(|b| vocab.write(b))?)?;
        }
        Command::TrainTrigram { corpus, vocab, cutoff, out } => {
            let vocab = read_vocab(&vocab)?;
            let corpus = encode(&read_corpus(&corpus, delim)?, &vocab);
            let model = train_trigram(&corpus, &vocab, cutoff)?;
            save(&out, &render(|b| model.write_arpa(b))?)?;
        }
        Command::SelectTriggers { corpus, vocab, window, max_pairs, min_cooccur, min_word_freq, out } => {
            if window == 0 {
                bail!("--window must be positive");
            }
            let vocab = read_vocab(&vocab)?;
            let corpus = encode(&read_corpus(&corpus, delim)?, &vocab);
            let opts = SelectOptions { window_n: window, max_pairs, min_cooccur, min_word_freq };
            let pairs = select_triggers(&corpus, &vocab, &opts);
            save(&out, &render(|b| write_triggers(&pairs, &vocab, window, b))?)?;
        }
        Command::TrainTriggers { lm, iterations, out } => {
            let l = load(&lm, delim)?;
            let fit = train_triggers_iis(&l.trigger, &l.corpus, iterations)?;
            for (i, ll) in fit.log_likelihood.iter().enumerate() {
                eprintln!("iteration {i}: mean log-likelihood {ll:.6}");
            }
            let m = &fit.model;
            save(&out, &render(|b| write_triggers(m.pairs(), &l.vocab, m.window_n(), b))?)?;
        }
        Command::RelevanceProfile { lm, max_offset, out } => {
            let l = load(&lm, delim)?;
            let profile = relevance_profile(&l.trigger, &l.corpus, max_offset)?;
            save(&out, &render(|b| profile.write_tsv(b))?)?;
        }
        Command::ExtractEvents { lm, out } => {
            let l = load(&lm, delim)?;
            let events = extract_events(&l.corpus, &l.trigger)?;
            let mut buf = Vec::new();
            writeln!(buf, "gap\tlabel\trelevance")?;
            let relevance = events.gaps().relevance();
            for (e, &label) in events.labels().iter().enumerate() {
                writeln!(buf, "{}\t{}\t{}", e + 1, if label { "YES" } else { "NO" }, relevance[e + 1])?;
            }
            save(&out, &buf)?;
        }
        Command::Induce { lm, num_features, refit_every, max_word_rank, iis_iters, iis_tol, q0, out, trace } => {
            let l = load(&lm, delim)?;
            let events = extract_events(&l.corpus, &l.trigger)?;
            let candidates = generate_candidates(&l.vocab, max_word_rank.min(l.vocab.len() - Vocabulary::NUM_RESERVED))?;
            let index = CandidateIndex::build(&candidates, events.gaps());
            let opts = InduceOptions { num_features, refit_every, iis_iters, iis_tol, q0 };
            let result = induce(&events, &candidates, &index, &opts)?;
            let model_bytes = render(|b| result.model.write(&l.vocab, b))?;
            let trace_bytes = render(|b| result.write_trace(&l.vocab, b))?;
            save(&out, &model_bytes)?;
            if let Some(path) = trace {
                save(&path, &trace_bytes)?;
            }
            eprintln!(
                "selected {} features; log-likelihood {:.6} -> {:.6}",
                result.selections.len(),
                result.prior_log_likelihood,
                result.selections.last().map_or(result.prior_log_likelihood, |s| s.log_likelihood)
            );
        }
        Command::Tune { lm, model, mu, out } => {
            let l = load(&lm, delim)?;
            let model = BoundaryModel::read(open(&model)?, &l.vocab)?;
            let reference = l.corpus.reference_segmentation();
            let mu = mu.unwrap_or(reference.doc_count() as f64 / reference.n_sentences() as f64);
            let probs = score_gaps(&model, &l.trigger, l.corpus.sentences())?;
            let t = tune_on_probs(&probs, &reference, mu)?;
            let text = format!("alpha\tepsilon\tp_mu\n{}\t{}\t{}\n", t.config.alpha, t.config.epsilon, t.p_mu);
            save(&out, text.as_bytes())?;
            print!("{text}");
        }
        Command::Segment { lm, model, config, alpha, epsilon, probs, out, ref_out } => {
            let config = match (config, alpha, epsilon) {
                (Some(path), _, _) => read_config(&path)?,
                (None, Some(a), Some(e)) => SegmenterConfig::new(a, e)?,
                _ => bail!("give either --config or both --alpha and --epsilon"),
            };
            let l = load(&lm, delim)?;
            let model = BoundaryModel::read(open(&model)?, &l.vocab)?;
            let p = score_gaps(&model, &l.trigger, l.corpus.sentences())?;
            let hyp = decide(&p, &config)?;
            let hyp_bytes = render(|b| hyp.write(b))?;
            let prob_bytes = render(|b| write_probs(&p, b))?;
            let ref_bytes = render(|b| l.corpus.reference_segmentation().write(b))?;
            save(&out, &hyp_bytes)?;
            if let Some(path) = probs {
                save(&path, &prob_bytes)?;
            }
            if let Some(path) = ref_out {
                save(&path, &ref_bytes)?;
            }
        }
        Command::Evaluate { reference, hyp, mu, tsv } => {
            let r = read_segmentation(&reference)?;
            let h = read_segmentation(&hyp)?;
            let report = evaluate(&r, &h, mu)?;
            let rows = [("hypothesis", &report)];
            if tsv {
                print!("{}", MetricReport::tsv(&rows));
            } else {
                print!("{}", MetricReport::table(&rows));
            }
        }
        Command::Baseline { kind, reference, mean_len, seed, out } => {
            let r = read_segmentation(&reference)?;
            let b = baseline(kind, r.n_sentences(), r.doc_count(), mean_len, seed)?;
            save(&out, &render(|buf| b.write(buf))?)?;
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
