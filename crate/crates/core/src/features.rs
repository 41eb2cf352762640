//! Candidate boundary features: vocabulary templates over the sentences and
//! words around a gap, plus bins over the relevance of the sentences that
//! follow it.

use std::fmt;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::relevance::sentence_relevances;
use crate::trigger::TriggerModel;

/// Sentences visible on each side of a gap.
pub const CONTEXT_SENTENCES: usize = 5;
/// Words visible on each side of a gap.
pub const CONTEXT_WORDS: usize = 5;
pub const SENTENCE_SPANS: [u8; 4] = [1, 2, 3, 5];
pub const WORD_SPANS: [u8; 2] = [1, 5];
pub const RELEVANCE_EDGES: [f64; 8] = [f64::NEG_INFINITY, -0.5, -0.1, 0.0, 0.05, 0.1, 0.5, f64::INFINITY];
pub const RELEVANCE_SPANS: [u8; 2] = [1, 2];
pub const DEFAULT_MAX_WORD_RANK: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordTemplate {
    /// The word appears in the next `k` sentences.
    NextSentences(u8),
    /// The word appears in the previous `k` sentences.
    PrevSentences(u8),
    /// In the previous `k` sentences but not the next `k`.
    PrevNotNext(u8),
    /// In the next `k` sentences but not the previous `k`.
    NextNotPrev(u8),
    /// Among the next `k` words (crossing sentence ends).
    NextWords(u8),
    /// Among the previous `k` words (crossing sentence ends).
    PrevWords(u8),
    /// The first word of the sentence before the gap.
    BeginsPrevSentence,
}

impl WordTemplate {
    /// Every template instantiated per word, in candidate order.
    pub fn all() -> Vec<WordTemplate> {
        let mut out = Vec::with_capacity(15);
        out.extend(SENTENCE_SPANS.iter().map(|&k| WordTemplate::NextSentences(k)));
        out.extend(SENTENCE_SPANS.iter().map(|&k| WordTemplate::PrevSentences(k)));
        out.push(WordTemplate::PrevNotNext(5));
        out.push(WordTemplate::NextNotPrev(5));
        out.extend(WORD_SPANS.iter().map(|&k| WordTemplate::NextWords(k)));
        out.extend(WORD_SPANS.iter().map(|&k| WordTemplate::PrevWords(k)));
        out.push(WordTemplate::BeginsPrevSentence);
        out
    }

    fn kind(&self) -> &'static str {
        match self {
            WordTemplate::NextSentences(_) => "next_sentences",
            WordTemplate::PrevSentences(_) => "prev_sentences",
            WordTemplate::PrevNotNext(_) => "prev_not_next",
            WordTemplate::NextNotPrev(_) => "next_not_prev",
            WordTemplate::NextWords(_) => "next_words",
            WordTemplate::PrevWords(_) => "prev_words",
            WordTemplate::BeginsPrevSentence => "begins_prev_sentence",
        }
    }

    fn span(&self) -> u8 {
        match *self {
            WordTemplate::NextSentences(k)
            | WordTemplate::PrevSentences(k)
            | WordTemplate::PrevNotNext(k)
            | WordTemplate::NextNotPrev(k)
            | WordTemplate::NextWords(k)
            | WordTemplate::PrevWords(k) => k,
            WordTemplate::BeginsPrevSentence => 1,
        }
    }

    fn from_parts(kind: &str, k: u8) -> Option<WordTemplate> {
        let t = match kind {
            "next_sentences" => WordTemplate::NextSentences(k),
            "prev_sentences" => WordTemplate::PrevSentences(k),
            "prev_not_next" => WordTemplate::PrevNotNext(k),
            "next_not_prev" => WordTemplate::NextNotPrev(k),
            "next_words" => WordTemplate::NextWords(k),
            "prev_words" => WordTemplate::PrevWords(k),
            "begins_prev_sentence" => WordTemplate::BeginsPrevSentence,
            _ => return None,
        };
        WordTemplate::all().contains(&t).then_some(t)
    }

    /// Whether the template holds given the word's nearest distances from
    /// the gap (in sentences and words; 0 means absent).
    fn holds(&self, d: &Distances) -> bool {
        let within = |dist: u8, k: u8| dist != 0 && dist <= k;
        match *self {
            WordTemplate::NextSentences(k) => within(d.next_sentence, k),
            WordTemplate::PrevSentences(k) => within(d.prev_sentence, k),
            WordTemplate::PrevNotNext(k) => within(d.prev_sentence, k) && !within(d.next_sentence, k),
            WordTemplate::NextNotPrev(k) => within(d.next_sentence, k) && !within(d.prev_sentence, k),
            WordTemplate::NextWords(k) => within(d.next_word, k),
            WordTemplate::PrevWords(k) => within(d.prev_word, k),
            WordTemplate::BeginsPrevSentence => d.begins_prev,
        }
    }
}

/// A half-open relevance interval `(lo, hi]` over the mean relevance of the
/// `span` sentences after the gap. Bounds index [`RELEVANCE_EDGES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelevanceBin {
    pub lo: u8,
    pub hi: u8,
    pub span: u8,
}

impl RelevanceBin {
    pub fn lo_value(&self) -> f64 {
        RELEVANCE_EDGES[self.lo as usize]
    }

    pub fn hi_value(&self) -> f64 {
        RELEVANCE_EDGES[self.hi as usize]
    }

    pub fn contains(&self, r: f64) -> bool {
        self.lo_value() < r && r <= self.hi_value()
    }

    /// Every interval between two edges except the whole line, for each span.
    pub fn all() -> Vec<RelevanceBin> {
        let last = RELEVANCE_EDGES.len() as u8 - 1;
        let mut out = Vec::new();
        for &span in &RELEVANCE_SPANS {
            for lo in 0..last {
                for hi in lo + 1..=last {
                    if lo == 0 && hi == last {
                        continue;
                    }
                    out.push(RelevanceBin { lo, hi, span });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureTemplate {
    Word { template: WordTemplate, word: TokenId },
    Relevance(RelevanceBin),
}

impl FeatureTemplate {
    pub fn word(template: WordTemplate, word: TokenId) -> Self {
        FeatureTemplate::Word { template, word }
    }

    /// Human-readable name, e.g. `incorporated (next_sentences 1)`.
    pub fn describe(&self, vocab: &Vocabulary) -> String {
        match *self {
            FeatureTemplate::Word { template, word } => {
                format!("{} ({} {})", vocab.word(word).unwrap_or("?"), template.kind(), template.span())
            }
            FeatureTemplate::Relevance(bin) => {
                format!("{} < R <= {} ({} sentences)", bin.lo_value(), bin.hi_value(), bin.span)
            }
        }
    }
}

/// Nearest positions of a word around a gap; 0 means "not within the window".
#[derive(Debug, Clone, Copy, Default)]
struct Distances {
    next_sentence: u8,
    prev_sentence: u8,
    next_word: u8,
    prev_word: u8,
    begins_prev: bool,
}

/// The text around gap `g`, which separates sentence `g - 1` from sentence
/// `g`. Windows stop at the corpus edges.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryContext<'a> {
    gap: usize,
    sentences: &'a [Vec<TokenId>],
    relevance: &'a [f64],
}

impl<'a> BoundaryContext<'a> {
    pub fn gap(&self) -> usize {
        self.gap
    }

    /// Up to `k` sentences after the gap, nearest first.
    pub fn next_sentences(&self, k: usize) -> &'a [Vec<TokenId>] {
        let end = (self.gap + k).min(self.sentences.len());
        &self.sentences[self.gap..end]
    }

    /// Up to `k` sentences before the gap, in text order.
    pub fn prev_sentences(&self, k: usize) -> &'a [Vec<TokenId>] {
        &self.sentences[self.gap.saturating_sub(k)..self.gap]
    }

    /// Whether the `CONTEXT_SENTENCES` window before the gap is cut short.
    pub fn prev_truncated(&self) -> bool {
        self.gap < CONTEXT_SENTENCES
    }

    /// Whether the `CONTEXT_SENTENCES` window after the gap is cut short.
    pub fn next_truncated(&self) -> bool {
        self.gap + CONTEXT_SENTENCES > self.sentences.len()
    }

    /// Up to `k` words after the gap, nearest first.
    pub fn next_words(&self, k: usize) -> impl Iterator<Item = TokenId> + 'a {
        self.sentences[self.gap..].iter().flatten().copied().take(k)
    }

    /// Up to `k` words before the gap, nearest first.
    pub fn prev_words(&self, k: usize) -> impl Iterator<Item = TokenId> + 'a {
        self.sentences[..self.gap].iter().rev().flat_map(|s| s.iter().rev()).copied().take(k)
    }

    /// Mean relevance of up to `span` sentences after the gap.
    pub fn next_relevance(&self, span: usize) -> f64 {
        let end = (self.gap + span).min(self.relevance.len());
        let window = &self.relevance[self.gap..end];
        window.iter().sum::<f64>() / window.len() as f64
    }

    fn distances(&self) -> FxHashMap<TokenId, Distances> {
        let mut map: FxHashMap<TokenId, Distances> = FxHashMap::default();
        for (i, s) in self.next_sentences(CONTEXT_SENTENCES).iter().enumerate().rev() {
            for &w in s {
                map.entry(w).or_default().next_sentence = i as u8 + 1;
            }
        }
        for (i, s) in self.prev_sentences(CONTEXT_SENTENCES).iter().rev().enumerate().rev() {
            for &w in s {
                map.entry(w).or_default().prev_sentence = i as u8 + 1;
            }
        }
        let next: Vec<TokenId> = self.next_words(CONTEXT_WORDS).collect();
        for (i, &w) in next.iter().enumerate().rev() {
            map.entry(w).or_default().next_word = i as u8 + 1;
        }
        let prev: Vec<TokenId> = self.prev_words(CONTEXT_WORDS).collect();
        for (i, &w) in prev.iter().enumerate().rev() {
            map.entry(w).or_default().prev_word = i as u8 + 1;
        }
        if let Some(&w) = self.prev_sentences(1).first().and_then(|s| s.first()) {
            map.entry(w).or_default().begins_prev = true;
        }
        map
    }
}

/// Whether `f` fires on `ctx`.
pub fn evaluate_feature(f: &FeatureTemplate, ctx: &BoundaryContext<'_>) -> bool {
    match *f {
        FeatureTemplate::Word { template, word } => {
            let in_next = |k: u8| ctx.next_sentences(k as usize).iter().any(|s| s.contains(&word));
            let in_prev = |k: u8| ctx.prev_sentences(k as usize).iter().any(|s| s.contains(&word));
            match template {
                WordTemplate::NextSentences(k) => in_next(k),
                WordTemplate::PrevSentences(k) => in_prev(k),
                WordTemplate::PrevNotNext(k) => in_prev(k) && !in_next(k),
                WordTemplate::NextNotPrev(k) => in_next(k) && !in_prev(k),
                WordTemplate::NextWords(k) => ctx.next_words(k as usize).any(|w| w == word),
                WordTemplate::PrevWords(k) => ctx.prev_words(k as usize).any(|w| w == word),
                WordTemplate::BeginsPrevSentence => {
                    ctx.prev_sentences(1).first().and_then(|s| s.first()) == Some(&word)
                }
            }
        }
        FeatureTemplate::Relevance(bin) => bin.contains(ctx.next_relevance(bin.span as usize)),
    }
}

/// Word templates over the `max_word_rank` most frequent non-reserved words
/// (rank order, templates inner), followed by every relevance bin.
pub fn generate_candidates(vocab: &Vocabulary, max_word_rank: usize) -> Result<Vec<FeatureTemplate>> {
    let available = vocab.len() - Vocabulary::NUM_RESERVED;
    if max_word_rank > available {
        return Err(Error::invalid(format!(
            "max_word_rank {max_word_rank} exceeds the {available} vocabulary words"
        )));
    }
    let templates = WordTemplate::all();
    let mut out = Vec::with_capacity(max_word_rank * templates.len() + 64);
    for r in 0..max_word_rank {
        let word = (Vocabulary::NUM_RESERVED + r) as TokenId;
        out.extend(templates.iter().map(|&t| FeatureTemplate::word(t, word)));
    }
    out.extend(RelevanceBin::all().into_iter().map(FeatureTemplate::Relevance));
    Ok(out)
}

/// The gaps of a sentence sequence together with sentence relevances.
#[derive(Debug, Clone)]
pub struct Gaps {
    sentences: Vec<Vec<TokenId>>,
    relevance: Vec<f64>,
}

impl Gaps {
    pub fn new(sentences: Vec<Vec<TokenId>>, relevance: Vec<f64>) -> Result<Self> {
        if sentences.len() < 2 {
            return Err(Error::invalid("need at least two sentences"));
        }
        if relevance.len() != sentences.len() {
            return Err(Error::invalid("one relevance score per sentence required"));
        }
        Ok(Gaps { sentences, relevance })
    }

    /// Relevance is computed with a cache that runs across document
    /// boundaries, as it would on unsegmented text.
    pub fn from_corpus(corpus: &Corpus, trig: &TriggerModel) -> Result<Self> {
        let relevance = sentence_relevances(trig, corpus, false)?;
        Gaps::new(corpus.sentences().to_vec(), relevance)
    }

    /// Number of gaps, `n_sentences - 1`.
    pub fn len(&self) -> usize {
        self.sentences.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn relevance(&self) -> &[f64] {
        &self.relevance
    }

    /// Context of the `e`-th gap (gap index `e + 1`).
    pub fn context(&self, e: usize) -> BoundaryContext<'_> {
        assert!(e < self.len(), "gap {} out of range", e + 1);
        BoundaryContext {
            gap: e + 1,
            sentences: &self.sentences,
            relevance: &self.relevance,
        }
    }

    pub fn contexts(&self) -> impl Iterator<Item = BoundaryContext<'_>> {
        (0..self.len()).map(|e| self.context(e))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainingEvent<'a> {
    pub context: BoundaryContext<'a>,
    pub label: bool,
}

/// One labeled event per gap of a segmented corpus.
#[derive(Debug, Clone)]
pub struct EventSet {
    gaps: Gaps,
    labels: Vec<bool>,
}

impl EventSet {
    pub fn new(gaps: Gaps, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != gaps.len() {
            return Err(Error::invalid("one label per gap required"));
        }
        Ok(EventSet { gaps, labels })
    }

    pub fn gaps(&self) -> &Gaps {
        &self.gaps
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn yes_rate(&self) -> f64 {
        self.labels.iter().filter(|&&y| y).count() as f64 / self.len() as f64
    }

    pub fn events(&self) -> impl Iterator<Item = TrainingEvent<'_>> {
        self.gaps
            .contexts()
            .zip(&self.labels)
            .map(|(context, &label)| TrainingEvent { context, label })
    }
}

/// Labeled events for every gap of `corpus`; YES exactly at document
/// boundaries.
pub fn extract_events(corpus: &Corpus, trig: &TriggerModel) -> Result<EventSet> {
    if corpus.n_sentences() < 2 {
        return Err(Error::invalid("need at least two sentences to extract events"));
    }
    let gaps = Gaps::from_corpus(corpus, trig)?;
    let reference = corpus.reference_segmentation();
    let labels = (1..corpus.n_sentences()).map(|g| reference.is_boundary(g)).collect();
    EventSet::new(gaps, labels)
}

/// For every candidate, the sorted list of gap positions (0-based event
/// indices) where it fires.
#[derive(Debug, Clone)]
pub struct CandidateIndex {
    firing: Vec<Vec<u32>>,
}

impl CandidateIndex {
    pub fn build(candidates: &[FeatureTemplate], gaps: &Gaps) -> Self {
        let mut by_word: FxHashMap<TokenId, Vec<(WordTemplate, u32)>> = FxHashMap::default();
        let mut bins = Vec::new();
        for (i, c) in candidates.iter().enumerate() {
            match *c {
                FeatureTemplate::Word { template, word } => by_word.entry(word).or_default().push((template, i as u32)),
                FeatureTemplate::Relevance(bin) => bins.push((bin, i as u32)),
            }
        }
        let per_gap: Vec<Vec<u32>> = (0..gaps.len())
            .into_par_iter()
            .map(|e| {
                let ctx = gaps.context(e);
                let mut fired = Vec::new();
                for (w, d) in ctx.distances() {
                    if let Some(list) = by_word.get(&w) {
                        fired.extend(list.iter().filter(|(t, _)| t.holds(&d)).map(|&(_, i)| i));
                    }
                }
                for &(bin, i) in &bins {
                    if bin.contains(ctx.next_relevance(bin.span as usize)) {
                        fired.push(i);
                    }
                }
                fired
            })
            .collect();
        let mut firing = vec![Vec::new(); candidates.len()];
        for (e, fired) in per_gap.into_iter().enumerate() {
            for i in fired {
                firing[i as usize].push(e as u32);
            }
        }
        CandidateIndex { firing }
    }

    pub fn len(&self) -> usize {
        self.firing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firing.is_empty()
    }

    pub fn firing(&self, candidate: usize) -> &[u32] {
        &self.firing[candidate]
    }
}

fn format_edge(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

fn parse_edge(s: &str) -> Option<u8> {
    let x: f64 = s.trim().parse().ok()?;
    RELEVANCE_EDGES.iter().position(|&e| e == x).map(|i| i as u8)
}

/// Formats one feature line: `kind<TAB>word-or-bin<TAB>k<TAB>lambda`.
pub struct FeatureLine<'a> {
    pub feature: &'a FeatureTemplate,
    pub lambda: f64,
    pub vocab: &'a Vocabulary,
}

impl fmt::Display for FeatureLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self.feature {
            FeatureTemplate::Word { template, word } => write!(
                f,
                "{}\t{}\t{}\t{}",
                template.kind(),
                self.vocab.word(word).unwrap_or("?"),
                template.span(),
                self.lambda
            ),
            FeatureTemplate::Relevance(bin) => write!(
                f,
                "relevance_bin\t{},{}\t{}\t{}",
                format_edge(bin.lo_value()),
                format_edge(bin.hi_value()),
                bin.span,
                self.lambda
            ),
        }
    }
}

pub fn write_features<W: Write>(features: &[(FeatureTemplate, f64)], vocab: &Vocabulary, mut out: W) -> Result<()> {
    for (feature, lambda) in features {
        writeln!(out, "{}", FeatureLine { feature, lambda: *lambda, vocab })?;
    }
    Ok(())
}

/// Parses one feature line; `line_no` is used in error messages.
pub fn parse_feature_line(line: &str, vocab: &Vocabulary, line_no: usize) -> Result<(FeatureTemplate, f64)> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(Error::format(line_no, "expected kind, word-or-bin, k and lambda"));
    }
    let k: u8 = fields[2]
        .parse()
        .map_err(|_| Error::format(line_no, format!("bad span {:?}", fields[2])))?;
    let lambda: f64 = fields[3]
        .parse()
        .ok()
        .filter(|l: &f64| l.is_finite())
        .ok_or_else(|| Error::format(line_no, format!("bad lambda {:?}", fields[3])))?;
    let feature = if fields[0] == "relevance_bin" {
        let (lo, hi) = fields[1]
            .split_once(',')
            .and_then(|(lo, hi)| Some((parse_edge(lo)?, parse_edge(hi)?)))
            .ok_or_else(|| Error::format(line_no, format!("bad relevance bin {:?}", fields[1])))?;
        let bin = RelevanceBin { lo, hi, span: k };
        if !RelevanceBin::all().contains(&bin) {
            return Err(Error::format(line_no, format!("unknown relevance bin {:?}", fields[1])));
        }
        FeatureTemplate::Relevance(bin)
    } else {
        let template = WordTemplate::from_parts(fields[0], k)
            .ok_or_else(|| Error::format(line_no, format!("unknown template {} {k}", fields[0])))?;
        let word = vocab
            .get(fields[1])
            .ok_or_else(|| Error::format(line_no, format!("word {:?} not in vocabulary", fields[1])))?;
        FeatureTemplate::word(template, word)
    };
    Ok((feature, lambda))
}

pub fn read_features<R: BufRead>(input: R, vocab: &Vocabulary) -> Result<Vec<(FeatureTemplate, f64)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_feature_line(&line, vocab, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, encode, load_corpus};

    fn setup(text: &str) -> (Vocabulary, Gaps) {
        let surface = load_corpus(text.as_bytes(), "===").unwrap();
        let vocab = build_vocabulary(surface.tokens(), 1000).unwrap();
        let corpus = encode(&surface, &vocab);
        let n = corpus.n_sentences();
        let relevance = (0..n).map(|i| (i as f64 - 2.0) * 0.1).collect();
        (vocab, Gaps::new(corpus.sentences().to_vec(), relevance).unwrap())
    }

    const TEXT: &str = "the market fell\nsaid the chairman\n===\nincorporated company said\nshares rose\nsee the report\n";

    #[test]
    fn template_inventory() {
        assert_eq!(WordTemplate::all().len(), 15);
        assert_eq!(RelevanceBin::all().len(), 54);
        let (vocab, _) = setup(TEXT);
        let c = generate_candidates(&vocab, 10).unwrap();
        assert_eq!(c.len(), 10 * 15 + 54);
        assert_eq!(c[0], FeatureTemplate::word(WordTemplate::NextSentences(1), 3));
        assert!(generate_candidates(&vocab, vocab.len()).is_err());
    }

    #[test]
    fn worked_examples() {
        let (vocab, gaps) = setup(TEXT);
        let inc = vocab.id("incorporated");
        let said = vocab.id("said");
        let ctx = gaps.context(1); // gap 2, before "incorporated company said"
        assert!(evaluate_feature(&FeatureTemplate::word(WordTemplate::NextSentences(1), inc), &ctx));
        assert!(evaluate_feature(&FeatureTemplate::word(WordTemplate::NextWords(1), inc), &ctx));
        assert!(!evaluate_feature(&FeatureTemplate::word(WordTemplate::PrevNotNext(5), said), &ctx));
        assert!(evaluate_feature(&FeatureTemplate::word(WordTemplate::BeginsPrevSentence, said), &ctx));
        // gap 1: one sentence of history
        let first = gaps.context(0);
        assert!(first.prev_truncated());
        assert_eq!(first.prev_sentences(5).len(), 1);
        assert!(evaluate_feature(&FeatureTemplate::word(WordTemplate::PrevWords(5), vocab.id("market")), &first));
        assert!(!evaluate_feature(&FeatureTemplate::word(WordTemplate::PrevWords(1), vocab.id("market")), &first));
    }

    #[test]
    fn relevance_bins_use_following_sentences() {
        let (_, gaps) = setup(TEXT);
        // relevance = [-0.2, -0.1, 0, 0.1, 0.2]
        let ctx = gaps.context(1);
        assert_eq!(ctx.next_relevance(1), 0.0);
        assert!((ctx.next_relevance(2) - 0.05).abs() < 1e-15);
        let le_zero = FeatureTemplate::Relevance(RelevanceBin { lo: 0, hi: 3, span: 1 });
        assert!(evaluate_feature(&le_zero, &ctx));
        // the last gap sees a truncated two-sentence window
        assert!((gaps.context(3).next_relevance(2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn index_matches_direct_evaluation() {
        let (vocab, gaps) = setup(TEXT);
        let candidates = generate_candidates(&vocab, vocab.len() - 3).unwrap();
        let index = CandidateIndex::build(&candidates, &gaps);
        for (i, c) in candidates.iter().enumerate() {
            let direct: Vec<u32> = (0..gaps.len())
                .filter(|&e| evaluate_feature(c, &gaps.context(e)))
                .map(|e| e as u32)
                .collect();
            assert_eq!(index.firing(i), direct.as_slice(), "{}", c.describe(&vocab));
        }
    }

    #[test]
    fn feature_file_round_trip() {
        let (vocab, _) = setup(TEXT);
        let features = vec![
            (FeatureTemplate::word(WordTemplate::NextSentences(1), vocab.id("incorporated")), 1.5),
            (FeatureTemplate::Relevance(RelevanceBin { lo: 1, hi: 3, span: 2 }), -0.25),
            (FeatureTemplate::Relevance(RelevanceBin { lo: 3, hi: 7, span: 1 }), 0.125),
        ];
        let mut buf = Vec::new();
        write_features(&features, &vocab, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("next_sentences\tincorporated\t1\t1.5\nrelevance_bin\t-0.5,0\t2\t-0.25\n"));
        assert_eq!(read_features(&buf[..], &vocab).unwrap(), features);
        assert!(read_features("next_sentences\tzzz\t1\t0\n".as_bytes(), &vocab).is_err());
        assert!(read_features("next_sentences\tthe\t4\t0\n".as_bytes(), &vocab).is_err());
    }

    #[test]
    fn labels_follow_documents() {
        let docs: Vec<Vec<Vec<TokenId>>> = vec![vec![vec![3]; 5], vec![vec![4]; 5]];
        let corpus = Corpus::from_documents(docs).unwrap();
        let vocab = Vocabulary::from_ranked(["a", "b"]);
        let prior = std::sync::Arc::new(
            crate::trigram::train_trigram(&corpus, &vocab, crate::trigram::DEFAULT_CUTOFF).unwrap(),
        );
        let trig = TriggerModel::new(prior, Vec::new(), 10).unwrap();
        let events = extract_events(&corpus, &trig).unwrap();
        assert_eq!(events.len(), 9);
        let yes: Vec<usize> = events.labels().iter().enumerate().filter(|p| *p.1).map(|p| p.0 + 1).collect();
        assert_eq!(yes, vec![5]);
        assert!((events.yes_rate() - 1.0 / 9.0).abs() < 1e-15);
        let single = Corpus::from_documents(vec![vec![vec![3]]]).unwrap();
        assert!(extract_events(&single, &trig).is_err());
    }
}
