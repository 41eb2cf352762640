//! Static trigram language model with Katz backoff.
//!
//! Seen n-grams with counts `1..=k` are discounted with Good-Turing ratios and
//! the freed mass is handed to the next lower order through per-context
//! backoff weights. Unigrams back off to the uniform distribution, so every
//! predictable token has positive probability. Sentences are padded with two
//! sentence-begin tokens and the sentence-end token is predicted.

use std::io::{BufRead, Write};

use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF: u32 = 5;
const FALLBACK_DISCOUNT: f64 = 0.5;
const ARPA_ZERO: f64 = -99.0;

/// Raw n-gram counts over predicted positions.
#[derive(Debug, Clone, Default)]
pub struct NgramCounts {
    pub unigrams: Vec<u64>,
    pub bigrams: FxHashMap<(TokenId, TokenId), u64>,
    pub trigrams: FxHashMap<(TokenId, TokenId, TokenId), u64>,
}

impl NgramCounts {
    pub fn collect(corpus: &Corpus, vocab_size: usize) -> Self {
        let mut counts = NgramCounts {
            unigrams: vec![0; vocab_size],
            ..Default::default()
        };
        for sentence in corpus.sentences() {
            for_each_event(sentence, |u, v, w| {
                counts.unigrams[w as usize] += 1;
                *counts.bigrams.entry((v, w)).or_default() += 1;
                *counts.trigrams.entry((u, v, w)).or_default() += 1;
            });
        }
        counts
    }
}

/// Calls `f(w_-2, w_-1, w)` for every predicted position of `sentence`,
/// including the final sentence-end token.
pub fn for_each_event(sentence: &[TokenId], mut f: impl FnMut(TokenId, TokenId, TokenId)) {
    let mut u = Vocabulary::SENT_BEGIN_ID;
    let mut v = Vocabulary::SENT_BEGIN_ID;
    for &w in sentence.iter().chain(std::iter::once(&Vocabulary::SENT_END_ID)) {
        f(u, v, w);
        u = v;
        v = w;
    }
}

/// Good-Turing discount ratios for counts `1..=cutoff`.
#[derive(Debug, Clone)]
struct Discounts {
    ratios: Vec<f64>,
}

impl Discounts {
    fn from_counts<I: IntoIterator<Item = u64>>(counts: I, cutoff: u32) -> Self {
        let k = cutoff as usize;
        let mut n = vec![0u64; k + 2];
        for c in counts {
            if c >= 1 && (c as usize) <= k + 1 {
                n[c as usize] += 1;
            }
        }
        let common = if n[1] > 0 {
            (k as f64 + 1.0) * n[k + 1] as f64 / n[1] as f64
        } else {
            f64::NAN
        };
        let mut ratios = vec![1.0; k + 1];
        for r in 1..=k {
            let rf = r as f64;
            let d = if n[r] > 0 {
                let r_star = (rf + 1.0) * n[r + 1] as f64 / n[r] as f64;
                (r_star / rf - common) / (1.0 - common)
            } else {
                f64::NAN
            };
            ratios[r] = if d.is_finite() && d > 0.0 && d < 1.0 {
                d
            } else {
                (rf - FALLBACK_DISCOUNT) / rf
            };
        }
        Discounts { ratios }
    }

    fn ratio(&self, count: u64) -> f64 {
        self.ratios.get(count as usize).copied().unwrap_or(1.0)
    }
}

/// Discounted probabilities for one context plus the mass left for backoff.
fn discount_context(
    followers: &[(TokenId, u64)],
    discounts: &Discounts,
    n_predictable: usize,
) -> (Vec<f64>, f64) {
    let total: u64 = followers.iter().map(|&(_, c)| c).sum();
    let total = total as f64;
    if followers.len() >= n_predictable {
        let probs = followers.iter().map(|&(_, c)| c as f64 / total).collect();
        return (probs, 0.0);
    }
    let mut probs: Vec<f64> = followers
        .iter()
        .map(|&(_, c)| discounts.ratio(c) * c as f64 / total)
        .collect();
    let mut left = 1.0 - probs.iter().sum::<f64>();
    if left <= 1e-12 {
        probs = followers
            .iter()
            .map(|&(_, c)| (c as f64 - FALLBACK_DISCOUNT) / total)
            .collect();
        left = FALLBACK_DISCOUNT * followers.len() as f64 / total;
    }
    (probs, left)
}

#[derive(Debug, Clone)]
pub struct TrigramModel {
    vocab: Vocabulary,
    cutoff: u32,
    unigram: Vec<f64>,
    bigram_backoff: Vec<f64>,
    bigram: FxHashMap<(TokenId, TokenId), f64>,
    trigram_backoff: FxHashMap<(TokenId, TokenId), f64>,
    trigram: FxHashMap<(TokenId, TokenId, TokenId), f64>,
}

/// Trains a Katz backoff trigram model with Good-Turing cutoff `k`.
pub fn train_trigram(corpus: &Corpus, vocab: &Vocabulary, cutoff: u32) -> Result<TrigramModel> {
    if corpus.n_sentences() == 0 {
        return Err(Error::EmptyCorpus);
    }
    corpus.check_ids(vocab)?;
    let v = vocab.len();
    let n_predictable = v - 1;
    let counts = NgramCounts::collect(corpus, v);

    // unigrams back off to uniform over predictable tokens
    let uni_discounts = Discounts::from_counts(counts.unigrams.iter().copied(), cutoff);
    let seen: Vec<(TokenId, u64)> = counts
        .unigrams
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(w, &c)| (w as TokenId, c))
        .collect();
    let (seen_probs, left) = discount_context(&seen, &uni_discounts, n_predictable);
    let n_unseen = n_predictable - seen.len();
    let mut unigram = vec![0.0; v];
    if n_unseen > 0 {
        let share = left / n_unseen as f64;
        for (w, p) in unigram.iter_mut().enumerate() {
            if w as TokenId != Vocabulary::SENT_BEGIN_ID {
                *p = share;
            }
        }
    }
    for (&(w, _), p) in seen.iter().zip(seen_probs) {
        unigram[w as usize] = p;
    }

    let mut model = TrigramModel {
        vocab: vocab.clone(),
        cutoff,
        unigram,
        bigram_backoff: vec![1.0; v],
        bigram: FxHashMap::default(),
        trigram_backoff: FxHashMap::default(),
        trigram: FxHashMap::default(),
    };

    let bi_discounts = Discounts::from_counts(counts.bigrams.values().copied(), cutoff);
    let mut by_context: FxHashMap<TokenId, Vec<(TokenId, u64)>> = FxHashMap::default();
    for (&(ctx, w), &c) in &counts.bigrams {
        by_context.entry(ctx).or_default().push((w, c));
    }
    let mut contexts: Vec<_> = by_context.into_iter().collect();
    contexts.sort_unstable_by_key(|(ctx, _)| *ctx);
    for (ctx, mut followers) in contexts {
        followers.sort_unstable();
        let (probs, left) = discount_context(&followers, &bi_discounts, n_predictable);
        let ws: Vec<TokenId> = followers.iter().map(|&(w, _)| w).collect();
        let alpha = model.backoff_weight(left, &ws, |w| model.unigram[w as usize]);
        for (w, p) in ws.into_iter().zip(probs) {
            model.bigram.insert((ctx, w), p);
        }
        model.bigram_backoff[ctx as usize] = alpha;
    }

    let tri_discounts = Discounts::from_counts(counts.trigrams.values().copied(), cutoff);
    let mut by_context: FxHashMap<(TokenId, TokenId), Vec<(TokenId, u64)>> = FxHashMap::default();
    for (&(a, b, w), &c) in &counts.trigrams {
        by_context.entry((a, b)).or_default().push((w, c));
    }
    let mut contexts: Vec<_> = by_context.into_iter().collect();
    contexts.sort_unstable_by_key(|(ctx, _)| *ctx);
    for ((a, b), mut followers) in contexts {
        followers.sort_unstable();
        let (probs, left) = discount_context(&followers, &tri_discounts, n_predictable);
        let ws: Vec<TokenId> = followers.iter().map(|&(w, _)| w).collect();
        let alpha = model.backoff_weight(left, &ws, |w| model.bigram_prob(w, b));
        for (w, p) in ws.into_iter().zip(probs) {
            model.trigram.insert((a, b, w), p);
        }
        model.trigram_backoff.insert((a, b), alpha);
    }
    Ok(model)
}

impl TrigramModel {
    fn backoff_weight(&self, left: f64, seen: &[TokenId], lower: impl Fn(TokenId) -> f64) -> f64 {
        if left <= 0.0 {
            return 0.0;
        }
        let mut denom = 1.0 - seen.iter().map(|&w| lower(w)).sum::<f64>();
        if denom < 1e-6 {
            // cancellation-prone; sum the unseen mass directly
            let mut mask = vec![false; self.vocab.len()];
            for &w in seen {
                mask[w as usize] = true;
            }
            denom = (0..self.vocab.len() as TokenId)
                .filter(|&w| !mask[w as usize] && w != Vocabulary::SENT_BEGIN_ID)
                .map(&lower)
                .sum();
        }
        left / denom
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Tokens that can be predicted: every id except sentence-begin.
    pub fn predictable(&self) -> impl Iterator<Item = TokenId> {
        (0..self.vocab.len() as TokenId).filter(|&w| w != Vocabulary::SENT_BEGIN_ID)
    }

    fn bigram_prob(&self, w: TokenId, v: TokenId) -> f64 {
        match self.bigram.get(&(v, w)) {
            Some(&p) => p,
            None => self.bigram_backoff[v as usize] * self.unigram[w as usize],
        }
    }

    /// `p(w | w2, w1)` without id validation.
    #[inline]
    pub fn prob_unchecked(&self, w: TokenId, w2: TokenId, w1: TokenId) -> f64 {
        match self.trigram.get(&(w2, w1, w)) {
            Some(&p) => p,
            None => {
                let alpha = self.trigram_backoff.get(&(w2, w1)).copied().unwrap_or(1.0);
                alpha * self.bigram_prob(w, w1)
            }
        }
    }

    /// `p_tri(w | w2, w1)` where `w2` precedes `w1`.
    pub fn prob(&self, w: TokenId, w2: TokenId, w1: TokenId) -> Result<f64> {
        self.check_context(w2, w1)?;
        self.check_predictable(w)?;
        Ok(self.prob_unchecked(w, w2, w1))
    }

    pub(crate) fn check_context(&self, w2: TokenId, w1: TokenId) -> Result<()> {
        self.vocab.check(w2)?;
        self.vocab.check(w1)
    }

    pub(crate) fn check_predictable(&self, w: TokenId) -> Result<()> {
        self.vocab.check(w)?;
        if w == Vocabulary::SENT_BEGIN_ID {
            return Err(Error::invalid("sentence-begin token is never predicted"));
        }
        Ok(())
    }

    /// Backoff weight of context `(w2, w1)`; 1 for contexts never seen.
    pub fn context_backoff(&self, w2: TokenId, w1: TokenId) -> f64 {
        self.trigram_backoff.get(&(w2, w1)).copied().unwrap_or(1.0)
    }

    pub fn has_trigram(&self, w: TokenId, w2: TokenId, w1: TokenId) -> bool {
        self.trigram.contains_key(&(w2, w1, w))
    }

    /// Bigram-level distribution `p(w | w1)`.
    pub fn bigram_distribution_prob(&self, w: TokenId, w1: TokenId) -> f64 {
        self.bigram_prob(w, w1)
    }

    pub fn unigram_prob(&self, w: TokenId) -> f64 {
        self.unigram[w as usize]
    }

    pub fn sentence_log_prob(&self, sentence: &[TokenId]) -> f64 {
        let mut lp = 0.0;
        for_each_event(sentence, |u, v, w| lp += self.prob_unchecked(w, u, v).ln());
        lp
    }

    /// `exp` of the mean negative log probability per predicted token.
    pub fn perplexity(&self, corpus: &Corpus) -> Result<f64> {
        if corpus.n_sentences() == 0 {
            return Err(Error::EmptyCorpus);
        }
        corpus.check_ids(&self.vocab)?;
        let mut lp = 0.0;
        let mut n = 0usize;
        for s in corpus.sentences() {
            lp += self.sentence_log_prob(s);
            n += s.len() + 1;
        }
        Ok((-lp / n as f64).exp())
    }

    /// Writes the model in ARPA text format (log10 probabilities and backoff
    /// weights). Trigram contexts without a bigram entry get a placeholder
    /// bigram line with probability `-99`.
    pub fn write_arpa<W: Write>(&self, mut out: W) -> Result<()> {
        let word = |id: TokenId| self.vocab.word(id).expect("valid id");
        let mut bigram_keys: Vec<(TokenId, TokenId)> = self.bigram.keys().copied().collect();
        for ctx in self.trigram_backoff.keys() {
            if !self.bigram.contains_key(ctx) {
                bigram_keys.push(*ctx);
            }
        }
        bigram_keys.sort_unstable();
        let mut trigram_keys: Vec<_> = self.trigram.keys().copied().collect();
        trigram_keys.sort_unstable();

        writeln!(out, "\\data\\")?;
        writeln!(out, "ngram 1={}", self.vocab.len())?;
        writeln!(out, "ngram 2={}", bigram_keys.len())?;
        writeln!(out, "ngram 3={}", trigram_keys.len())?;
        writeln!(out)?;
        writeln!(out, "\\1-grams:")?;
        for id in 0..self.vocab.len() as TokenId {
            let p = self.unigram[id as usize];
            let lp = if p > 0.0 { p.log10() } else { ARPA_ZERO };
            writeln!(out, "{lp}\t{}\t{}", word(id), self.bigram_backoff[id as usize].log10())?;
        }
        writeln!(out)?;
        writeln!(out, "\\2-grams:")?;
        for (a, b) in bigram_keys {
            let lp = self.bigram.get(&(a, b)).map_or(ARPA_ZERO, |p| p.log10());
            write!(out, "{lp}\t{} {}", word(a), word(b))?;
            if let Some(bo) = self.trigram_backoff.get(&(a, b)) {
                write!(out, "\t{}", bo.log10())?;
            }
            writeln!(out)?;
        }
        writeln!(out)?;
        writeln!(out, "\\3-grams:")?;
        for (a, b, c) in trigram_keys {
            let p = self.trigram[&(a, b, c)];
            writeln!(out, "{}\t{} {} {}", p.log10(), word(a), word(b), word(c))?;
        }
        writeln!(out)?;
        writeln!(out, "\\end\\")?;
        Ok(())
    }

    /// Reads an ARPA file written by [`TrigramModel::write_arpa`]. Every word
    /// must belong to `vocab`, and every vocabulary word needs a unigram.
    pub fn read_arpa<R: BufRead>(input: R, vocab: &Vocabulary) -> Result<Self> {
        let v = vocab.len();
        let mut model = TrigramModel {
            vocab: vocab.clone(),
            cutoff: DEFAULT_CUTOFF,
            unigram: vec![f64::NAN; v],
            bigram_backoff: vec![1.0; v],
            bigram: FxHashMap::default(),
            trigram_backoff: FxHashMap::default(),
            trigram: FxHashMap::default(),
        };
        let mut section = 0usize;
        let mut ended = false;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            match line {
                "\\data\\" => {
                    section = 0;
                    continue;
                }
                "\\1-grams:" => {
                    section = 1;
                    continue;
                }
                "\\2-grams:" => {
                    section = 2;
                    continue;
                }
                "\\3-grams:" => {
                    section = 3;
                    continue;
                }
                "\\end\\" => {
                    ended = true;
                    break;
                }
                _ => {}
            }
            if section == 0 {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::format(lineno, "expected 2 or 3 tab-separated fields"));
            }
            let lp: f64 = fields[0]
                .parse()
                .map_err(|_| Error::format(lineno, "bad log probability"))?;
            let bo: Option<f64> = match fields.get(2) {
                Some(f) => Some(
                    f.parse()
                        .map_err(|_| Error::format(lineno, "bad backoff weight"))?,
                ),
                None => None,
            };
            let words = fields[1]
                .split(' ')
                .map(|w| {
                    vocab
                        .get(w)
                        .ok_or_else(|| Error::format(lineno, format!("word {w:?} not in vocabulary")))
                })
                .collect::<Result<Vec<_>>>()?;
            if words.len() != section {
                return Err(Error::format(lineno, format!("expected a {section}-gram")));
            }
            let p = if lp <= ARPA_ZERO { None } else { Some(10f64.powf(lp)) };
            match section {
                1 => {
                    model.unigram[words[0] as usize] = p.unwrap_or(0.0);
                    model.bigram_backoff[words[0] as usize] = 10f64.powf(bo.unwrap_or(0.0));
                }
                2 => {
                    let key = (words[0], words[1]);
                    if let Some(p) = p {
                        model.bigram.insert(key, p);
                    }
                    if let Some(bo) = bo {
                        model.trigram_backoff.insert(key, 10f64.powf(bo));
                    }
                }
                _ => {
                    let p = p.ok_or_else(|| Error::format(lineno, "zero trigram probability"))?;
                    model.trigram.insert((words[0], words[1], words[2]), p);
                }
            }
        }
        if !ended {
            return Err(Error::format(0, "missing \\end\\ marker"));
        }
        if let Some(w) = model.unigram.iter().position(|p| p.is_nan()) {
            return Err(Error::format(
                0,
                format!("no unigram for {:?}", vocab.word(w as TokenId).unwrap_or("?")),
            ));
        }
        Ok(model)
    }
}
