//! Long-range trigger language model.
//!
//! The model rescales the trigram prior with one weight per trigger pair
//! `(s, t)`: when `s` occurred among the previous `window_n` words, the
//! probability of `t` is multiplied by `e^lambda` and the distribution is
//! renormalized:
//!
//! ```text
//! p_exp(w | H) = exp(sum_i lambda_i f_i(H, w)) p_tri(w | w2, w1) / Z(H)
//! Z(H)         = 1 + sum_{t in T(H)} p_tri(t | w2, w1) (exp(L_t(H)) - 1)
//! ```
//!
//! where `T(H)` is the set of words triggered by the cache and `L_t(H)` the
//! sum of active weights for `t`.

use std::collections::{BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::sync::Arc;

use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::numeric::iis_delta;
use crate::trigram::{for_each_event, TrigramModel};

pub const DEFAULT_WINDOW: usize = 500;
pub const DEFAULT_MIN_COOCCUR: usize = 3;
pub const DEFAULT_MIN_WORD_FREQ: usize = 10;
pub const LAMBDA_BOUND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerPair {
    pub s: TokenId,
    pub t: TokenId,
    pub lambda: f64,
    pub mi: f64,
}

/// The last `window_n` words of history, tracking which trigger left-words
/// are present.
#[derive(Debug, Clone)]
pub struct HistoryCache {
    window_n: usize,
    ring: VecDeque<TokenId>,
    counts: FxHashMap<TokenId, u32>,
    left: Arc<Vec<bool>>,
    active: BTreeSet<TokenId>,
    version: u64,
}

impl HistoryCache {
    fn new(window_n: usize, left: Arc<Vec<bool>>) -> Self {
        HistoryCache {
            window_n,
            ring: VecDeque::with_capacity(window_n + 1),
            counts: FxHashMap::default(),
            left,
            active: BTreeSet::new(),
            version: 0,
        }
    }

    fn is_left(&self, w: TokenId) -> bool {
        self.left.get(w as usize).copied().unwrap_or(false)
    }

    pub fn push(&mut self, w: TokenId) {
        self.ring.push_back(w);
        if self.is_left(w) {
            let c = self.counts.entry(w).or_default();
            *c += 1;
            if *c == 1 {
                self.active.insert(w);
                self.version += 1;
            }
        }
        if self.ring.len() > self.window_n {
            let old = self.ring.pop_front().expect("non-empty");
            if self.is_left(old) {
                let c = self.counts.get_mut(&old).expect("counted");
                *c -= 1;
                if *c == 0 {
                    self.counts.remove(&old);
                    self.active.remove(&old);
                    self.version += 1;
                }
            }
        }
    }

    pub fn clear(&mut self) {
        if !self.active.is_empty() {
            self.version += 1;
        }
        self.ring.clear();
        self.counts.clear();
        self.active.clear();
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn window_n(&self) -> usize {
        self.window_n
    }

    /// Trigger left-words currently in the window.
    pub fn active(&self) -> &BTreeSet<TokenId> {
        &self.active
    }

    pub fn words(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.ring.iter().copied()
    }

    /// Changes whenever the active set changes.
    pub fn version(&self) -> u64 {
        self.version
    }
}

/// Words boosted by the current cache, sorted by id, with their summed
/// weights and the active pairs behind each.
#[derive(Debug, Clone, Default)]
pub struct ActiveBoosts {
    targets: Vec<TokenId>,
    boost: Vec<f64>,
    spans: Vec<(u32, u32)>,
    pair_idx: Vec<u32>,
}

impl ActiveBoosts {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[TokenId] {
        &self.targets
    }

    /// Summed active weight for `w`, zero when `w` is not triggered.
    pub fn boost(&self, w: TokenId) -> f64 {
        match self.targets.binary_search(&w) {
            Ok(k) => self.boost[k],
            Err(_) => 0.0,
        }
    }

    fn pairs_at(&self, k: usize) -> &[u32] {
        let (a, b) = self.spans[k];
        &self.pair_idx[a as usize..b as usize]
    }
}

#[derive(Debug, Clone)]
pub struct TriggerModel {
    prior: Arc<TrigramModel>,
    pairs: Vec<TriggerPair>,
    by_s: FxHashMap<TokenId, Vec<u32>>,
    left: Arc<Vec<bool>>,
    window_n: usize,
}

impl TriggerModel {
    pub fn new(prior: Arc<TrigramModel>, pairs: Vec<TriggerPair>, window_n: usize) -> Result<Self> {
        if window_n == 0 {
            return Err(Error::invalid("window_n must be at least 1"));
        }
        let vocab = prior.vocab();
        let mut seen = FxHashMap::default();
        let mut by_s: FxHashMap<TokenId, Vec<u32>> = FxHashMap::default();
        let mut left = vec![false; vocab.len()];
        for (i, p) in pairs.iter().enumerate() {
            vocab.check(p.s)?;
            prior.check_predictable(p.t)?;
            if !p.lambda.is_finite() {
                return Err(Error::DivergentTrigger { s: p.s, t: p.t });
            }
            if seen.insert((p.s, p.t), ()).is_some() {
                return Err(Error::invalid(format!("duplicate trigger pair ({}, {})", p.s, p.t)));
            }
            by_s.entry(p.s).or_default().push(i as u32);
            left[p.s as usize] = true;
        }
        Ok(TriggerModel {
            prior,
            pairs,
            by_s,
            left: Arc::new(left),
            window_n,
        })
    }

    pub fn prior(&self) -> &TrigramModel {
        &self.prior
    }

    pub fn prior_arc(&self) -> &Arc<TrigramModel> {
        &self.prior
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.prior.vocab()
    }

    pub fn pairs(&self) -> &[TriggerPair] {
        &self.pairs
    }

    pub fn window_n(&self) -> usize {
        self.window_n
    }

    pub fn new_cache(&self) -> HistoryCache {
        HistoryCache::new(self.window_n, Arc::clone(&self.left))
    }

    /// Copy of the model with new weights, one per pair.
    pub fn with_lambdas(&self, lambdas: &[f64]) -> Result<Self> {
        assert_eq!(lambdas.len(), self.pairs.len());
        let mut out = self.clone();
        for (p, &l) in out.pairs.iter_mut().zip(lambdas) {
            if !l.is_finite() {
                return Err(Error::DivergentTrigger { s: p.s, t: p.t });
            }
            p.lambda = l;
        }
        Ok(out)
    }

    pub fn boosts(&self, cache: &HistoryCache) -> ActiveBoosts {
        let mut hits: Vec<(TokenId, u32)> = Vec::new();
        for s in cache.active() {
            if let Some(idx) = self.by_s.get(s) {
                hits.extend(idx.iter().map(|&i| (self.pairs[i as usize].t, i)));
            }
        }
        hits.sort_unstable();
        let mut out = ActiveBoosts::default();
        let mut k = 0;
        while k < hits.len() {
            let t = hits[k].0;
            let start = k;
            let mut sum = 0.0;
            while k < hits.len() && hits[k].0 == t {
                sum += self.pairs[hits[k].1 as usize].lambda;
                out.pair_idx.push(hits[k].1);
                k += 1;
            }
            out.targets.push(t);
            out.boost.push(sum);
            out.spans.push((start as u32, k as u32));
        }
        out
    }

    fn excess_mass(&self, boosts: &ActiveBoosts, w2: TokenId, w1: TokenId) -> f64 {
        let mut excess = 0.0;
        for (&t, &b) in boosts.targets.iter().zip(&boosts.boost) {
            excess += self.prior.prob_unchecked(t, w2, w1) * b.exp_m1();
        }
        excess
    }

    /// `Z(H)` from the sparse identity over triggered words.
    pub fn normalizer(&self, boosts: &ActiveBoosts, w2: TokenId, w1: TokenId) -> f64 {
        1.0 + self.excess_mass(boosts, w2, w1)
    }

    /// `ln Z(H)`.
    pub fn log_normalizer(&self, boosts: &ActiveBoosts, w2: TokenId, w1: TokenId) -> f64 {
        self.excess_mass(boosts, w2, w1).ln_1p()
    }

    /// `p_exp(w | H)` where the cache holds the history `H` and `(w2, w1)`
    /// are the two preceding tokens.
    pub fn prob(&self, w: TokenId, cache: &HistoryCache, w2: TokenId, w1: TokenId) -> Result<f64> {
        self.prior.check_context(w2, w1)?;
        self.prior.check_predictable(w)?;
        let boosts = self.boosts(cache);
        let p_tri = self.prior.prob_unchecked(w, w2, w1);
        Ok(boosts.boost(w).exp() * p_tri / self.normalizer(&boosts, w2, w1))
    }

    #[inline]
    pub fn log_prob_with(&self, boosts: &ActiveBoosts, w: TokenId, w2: TokenId, w1: TokenId) -> f64 {
        boosts.boost(w) + self.prior.prob_unchecked(w, w2, w1).ln()
            - self.log_normalizer(boosts, w2, w1)
    }
}

/// Walks a token stream, keeping the cache and its boosts up to date.
pub struct TriggerScanner<'m> {
    model: &'m TriggerModel,
    cache: HistoryCache,
    boosts: ActiveBoosts,
    version: u64,
}

impl<'m> TriggerScanner<'m> {
    pub fn new(model: &'m TriggerModel) -> Self {
        TriggerScanner {
            model,
            cache: model.new_cache(),
            boosts: ActiveBoosts::default(),
            version: 0,
        }
    }

    pub fn cache(&self) -> &HistoryCache {
        &self.cache
    }

    pub fn push(&mut self, w: TokenId) {
        self.cache.push(w);
    }

    pub fn reset(&mut self) {
        self.cache.clear();
    }

    pub fn boosts(&mut self) -> &ActiveBoosts {
        if self.cache.version() != self.version {
            self.boosts = self.model.boosts(&self.cache);
            self.version = self.cache.version();
        }
        &self.boosts
    }

    /// `(ln p_exp(w | H), ln p_tri(w | w2, w1))` at the current position.
    pub fn log_probs(&mut self, w: TokenId, w2: TokenId, w1: TokenId) -> (f64, f64) {
        let model = self.model;
        let boosts = self.boosts();
        let ln_tri = model.prior.prob_unchecked(w, w2, w1).ln();
        let ln_exp = boosts.boost(w) + ln_tri - model.log_normalizer(boosts, w2, w1);
        (ln_exp, ln_tri)
    }
}

fn mi_from_table(n11: f64, n10: f64, n01: f64, n00: f64) -> f64 {
    let n = n11 + n10 + n01 + n00;
    if n <= 0.0 {
        return 0.0;
    }
    let term = |nxy: f64, nx: f64, ny: f64| {
        if nxy > 0.0 {
            nxy / n * (nxy * n / (nx * ny)).ln()
        } else {
            0.0
        }
    };
    let (x1, x0) = (n11 + n10, n01 + n00);
    let (y1, y0) = (n11 + n01, n10 + n00);
    (term(n11, x1, y1) + term(n10, x1, y0) + term(n01, x0, y1) + term(n00, x0, y0)).max(0.0)
}

/// Mutual information (nats) between "s occurred in the previous
/// `window_n` words of the document" and "the current word is t", over all
/// word positions of the corpus.
pub fn mutual_information(s: TokenId, t: TokenId, corpus: &Corpus, window_n: usize) -> f64 {
    let window_n = window_n.max(1);
    let (mut n11, mut n10, mut n01, mut n00) = (0u64, 0u64, 0u64, 0u64);
    for doc in corpus.documents() {
        let mut ring: VecDeque<TokenId> = VecDeque::new();
        let mut s_count = 0usize;
        for &w in doc.iter().flatten() {
            match (s_count > 0, w == t) {
                (true, true) => n11 += 1,
                (true, false) => n10 += 1,
                (false, true) => n01 += 1,
                (false, false) => n00 += 1,
            }
            ring.push_back(w);
            if w == s {
                s_count += 1;
            }
            if ring.len() > window_n && ring.pop_front() == Some(s) {
                s_count -= 1;
            }
        }
    }
    mi_from_table(n11 as f64, n10 as f64, n01 as f64, n00 as f64)
}

#[derive(Debug, Clone)]
pub struct SelectOptions {
    pub window_n: usize,
    pub max_pairs: usize,
    pub min_cooccur: usize,
    pub min_word_freq: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            window_n: DEFAULT_WINDOW,
            max_pairs: 10_000,
            min_cooccur: DEFAULT_MIN_COOCCUR,
            min_word_freq: DEFAULT_MIN_WORD_FREQ,
        }
    }
}

/// Ranks candidate pairs by mutual information and keeps the best
/// `max_pairs`. Candidates are non-reserved words with corpus frequency at
/// least `min_word_freq`; a pair needs `min_cooccur` positions where `t`
/// occurs with `s` in the window, and a positive association (`s` in the
/// window makes `t` more likely, not less). Ties go to the smaller `(s, t)`.
pub fn select_triggers(corpus: &Corpus, vocab: &Vocabulary, opts: &SelectOptions) -> Vec<TriggerPair> {
    let window_n = opts.window_n.max(1);
    let v = vocab.len();
    let mut freq = vec![0u64; v];
    for &w in corpus.sentences().iter().flatten() {
        freq[w as usize] += 1;
    }
    let candidate: Vec<bool> = (0..v)
        .map(|w| !vocab.is_reserved(w as TokenId) && freq[w] >= opts.min_word_freq as u64)
        .collect();

    let mut in_window = vec![0u32; v];
    let mut slot = vec![usize::MAX; v];
    let mut active: Vec<TokenId> = Vec::new();
    let mut n_x = vec![0u64; v];
    let mut co: FxHashMap<(TokenId, TokenId), u64> = FxHashMap::default();
    let mut n_total = 0u64;

    for doc in corpus.documents() {
        let mut ring: VecDeque<TokenId> = VecDeque::with_capacity(window_n + 1);
        for &w in doc.iter().flatten() {
            n_total += 1;
            for &s in &active {
                n_x[s as usize] += 1;
            }
            if candidate[w as usize] {
                for &s in &active {
                    *co.entry((s, w)).or_default() += 1;
                }
            }
            ring.push_back(w);
            if candidate[w as usize] {
                in_window[w as usize] += 1;
                if in_window[w as usize] == 1 {
                    slot[w as usize] = active.len();
                    active.push(w);
                }
            }
            if ring.len() > window_n {
                let old = ring.pop_front().expect("non-empty");
                if candidate[old as usize] {
                    in_window[old as usize] -= 1;
                    if in_window[old as usize] == 0 {
                        let k = slot[old as usize];
                        active.swap_remove(k);
                        if k < active.len() {
                            slot[active[k] as usize] = k;
                        }
                    }
                }
            }
        }
        for w in ring {
            in_window[w as usize] = 0;
        }
        active.clear();
    }

    let n = n_total as f64;
    let mut scored: Vec<TriggerPair> = co
        .into_iter()
        .filter(|&(_, c)| c >= opts.min_cooccur as u64)
        .filter_map(|((s, t), c)| {
            let n11 = c as f64;
            let n10 = n_x[s as usize] as f64 - n11;
            let n01 = freq[t as usize] as f64 - n11;
            let n00 = n - n11 - n10 - n01;
            (n11 * n00 > n10 * n01).then_some(TriggerPair {
                s,
                t,
                lambda: 0.0,
                mi: mi_from_table(n11, n10, n01, n00),
            })
        })
        .collect();
    scored.sort_by(|a, b| b.mi.total_cmp(&a.mi).then((a.s, a.t).cmp(&(b.s, b.t))));
    scored.truncate(opts.max_pairs);
    scored
}

/// Result of weight estimation: the fitted model and the mean per-token
/// training log-likelihood before the first and after every iteration.
#[derive(Debug, Clone)]
pub struct TriggerTraining {
    pub model: TriggerModel,
    pub log_likelihood: Vec<f64>,
}

struct Expectations {
    // a[i][m]: summed model probability of t_i over positions where pair i
    // is active and m active pairs target t_i
    model: Vec<Vec<f64>>,
    empirical: Vec<f64>,
    log_likelihood: f64,
    n_tokens: usize,
}

fn accumulate(model: &TriggerModel, corpus: &Corpus, with_expectations: bool) -> Expectations {
    let n_pairs = model.pairs.len();
    let mut ex = Expectations {
        model: vec![Vec::new(); if with_expectations { n_pairs } else { 0 }],
        empirical: vec![0.0; n_pairs],
        log_likelihood: 0.0,
        n_tokens: 0,
    };
    let mut scanner = TriggerScanner::new(model);
    for doc in corpus.documents() {
        scanner.reset();
        for sentence in doc {
            let mut events = Vec::with_capacity(sentence.len() + 1);
            for_each_event(sentence, |u, v, w| events.push((u, v, w)));
            for (u, v, w) in events {
                let boosts = scanner.boosts();
                let log_z = model.log_normalizer(boosts, u, v);
                let ln_tri = model.prior.prob_unchecked(w, u, v).ln();
                ex.log_likelihood += boosts.boost(w) + ln_tri - log_z;
                ex.n_tokens += 1;
                if with_expectations {
                    for k in 0..boosts.len() {
                        let t = boosts.targets[k];
                        let q = (boosts.boost[k] + model.prior.prob_unchecked(t, u, v).ln() - log_z).exp();
                        let pairs = boosts.pairs_at(k);
                        let m = pairs.len();
                        for &i in pairs {
                            let row = &mut ex.model[i as usize];
                            if row.len() <= m {
                                row.resize(m + 1, 0.0);
                            }
                            row[m] += q;
                        }
                        if t == w {
                            for &i in pairs {
                                ex.empirical[i as usize] += 1.0;
                            }
                        }
                    }
                }
                if w != Vocabulary::SENT_END_ID {
                    scanner.push(w);
                }
            }
        }
    }
    ex
}

/// Mean per-token log-likelihood of `corpus` under the model, with the
/// cache reset at every document boundary.
pub fn mean_log_likelihood(model: &TriggerModel, corpus: &Corpus) -> f64 {
    let ex = accumulate(model, corpus, false);
    ex.log_likelihood / ex.n_tokens as f64
}

/// Fits trigger weights with improved iterative scaling. The cache resets
/// at document boundaries.
pub fn train_triggers_iis(model: &TriggerModel, corpus: &Corpus, iterations: usize) -> Result<TriggerTraining> {
    corpus.check_ids(model.vocab())?;
    let mut current = model.clone();
    let mut trace = Vec::with_capacity(iterations + 1);
    if current.pairs.is_empty() {
        trace.push(mean_log_likelihood(&current, corpus));
        return Ok(TriggerTraining {
            model: current,
            log_likelihood: trace,
        });
    }
    for _ in 0..iterations {
        let ex = accumulate(&current, corpus, true);
        trace.push(ex.log_likelihood / ex.n_tokens as f64);
        let mut lambdas: Vec<f64> = current.pairs.iter().map(|p| p.lambda).collect();
        for (i, lambda) in lambdas.iter_mut().enumerate() {
            let lo = -LAMBDA_BOUND - *lambda;
            let hi = LAMBDA_BOUND - *lambda;
            let delta = iis_delta(&ex.model[i], ex.empirical[i], lo, hi);
            let p = &current.pairs[i];
            let next = *lambda + delta;
            if !next.is_finite() {
                return Err(Error::DivergentTrigger { s: p.s, t: p.t });
            }
            *lambda = next.clamp(-LAMBDA_BOUND, LAMBDA_BOUND);
        }
        current = current.with_lambdas(&lambdas)?;
    }
    trace.push(mean_log_likelihood(&current, corpus));
    Ok(TriggerTraining {
        model: current,
        log_likelihood: trace,
    })
}

/// Writes the trigger file: a `# window_n` comment, then
/// `s<TAB>t<TAB>lambda<TAB>mi` lines sorted by descending mutual information.
pub fn write_triggers<W: Write>(pairs: &[TriggerPair], vocab: &Vocabulary, window_n: usize, mut out: W) -> Result<()> {
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| b.mi.total_cmp(&a.mi).then((a.s, a.t).cmp(&(b.s, b.t))));
    writeln!(out, "# window_n\t{window_n}")?;
    for p in sorted {
        let s = vocab.word(p.s).ok_or(Error::InvalidToken { id: p.s, size: vocab.len() })?;
        let t = vocab.word(p.t).ok_or(Error::InvalidToken { id: p.t, size: vocab.len() })?;
        writeln!(out, "{s}\t{t}\t{}\t{}", p.lambda, p.mi)?;
    }
    Ok(())
}

/// Reads a trigger file; returns the pairs and the window recorded in the
/// header, if any.
pub fn read_triggers<R: BufRead>(input: R, vocab: &Vocabulary) -> Result<(Vec<TriggerPair>, Option<usize>)> {
    let mut pairs = Vec::new();
    let mut window = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("window_n") {
                window = Some(
                    parts
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::format(lineno, "bad window_n header"))?,
                );
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format(lineno, "expected s, t, lambda, mi"));
        }
        let word = |w: &str| {
            vocab
                .get(w)
                .ok_or_else(|| Error::format(lineno, format!("word {w:?} not in vocabulary")))
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::format(lineno, format!("bad number {v:?}")))
        };
        pairs.push(TriggerPair {
            s: word(fields[0])?,
            t: word(fields[1])?,
            lambda: num(fields[2])?,
            mi: num(fields[3])?,
        });
    }
    Ok((pairs, window))
}
