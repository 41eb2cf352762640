//! Relevance: the log-ratio of the trigger model's prediction to the trigram
//! prior's, per word and averaged per sentence.

use std::io::Write;

use crate::corpus::{Corpus, TokenId, Vocabulary};
use crate::error::{Error, Result};
use crate::trigger::{HistoryCache, TriggerModel, TriggerScanner};
use crate::trigram::for_each_event;

/// Relevance in nats. Positive when the trigger model assigns the observed
/// text more probability than the trigram model does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceScore {
    pub value: f64,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Span {
    Word,
    Sentence(usize),
}

/// `ln p_exp(w | H) - ln p_tri(w | w2, w1)`.
pub fn word_relevance(
    trig: &TriggerModel,
    w: TokenId,
    cache: &HistoryCache,
    w2: TokenId,
    w1: TokenId,
) -> Result<RelevanceScore> {
    trig.prior().check_context(w2, w1)?;
    trig.prior().check_predictable(w)?;
    let boosts = trig.boosts(cache);
    Ok(RelevanceScore {
        value: boosts.boost(w) - trig.log_normalizer(&boosts, w2, w1),
        span: Span::Word,
    })
}

/// Scores sentences in order, feeding each one into the history cache after
/// it is scored.
pub struct RelevanceScanner<'m> {
    scanner: TriggerScanner<'m>,
}

impl<'m> RelevanceScanner<'m> {
    pub fn new(trig: &'m TriggerModel) -> Self {
        RelevanceScanner {
            scanner: TriggerScanner::new(trig),
        }
    }

    pub fn cache(&self) -> &HistoryCache {
        self.scanner.cache()
    }

    pub fn reset(&mut self) {
        self.scanner.reset();
    }

    /// Per-position word relevances of `sentence`, sentence-end included.
    pub fn word_scores(&mut self, sentence: &[TokenId]) -> Vec<f64> {
        let mut events = Vec::with_capacity(sentence.len() + 1);
        for_each_event(sentence, |u, v, w| events.push((u, v, w)));
        let mut out = Vec::with_capacity(events.len());
        for (u, v, w) in events {
            let (ln_exp, ln_tri) = self.scanner.log_probs(w, u, v);
            out.push(ln_exp - ln_tri);
            if w != Vocabulary::SENT_END_ID {
                self.scanner.push(w);
            }
        }
        out
    }

    /// Mean word relevance over the sentence (log of the geometric mean of
    /// the probability ratios).
    pub fn sentence(&mut self, index: usize, sentence: &[TokenId]) -> Result<RelevanceScore> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence(index));
        }
        let scores = self.word_scores(sentence);
        Ok(RelevanceScore {
            value: scores.iter().sum::<f64>() / scores.len() as f64,
            span: Span::Sentence(index),
        })
    }
}

/// Relevance of sentence `index` given the cache state in `scanner`.
pub fn sentence_relevance(
    scanner: &mut RelevanceScanner<'_>,
    index: usize,
    sentence: &[TokenId],
) -> Result<RelevanceScore> {
    scanner.sentence(index, sentence)
}

/// Sentence relevances over the whole corpus. With `reset_at_boundaries`
/// false the cache runs straight across documents, as it would on
/// unsegmented text.
pub fn sentence_relevances(trig: &TriggerModel, corpus: &Corpus, reset_at_boundaries: bool) -> Result<Vec<f64>> {
    corpus.check_ids(trig.vocab())?;
    let mut scanner = RelevanceScanner::new(trig);
    let mut out = Vec::with_capacity(corpus.n_sentences());
    for &(first, last) in corpus.doc_spans() {
        if reset_at_boundaries {
            scanner.reset();
        }
        for i in first..=last {
            out.push(scanner.sentence(i, &corpus.sentences()[i])?.value);
        }
    }
    Ok(out)
}

/// Mean sentence relevance by offset from the start of a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceProfile {
    pub max_offset: usize,
    /// `(offset, mean, count)` for offsets `-max_offset..=max_offset`.
    pub rows: Vec<(i64, Option<f64>, usize)>,
}

impl RelevanceProfile {
    pub fn mean_at(&self, offset: i64) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == offset).and_then(|r| r.1)
    }

    pub fn count_at(&self, offset: i64) -> usize {
        self.rows.iter().find(|r| r.0 == offset).map_or(0, |r| r.2)
    }

    /// `offset<TAB>mean_relevance<TAB>count`, skipping empty offsets.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "offset\tmean_relevance\tcount")?;
        for &(offset, mean, count) in &self.rows {
            if let Some(mean) = mean {
                writeln!(out, "{offset}\t{mean}\t{count}")?;
            }
        }
        Ok(())
    }
}

/// Averages sentence relevance (computed with a cache that never resets) by
/// position relative to each reference boundary. Non-negative offsets count
/// sentences of the segment that starts at the boundary; negative offsets
/// count sentences of the segment that precedes it.
pub fn relevance_profile(trig: &TriggerModel, corpus: &Corpus, max_offset: usize) -> Result<RelevanceProfile> {
    let scores = sentence_relevances(trig, corpus, false)?;
    let width = 2 * max_offset + 1;
    let mut sums = vec![0.0; width];
    let mut counts = vec![0usize; width];
    let spans = corpus.doc_spans();
    for d in 1..spans.len() {
        let (prev_first, _) = spans[d - 1];
        let (first, last) = spans[d];
        for (j, &r) in scores[first..=last.min(first + max_offset)].iter().enumerate() {
            sums[max_offset + j] += r;
            counts[max_offset + j] += 1;
        }
        for back in 1..=max_offset.min(first - prev_first) {
            let k = max_offset - back;
            sums[k] += scores[first - back];
            counts[k] += 1;
        }
    }
    let rows = (0..width)
        .map(|k| {
            let offset = k as i64 - max_offset as i64;
            let mean = (counts[k] > 0).then(|| sums[k] / counts[k] as f64);
            (offset, mean, counts[k])
        })
        .collect();
    Ok(RelevanceProfile { max_offset, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::corpus::{build_vocabulary, encode, load_corpus};
    use crate::trigger::TriggerPair;
    use crate::trigram::{train_trigram, TrigramModel, DEFAULT_CUTOFF};

    const TEXT: &str = "a b c d\nb c a e\n===\nd e a\nc c b a\n===\ne d c b a\nb b e\n";

    fn setup() -> (Corpus, Arc<TrigramModel>) {
        let surface = load_corpus(TEXT.as_bytes(), "===").unwrap();
        let vocab = build_vocabulary(surface.tokens(), 100).unwrap();
        let corpus = encode(&surface, &vocab);
        let prior = train_trigram(&corpus, &vocab, DEFAULT_CUTOFF).unwrap();
        (corpus, Arc::new(prior))
    }

    fn model(prior: &Arc<TrigramModel>, pairs: &[(&str, &str, f64)]) -> TriggerModel {
        let v = prior.vocab();
        let pairs = pairs
            .iter()
            .map(|&(s, t, lambda)| TriggerPair { s: v.id(s), t: v.id(t), lambda, mi: 0.0 })
            .collect();
        TriggerModel::new(prior.clone(), pairs, 4).unwrap()
    }

    #[test]
    fn empty_cache_gives_zero() {
        let (_, prior) = setup();
        let m = model(&prior, &[("a", "b", 2.0)]);
        let cache = m.new_cache();
        let r = word_relevance(&m, 3, &cache, 1, 1).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn single_active_pair_signs() {
        let (_, prior) = setup();
        let v = prior.vocab().clone();
        let (a, b, c) = (v.id("a"), v.id("b"), v.id("c"));
        let lambda = 1.2;
        let m = model(&prior, &[("a", "b", lambda)]);
        let mut cache = m.new_cache();
        cache.push(a);
        // dense normalizer oracle
        let z: f64 = prior
            .predictable()
            .map(|w| if w == b { lambda.exp() } else { 1.0 } * prior.prob(w, c, a).unwrap())
            .sum();
        let hit = word_relevance(&m, b, &cache, c, a).unwrap().value;
        assert!((hit - (lambda - z.ln())).abs() < 1e-12);
        assert!(hit > 0.0);
        let miss = word_relevance(&m, c, &cache, c, a).unwrap().value;
        assert!((miss + z.ln()).abs() < 1e-12);
        assert!(miss < 0.0);
        let direct = m.prob(b, &cache, c, a).unwrap().ln() - prior.prob(b, c, a).unwrap().ln();
        assert!((hit - direct).abs() < 1e-12);
    }

    #[test]
    fn sentence_is_mean_of_words() {
        let (corpus, prior) = setup();
        let m = model(&prior, &[("a", "b", 1.0), ("c", "e", -0.5), ("d", "d", 0.7)]);
        let mut scanner = RelevanceScanner::new(&m);
        let mut check = RelevanceScanner::new(&m);
        for (i, s) in corpus.sentences().iter().enumerate() {
            let words = check.word_scores(s);
            let r = sentence_relevance(&mut scanner, i, s).unwrap();
            let mean = words.iter().sum::<f64>() / words.len() as f64;
            assert!((r.value - mean).abs() < 1e-12);
            assert_eq!(r.span, Span::Sentence(i));
        }
    }

    #[test]
    fn one_boosted_word_matches_dense_oracle() {
        let (_, prior) = setup();
        let v = prior.vocab().clone();
        let (a, b, c, e) = (v.id("a"), v.id("b"), v.id("c"), v.id("e"));
        let lambda = 0.9;
        let m = model(&prior, &[("a", "b", lambda)]);
        let mut scanner = RelevanceScanner::new(&m);
        scanner.word_scores(&[a]);
        let sentence = [c, b, e];
        let got = scanner.sentence(0, &sentence).unwrap().value;
        // dense oracle: cache holds "a" for every position (window 4)
        let mut total = 0.0;
        let mut prev = (Vocabulary::SENT_BEGIN_ID, Vocabulary::SENT_BEGIN_ID);
        for &w in sentence.iter().chain([Vocabulary::SENT_END_ID].iter()) {
            let z: f64 = prior
                .predictable()
                .map(|x| if x == b { lambda.exp() } else { 1.0 } * prior.prob(x, prev.0, prev.1).unwrap())
                .sum();
            let boost = if w == b { lambda } else { 0.0 };
            total += boost - z.ln();
            prev = (prev.1, w);
        }
        assert!((got - total / 4.0).abs() < 1e-10);
    }

    #[test]
    fn zero_lambdas_give_zero_relevance() {
        let (corpus, prior) = setup();
        let m = model(&prior, &[("a", "b", 0.0), ("c", "c", 0.0)]);
        let scores = sentence_relevances(&m, &corpus, false).unwrap();
        assert!(scores.iter().all(|&r| r == 0.0));
        let profile = relevance_profile(&m, &corpus, 3).unwrap();
        assert!(profile.rows.iter().all(|r| r.1.is_none_or(|x| x == 0.0)));
    }

    #[test]
    fn empty_sentence_is_an_error() {
        let (_, prior) = setup();
        let m = model(&prior, &[]);
        let mut scanner = RelevanceScanner::new(&m);
        assert!(matches!(scanner.sentence(4, &[]), Err(Error::EmptySentence(4))));
    }

    #[test]
    fn profile_counts_segment_positions() {
        let (corpus, prior) = setup();
        let m = model(&prior, &[]);
        let p = relevance_profile(&m, &corpus, 2).unwrap();
        // two boundaries, both following two-sentence documents
        assert_eq!(p.count_at(0), 2);
        assert_eq!(p.count_at(1), 2);
        assert_eq!(p.count_at(2), 0);
        assert_eq!(p.count_at(-1), 2);
        assert_eq!(p.count_at(-2), 2);
        let mut buf = Vec::new();
        p.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("offset\tmean_relevance\tcount\n-2\t0\t2\n"));
    }
}
