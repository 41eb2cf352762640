//! Seeded synthetic corpora with planted structure.
//!
//! Each document draws one topic and mixes topic words, general words and
//! function words. Planted trigger pairs `(srcN, tgtN)` are switched on in a
//! round-robin subset of documents: the source word occurs once in the first
//! half of the document and the target word occurs several times after it.
//! Boundary cues are planted near document edges: an opener word in the
//! first sentence, a closer word in the last, `see` starting the last
//! sentence, and `mr.` only after the first sentence.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::SurfaceCorpus;
use crate::error::{Error, Result};

const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "that", "is", "for", "it", "was", "on", "with", "as", "at",
    "by", "be", "this", "from", "or", "an", "but", "not", "are", "which", "have", "has", "its",
    "were", "they", "would", "their", "been", "more", "will", "about", "after", "also", "than",
    "said",
];

pub const OPENER: &str = "incorporated";
pub const CLOSER: &str = "closed";

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub docs: usize,
    pub seed: u64,
    /// Document lengths are uniform on `[mean/2, 3*mean/2]` sentences.
    pub mean_doc_len: usize,
    pub min_sentence_len: usize,
    pub max_sentence_len: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub topic_share: f64,
    pub general_words: usize,
    pub general_share: f64,
    pub planted_pairs: usize,
    pub pairs_per_doc: usize,
    pub trigger_occurrences: usize,
    pub opener_prob: f64,
    pub closer_prob: f64,
    pub see_prob: f64,
    pub mr_prob: f64,
    pub cue_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 200,
            seed: 7,
            mean_doc_len: 18,
            min_sentence_len: 6,
            max_sentence_len: 14,
            topics: 30,
            words_per_topic: 60,
            topic_share: 0.25,
            general_words: 400,
            general_share: 0.3,
            planted_pairs: 50,
            pairs_per_doc: 2,
            trigger_occurrences: 3,
            opener_prob: 0.6,
            closer_prob: 0.5,
            see_prob: 0.3,
            mr_prob: 0.15,
            cue_noise: 0.02,
        }
    }
}

/// Ground truth recorded while generating.
#[derive(Debug, Clone)]
pub struct SynthTruth {
    pub planted_pairs: Vec<(String, String)>,
    pub doc_topics: Vec<usize>,
}

pub fn planted_source(i: usize) -> String {
    format!("src{i:02}")
}

pub fn planted_target(i: usize) -> String {
    format!("tgt{i:02}")
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("n >= 1")
}

fn insert_at<R: Rng>(rng: &mut R, sentence: &mut Vec<String>, word: String) {
    let pos = rng.gen_range(0..=sentence.len());
    sentence.insert(pos, word);
}

pub fn generate(cfg: &SynthConfig) -> Result<(SurfaceCorpus, SynthTruth)> {
    if cfg.docs == 0 || cfg.mean_doc_len < 4 || cfg.min_sentence_len == 0 {
        return Err(Error::invalid("synthetic corpus needs documents, sentences and words"));
    }
    if cfg.min_sentence_len > cfg.max_sentence_len || cfg.topics == 0 || cfg.words_per_topic == 0 || cfg.general_words == 0 {
        return Err(Error::invalid("inconsistent synthetic corpus configuration"));
    }
    if cfg.pairs_per_doc > cfg.planted_pairs {
        return Err(Error::invalid("pairs_per_doc exceeds planted_pairs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let function_dist = zipf(FUNCTION_WORDS.len());
    let general_dist = zipf(cfg.general_words);
    let (lo_len, hi_len) = ((cfg.mean_doc_len / 2).max(1), cfg.mean_doc_len * 3 / 2);

    let planted: Vec<(String, String)> = (0..cfg.planted_pairs)
        .map(|i| (planted_source(i), planted_target(i)))
        .collect();
    let mut docs = Vec::with_capacity(cfg.docs);
    let mut doc_topics = Vec::with_capacity(cfg.docs);

    for d in 0..cfg.docs {
        let topic = rng.gen_range(0..cfg.topics);
        doc_topics.push(topic);
        let n_sent = rng.gen_range(lo_len..=hi_len);
        let mut doc: Vec<Vec<String>> = (0..n_sent)
            .map(|_| {
                let len = rng.gen_range(cfg.min_sentence_len..=cfg.max_sentence_len);
                (0..len)
                    .map(|_| {
                        let u: f64 = rng.gen();
                        if u < cfg.topic_share {
                            format!("k{topic:02}w{:02}", rng.gen_range(0..cfg.words_per_topic))
                        } else if u < cfg.topic_share + cfg.general_share {
                            format!("g{:03}", general_dist.sample(&mut rng))
                        } else {
                            FUNCTION_WORDS[function_dist.sample(&mut rng)].to_string()
                        }
                    })
                    .collect()
            })
            .collect();

        for k in 0..cfg.pairs_per_doc {
            if cfg.planted_pairs == 0 {
                break;
            }
            let pair = (d * cfg.pairs_per_doc + k) % cfg.planted_pairs;
            let (s, t) = &planted[pair];
            let si = rng.gen_range(0..n_sent / 2);
            insert_at(&mut rng, &mut doc[si], s.clone());
            for _ in 0..cfg.trigger_occurrences {
                let ti = rng.gen_range(si + 1..n_sent);
                insert_at(&mut rng, &mut doc[ti], t.clone());
            }
        }

        for (i, sentence) in doc.iter_mut().enumerate() {
            let first = i == 0;
            let last = i + 1 == n_sent;
            let p_open = if first { cfg.opener_prob } else { cfg.cue_noise };
            if rng.gen_bool(p_open) {
                insert_at(&mut rng, sentence, OPENER.to_string());
            }
            let p_close = if last { cfg.closer_prob } else { cfg.cue_noise };
            if rng.gen_bool(p_close) {
                insert_at(&mut rng, sentence, CLOSER.to_string());
            }
            if !first && rng.gen_bool(cfg.mr_prob) {
                insert_at(&mut rng, sentence, "mr.".to_string());
            }
            if last && rng.gen_bool(cfg.see_prob) {
                sentence.insert(0, "see".to_string());
            }
            sentence.push(".".to_string());
        }
        docs.push(doc);
    }
    let corpus = SurfaceCorpus::from_documents(docs)?;
    Ok((
        corpus,
        SynthTruth {
            planted_pairs: planted,
            doc_topics,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig { docs: 20, ..Default::default() };
        let (a, _) = generate(&cfg).unwrap();
        let (b, _) = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate(&SynthConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn documents_have_expected_shape() {
        let cfg = SynthConfig { docs: 50, ..Default::default() };
        let (corpus, truth) = generate(&cfg).unwrap();
        assert_eq!(corpus.doc_spans().len(), 50);
        assert_eq!(truth.doc_topics.len(), 50);
        for &(a, b) in corpus.doc_spans() {
            let len = b - a + 1;
            assert!((9..=27).contains(&len));
        }
        // every target follows its source within the same document
        for &(a, b) in corpus.doc_spans() {
            let words: Vec<&str> = corpus.sentences()[a..=b].iter().flatten().map(String::as_str).collect();
            for (s, t) in &truth.planted_pairs {
                if let Some(first_t) = words.iter().position(|w| w == t) {
                    assert!(words[..first_t].contains(&s.as_str()));
                }
            }
        }
    }
}
