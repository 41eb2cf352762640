//! End-to-end training: vocabulary, trigram prior, trigger model, events and
//! boundary-model induction, with the knobs in one place.

use std::sync::Arc;

use crate::corpus::{build_vocabulary, encode, Corpus, SurfaceCorpus, Vocabulary};
use crate::error::Result;
use crate::features::{extract_events, generate_candidates, CandidateIndex, EventSet, DEFAULT_MAX_WORD_RANK};
use crate::induction::{induce, InduceOptions, Induction};
use crate::trigger::{select_triggers, train_triggers_iis, SelectOptions, TriggerModel, TriggerTraining};
use crate::trigram::{train_trigram, TrigramModel, DEFAULT_CUTOFF};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub vocab_size: usize,
    pub cutoff: u32,
    pub select: SelectOptions,
    pub trigger_iterations: usize,
    pub max_word_rank: usize,
    pub induce: InduceOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            vocab_size: 20_000,
            cutoff: DEFAULT_CUTOFF,
            select: SelectOptions::default(),
            trigger_iterations: 5,
            max_word_rank: DEFAULT_MAX_WORD_RANK,
            induce: InduceOptions::default(),
        }
    }
}

pub struct TrainedSystem {
    pub vocab: Vocabulary,
    pub trigram: Arc<TrigramModel>,
    pub trigger: TriggerTraining,
    pub events: EventSet,
    pub induction: Induction,
}

impl TrainedSystem {
    pub fn trigger_model(&self) -> &TriggerModel {
        &self.trigger.model
    }
}

/// Trains the language models and the boundary model on one segmented
/// corpus. The candidate word list is capped at the vocabulary size.
pub fn train_system(train: &SurfaceCorpus, cfg: &PipelineConfig) -> Result<TrainedSystem> {
    let vocab = build_vocabulary(train.tokens(), cfg.vocab_size)?;
    let corpus = encode(train, &vocab);
    let (trigram, trigger) = train_language_models(&corpus, &vocab, cfg)?;
    let events = extract_events(&corpus, &trigger.model)?;
    let max_rank = cfg.max_word_rank.min(vocab.len() - Vocabulary::NUM_RESERVED);
    let candidates = generate_candidates(&vocab, max_rank)?;
    let index = CandidateIndex::build(&candidates, events.gaps());
    let induction = induce(&events, &candidates, &index, &cfg.induce)?;
    Ok(TrainedSystem {
        vocab,
        trigram,
        trigger,
        events,
        induction,
    })
}

pub fn train_language_models(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &PipelineConfig,
) -> Result<(Arc<TrigramModel>, TriggerTraining)> {
    let trigram = Arc::new(train_trigram(corpus, vocab, cfg.cutoff)?);
    let pairs = select_triggers(corpus, vocab, &cfg.select);
    let model = TriggerModel::new(trigram.clone(), pairs, cfg.select.window_n)?;
    let trigger = train_triggers_iis(&model, corpus, cfg.trigger_iterations)?;
    Ok((trigram, trigger))
}
