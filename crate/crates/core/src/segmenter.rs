//! Placing boundaries: threshold the per-gap boundary probabilities, keep
//! accepted boundaries at least `epsilon` sentences apart, and tune both
//! knobs on heldout text.

use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{Corpus, Segmentation, TokenId};
use crate::error::{Error, Result};
use crate::features::Gaps;
use crate::induction::BoundaryModel;
use crate::metric::p_mu;
use crate::trigger::TriggerModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmenterConfig {
    pub alpha: f64,
    pub epsilon: usize,
}

impl SegmenterConfig {
    pub fn new(alpha: f64, epsilon: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("threshold {alpha} outside (0, 1)")));
        }
        if epsilon == 0 {
            return Err(Error::invalid("minimum separation must be at least 1"));
        }
        Ok(SegmenterConfig { alpha, epsilon })
    }
}

/// Tuning grid: `alpha = k/50` for `k = 1..=49`.
pub fn alpha_grid() -> impl Iterator<Item = f64> {
    (1..50).map(|k| k as f64 / 50.0)
}

pub const EPSILON_GRID: std::ops::RangeInclusive<usize> = 1..=10;

/// Boundary probability at each gap of `gaps`.
pub fn score_contexts(model: &BoundaryModel, gaps: &Gaps) -> Vec<f64> {
    (0..gaps.len())
        .into_par_iter()
        .map(|e| model.q_boundary(&gaps.context(e)))
        .collect()
}

/// Boundary probability at every gap of an unsegmented sentence sequence.
/// Relevance runs over the whole sequence without cache resets.
pub fn score_gaps(model: &BoundaryModel, trig: &TriggerModel, sentences: &[Vec<TokenId>]) -> Result<Vec<f64>> {
    if sentences.len() < 2 {
        return Err(Error::invalid("need at least two sentences to score gaps"));
    }
    let text = Corpus::new(sentences.to_vec(), vec![(0, sentences.len() - 1)])?;
    let gaps = Gaps::from_corpus(&text, trig)?;
    Ok(score_contexts(model, &gaps))
}

/// `gap<TAB>prob`, one line per gap.
pub fn write_probs<W: Write>(probs: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "gap\tprob")?;
    for (e, p) in probs.iter().enumerate() {
        writeln!(out, "{}\t{p}", e + 1)?;
    }
    Ok(())
}

/// Accepts gaps with probability at least `alpha` in descending order of
/// probability (ties to the smaller gap), skipping any gap closer than
/// `epsilon` sentences to one already accepted. `probs[e]` belongs to gap
/// `e + 1`.
pub fn decide(probs: &[f64], config: &SegmenterConfig) -> Result<Segmentation> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("{p} is not a probability")));
    }
    let mut order: Vec<usize> = (0..probs.len()).filter(|&e| probs[e] >= config.alpha).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut accepted: Vec<usize> = Vec::new();
    for e in order {
        let g = e + 1;
        let k = accepted.partition_point(|&a| a < g);
        let clear_left = k == 0 || g - accepted[k - 1] >= config.epsilon;
        let clear_right = k == accepted.len() || accepted[k] - g >= config.epsilon;
        if clear_left && clear_right {
            accepted.insert(k, g);
        }
    }
    Segmentation::new(probs.len() + 1, accepted)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub config: SegmenterConfig,
    pub p_mu: f64,
}

/// Grid search over `(alpha, epsilon)` maximizing Pμ against `reference`;
/// ties go to the smaller alpha, then the smaller epsilon.
pub fn tune_on_probs(probs: &[f64], reference: &Segmentation, mu: f64) -> Result<Tuning> {
    if reference.n_sentences() != probs.len() + 1 {
        return Err(Error::LengthMismatch {
            reference: reference.n_sentences(),
            hypothesis: probs.len() + 1,
        });
    }
    let grid: Vec<SegmenterConfig> = alpha_grid()
        .flat_map(|alpha| EPSILON_GRID.map(move |epsilon| SegmenterConfig { alpha, epsilon }))
        .collect();
    let scores = grid
        .par_iter()
        .map(|c| p_mu(reference, &decide(probs, c)?, mu))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(Tuning {
        config: grid[best],
        p_mu: scores[best],
    })
}

/// Tunes the decision knobs on a heldout corpus with reference boundaries.
pub fn tune(model: &BoundaryModel, trig: &TriggerModel, heldout: &Corpus, mu: f64) -> Result<Tuning> {
    let probs = score_gaps(model, trig, heldout.sentences())?;
    tune_on_probs(&probs, &heldout.reference_segmentation(), mu)
}
