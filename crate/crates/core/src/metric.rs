//! Segmentation evaluation: the probabilistic agreement measure Pμ, exact
//! boundary precision/recall, and degenerate baseline segmenters.

use std::fmt::{self, Write as _};

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::Segmentation;
use crate::error::{Error, Result};

/// `D_μ(i, j) = γ e^(-μ|i-j|)` over the sentence pairs `i <= j` of an
/// `n`-sentence text (the pair `i = j` included). There are `n - d` pairs at
/// distance `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDistribution {
    mu: f64,
    n: usize,
    gamma: f64,
}

impl DistanceDistribution {
    pub fn new(mu: f64, n: usize) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::invalid(format!("distance decay {mu} must be finite and non-negative")));
        }
        if n == 0 {
            return Err(Error::invalid("distance distribution over zero sentences"));
        }
        let total: f64 = (0..n).map(|d| (n - d) as f64 * (-mu * d as f64).exp()).sum();
        Ok(DistanceDistribution { mu, n, gamma: 1.0 / total })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Probability of one particular pair at distance `d`.
    pub fn pair_weight(&self, d: usize) -> f64 {
        self.gamma * (-self.mu * d as f64).exp()
    }

    /// Probability that a drawn pair has distance `d`.
    pub fn distance_mass(&self, d: usize) -> f64 {
        if d >= self.n {
            0.0
        } else {
            (self.n - d) as f64 * self.pair_weight(d)
        }
    }
}

fn check_lengths(reference: &Segmentation, hypothesis: &Segmentation) -> Result<usize> {
    let n = reference.n_sentences();
    if n != hypothesis.n_sentences() {
        return Err(Error::LengthMismatch {
            reference: n,
            hypothesis: hypothesis.n_sentences(),
        });
    }
    Ok(n)
}

/// Sentences remaining in each sentence's document after it.
fn remaining_runs(seg: &Segmentation) -> Vec<usize> {
    seg.doc_ends().into_iter().enumerate().map(|(i, end)| end - i).collect()
}

/// Probability that a pair of sentences drawn from `D_μ` is classified the
/// same way (same document or not) by both segmentations.
///
/// A pair `(i, i + d)` shares a document iff the run of sentences left in
/// `i`'s document is at least `d`, so the agreements at distance `d` are
/// `#{min(run_ref, run_hyp) >= d} + (n - d) - #{max(run_ref, run_hyp) >= d}`;
/// the disagreements `#{max >= d} - #{min >= d}` come from suffix histograms
/// in O(n) overall.
pub fn p_mu(reference: &Segmentation, hypothesis: &Segmentation, mu: f64) -> Result<f64> {
    let n = check_lengths(reference, hypothesis)?;
    if n < 2 {
        return Err(Error::invalid("need at least two sentences"));
    }
    let dist = DistanceDistribution::new(mu, n)?;
    let r = remaining_runs(reference);
    let h = remaining_runs(hypothesis);
    let mut min_hist = vec![0usize; n + 1];
    let mut max_hist = vec![0usize; n + 1];
    for (&a, &b) in r.iter().zip(&h) {
        min_hist[a.min(b)] += 1;
        max_hist[a.max(b)] += 1;
    }
    // accumulate disagreements so identical segmentations score exactly 1
    let (mut ge_min, mut ge_max) = (0usize, 0usize);
    let mut disagree = 0.0;
    for d in (1..n).rev() {
        ge_min += min_hist[d];
        ge_max += max_hist[d];
        disagree += (ge_max - ge_min) as f64 * dist.pair_weight(d);
    }
    Ok((1.0 - disagree).clamp(0.0, 1.0))
}

/// Direct double sum over all pairs; O(n²).
pub fn p_mu_exhaustive(reference: &Segmentation, hypothesis: &Segmentation, mu: f64) -> Result<f64> {
    let n = check_lengths(reference, hypothesis)?;
    if n < 2 {
        return Err(Error::invalid("need at least two sentences"));
    }
    let dist = DistanceDistribution::new(mu, n)?;
    let mut total = 0.0;
    for i in 0..n {
        for j in i..n {
            if reference.same_document(i, j) == hypothesis.same_document(i, j) {
                total += dist.pair_weight(j - i);
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_SHARDS: u64 = 16;

/// Estimates Pμ by sampling pairs: a distance from the marginal of `D_μ`,
/// then a start position uniformly among the pairs at that distance.
pub fn monte_carlo_p_mu(
    reference: &Segmentation,
    hypothesis: &Segmentation,
    mu: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let n = check_lengths(reference, hypothesis)?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let dist = DistanceDistribution::new(mu, n)?;
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for d in 0..n {
        acc += dist.distance_mass(d);
        cdf.push(acc);
    }
    let per_shard = samples.div_ceil(MC_SHARDS as usize);
    let hits: usize = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let start = shard as usize * per_shard;
            let count = per_shard.min(samples.saturating_sub(start));
            let unit = Uniform::new(0.0, acc);
            let mut hits = 0;
            for _ in 0..count {
                let u = unit.sample(&mut rng);
                let d = cdf.partition_point(|&c| c <= u).min(n - 1);
                let i = rng.gen_range(0..n - d);
                if reference.same_document(i, i + d) == hypothesis.same_document(i, i + d) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// Exact-match boundary precision and recall. Precision is undefined for an
/// empty hypothesis, recall for an empty reference; undefined values are
/// reported as 0 with the flag cleared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    /// `2PR / (P + R)`; `None` when `P + R = 0` or either part is undefined.
    pub f_measure: Option<f64>,
}

pub fn precision_recall(reference: &Segmentation, hypothesis: &Segmentation) -> Result<PrecisionRecall> {
    check_lengths(reference, hypothesis)?;
    let hits = hypothesis
        .boundaries()
        .iter()
        .filter(|&&g| reference.is_boundary(g))
        .count() as f64;
    let n_hyp = hypothesis.boundaries().len();
    let n_ref = reference.boundaries().len();
    let precision_defined = n_hyp > 0;
    let recall_defined = n_ref > 0;
    let precision = if precision_defined { hits / n_hyp as f64 } else { 0.0 };
    let recall = if recall_defined { hits / n_ref as f64 } else { 0.0 };
    let f_measure = (precision_defined && recall_defined && precision + recall > 0.0)
        .then(|| 2.0 * precision * recall / (precision + recall));
    Ok(PrecisionRecall {
        precision,
        recall,
        precision_defined,
        recall_defined,
        f_measure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// `ref_count - 1` boundaries placed uniformly without replacement.
    Random,
    /// A boundary at every gap.
    All,
    /// No boundaries.
    None,
    /// A boundary every `mean_len` sentences.
    Even,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [BaselineKind::Random, BaselineKind::All, BaselineKind::None, BaselineKind::Even];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::All => "all",
            BaselineKind::None => "none",
            BaselineKind::Even => "even",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown baseline {s:?}")))
    }
}

/// `ref_count` is the number of reference segments; `mean_len` is in
/// sentences.
pub fn baseline(kind: BaselineKind, n: usize, ref_count: usize, mean_len: usize, seed: u64) -> Result<Segmentation> {
    if n == 0 {
        return Err(Error::invalid("baseline over zero sentences"));
    }
    match kind {
        BaselineKind::All => Ok(Segmentation::all(n)),
        BaselineKind::None => Ok(Segmentation::none(n)),
        BaselineKind::Even => {
            if mean_len == 0 {
                return Err(Error::invalid("even baseline needs a positive segment length"));
            }
            Segmentation::new(n, (1..n).filter(|g| g % mean_len == 0).collect())
        }
        BaselineKind::Random => {
            if ref_count == 0 || ref_count > n {
                return Err(Error::invalid(format!(
                    "cannot place {} boundaries in {} gaps",
                    ref_count as i64 - 1,
                    n - 1
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let picks = rand::seq::index::sample(&mut rng, n - 1, ref_count - 1);
            Segmentation::new(n, picks.into_iter().map(|i| i + 1).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub p_mu: f64,
    pub precision: f64,
    pub recall: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f_measure: Option<f64>,
    /// Segment counts.
    pub ref_count: usize,
    pub hyp_count: usize,
}

pub fn evaluate(reference: &Segmentation, hypothesis: &Segmentation, mu: f64) -> Result<MetricReport> {
    let p = p_mu(reference, hypothesis, mu)?;
    let pr = precision_recall(reference, hypothesis)?;
    Ok(MetricReport {
        p_mu: p,
        precision: pr.precision,
        recall: pr.recall,
        precision_defined: pr.precision_defined,
        recall_defined: pr.recall_defined,
        f_measure: pr.f_measure,
        ref_count: reference.doc_count(),
        hyp_count: hypothesis.doc_count(),
    })
}

struct Percent(Option<f64>);

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(x) => write!(f, "{:.1}%", 100.0 * x),
            None => f.pad("—"),
        }
    }
}

impl MetricReport {
    fn cells(&self) -> [String; 6] {
        [
            format!("{:.1}%", 100.0 * self.p_mu),
            Percent(self.precision_defined.then_some(self.precision)).to_string(),
            Percent(self.recall_defined.then_some(self.recall)).to_string(),
            Percent(self.f_measure).to_string(),
            self.ref_count.to_string(),
            self.hyp_count.to_string(),
        ]
    }

    /// Rows of named reports as an aligned text table.
    pub fn table(rows: &[(&str, &MetricReport)]) -> String {
        let header = ["model", "P_mu", "precision", "recall", "F", "ref segs", "hyp segs"];
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|(name, r)| std::iter::once(name.to_string()).chain(r.cells()).collect())
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| body.iter().map(|r| r[c].chars().count()).chain([header[c].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let mut line = |cells: Vec<String>| {
            let mut s = String::new();
            for (c, cell) in cells.iter().enumerate() {
                let pad = widths[c] - cell.chars().count();
                if c == 0 {
                    let _ = write!(s, "{cell}{}", " ".repeat(pad));
                } else {
                    let _ = write!(s, "  {}{cell}", " ".repeat(pad));
                }
            }
            out.push_str(s.trim_end());
            out.push('\n');
        };
        line(header.iter().map(|h| h.to_string()).collect());
        for row in body {
            line(row);
        }
        out
    }

    /// Tab-separated rows with a header; undefined values are empty fields.
    pub fn tsv(rows: &[(&str, &MetricReport)]) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let mut out = String::from("model\tp_mu\tprecision\trecall\tf_measure\tref_count\thyp_count\n");
        for (name, r) in rows {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.p_mu,
                opt(r.precision_defined.then_some(r.precision)),
                opt(r.recall_defined.then_some(r.recall)),
                opt(r.f_measure),
                r.ref_count,
                r.hyp_count
            );
        }
        out
    }
}
