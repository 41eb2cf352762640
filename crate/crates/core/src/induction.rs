//! The exponential boundary model `q(YES | w) ∝ q0 e^(λ·f(w))` over binary
//! features, its iterative-scaling fit, and greedy feature induction.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::features::{evaluate_feature, parse_feature_line, BoundaryContext, CandidateIndex, EventSet, FeatureLine, FeatureTemplate};
use crate::numeric::{iis_delta, sigmoid, softplus, solve_increasing};

pub const LAMBDA_BOUND: f64 = 15.0;
pub const DEFAULT_REFIT_EVERY: usize = 5;
pub const DEFAULT_IIS_ITERS: usize = 200;
pub const DEFAULT_IIS_TOL: f64 = 1e-7;
/// Gains at or below this are treated as zero.
pub const MIN_GAIN: f64 = 1e-12;
// sigmoid(36) < 1 in f64; sigmoid(-700) > 0
const LOGIT_MIN: f64 = -700.0;
const LOGIT_MAX: f64 = 36.0;
const GAIN_TOL: f64 = 1e-10;
const GAIN_STEPS: usize = 200;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryModel {
    q0: f64,
    features: Vec<FeatureTemplate>,
    lambdas: Vec<f64>,
}

impl BoundaryModel {
    pub fn prior(q0: f64) -> Result<Self> {
        BoundaryModel::new(q0, Vec::new(), Vec::new())
    }

    pub fn new(q0: f64, features: Vec<FeatureTemplate>, lambdas: Vec<f64>) -> Result<Self> {
        if !(q0 > 0.0 && q0 < 1.0) {
            return Err(Error::invalid(format!("prior boundary probability {q0} outside (0, 1)")));
        }
        if features.len() != lambdas.len() {
            return Err(Error::invalid("one weight per feature required"));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::invalid("non-finite feature weight"));
        }
        for (i, f) in features.iter().enumerate() {
            if features[..i].contains(f) {
                return Err(Error::invalid(format!("duplicate feature {f:?}")));
            }
        }
        Ok(BoundaryModel { q0, features, lambdas })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn features(&self) -> &[FeatureTemplate] {
        &self.features
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn with_feature(&self, feature: FeatureTemplate, lambda: f64) -> Result<Self> {
        let mut features = self.features.clone();
        let mut lambdas = self.lambdas.clone();
        features.push(feature);
        lambdas.push(lambda);
        BoundaryModel::new(self.q0, features, lambdas)
    }

    pub fn with_lambdas(&self, lambdas: Vec<f64>) -> Result<Self> {
        BoundaryModel::new(self.q0, self.features.clone(), lambdas)
    }

    fn base_logit(&self) -> f64 {
        logit(self.q0)
    }

    /// `ln q(YES) - ln q(NO)`, clamped so that `q` stays inside (0, 1).
    pub fn logit(&self, ctx: &BoundaryContext<'_>) -> f64 {
        let active: f64 = self
            .features
            .iter()
            .zip(&self.lambdas)
            .filter(|(f, _)| evaluate_feature(f, ctx))
            .map(|(_, l)| l)
            .sum();
        (self.base_logit() + active).clamp(LOGIT_MIN, LOGIT_MAX)
    }

    pub fn q_boundary(&self, ctx: &BoundaryContext<'_>) -> f64 {
        sigmoid(self.logit(ctx))
    }

    /// `#q0<TAB>value` followed by one feature line per feature.
    pub fn write<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> Result<()> {
        writeln!(out, "#q0\t{}", self.q0)?;
        for (feature, &lambda) in self.features.iter().zip(&self.lambdas) {
            writeln!(out, "{}", FeatureLine { feature, lambda, vocab })?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R, vocab: &Vocabulary) -> Result<Self> {
        let mut q0 = None;
        let mut features = Vec::new();
        let mut lambdas = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#q0") {
                let v: f64 = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(i + 1, "bad q0 header"))?;
                q0 = Some(v);
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (f, l) = parse_feature_line(&line, vocab, i + 1)?;
            features.push(f);
            lambdas.push(l);
        }
        let q0 = q0.ok_or_else(|| Error::format(1, "missing #q0 header"))?;
        BoundaryModel::new(q0, features, lambdas)
    }
}

/// `ln q(label)` for a logit.
fn log_q(logit: f64, label: bool) -> f64 {
    if label {
        -softplus(-logit)
    } else {
        -softplus(logit)
    }
}

fn mean_log_likelihood(logits: &[f64], labels: &[bool]) -> f64 {
    logits.iter().zip(labels).map(|(&x, &y)| log_q(x, y)).sum::<f64>() / labels.len() as f64
}

fn model_logits(model: &BoundaryModel, events: &EventSet) -> Vec<f64> {
    events.gaps().contexts().map(|ctx| model.logit(&ctx)).collect()
}

/// Mean `ln q(label | context)` over the events, in nats.
pub fn log_likelihood(model: &BoundaryModel, events: &EventSet) -> Result<f64> {
    if events.is_empty() {
        return Err(Error::invalid("no events"));
    }
    Ok(mean_log_likelihood(&model_logits(model, events), events.labels()))
}

/// Kullback-Leibler divergence from the empirical distribution to the
/// model, minus the (model-independent) empirical conditional entropy; that
/// is, the negated mean log-likelihood.
pub fn kl_to_empirical(model: &BoundaryModel, events: &EventSet) -> Result<f64> {
    Ok(-log_likelihood(model, events)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainResult {
    pub alpha_star: f64,
    /// Mean log-likelihood improvement per event.
    pub gain: f64,
}

/// Gain of a feature firing on `firing` (event indices) given the current
/// per-event logits.
pub fn gain_from_firing(firing: &[u32], labels: &[bool], logits: &[f64]) -> GainResult {
    if firing.is_empty() || labels.is_empty() {
        return GainResult { alpha_star: 0.0, gain: 0.0 };
    }
    let events: Vec<(f64, bool)> = firing.iter().map(|&e| (logits[e as usize], labels[e as usize])).collect();
    let yes = events.iter().filter(|e| e.1).count() as f64;
    // derivative of the negated objective: sum sigma(x + a) - yes
    let f = |a: f64| {
        let (mut s, mut ds) = (0.0, 0.0);
        for &(x, _) in &events {
            let q = sigmoid((x + a).clamp(LOGIT_MIN, LOGIT_MAX));
            s += q;
            ds += q * (1.0 - q);
        }
        (s - yes, ds)
    };
    let alpha = solve_increasing(f, -LAMBDA_BOUND, LAMBDA_BOUND, 0.0, GAIN_TOL, GAIN_STEPS);
    let delta: f64 = events
        .iter()
        .map(|&(x, y)| log_q((x + alpha).clamp(LOGIT_MIN, LOGIT_MAX), y) - log_q(x, y))
        .sum();
    GainResult {
        alpha_star: alpha,
        gain: (delta / labels.len() as f64).max(0.0),
    }
}

/// Gain of adding `feature` to `model`.
pub fn gain(model: &BoundaryModel, feature: &FeatureTemplate, events: &EventSet) -> Result<GainResult> {
    if model.features.contains(feature) {
        return Err(Error::invalid(format!("feature {feature:?} already in the model")));
    }
    let firing: Vec<u32> = events
        .gaps()
        .contexts()
        .enumerate()
        .filter(|(_, ctx)| evaluate_feature(feature, ctx))
        .map(|(e, _)| e as u32)
        .collect();
    Ok(gain_from_firing(&firing, events.labels(), &model_logits(model, events)))
}

/// Weight estimation over precomputed firing lists.
struct Fitter<'a> {
    labels: &'a [bool],
    base: f64,
    firing: Vec<&'a [u32]>,
    lambdas: Vec<f64>,
}

impl Fitter<'_> {
    fn logits(&self) -> Vec<f64> {
        let mut x = vec![self.base; self.labels.len()];
        for (list, &l) in self.firing.iter().zip(&self.lambdas) {
            for &e in *list {
                x[e as usize] += l;
            }
        }
        x.iter_mut().for_each(|v| *v = v.clamp(LOGIT_MIN, LOGIT_MAX));
        x
    }

    fn active_counts(&self) -> Vec<usize> {
        let mut m = vec![0usize; self.labels.len()];
        for list in &self.firing {
            for &e in *list {
                m[e as usize] += 1;
            }
        }
        m
    }

    /// Runs IIS; returns the mean log-likelihood before the first iteration
    /// and after each one.
    fn iis(&mut self, max_iters: usize, tol: f64, describe: impl Fn(usize) -> String) -> Result<Vec<f64>> {
        let counts = self.active_counts();
        let mut logits = self.logits();
        let mut trace = vec![mean_log_likelihood(&logits, self.labels)];
        if self.firing.is_empty() {
            return Ok(trace);
        }
        for _ in 0..max_iters {
            let mut max_step: f64 = 0.0;
            let mut next = self.lambdas.clone();
            for (i, list) in self.firing.iter().enumerate() {
                let mut mass = Vec::new();
                let mut empirical = 0.0;
                for &e in *list {
                    let e = e as usize;
                    let m = counts[e];
                    if mass.len() <= m {
                        mass.resize(m + 1, 0.0);
                    }
                    mass[m] += sigmoid(logits[e]);
                    if self.labels[e] {
                        empirical += 1.0;
                    }
                }
                let l = self.lambdas[i];
                let delta = iis_delta(&mass, empirical, -LAMBDA_BOUND - l, LAMBDA_BOUND - l);
                let updated = l + delta;
                if !updated.is_finite() {
                    return Err(Error::DivergentFeature(describe(i)));
                }
                next[i] = updated.clamp(-LAMBDA_BOUND, LAMBDA_BOUND);
                max_step = max_step.max((next[i] - l).abs());
            }
            self.lambdas = next;
            logits = self.logits();
            trace.push(mean_log_likelihood(&logits, self.labels));
            if max_step < tol {
                break;
            }
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone)]
pub struct IisFit {
    pub model: BoundaryModel,
    /// Mean log-likelihood before the first iteration and after each one.
    pub log_likelihood: Vec<f64>,
}

/// Fits all weights of `model` by improved iterative scaling until the
/// largest weight change drops below `tol`.
pub fn iis_fit(model: &BoundaryModel, events: &EventSet, max_iters: usize, tol: f64) -> Result<IisFit> {
    if events.is_empty() {
        return Err(Error::invalid("no events"));
    }
    let lists: Vec<Vec<u32>> = model
        .features
        .iter()
        .map(|f| {
            events
                .gaps()
                .contexts()
                .enumerate()
                .filter(|(_, ctx)| evaluate_feature(f, ctx))
                .map(|(e, _)| e as u32)
                .collect()
        })
        .collect();
    let mut fitter = Fitter {
        labels: events.labels(),
        base: model.base_logit(),
        firing: lists.iter().map(Vec::as_slice).collect(),
        lambdas: model.lambdas.clone(),
    };
    let trace = fitter.iis(max_iters, tol, |i| format!("{:?}", model.features[i]))?;
    Ok(IisFit {
        model: model.with_lambdas(fitter.lambdas)?,
        log_likelihood: trace,
    })
}

#[derive(Debug, Clone)]
pub struct InduceOptions {
    pub num_features: usize,
    pub refit_every: usize,
    pub iis_iters: usize,
    pub iis_tol: f64,
    /// Prior boundary probability; the empirical YES rate when absent.
    pub q0: Option<f64>,
}

impl Default for InduceOptions {
    fn default() -> Self {
        InduceOptions {
            num_features: 50,
            refit_every: DEFAULT_REFIT_EVERY,
            iis_iters: DEFAULT_IIS_ITERS,
            iis_tol: DEFAULT_IIS_TOL,
            q0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Index into the candidate list.
    pub candidate: usize,
    pub feature: FeatureTemplate,
    pub gain: f64,
    pub alpha_star: f64,
    /// Training log-likelihood after this selection (and any refit).
    pub log_likelihood: f64,
}

#[derive(Debug, Clone)]
pub struct Induction {
    pub model: BoundaryModel,
    pub selections: Vec<Selection>,
    /// Log-likelihood of the prior model.
    pub prior_log_likelihood: f64,
}

impl Induction {
    /// `rank<TAB>feature<TAB>e_lambda`, with final weights.
    pub fn write_trace<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> Result<()> {
        writeln!(out, "rank\tfeature\te_lambda")?;
        for (rank, (f, l)) in self.model.features.iter().zip(&self.model.lambdas).enumerate() {
            writeln!(out, "{}\t{}\t{:.4}", rank + 1, f.describe(vocab), l.exp())?;
        }
        Ok(())
    }
}

/// Greedy induction: repeatedly adds the candidate with the largest gain
/// (ties to the earlier candidate), refitting all weights every
/// `refit_every` selections and once at the end. Stops early when no
/// candidate has positive gain.
pub fn induce(
    events: &EventSet,
    candidates: &[FeatureTemplate],
    index: &CandidateIndex,
    opts: &InduceOptions,
) -> Result<Induction> {
    if events.is_empty() {
        return Err(Error::invalid("no events"));
    }
    if index.len() != candidates.len() {
        return Err(Error::invalid("candidate index does not match the candidate list"));
    }
    let q0 = match opts.q0 {
        Some(q) => q,
        None => events.yes_rate(),
    };
    let prior = BoundaryModel::prior(q0)?;
    let labels = events.labels();
    let mut fitter = Fitter {
        labels,
        base: prior.base_logit(),
        firing: Vec::new(),
        lambdas: Vec::new(),
    };
    let mut chosen: Vec<usize> = Vec::new();
    let mut selections = Vec::new();
    let mut logits = fitter.logits();
    let prior_ll = mean_log_likelihood(&logits, labels);
    let describe = |i: usize, chosen: &[usize]| format!("{:?}", candidates[chosen[i]]);

    for step in 0..opts.num_features {
        let mut taken = vec![false; candidates.len()];
        chosen.iter().for_each(|&c| taken[c] = true);
        let gains: Vec<GainResult> = (0..candidates.len())
            .into_par_iter()
            .map(|c| {
                if taken[c] {
                    GainResult { alpha_star: 0.0, gain: 0.0 }
                } else {
                    gain_from_firing(index.firing(c), labels, &logits)
                }
            })
            .collect();
        let mut best = 0;
        for (c, g) in gains.iter().enumerate() {
            if g.gain > gains[best].gain {
                best = c;
            }
        }
        if gains[best].gain <= MIN_GAIN {
            break;
        }
        chosen.push(best);
        fitter.firing.push(index.firing(best));
        fitter.lambdas.push(gains[best].alpha_star);
        let last = step + 1 == opts.num_features;
        if opts.refit_every > 0 && (chosen.len().is_multiple_of(opts.refit_every) || last) {
            fitter.iis(opts.iis_iters, opts.iis_tol, |i| describe(i, &chosen))?;
        }
        logits = fitter.logits();
        selections.push(Selection {
            candidate: best,
            feature: candidates[best],
            gain: gains[best].gain,
            alpha_star: gains[best].alpha_star,
            log_likelihood: mean_log_likelihood(&logits, labels),
        });
    }
    // final refit if the loop stopped early
    if opts.refit_every > 0 && !chosen.is_empty() && selections.len() < opts.num_features {
        fitter.iis(opts.iis_iters, opts.iis_tol, |i| describe(i, &chosen))?;
        let ll = mean_log_likelihood(&fitter.logits(), labels);
        if let Some(s) = selections.last_mut() {
            s.log_likelihood = ll;
        }
    }
    let model = BoundaryModel::new(q0, chosen.iter().map(|&c| candidates[c]).collect(), fitter.lambdas)?;
    Ok(Induction {
        model,
        selections,
        prior_log_likelihood: prior_ll,
    })
}
