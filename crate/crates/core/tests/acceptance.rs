//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Synthetic corpora stand in for the newswire/broadcast corpora.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segtext::corpus::{build_vocabulary, encode, Corpus, Segmentation, TokenId, Vocabulary};
use segtext::features::{extract_events, generate_candidates, CandidateIndex, EventSet, FeatureTemplate, WordTemplate};
use segtext::induction::{gain, induce, iis_fit, BoundaryModel, InduceOptions};
use segtext::metric::{baseline, monte_carlo_p_mu, p_mu, p_mu_exhaustive, precision_recall, BaselineKind};
use segtext::pipeline::{train_system, PipelineConfig};
use segtext::relevance::relevance_profile;
use segtext::segmenter::{alpha_grid, decide, score_gaps, tune_on_probs, SegmenterConfig, EPSILON_GRID};
use segtext::synth::{generate, SynthConfig, OPENER};
use segtext::trigger::{select_triggers, train_triggers_iis, SelectOptions, TriggerModel, TriggerTraining};
use segtext::trigram::{train_trigram, TrigramModel, DEFAULT_CUTOFF};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_segmentation<R: Rng>(rng: &mut R, n: usize, p: f64) -> Segmentation {
    Segmentation::new(n, (1..n).filter(|_| rng.gen_bool(p)).collect()).unwrap()
}

/// Segmentation with document lengths drawn around `mean`.
fn random_documents<R: Rng>(rng: &mut R, n: usize, mean: usize) -> Segmentation {
    let mut b = Vec::new();
    let mut g = 0;
    loop {
        g += rng.gen_range(mean / 2..=mean * 3 / 2);
        if g >= n {
            break;
        }
        b.push(g);
    }
    Segmentation::new(n, b).unwrap()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = rng.gen_range(2..=300);
        let mu = rng.gen_range(0.01..1.0);
        let (pr, ph) = (rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3));
        let r = random_segmentation(&mut rng, n, pr);
        let h = random_segmentation(&mut rng, n, ph);
        let diff = (p_mu(&r, &h, mu).unwrap() - p_mu_exhaustive(&r, &h, mu).unwrap()).abs();
        worst = worst.max(diff);
    }
    ensure(worst <= 1e-12, || format!("fast path differs from the pair sum by {worst:e}"))?;
    let mut worst_z: f64 = 0.0;
    for k in 0..20 {
        let n = rng.gen_range(50..=300);
        let mu = 1.0 / rng.gen_range(5.0..25.0);
        let r = random_segmentation(&mut rng, n, 0.06);
        let h = random_segmentation(&mut rng, n, 0.06);
        let exact = p_mu(&r, &h, mu).unwrap();
        let mc = monte_carlo_p_mu(&r, &h, mu, 1_000_000, 100 + k).unwrap();
        let z = (mc.estimate - exact).abs() / mc.std_error.max(1e-12);
        ensure(z <= 3.0, || format!("Monte Carlo off by {z:.2} standard errors on pair {k}"))?;
        worst_z = worst_z.max(z);
    }
    Ok(format!("max |fast - exhaustive| = {worst:.1e} over 500 pairs; max MC deviation {worst_z:.2} SE over 20 pairs"))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r = Segmentation::new(60, vec![30]).unwrap();
    ensure(p_mu(&r, &r, 0.1).unwrap() == 1.0, || "p_mu(ref, ref) != 1".into())?;
    let mut prev = 1.0;
    for d in 1..=10 {
        let h = Segmentation::new(60, vec![30 + d]).unwrap();
        let p = p_mu(&r, &h, 0.1).unwrap();
        ensure(p < prev, || format!("displacement {d} scores {p} >= {prev}"))?;
        prev = p;
    }
    let mean = 18;
    let mu = 1.0 / mean as f64;
    for trial in 0..20 {
        let reference = random_documents(&mut rng, 600, mean);
        let shifted: Vec<usize> = reference.boundaries().iter().map(|&g| g + 1).filter(|&g| g < 600).collect();
        let near = p_mu(&reference, &Segmentation::new(600, shifted).unwrap(), mu).unwrap();
        let all = p_mu(&reference, &Segmentation::all(600), mu).unwrap();
        let none = p_mu(&reference, &Segmentation::none(600), mu).unwrap();
        ensure(all < near && none < near, || {
            format!("trial {trial}: all {all:.3} / none {none:.3} not below off-by-one {near:.3}")
        })?;
        let pr = precision_recall(&reference, &Segmentation::new(600, reference.boundaries().iter().map(|&g| g + 1).filter(|&g| g < 600).collect()).unwrap()).unwrap();
        ensure(pr.f_measure.is_none(), || "off-by-one hypothesis should have zero exact matches".into())?;
    }
    Ok(format!("identity = 1, displacement 1..10 strictly decreasing (last {prev:.4}), all/none below off-by-one on 20 corpora"))
}

struct Triggered {
    corpus: Corpus,
    trigram: Arc<TrigramModel>,
    selected: Vec<segtext::trigger::TriggerPair>,
    training: TriggerTraining,
    planted: HashSet<(TokenId, TokenId)>,
}

/// The 100k-word planted-trigger corpus shared by criteria 4 and 5.
fn triggered_corpus() -> Triggered {
    let (surface, truth) = generate(&SynthConfig { docs: 480, seed: 41, ..Default::default() }).unwrap();
    let vocab = build_vocabulary(surface.tokens(), 20_000).unwrap();
    let corpus = encode(&surface, &vocab);
    let trigram = Arc::new(train_trigram(&corpus, &vocab, DEFAULT_CUTOFF).unwrap());
    let opts = SelectOptions { max_pairs: 2_000, ..Default::default() };
    let selected = select_triggers(&corpus, &vocab, &opts);
    let model = TriggerModel::new(trigram.clone(), selected.clone(), opts.window_n).unwrap();
    let training = train_triggers_iis(&model, &corpus, 5).unwrap();
    let planted = truth.planted_pairs.iter().map(|(s, t)| (vocab.id(s), vocab.id(t))).collect();
    Triggered { corpus, trigram, selected, training, planted }
}

fn criterion_3() -> Check {
    let (surface, _) = generate(&SynthConfig { docs: 150, seed: 3, ..Default::default() }).unwrap();
    let vocab = build_vocabulary(surface.tokens(), 2_000).unwrap();
    ensure(vocab.len() <= 2_000, || "vocabulary too large".into())?;
    let corpus = encode(&surface, &vocab);
    let trigram = Arc::new(train_trigram(&corpus, &vocab, DEFAULT_CUTOFF).unwrap());
    let pairs = select_triggers(&corpus, &vocab, &SelectOptions { max_pairs: 3_000, window_n: 200, ..Default::default() });
    let trig = train_triggers_iis(&TriggerModel::new(trigram.clone(), pairs, 200).unwrap(), &corpus, 2)
        .unwrap()
        .model;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words: Vec<TokenId> = corpus.sentences().iter().flatten().copied().collect();
    let (mut worst_tri, mut worst_exp, mut worst_z): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..100 {
        let mut cache = trig.new_cache();
        let start = rng.gen_range(0..words.len() - 300);
        for &w in &words[start..start + rng.gen_range(0..300)] {
            cache.push(w);
        }
        let ctx = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.2) {
                Vocabulary::SENT_BEGIN_ID
            } else {
                rng.gen_range(Vocabulary::NUM_RESERVED..vocab.len()) as TokenId
            }
        };
        let (w2, w1) = (ctx(&mut rng), ctx(&mut rng));
        let (mut s_tri, mut s_exp, mut dense_z) = (0.0, 0.0, 0.0);
        let boosts = trig.boosts(&cache);
        for w in trigram.predictable() {
            let p = trigram.prob(w, w2, w1).unwrap();
            s_tri += p;
            s_exp += trig.prob(w, &cache, w2, w1).unwrap();
            dense_z += boosts.boost(w).exp() * p;
        }
        worst_tri = worst_tri.max((s_tri - 1.0).abs());
        worst_exp = worst_exp.max((s_exp - 1.0).abs());
        worst_z = worst_z.max((trig.normalizer(&boosts, w2, w1) - dense_z).abs());
    }
    ensure(worst_tri <= 1e-6, || format!("trigram mass off by {worst_tri:e}"))?;
    ensure(worst_exp <= 1e-6, || format!("trigger mass off by {worst_exp:e}"))?;
    ensure(worst_z <= 1e-10, || format!("sparse Z differs from dense Z by {worst_z:e}"))?;
    Ok(format!(
        "|sum - 1|: trigram {worst_tri:.1e}, trigger {worst_exp:.1e}; |Z sparse - dense| {worst_z:.1e} ({} words)",
        vocab.len()
    ))
}

fn criterion_4(t: &Triggered, setup: Duration) -> Check {
    let n_words = t.corpus.n_words();
    ensure((90_000..=110_000).contains(&n_words), || format!("corpus has {n_words} words"))?;
    let mut ll_tri = 0.0;
    let mut tokens = 0usize;
    for s in t.corpus.sentences() {
        ll_tri += t.trigram.sentence_log_prob(s);
        tokens += s.len() + 1;
    }
    let ll_tri = ll_tri / tokens as f64;
    let ll_exp = *t.training.log_likelihood.last().unwrap();
    ensure(ll_exp >= ll_tri, || format!("trigger LL {ll_exp} < trigram LL {ll_tri}"))?;
    let top = t.selected.iter().take(50).filter(|p| t.planted.contains(&(p.s, p.t))).count();
    ensure(top >= 40, || format!("only {top} planted pairs in the top 50"))?;
    Ok(format!(
        "{n_words} words, trained in {:.1}s; mean log p: trigger {ll_exp:.4} >= trigram {ll_tri:.4}; planted pairs in top 50 by MI: {top}/50",
        setup.as_secs_f64()
    ))
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_5(t: &Triggered) -> Check {
    let profile = relevance_profile(&t.training.model, &t.corpus, 20).unwrap();
    let at0 = profile.mean_at(0).ok_or("no data at offset 0")?;
    ensure(at0 < 0.0, || format!("offset 0 relevance {at0} is not negative"))?;
    for k in 10..=20 {
        if let Some(m) = profile.mean_at(k) {
            ensure(m > 0.0, || format!("offset {k} relevance {m} is not positive"))?;
        }
    }
    let offsets: Vec<f64> = (0..=15).map(|k| k as f64).collect();
    let means: Vec<f64> = (0..=15).map(|k| profile.mean_at(k).unwrap_or(f64::NAN)).collect();
    ensure(means.iter().all(|m| m.is_finite()), || "missing offsets in 0..15".into())?;
    let rho = spearman(&offsets, &means);
    ensure(rho > 0.8, || format!("Spearman {rho:.3} <= 0.8"))?;
    Ok(format!(
        "offset 0: {at0:.4}; offset 10: {:.4}; offset 15: {:.4}; Spearman over 0..15: {rho:.3}",
        profile.mean_at(10).unwrap(),
        profile.mean_at(15).unwrap()
    ))
}

/// Mean log-likelihood of `logits + alpha * firing`, computed directly.
fn direct_ll(base: &[f64], firing: &[bool], labels: &[bool], alpha: f64) -> f64 {
    let mut total = 0.0;
    for ((&x, &f), &y) in base.iter().zip(firing).zip(labels) {
        let x = if f { (x + alpha).clamp(-700.0, 36.0) } else { x };
        let q_yes = 1.0 / (1.0 + (-x).exp());
        total += if y { q_yes.ln() } else { (1.0 - q_yes).ln() };
    }
    total / labels.len() as f64
}

/// Coarse-to-fine grid maximization over [-15, 15].
fn grid_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut best = (0.0, f(0.0));
    let mut lo: f64 = -15.0;
    let mut hi: f64 = 15.0;
    for step in [1e-2f64, 1e-4, 1e-6] {
        let n = ((hi - lo) / step).round() as usize;
        for i in 0..=n {
            let a = lo + i as f64 * step;
            let v = f(a);
            if v > best.1 {
                best = (a, v);
            }
        }
        lo = (best.0 - 2.0 * step).max(-15.0);
        hi = (best.0 + 2.0 * step).min(15.0);
    }
    best
}

fn criterion_6() -> Check {
    let cfg = SynthConfig { docs: 120, seed: 61, opener_prob: 1.0, ..Default::default() };
    let (surface, _) = generate(&cfg).unwrap();
    let vocab = build_vocabulary(surface.tokens(), 20_000).unwrap();
    let corpus = encode(&surface, &vocab);
    let trigram = Arc::new(train_trigram(&corpus, &vocab, DEFAULT_CUTOFF).unwrap());
    let pairs = select_triggers(&corpus, &vocab, &SelectOptions { max_pairs: 500, ..Default::default() });
    let trig = train_triggers_iis(&TriggerModel::new(trigram, pairs, 500).unwrap(), &corpus, 3).unwrap().model;
    let events: EventSet = extract_events(&corpus, &trig).unwrap();
    let labels = events.labels();
    let q0 = events.yes_rate();

    // single feature: closed-form log-odds
    let cue = FeatureTemplate::word(WordTemplate::NextSentences(1), vocab.id(OPENER));
    let fires: Vec<bool> = events.events().map(|e| segtext::features::evaluate_feature(&cue, &e.context)).collect();
    let n_f = fires.iter().filter(|&&f| f).count() as f64;
    let k_f = fires.iter().zip(labels).filter(|(&f, &y)| f && y).count() as f64;
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let closed = logit(k_f / n_f) - logit(q0);
    let fit = iis_fit(&BoundaryModel::new(q0, vec![cue], vec![0.0]).unwrap(), &events, 5_000, 1e-12).unwrap();
    let lam_err = (fit.model.lambdas()[0] - closed).abs();
    ensure(lam_err <= 1e-6, || format!("IIS weight off closed form by {lam_err:e}"))?;

    // induction: trace monotone, planted cue first
    let candidates = generate_candidates(&vocab, vocab.len() - Vocabulary::NUM_RESERVED).unwrap();
    let index = CandidateIndex::build(&candidates, events.gaps());
    let opts = InduceOptions { num_features: 12, refit_every: 3, ..Default::default() };
    let ind = induce(&events, &candidates, &index, &opts).unwrap();
    ensure(ind.selections.first().map(|s| s.feature) == Some(cue), || {
        format!("first selection is {:?}", ind.selections.first().map(|s| s.feature.describe(&vocab)))
    })?;
    let mut prev = ind.prior_log_likelihood;
    for s in &ind.selections {
        ensure(s.log_likelihood >= prev - 1e-12, || "induction log-likelihood decreased".into())?;
        prev = s.log_likelihood;
    }

    // gains against a grid oracle, from a partially induced model
    let partial = BoundaryModel::new(
        q0,
        ind.model.features()[..3].to_vec(),
        ind.model.lambdas()[..3].to_vec(),
    )
    .unwrap();
    let base: Vec<f64> = events.gaps().contexts().map(|c| partial.logit(&c)).collect();
    let prior_ll = direct_ll(&base, &vec![false; labels.len()], labels, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let firing_candidates: Vec<usize> = (0..candidates.len())
        .filter(|&c| !index.firing(c).is_empty() && !partial.features().contains(&candidates[c]))
        .collect();
    let (mut worst, mut largest): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let c = firing_candidates[rng.gen_range(0..firing_candidates.len())];
        let g = gain(&partial, &candidates[c], &events).unwrap();
        let fires: Vec<bool> = events
            .events()
            .map(|e| segtext::features::evaluate_feature(&candidates[c], &e.context))
            .collect();
        let (_, best) = grid_max(|a| direct_ll(&base, &fires, labels, a));
        worst = worst.max((g.gain - (best - prior_ll)).abs());
        largest = largest.max(g.gain);
    }
    ensure(worst <= 1e-6, || format!("gain differs from the grid oracle by {worst:e}"))?;
    Ok(format!(
        "closed-form λ error {lam_err:.1e}; max gain error {worst:.1e} over 50 candidates (largest gain {largest:.2e}); {} selections, LL {:.4} -> {:.4}, first = {}",
        ind.selections.len(),
        ind.prior_log_likelihood,
        prev,
        cue.describe(&vocab)
    ))
}

fn criterion_7() -> Check {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let (train, _) = generate(&SynthConfig { docs: 200, seed: 7, ..Default::default() }).unwrap();
        let (held, _) = generate(&SynthConfig { docs: 60, seed: 1007, ..Default::default() }).unwrap();
        let (test, _) = generate(&SynthConfig { docs: 100, seed: 2007, ..Default::default() }).unwrap();
        let cfg = PipelineConfig {
            induce: InduceOptions { num_features: 30, ..Default::default() },
            ..Default::default()
        };
        let sys = train_system(&train, &cfg).unwrap();
        let model = &sys.induction.model;
        let trig = sys.trigger_model();
        let train_corpus = encode(&train, &sys.vocab);
        let mean_len = (train_corpus.n_sentences() as f64 / train_corpus.n_docs() as f64).round() as usize;
        let mu = 1.0 / mean_len as f64;
        let held = encode(&held, &sys.vocab);
        let held_probs = score_gaps(model, trig, held.sentences()).unwrap();
        let tuned = tune_on_probs(&held_probs, &held.reference_segmentation(), mu).unwrap();
        let test = encode(&test, &sys.vocab);
        let reference = test.reference_segmentation();
        let probs = score_gaps(model, trig, test.sentences()).unwrap();
        let hyp = decide(&probs, &tuned.config).unwrap();
        let score = |s: &Segmentation| (p_mu(&reference, s, mu).unwrap(), precision_recall(&reference, s).unwrap().f_measure.unwrap_or(0.0));
        let n = test.n_sentences();
        let base = |k| score(&baseline(k, n, reference.doc_count(), mean_len, 7).unwrap());
        let (induced, f_induced) = score(&hyp);
        let (random, f_random) = base(BaselineKind::Random);
        let (all, f_all) = base(BaselineKind::All);
        let (none, f_none) = base(BaselineKind::None);
        let (even, f_even) = base(BaselineKind::Even);
        ensure(induced > even && even >= random && random > all.max(none), || {
            format!("P_mu ordering violated: induced {induced:.3}, even {even:.3}, random {random:.3}, all {all:.3}, none {none:.3}")
        })?;
        let f_best_base = f_random.max(f_all).max(f_none).max(f_even);
        ensure(f_induced > f_best_base, || format!("F {f_induced:.3} does not beat baselines ({f_best_base:.3})"))?;
        Ok(format!(
            "P_mu induced {:.1}% > even {:.1}% >= random {:.1}% > max(all {:.1}%, none {:.1}%); F induced {:.1}% vs best baseline {:.1}% (alpha {}, eps {})",
            100.0 * induced,
            100.0 * even,
            100.0 * random,
            100.0 * all,
            100.0 * none,
            100.0 * f_induced,
            100.0 * f_best_base,
            tuned.config.alpha,
            tuned.config.epsilon
        ))
    })
}

/// Highest-priority maximal admissible subset, by exhaustive enumeration.
fn decide_oracle(probs: &[f64], cfg: &SegmenterConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probs.len()).filter(|&e| probs[e] >= cfg.alpha).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let m = order.len();
    let mut best: Option<Vec<bool>> = None;
    for mask in 0u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|&k| mask >> k & 1 == 1).map(|k| order[k] + 1).collect();
        let admissible = chosen.iter().all(|&a| chosen.iter().all(|&b| a == b || a.abs_diff(b) >= cfg.epsilon));
        if !admissible {
            continue;
        }
        let maximal = (0..m).filter(|&k| mask >> k & 1 == 0).all(|k| {
            let g = order[k] + 1;
            chosen.iter().any(|&a| a.abs_diff(g) < cfg.epsilon)
        });
        if !maximal {
            continue;
        }
        // priority-ordered indicator vector, compared lexicographically
        let key: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
        if best.as_ref().is_none_or(|b| key > *b) {
            best = Some(key);
        }
    }
    let key = best.unwrap_or_default();
    let mut out: Vec<usize> = (0..m).filter(|&k| key[k]).map(|k| order[k] + 1).collect();
    out.sort_unstable();
    out
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..1000 {
        let len = rng.gen_range(1..=12);
        let probs: Vec<f64> = (0..len).map(|_| rng.gen_range(0..=10) as f64 / 10.0).collect();
        let cfg = SegmenterConfig::new(rng.gen_range(1..10) as f64 / 10.0, rng.gen_range(1..=4)).unwrap();
        let got = decide(&probs, &cfg).unwrap();
        let want = decide_oracle(&probs, &cfg);
        ensure(got.boundaries() == want.as_slice(), || {
            format!("case {case}: {probs:?} {cfg:?} -> {:?}, oracle {want:?}", got.boundaries())
        })?;
    }
    for case in 0..5 {
        let n = 120;
        let reference = random_documents(&mut rng, n, 15);
        let probs: Vec<f64> = (1..n)
            .map(|g| {
                let noise: f64 = rng.gen_range(0.0..0.6);
                if reference.is_boundary(g) { (noise + 0.4).min(1.0) } else { noise }
            })
            .collect();
        let mu = 1.0 / 15.0;
        let tuned = tune_on_probs(&probs, &reference, mu).unwrap();
        let mut best: Option<(SegmenterConfig, f64)> = None;
        for alpha in alpha_grid() {
            for epsilon in EPSILON_GRID {
                let cfg = SegmenterConfig::new(alpha, epsilon).unwrap();
                let v = p_mu_exhaustive(&reference, &decide(&probs, &cfg).unwrap(), mu).unwrap();
                if best.is_none_or(|(_, b)| v > b + 1e-12) {
                    best = Some((cfg, v));
                }
            }
        }
        let (cfg, v) = best.unwrap();
        ensure(tuned.config == cfg && (tuned.p_mu - v).abs() < 1e-12, || {
            format!("case {case}: tune chose {:?} ({}), grid argmax {cfg:?} ({v})", tuned.config, tuned.p_mu)
        })?;
    }
    Ok("decide matches the exhaustive oracle on 1000 cases; tune matches the exhaustive grid argmax on 5 heldout sets".into())
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, budget: Duration, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= budget {
                Ok(d)
            } else {
                Err(format!("took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("PASS criterion {n} ({name}, {:.1}s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {n} ({name}, {:.1}s): {why}", elapsed.as_secs_f64());
            }
        }
    };
    let secs = Duration::from_secs;
    report(1, "metric exactness", secs(60), &mut criterion_1);
    report(2, "metric sanity", secs(60), &mut criterion_2);
    report(3, "LM normalization", secs(120), &mut criterion_3);
    let start = Instant::now();
    let triggered = triggered_corpus();
    let shared = start.elapsed();
    report(4, "trigger training dominance", secs(300).saturating_sub(shared), &mut || criterion_4(&triggered, shared));
    report(5, "relevance profile shape", secs(120), &mut || criterion_5(&triggered));
    report(6, "induction correctness", secs(180), &mut criterion_6);
    report(7, "end-to-end ordering", secs(600), &mut criterion_7);
    report(8, "decision procedure", secs(120), &mut criterion_8);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
