//! Train on one synthetic corpus, segment another, and score the result.

use segtext::corpus::encode;
use segtext::metric::{evaluate, MetricReport};
use segtext::pipeline::{train_system, PipelineConfig};
use segtext::segmenter::{decide, score_gaps, SegmenterConfig};
use segtext::synth::{generate, SynthConfig};

fn main() -> segtext::Result<()> {
    let (train, _) = generate(&SynthConfig::default())?;
    let (test, _) = generate(&SynthConfig { docs: 60, seed: 9, ..Default::default() })?;
    let sys = train_system(&train, &PipelineConfig::default())?;
    for s in sys.induction.selections.iter().take(5) {
        println!("{:>10.4}  {}", s.gain, s.feature.describe(&sys.vocab));
    }
    let test = encode(&test, &sys.vocab);
    let probs = score_gaps(&sys.induction.model, sys.trigger_model(), test.sentences())?;
    let hyp = decide(&probs, &SegmenterConfig::new(0.3, 3)?)?;
    let report = evaluate(&test.reference_segmentation(), &hyp, 1.0 / 18.0)?;
    print!("{}", MetricReport::table(&[("induced", &report)]));
    Ok(())
}
