#![allow(dead_code)]

use evidet::frontend::{segment_stream, FeatureExtractor, SEGMENT_FRAMES};
use evidet::metrics::EvalClip;
use evidet::model::LabeledClip;
use evidet::synthgen::{generate_clip, SynthConfig};

/// Synthetic clips as training examples and as evaluation clips.
pub fn corpus(cfg: &SynthConfig) -> (Vec<LabeledClip>, Vec<EvalClip>) {
    let fx = FeatureExtractor::new();
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for i in 0..cfg.clips {
        let clip = generate_clip(cfg, i).unwrap();
        let mel = fx.extract(&clip.audio).unwrap();
        train.push(LabeledClip::new(&mel, &clip.events, cfg.num_classes));
        eval.push(EvalClip {
            id: clip.id,
            segments: segment_stream(&mel, SEGMENT_FRAMES),
            annotations: clip.events,
        });
    }
    (train, eval)
}

/// Two well-separated classes at high SNR.
pub fn separable(clips: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        num_classes: 2,
        clips,
        snr_db: (10.0, 15.0),
        seed,
        ..SynthConfig::default()
    }
}
