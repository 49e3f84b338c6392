//! Audio → features → online detector → detection log → metrics.

mod common;

use evidet::frontend::{FeatureExtractor, N_MELS, SEGMENT_SECONDS};
use evidet::metrics::DecisionTimeline;
use evidet::metrics::{early_f1, evaluate_corpus, match_events, MatchConfig};
use evidet::model::{ModelShape, PENetParams};
use evidet::stream::{
    evidence_offline, read_detection_log, timeline_from_evidence, DecisionRule, DetectionLogWriter, Detector,
    DetectorConfig,
};
use evidet::synthgen::{class_names, generate_clip, SynthConfig};

#[test]
fn ten_second_clip_has_the_documented_shapes() {
    let clip = generate_clip(&SynthConfig::default(), 0).unwrap();
    assert_eq!(clip.audio.len(), 160_000);
    let mel = FeatureExtractor::new().extract(&clip.audio).unwrap();
    assert_eq!(mel.frames().shape(), (626, 128));
    let segs = evidet::frontend::segment_stream(&mel, 4);
    assert_eq!(segs.len(), 156);
    assert!(segs.iter().all(|s| s.frames.shape() == (4, 128)));
}

#[test]
fn detection_log_has_one_row_per_segment_and_class() {
    let cfg = SynthConfig {
        clips: 2,
        ..SynthConfig::default()
    };
    let (_, eval) = common::corpus(&cfg);
    let params = PENetParams::init(
        ModelShape {
            num_classes: 4,
            hidden: 32,
            mel_bins: N_MELS,
        },
        7,
    );
    let names = class_names(4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("detections.csv");
    for n in [0, 6] {
        let mut log = DetectionLogWriter::create(&path).unwrap();
        let det_cfg = DetectorConfig {
            forward: n,
            ..DetectorConfig::default()
        };
        for clip in &eval {
            let mut det = Detector::new(&params, det_cfg.clone()).unwrap();
            let mut decisions = Vec::new();
            for seg in clip.segments.iter().cloned() {
                decisions.extend(det.step(seg).unwrap());
            }
            decisions.extend(det.finish().unwrap());
            for d in &decisions {
                log.write(&clip.id, d, &names).unwrap();
            }
            // Every decision is available no earlier than its forward context.
            for d in &decisions {
                assert!(d.available_time + 1e-12 >= d.start_time + SEGMENT_SECONDS);
            }
        }
        log.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count() - 1, 2 * 156 * 4);
        let back = read_detection_log(&path, &names).unwrap();
        for clip in &eval {
            let offline = evidence_offline(&params, &clip.segments, det_cfg.context, n).unwrap();
            let tl = timeline_from_evidence(&offline, &det_cfg, 4);
            assert_eq!(back[&clip.id], tl.decisions);
        }
    }
}

#[test]
fn ground_truth_as_predictions_scores_perfectly() {
    let cfg = SynthConfig {
        clips: 5,
        ..SynthConfig::default()
    };
    let (train, eval) = common::corpus(&cfg);
    let timelines: Vec<DecisionTimeline> = train
        .iter()
        .map(|c| DecisionTimeline {
            segment_seconds: SEGMENT_SECONDS,
            wait_seconds: 0.0,
            num_classes: 4,
            decisions: c.labels.clone(),
        })
        .collect();
    let stats = evaluate_corpus(
        timelines.iter().zip(eval.iter().map(|c| c.annotations.as_slice())),
        &MatchConfig::default(),
    )
    .unwrap();
    assert_eq!(stats.f1, Some(1.0));
    assert!(stats.mean_delay.unwrap() <= SEGMENT_SECONDS);
    for (tl, clip) in timelines.iter().zip(&eval) {
        let recs = match_events(tl, &clip.annotations, &MatchConfig::default()).unwrap();
        assert_eq!(early_f1(&recs).fn_, 0);
    }
}

#[test]
fn zero_threshold_vacuity_rule_never_fires() {
    let (_, eval) = common::corpus(&SynthConfig {
        clips: 1,
        ..SynthConfig::default()
    });
    let params = PENetParams::init(
        ModelShape {
            num_classes: 4,
            hidden: 8,
            mel_bins: N_MELS,
        },
        1,
    );
    let ev = evidence_offline(&params, &eval[0].segments, 3, 0).unwrap();
    let det = DetectorConfig {
        rule: DecisionRule::Vacuity(1e-9),
        ..DetectorConfig::default()
    };
    let tl = timeline_from_evidence(&ev, &det, 4);
    assert!(tl.decisions.iter().flatten().all(|d| !d));
}
