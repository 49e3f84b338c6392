//! End-to-end training runs on small synthetic corpora.

mod common;

use evidet::frontend::build_window;
use evidet::model::window_dataset;
use evidet::model::{load_checkpoint, save_checkpoint, train, Checkpoint, PENetConfig, Predictor, TrainState};

fn config(epochs: usize) -> PENetConfig {
    PENetConfig {
        num_classes: 2,
        epochs,
        learning_rate: 3e-3,
        ..PENetConfig::default()
    }
}

/// Mean per-window loss of `state` over the whole corpus.
fn corpus_loss(cfg: &PENetConfig, state: &TrainState, clips: &[evidet::model::LabeledClip]) -> f64 {
    let predictor = Predictor::new(&state.params);
    let windows = window_dataset(clips);
    let total: f64 = windows
        .iter()
        .map(|&(c, t)| {
            let refs: Vec<_> = clips[c].segments.iter().collect();
            let w = build_window(&refs, t, cfg.context, cfg.forward).unwrap();
            let out = predictor.evidence(&w.frames).unwrap();
            evidet::model::beta_loss(std::slice::from_ref(&out), std::slice::from_ref(&clips[c].labels[t])).unwrap()
        })
        .sum();
    total / windows.len() as f64
}

#[test]
fn separable_corpus_loss_drops_below_thirty_percent() {
    let (clips, eval) = common::corpus(&common::separable(6, 21));
    let cfg = config(30);
    let initial = corpus_loss(&cfg, &TrainState::fresh(&cfg, &clips), &clips);
    let state = train(&cfg, &clips, None, |_, _| {}).unwrap();
    let last = corpus_loss(&cfg, &state, &clips);
    assert!(last < 0.3 * initial, "initial {initial:.4}, final {last:.4}");
    assert!(state.params.is_finite());
    assert_eq!(state.loss_trace.len(), 30);

    // Smoothed trace (3-epoch means) never rises.
    let smooth: Vec<f64> = state
        .loss_trace
        .windows(3)
        .map(|w| w.iter().sum::<f64>() / 3.0)
        .collect();
    assert!(smooth.windows(2).all(|w| w[1] <= w[0] * 1.02), "{:?}", state.loss_trace);

    // Positive evidence of a class is larger during its events than in silence.
    let predictor = Predictor::new(&state.params);
    for k in 0..2 {
        let (mut on, mut off) = (Vec::new(), Vec::new());
        for (clip, labels) in eval.iter().zip(clips.iter().map(|c| &c.labels)) {
            let refs: Vec<_> = clip.segments.iter().collect();
            for t in 0..refs.len() {
                let quiet = labels[t].iter().all(|y| !y);
                if !labels[t][k] && !quiet {
                    continue;
                }
                let w = build_window(&refs, t, cfg.context, cfg.forward).unwrap();
                let alpha = predictor.evidence(&w.frames).unwrap().evidence[k].alpha();
                if labels[t][k] {
                    on.push(alpha)
                } else {
                    off.push(alpha)
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            !on.is_empty() && mean(&on) > mean(&off),
            "class {k}: {} vs {}",
            mean(&on),
            mean(&off)
        );
    }
}

#[test]
fn fixed_seed_gives_identical_runs() {
    let (clips, _) = common::corpus(&common::separable(2, 3));
    let a = train(&config(2), &clips, None, |_, _| {}).unwrap();
    let b = train(&config(2), &clips, None, |_, _| {}).unwrap();
    assert_eq!(a, b);
    let other = PENetConfig { seed: 1, ..config(2) };
    assert_ne!(train(&other, &clips, None, |_, _| {}).unwrap().loss_trace, a.loss_trace);
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let (clips, _) = common::corpus(&common::separable(2, 4));
    let cfg = PENetConfig {
        learning_rate: 0.0,
        ..config(2)
    };
    let fresh = TrainState::fresh(&cfg, &clips);
    let state = train(&cfg, &clips, None, |_, _| {}).unwrap();
    assert_eq!(state.params, fresh.params);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let (clips, _) = common::corpus(&common::separable(2, 5));
    let full = train(&config(4), &clips, None, |_, _| {}).unwrap();
    let half = train(&config(2), &clips, None, |_, _| {}).unwrap();
    let resumed = train(&config(4), &clips, Some(half.clone()), |_, _| {}).unwrap();
    assert_eq!(resumed, full);

    // Through a checkpoint the optimiser moments are rounded to f32; the
    // continued trace stays within 10% of the uninterrupted one.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.ckpt");
    let ckpt = Checkpoint {
        config: config(2),
        class_names: vec!["harm0".into(), "band1".into()],
        state: half,
    };
    save_checkpoint(&path, &ckpt).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let resumed = train(&config(4), &clips, Some(loaded.state), |_, _| {}).unwrap();
    for (a, b) in resumed.loss_trace.iter().zip(&full.loss_trace) {
        assert!(
            (a - b).abs() <= 0.1 * b,
            "{:?} vs {:?}",
            resumed.loss_trace,
            full.loss_trace
        );
    }
}
