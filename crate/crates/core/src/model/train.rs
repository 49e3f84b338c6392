use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::Predictor;
use super::params::{Gradients, PENetParams, TensorId};
use super::{rasterize_labels, PENetConfig};
use crate::error::{Error, Result};
use crate::frontend::{build_window, segment_stream, MelFrames, Segment, SEGMENT_FRAMES};
use crate::metrics::EventAnnotation;
use crate::seed::{derive_indexed, derive_seed};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Streaming segments of one clip with their per-segment class targets.
#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub segments: Vec<Segment>,
    pub labels: Vec<Vec<bool>>,
}

impl LabeledClip {
    pub fn new(features: &MelFrames, annotations: &[EventAnnotation], num_classes: usize) -> Self {
        let segments = segment_stream(features, SEGMENT_FRAMES);
        let labels = rasterize_labels(annotations, num_classes, segments.len());
        Self { segments, labels }
    }
}

/// Every `(clip, segment)` pair in corpus order.
pub fn window_dataset(clips: &[LabeledClip]) -> Vec<(usize, usize)> {
    clips
        .iter()
        .enumerate()
        .flat_map(|(c, clip)| (0..clip.segments.len()).map(move |t| (c, t)))
        .collect()
}

/// Per-mel-bin mean and standard deviation over all training frames.
pub fn input_statistics(clips: &[LabeledClip]) -> (Vec<f32>, Vec<f32>) {
    let bins = clips
        .iter()
        .flat_map(|c| c.segments.first())
        .map(|s| s.frames.cols())
        .next()
        .unwrap_or(0);
    let mut sum = vec![0.0f64; bins];
    let mut sq = vec![0.0f64; bins];
    let mut count = 0usize;
    for seg in clips.iter().flat_map(|c| &c.segments) {
        for row in seg.frames.iter_rows() {
            for ((s, q), &v) in sum.iter_mut().zip(&mut sq).zip(row) {
                *s += v as f64;
                *q += (v as f64).powi(2);
            }
            count += 1;
        }
    }
    let n = count.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| ((q / n - m * m).max(0.0).sqrt().max(1e-3)) as f32)
        .collect();
    (mean.into_iter().map(|m| m as f32).collect(), std)
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn update(&mut self, params: &mut PENetParams, grads: &Gradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let c2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for t in TensorId::ALL.into_iter().filter(|t| t.trainable()) {
            let range = params.range(t);
            let g = &grads.as_slice()[range.clone()];
            let p = &mut params.as_mut_slice()[range.clone()];
            let m = &mut self.m[range.clone()];
            let v = &mut self.v[range];
            for i in 0..p.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let step = lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPSILON);
                p[i] = (p[i] as f64 - step) as f32;
            }
        }
    }
}

/// Everything needed to continue a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: PENetParams,
    pub adam: AdamState,
    pub epochs_completed: usize,
    /// Mean per-window loss of each completed epoch.
    pub loss_trace: Vec<f64>,
}

pub type TrainOutcome = TrainState;

impl TrainState {
    /// Fresh parameters with input statistics fitted to `clips`.
    pub fn fresh(config: &PENetConfig, clips: &[LabeledClip]) -> Self {
        let mut params = PENetParams::init(config.shape(), derive_seed(config.seed, "init"));
        let (mean, std) = input_statistics(clips);
        if mean.len() == config.mel_bins {
            params.tensor_mut(TensorId::NormMean).copy_from_slice(&mean);
            params.tensor_mut(TensorId::NormStd).copy_from_slice(&std);
        }
        let len = params.len();
        Self {
            params,
            adam: AdamState::new(len),
            epochs_completed: 0,
            loss_trace: Vec::new(),
        }
    }
}

/// Adam on the Beta loss over shuffled mini-batches of windows, running
/// until `config.epochs` epochs have completed in total. The shuffle of
/// epoch `e` depends only on `(seed, e)`, so a resumed run reproduces the
/// uninterrupted one.
pub fn train(
    config: &PENetConfig,
    clips: &[LabeledClip],
    resume: Option<TrainState>,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainState> {
    config.validate()?;
    let windows = window_dataset(clips);
    if windows.is_empty() {
        return Err(Error::Empty("training corpus has no segments"));
    }
    for (i, clip) in clips.iter().enumerate() {
        if clip.labels.len() != clip.segments.len() || clip.labels.iter().any(|l| l.len() != config.num_classes) {
            return Err(Error::shape(
                format!(
                    "{} segments x {} classes of labels in clip {i}",
                    clip.segments.len(),
                    config.num_classes
                ),
                format!("{} label rows", clip.labels.len()),
            ));
        }
    }
    let mut state = match resume {
        Some(s) => {
            if s.params.shape() != config.shape() {
                return Err(Error::shape(
                    format!("{:?}", config.shape()),
                    format!("{:?}", s.params.shape()),
                ));
            }
            s
        }
        None => TrainState::fresh(config, clips),
    };

    let shuffle_seed = derive_seed(config.seed, "shuffle");
    let (m, n) = (config.context, config.forward);
    let segment_refs: Vec<Vec<&Segment>> = clips.iter().map(|c| c.segments.iter().collect()).collect();
    let mut grads = Gradients::zeros(config.shape());

    for epoch in state.epochs_completed..config.epochs {
        let mut order = windows.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_indexed(
            shuffle_seed,
            epoch as u64,
        )));
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let predictor = Predictor::new(&state.params);
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &(c, t) in batch {
                let window = build_window(&segment_refs[c], t, m, n)?;
                batch_loss += predictor.accumulate(&window.frames, &clips[c].labels[t], &mut grads, scale)?;
            }
            if !batch_loss.is_finite() || grads.as_slice().iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    loss: batch_loss,
                });
            }
            total += batch_loss;
            state.adam.update(&mut state.params, &grads, config.learning_rate);
        }
        if !state.params.is_finite() {
            return Err(Error::Diverged { epoch, loss: f64::NAN });
        }
        let mean = total / windows.len() as f64;
        state.loss_trace.push(mean);
        state.epochs_completed = epoch + 1;
        on_epoch(epoch, mean);
    }
    Ok(state)
}
