use super::loss::{beta_loss_term, beta_loss_term_grad};
use super::params::{Gradients, ModelShape, PENetParams, TensorId};
use super::EvidenceOutput;
use crate::error::{Error, Result};
use crate::frontend::FeatureWindow;
use crate::matrix::Matrix;
use crate::opinion::BetaEvidence;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out = W x + b` for row-major `W` (rows = out.len()).
fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for ((o, row), bias) in out.iter_mut().zip(w.chunks_exact(cols)).zip(b) {
        *o = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += W x`.
fn matvec_add(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `dx += Wᵀ dy`.
fn matvec_t_add(w: &[f64], dy: &[f64], dx: &mut [f64]) {
    let cols = dx.len();
    for (row, &d) in w.chunks_exact(cols).zip(dy) {
        if d != 0.0 {
            for (o, &a) in dx.iter_mut().zip(row) {
                *o += a * d;
            }
        }
    }
}

/// `g += dy ⊗ x`.
fn outer_add(g: &mut [f64], dy: &[f64], x: &[f64]) {
    let cols = x.len();
    for (row, &d) in g.chunks_exact_mut(cols).zip(dy) {
        if d != 0.0 {
            for (o, &v) in row.iter_mut().zip(x) {
                *o += d * v;
            }
        }
    }
}

/// Double-precision copy of the parameters, ready for evaluation.
#[derive(Debug, Clone)]
pub struct Predictor {
    shape: ModelShape,
    params: PENetParams,
    data: Vec<f64>,
    inv_std: Vec<f64>,
}

/// Activations recorded during a forward pass for backpropagation.
pub(crate) struct Trace {
    steps: usize,
    x: Vec<f64>,
    a: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    h_last: Vec<f64>,
    raw: Vec<f64>,
}

impl Predictor {
    pub fn new(params: &PENetParams) -> Self {
        let data: Vec<f64> = params.as_slice().iter().map(|&v| v as f64).collect();
        let inv_std = params
            .tensor(TensorId::NormStd)
            .iter()
            .map(|&s| 1.0 / s as f64)
            .collect();
        Self {
            shape: params.shape(),
            params: params.clone(),
            data,
            inv_std,
        }
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    fn t(&self, id: TensorId) -> &[f64] {
        &self.data[self.params.range(id)]
    }

    fn check_frames(&self, frames: &Matrix<f32>) -> Result<()> {
        if frames.cols() != self.shape.mel_bins || frames.rows() == 0 {
            return Err(Error::shape(
                format!("non-empty window of {} mel bins", self.shape.mel_bins),
                format!("{}x{}", frames.rows(), frames.cols()),
            ));
        }
        Ok(())
    }

    pub(crate) fn trace(&self, frames: &Matrix<f32>) -> Trace {
        let h = self.shape.hidden;
        let mel = self.shape.mel_bins;
        let steps = frames.rows();
        let mut tr = Trace {
            steps,
            x: Vec::with_capacity(steps * mel),
            a: vec![0.0; steps * h],
            h_prev: vec![0.0; steps * h],
            z: vec![0.0; steps * h],
            r: vec![0.0; steps * h],
            c: vec![0.0; steps * h],
            h_last: vec![0.0; h],
            raw: vec![0.0; 2 * self.shape.num_classes],
        };
        let mean = self.t(TensorId::NormMean);
        for row in frames.iter_rows() {
            tr.x.extend(
                row.iter()
                    .zip(mean)
                    .zip(&self.inv_std)
                    .map(|((&v, m), s)| (v as f64 - m) * s),
            );
        }

        let mut state = vec![0.0; h];
        let mut pre = vec![0.0; h];
        let mut rh = vec![0.0; h];
        for t in 0..steps {
            let span = t * h..(t + 1) * h;
            let x = &tr.x[t * mel..(t + 1) * mel];
            affine(
                self.t(TensorId::ProjW),
                self.t(TensorId::ProjB),
                x,
                &mut tr.a[span.clone()],
            );
            let a = &tr.a[span.clone()];
            tr.h_prev[span.clone()].copy_from_slice(&state);

            affine(self.t(TensorId::GateZW), self.t(TensorId::GateZB), a, &mut pre);
            matvec_add(self.t(TensorId::GateZU), &state, &mut pre);
            for (z, p) in tr.z[span.clone()].iter_mut().zip(&pre) {
                *z = sigmoid(*p);
            }
            affine(self.t(TensorId::GateRW), self.t(TensorId::GateRB), a, &mut pre);
            matvec_add(self.t(TensorId::GateRU), &state, &mut pre);
            for (r, p) in tr.r[span.clone()].iter_mut().zip(&pre) {
                *r = sigmoid(*p);
            }
            for ((o, r), s) in rh.iter_mut().zip(&tr.r[span.clone()]).zip(&state) {
                *o = r * s;
            }
            affine(self.t(TensorId::CandW), self.t(TensorId::CandB), a, &mut pre);
            matvec_add(self.t(TensorId::CandU), &rh, &mut pre);
            for (c, p) in tr.c[span.clone()].iter_mut().zip(&pre) {
                *c = p.tanh();
            }
            for ((s, z), c) in state.iter_mut().zip(&tr.z[span.clone()]).zip(&tr.c[span.clone()]) {
                *s = (1.0 - z) * *s + z * c;
            }
        }
        tr.h_last.copy_from_slice(&state);
        affine(self.t(TensorId::HeadW), self.t(TensorId::HeadB), &state, &mut tr.raw);
        tr
    }

    fn evidence_of(raw: &[f64]) -> EvidenceOutput {
        let evidence = raw
            .chunks_exact(2)
            .map(|pair| {
                BetaEvidence::new(pair[0].max(0.0) + 1.0, pair[1].max(0.0) + 1.0)
                    .expect("ReLU evidence plus one is at least one")
            })
            .collect();
        EvidenceOutput { evidence }
    }

    /// Per-class evidence for a stack of frames.
    pub fn evidence(&self, frames: &Matrix<f32>) -> Result<EvidenceOutput> {
        self.check_frames(frames)?;
        Ok(Self::evidence_of(&self.trace(frames).raw))
    }

    /// Adds `scale · ∂L/∂θ` into `grads` and returns the unscaled loss.
    pub(crate) fn accumulate(
        &self,
        frames: &Matrix<f32>,
        labels: &[bool],
        grads: &mut Gradients,
        scale: f64,
    ) -> Result<f64> {
        self.check_frames(frames)?;
        if labels.len() != self.shape.num_classes {
            return Err(Error::shape(format!("{} labels", self.shape.num_classes), labels.len()));
        }
        let tr = self.trace(frames);
        let out = Self::evidence_of(&tr.raw);
        let mut loss = 0.0;
        let mut d_raw = vec![0.0; tr.raw.len()];
        for (k, (&ev, &y)) in out.evidence.iter().zip(labels).enumerate() {
            loss += beta_loss_term(ev, y);
            let (ga, gb) = beta_loss_term_grad(ev, y);
            // d evidence / d raw is 1 above the kink, 0 at or below it.
            d_raw[2 * k] = if tr.raw[2 * k] > 0.0 { scale * ga } else { 0.0 };
            d_raw[2 * k + 1] = if tr.raw[2 * k + 1] > 0.0 { scale * gb } else { 0.0 };
        }
        self.backward(&tr, &d_raw, grads);
        Ok(loss)
    }

    fn backward(&self, tr: &Trace, d_raw: &[f64], grads: &mut Gradients) {
        let h = self.shape.hidden;
        let mel = self.shape.mel_bins;
        let ranges: Vec<_> = TensorId::ALL.iter().map(|&t| self.params.range(t)).collect();
        let g = grads.as_mut_slice();
        let idx = |t: TensorId| TensorId::ALL.iter().position(|&x| x == t).unwrap();
        let slot = |t: TensorId| ranges[idx(t)].clone();

        outer_add(&mut g[slot(TensorId::HeadW)], d_raw, &tr.h_last);
        for (o, d) in g[slot(TensorId::HeadB)].iter_mut().zip(d_raw) {
            *o += d;
        }
        let mut dh = vec![0.0; h];
        matvec_t_add(self.t(TensorId::HeadW), d_raw, &mut dh);

        let mut dhp = vec![0.0; h];
        let mut dcp = vec![0.0; h];
        let mut dzp = vec![0.0; h];
        let mut drp = vec![0.0; h];
        let mut drh = vec![0.0; h];
        let mut rh = vec![0.0; h];
        let mut da = vec![0.0; h];
        for t in (0..tr.steps).rev() {
            let span = t * h..(t + 1) * h;
            let (hp, z, r, c, a) = (
                &tr.h_prev[span.clone()],
                &tr.z[span.clone()],
                &tr.r[span.clone()],
                &tr.c[span.clone()],
                &tr.a[span.clone()],
            );
            for i in 0..h {
                dhp[i] = dh[i] * (1.0 - z[i]);
                dcp[i] = dh[i] * z[i] * (1.0 - c[i] * c[i]);
                dzp[i] = dh[i] * (c[i] - hp[i]) * z[i] * (1.0 - z[i]);
                rh[i] = r[i] * hp[i];
            }
            outer_add(&mut g[slot(TensorId::CandW)], &dcp, a);
            outer_add(&mut g[slot(TensorId::CandU)], &dcp, &rh);
            for (o, d) in g[slot(TensorId::CandB)].iter_mut().zip(&dcp) {
                *o += d;
            }
            drh.fill(0.0);
            matvec_t_add(self.t(TensorId::CandU), &dcp, &mut drh);
            for i in 0..h {
                dhp[i] += drh[i] * r[i];
                drp[i] = drh[i] * hp[i] * r[i] * (1.0 - r[i]);
            }

            outer_add(&mut g[slot(TensorId::GateZW)], &dzp, a);
            outer_add(&mut g[slot(TensorId::GateZU)], &dzp, hp);
            for (o, d) in g[slot(TensorId::GateZB)].iter_mut().zip(&dzp) {
                *o += d;
            }
            outer_add(&mut g[slot(TensorId::GateRW)], &drp, a);
            outer_add(&mut g[slot(TensorId::GateRU)], &drp, hp);
            for (o, d) in g[slot(TensorId::GateRB)].iter_mut().zip(&drp) {
                *o += d;
            }
            matvec_t_add(self.t(TensorId::GateZU), &dzp, &mut dhp);
            matvec_t_add(self.t(TensorId::GateRU), &drp, &mut dhp);

            da.fill(0.0);
            matvec_t_add(self.t(TensorId::CandW), &dcp, &mut da);
            matvec_t_add(self.t(TensorId::GateZW), &dzp, &mut da);
            matvec_t_add(self.t(TensorId::GateRW), &drp, &mut da);
            outer_add(&mut g[slot(TensorId::ProjW)], &da, &tr.x[t * mel..(t + 1) * mel]);
            for (o, d) in g[slot(TensorId::ProjB)].iter_mut().zip(&da) {
                *o += d;
            }
            dh.copy_from_slice(&dhp);
        }
    }
}

fn check_window(params: &PENetParams, window: &FeatureWindow) -> Result<()> {
    let want = FeatureWindow::expected_len(window.m, window.n);
    if window.frames.rows() != want || window.frames.cols() != params.shape().mel_bins {
        return Err(Error::shape(
            format!(
                "{want}x{} window for m={}, n={}",
                params.shape().mel_bins,
                window.m,
                window.n
            ),
            format!("{}x{}", window.frames.rows(), window.frames.cols()),
        ));
    }
    Ok(())
}

/// Per-class Beta evidence for the segment a window is centred on.
pub fn forward(params: &PENetParams, window: &FeatureWindow) -> Result<EvidenceOutput> {
    check_window(params, window)?;
    Predictor::new(params).evidence(&window.frames)
}

/// Like [`forward`], for an arbitrary stack of frames.
pub fn forward_frames(params: &PENetParams, frames: &Matrix<f32>) -> Result<EvidenceOutput> {
    Predictor::new(params).evidence(frames)
}

/// Loss and exact parameter gradients for one labelled window.
pub fn backprop(params: &PENetParams, window: &FeatureWindow, labels: &[bool]) -> Result<(f64, Gradients)> {
    check_window(params, window)?;
    let mut grads = Gradients::zeros(params.shape());
    let loss = Predictor::new(params).accumulate(&window.frames, labels, &mut grads, 1.0)?;
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::N_MELS;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frames(rows: usize, seed: u64) -> Matrix<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(
            rows,
            N_MELS,
            (0..rows * N_MELS).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap()
    }

    fn window(frames: Matrix<f32>, m: usize, n: usize) -> FeatureWindow {
        FeatureWindow {
            frames,
            segment_index: m,
            start_time: 0.0,
            m,
            n,
        }
    }

    #[test]
    fn zero_parameters_give_vacuous_evidence() {
        let shape = ModelShape {
            num_classes: 10,
            hidden: 32,
            mel_bins: N_MELS,
        };
        let params = PENetParams::zeros(shape);
        let out = forward(&params, &window(random_frames(16, 1), 3, 0)).unwrap();
        assert_eq!(out.num_classes(), 10);
        for ev in out.evidence {
            assert_eq!((ev.alpha(), ev.beta()), (1.0, 1.0));
            assert_eq!(ev.vacuity(), 1.0);
        }
    }

    #[test]
    fn rejects_wrong_window_shape() {
        let shape = ModelShape {
            num_classes: 2,
            hidden: 4,
            mel_bins: N_MELS,
        };
        let params = PENetParams::init(shape, 3);
        assert!(forward(&params, &window(random_frames(12, 1), 3, 0)).is_err());
        let bad = Matrix::zeros(16, 64);
        assert!(forward(&params, &window(bad, 3, 0)).is_err());
        assert!(backprop(&params, &window(random_frames(16, 1), 3, 0), &[true]).is_err());
    }

    #[test]
    fn class_permutation_permutes_head_gradients() {
        let shape = ModelShape {
            num_classes: 2,
            hidden: 4,
            mel_bins: N_MELS,
        };
        let params = PENetParams::init(shape, 9);
        let mut swapped = params.clone();
        {
            let hw = params.tensor(TensorId::HeadW).to_vec();
            let hb = params.tensor(TensorId::HeadB).to_vec();
            let w = swapped.tensor_mut(TensorId::HeadW);
            w[..8].copy_from_slice(&hw[8..]);
            w[8..].copy_from_slice(&hw[..8]);
            let b = swapped.tensor_mut(TensorId::HeadB);
            b[..2].copy_from_slice(&hb[2..]);
            b[2..].copy_from_slice(&hb[..2]);
        }
        let win = window(random_frames(16, 5), 3, 0);
        let (l1, g1) = backprop(&params, &win, &[true, false]).unwrap();
        let (l2, g2) = backprop(&swapped, &win, &[false, true]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        let (a, b) = (g1.tensor(TensorId::HeadW), g2.tensor(TensorId::HeadW));
        for i in 0..8 {
            assert!((a[i] - b[i + 8]).abs() < 1e-12 && (a[i + 8] - b[i]).abs() < 1e-12);
        }
        for (x, y) in g1.tensor(TensorId::ProjW).iter().zip(g2.tensor(TensorId::ProjW)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_correct_prediction_has_tiny_gradient() {
        let shape = ModelShape {
            num_classes: 1,
            hidden: 4,
            mel_bins: N_MELS,
        };
        let mut params = PENetParams::zeros(shape);
        params.tensor_mut(TensorId::HeadB).copy_from_slice(&[1e6, 0.0]);
        let (loss, g) = backprop(&params, &window(random_frames(4, 2), 0, 0), &[true]).unwrap();
        assert!(loss < 1e-5);
        let max = g.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-9, "max gradient {max}");
    }
}
