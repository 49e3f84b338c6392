//! Parameter gradients of the full network against finite differences.

use evidet::frontend::{FeatureWindow, N_MELS};
use evidet::matrix::Matrix;
use evidet::model::{backprop, ModelShape, PENetParams, TensorId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_model(seed: u64) -> PENetParams {
    let shape = ModelShape {
        num_classes: 2,
        hidden: 4,
        mel_bins: N_MELS,
    };
    let mut p = PENetParams::init(shape, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for t in [TensorId::ProjB, TensorId::GateZB, TensorId::GateRB, TensorId::CandB] {
        for b in p.tensor_mut(t) {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    // Keep every head output away from the ReLU kink.
    p.tensor_mut(TensorId::HeadB).fill(2.0);
    p
}

fn window(seed: u64, m: usize, n: usize) -> FeatureWindow {
    let rows = FeatureWindow::expected_len(m, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureWindow {
        frames: Matrix::from_vec(
            rows,
            N_MELS,
            (0..rows * N_MELS).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap(),
        segment_index: m,
        start_time: 0.0,
        m,
        n,
    }
}

#[test]
fn every_parameter_gradient_matches_central_differences() {
    for (seed, labels) in [(1u64, [true, false]), (2, [false, false]), (3, [true, true])] {
        let params = tiny_model(seed);
        let win = window(seed + 10, 3, 1);
        let (_, grads) = backprop(&params, &win, &labels).unwrap();
        let scale = grads.as_slice().iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let mut checked = 0;
        for t in TensorId::ALL.into_iter().filter(|t| t.trainable()) {
            for i in params.range(t) {
                let loss_at = |delta: f32| {
                    let mut p = params.clone();
                    p.as_mut_slice()[i] += delta;
                    let actual = p.as_slice()[i] as f64 - params.as_slice()[i] as f64;
                    (backprop(&p, &win, &labels).unwrap().0, actual)
                };
                let h = 1e-3f32;
                let (up, du) = loss_at(h);
                let (down, dd) = loss_at(-h);
                let fd = (up - down) / (du - dd);
                let g = grads.as_slice()[i];
                let tol = 1e-3 * g.abs().max(fd.abs()).max(1e-3 * scale);
                assert!(
                    (g - fd).abs() <= tol,
                    "{} [{}]: analytic {g:e} vs numeric {fd:e}",
                    t.name(),
                    i - params.range(t).start
                );
                checked += 1;
            }
        }
        assert_eq!(checked, params.len() - 2 * N_MELS);
    }
}

#[test]
fn non_trainable_normalisation_gets_no_gradient() {
    let params = tiny_model(4);
    let (_, grads) = backprop(&params, &window(5, 2, 0), &[true, false]).unwrap();
    assert!(grads.tensor(TensorId::NormMean).iter().all(|&g| g == 0.0));
    assert!(grads.tensor(TensorId::NormStd).iter().all(|&g| g == 0.0));
}
