use super::{MelFrames, LOG_FLOOR};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale, unit peak height.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    n_bins: usize,
    weights: Matrix<f64>,
    /// Column range holding each filter's nonzero weights.
    support: Vec<(usize, usize)>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Self {
        let n_bins = n_fft / 2 + 1;
        let mel_lo = hz_to_mel(f_min);
        let mel_hi = hz_to_mel(f_max);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / n_fft as f64;

        let mut weights = Matrix::zeros(n_mels, n_bins);
        let mut support = Vec::with_capacity(n_mels);
        for m in 0..n_mels {
            let (lo, peak, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let row = weights.row_mut(m);
            let mut first = n_bins;
            let mut last = 0;
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                let rising = (f - lo) / (peak - lo);
                let falling = (hi - f) / (hi - peak);
                let v = rising.min(falling).max(0.0);
                if v > 0.0 {
                    *w = v;
                    first = first.min(k);
                    last = k;
                }
            }
            support.push((first, last + 1));
        }
        Self {
            n_bins,
            weights,
            support,
        }
    }

    pub fn num_filters(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix<f64> {
        &self.weights
    }

    /// Applies the bank to squared magnitudes and takes `ln(energy + 1e-10)`.
    pub fn project(&self, magnitudes: &Matrix<f64>) -> Result<MelFrames> {
        if magnitudes.cols() != self.n_bins {
            return Err(Error::shape(
                format!("{} frequency bins", self.n_bins),
                magnitudes.cols(),
            ));
        }
        let n_mels = self.num_filters();
        let mut out = Vec::with_capacity(magnitudes.rows() * n_mels);
        let mut power = vec![0.0; self.n_bins];
        for row in magnitudes.iter_rows() {
            for (p, &m) in power.iter_mut().zip(row) {
                *p = m * m;
            }
            for (m, &(lo, hi)) in self.support.iter().enumerate() {
                let w = &self.weights.row(m)[lo..hi];
                let energy: f64 = w.iter().zip(&power[lo..hi]).map(|(a, b)| a * b).sum();
                out.push((energy + LOG_FLOOR).ln() as f32);
            }
        }
        MelFrames::new(Matrix::from_vec(magnitudes.rows(), n_mels, out)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{N_BINS, N_FFT, N_MELS, SAMPLE_RATE};

    fn bank() -> MelFilterbank {
        MelFilterbank::new(N_MELS, N_FFT, SAMPLE_RATE, 0.0, 8000.0)
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [0.0, 100.0, 700.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn every_filter_has_positive_mass() {
        let fb = bank();
        assert_eq!(fb.num_filters(), 128);
        for m in 0..128 {
            let s: f64 = fb.weights().row(m).iter().sum();
            assert!(s > 0.0, "filter {m} is empty");
        }
    }

    #[test]
    fn silence_maps_to_log_floor() {
        let frames = bank().project(&Matrix::zeros(3, N_BINS)).unwrap();
        let floor = (LOG_FLOOR).ln() as f32;
        assert!(frames.frames().as_slice().iter().all(|&v| v == floor));
    }

    #[test]
    fn rejects_wrong_bin_count() {
        assert!(bank().project(&Matrix::zeros(2, 1000)).is_err());
    }

    #[test]
    fn flat_spectrum_energy_tracks_filter_width() {
        // A flat unit power spectrum yields per-filter energy equal to the
        // filter's weight sum, which grows with mel-filter bandwidth.
        let fb = bank();
        let flat = Matrix::from_vec(1, N_BINS, vec![1.0; N_BINS]).unwrap();
        let energies = fb.project(&flat).unwrap();
        let row = energies.frames().row(0);
        for m in 0..128 {
            let expected: f64 = fb.weights().row(m).iter().sum();
            assert!(((row[m] as f64).exp() - expected).abs() < 1e-4 * expected);
        }
        // Above ~1 kHz bandwidth increases monotonically with center frequency.
        let upper = &row[40..];
        let rises = upper.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(rises as f64 >= 0.9 * (upper.len() - 1) as f64);
        assert!(row[127] > row[40]);
    }
}
