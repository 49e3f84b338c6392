use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::{AudioClip, HOP_LENGTH, N_BINS, N_FFT};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// One-sided complex STFT, one row of `N_BINS` per frame.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    bins: Matrix<Complex<f64>>,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.bins.rows()
    }

    pub fn num_bins(&self) -> usize {
        self.bins.cols()
    }

    pub fn frame(&self, t: usize) -> &[Complex<f64>] {
        self.bins.row(t)
    }

    pub fn magnitudes(&self) -> Matrix<f64> {
        let data = self.bins.as_slice().iter().map(|c| c.norm()).collect();
        Matrix::from_vec(self.bins.rows(), self.bins.cols(), data).expect("same shape")
    }
}

fn reflect_pad(x: &[f32], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i] as f64));
    out.extend(x.iter().map(|&v| v as f64));
    out.extend((0..pad).map(|i| x[n - 2 - i] as f64));
    out
}

/// Hann-windowed STFT with window 2048, hop 256 and reflect center padding,
/// giving `1 + len / 256` frames.
pub fn stft(audio: &AudioClip) -> Result<Spectrogram> {
    let x = audio.samples();
    if x.is_empty() {
        return Err(Error::Empty("stft input has no samples"));
    }
    let pad = N_FFT / 2;
    if x.len() <= pad {
        return Err(Error::shape(
            format!("more than {pad} samples for reflect padding"),
            x.len(),
        ));
    }
    let padded = reflect_pad(x, pad);
    let num_frames = 1 + (padded.len() - N_FFT) / HOP_LENGTH;
    let window = hann_window(N_FFT);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(N_FFT);

    let mut data = Vec::with_capacity(num_frames * N_BINS);
    let mut buf = vec![Complex::new(0.0, 0.0); N_FFT];
    for t in 0..num_frames {
        let frame = &padded[t * HOP_LENGTH..t * HOP_LENGTH + N_FFT];
        for ((b, &s), &w) in buf.iter_mut().zip(frame).zip(&window) {
            *b = Complex::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        data.extend_from_slice(&buf[..N_BINS]);
    }
    Ok(Spectrogram {
        bins: Matrix::from_vec(num_frames, N_BINS, data)?,
    })
}
