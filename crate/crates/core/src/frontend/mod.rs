//! Log-mel feature extraction and streaming segmentation.
//!
//! Audio is resampled to 16 kHz, transformed with a 2048-point Hann STFT at
//! hop 256 (reflect center padding), projected onto 128 triangular mel
//! filters and log-compressed. A 10 s clip becomes 626 frames; consecutive
//! non-overlapping 4-frame blocks are the streaming segments.

mod audio;
mod featfile;
mod mel;
mod resample;
mod segment;
mod stft;

pub use audio::{read_wav, write_wav, AudioClip};
pub use featfile::{read_feature_file, write_feature_file, FEATURE_MAGIC};
pub use mel::{hz_to_mel, mel_to_hz, MelFilterbank};
pub use resample::resample;
pub use segment::{build_window, segment_stream, FeatureWindow, Segment};
pub use stft::{hann_window, stft, Spectrogram};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const SAMPLE_RATE: u32 = 16_000;
pub const N_FFT: usize = 2048;
pub const HOP_LENGTH: usize = 256;
pub const N_BINS: usize = N_FFT / 2 + 1;
pub const N_MELS: usize = 128;
pub const SEGMENT_FRAMES: usize = 4;
pub const LOG_FLOOR: f64 = 1e-10;

pub const FRAME_HOP_SECONDS: f64 = HOP_LENGTH as f64 / SAMPLE_RATE as f64;
pub const SEGMENT_SECONDS: f64 = SEGMENT_FRAMES as f64 * FRAME_HOP_SECONDS;

/// Log-mel energies, one row per STFT frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFrames {
    frames: Matrix<f32>,
}

impl MelFrames {
    pub fn new(frames: Matrix<f32>) -> Result<Self> {
        if frames.cols() != N_MELS {
            return Err(Error::shape(format!("{N_MELS} mel bins"), frames.cols()));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &Matrix<f32> {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn frame_hop_seconds(&self) -> f64 {
        FRAME_HOP_SECONDS
    }

    /// Number of whole streaming segments.
    pub fn num_segments(&self) -> usize {
        self.num_frames() / SEGMENT_FRAMES
    }
}

/// Full clip-to-features pipeline with the FFT plan and filterbank built once.
pub struct FeatureExtractor {
    filterbank: MelFilterbank,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        Self {
            filterbank: MelFilterbank::new(N_MELS, N_FFT, SAMPLE_RATE, 0.0, SAMPLE_RATE as f64 / 2.0),
        }
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<MelFrames> {
        let clip = if clip.sample_rate() == SAMPLE_RATE {
            std::borrow::Cow::Borrowed(clip)
        } else {
            std::borrow::Cow::Owned(resample(clip, SAMPLE_RATE)?)
        };
        let spec = stft(&clip)?;
        self.filterbank.project(&spec.magnitudes())
    }
}
