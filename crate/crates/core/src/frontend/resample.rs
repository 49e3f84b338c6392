use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel kept on each side of the center tap.
const ZERO_CROSSINGS: f64 = 32.0;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling with a Blackman-windowed sinc kernel whose cutoff
/// sits at the lower of the two Nyquist frequencies.
pub fn resample(audio: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    let source_rate = audio.sample_rate();
    if source_rate < 8000 {
        return Err(Error::UnsupportedRate(source_rate));
    }
    if target_rate < 8000 {
        return Err(Error::UnsupportedRate(target_rate));
    }
    if source_rate == target_rate {
        return Ok(audio.clone());
    }
    let input = audio.samples();
    let ratio = target_rate as f64 / source_rate as f64;
    let out_len = (input.len() as f64 * ratio).round() as usize;
    // Cutoff in cycles per input sample.
    let cutoff = 0.5 * ratio.min(1.0);
    let half_width = ZERO_CROSSINGS / (2.0 * cutoff);
    let last = input.len() as isize - 1;

    let samples = (0..out_len)
        .map(|i| {
            let center = i as f64 / ratio;
            let lo = ((center - half_width).ceil() as isize).max(0);
            let hi = ((center + half_width).floor() as isize).min(last);
            let mut acc = 0.0;
            for j in lo..=hi {
                let d = center - j as f64;
                let h = 2.0 * cutoff * sinc(2.0 * cutoff * d) * blackman(d / half_width);
                acc += input[j as usize] as f64 * h;
            }
            acc as f32
        })
        .collect();
    AudioClip::new(samples, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rustfft::{num_complex::Complex, FftPlanner};

    fn tone(freq: f64, rate: u32, seconds: f64) -> AudioClip {
        let n = (rate as f64 * seconds) as usize;
        let s = (0..n)
            .map(|i| (0.5 * (2.0 * PI * freq * i as f64 / rate as f64).sin()) as f32)
            .collect();
        AudioClip::new(s, rate).unwrap()
    }

    #[test]
    fn identity_when_rates_match() {
        let clip = tone(440.0, 16_000, 0.5);
        assert_eq!(resample(&clip, 16_000).unwrap(), clip);
    }

    #[test]
    fn length_scales_with_rate_ratio() {
        let clip = AudioClip::new(vec![0.0; 320_000], 32_000).unwrap();
        let out = resample(&clip, 16_000).unwrap();
        assert!((out.len() as i64 - 160_000).abs() <= 1);
        assert_eq!(out.sample_rate(), 16_000);
    }

    #[test]
    fn rejects_low_rates() {
        let clip = AudioClip::new(vec![0.0; 100], 4000).unwrap();
        assert!(matches!(resample(&clip, 16_000), Err(Error::UnsupportedRate(4000))));
    }

    #[test]
    fn sine_keeps_its_frequency() {
        let out = resample(&tone(1000.0, 44_100, 1.0), 16_000).unwrap();
        let n = 16_000;
        let mut buf: Vec<Complex<f64>> = out.samples()[..n]
            .iter()
            .map(|&s| Complex::new(s as f64, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let peak = (0..n / 2)
            .max_by(|&a, &b| buf[a].norm().partial_cmp(&buf[b].norm()).unwrap())
            .unwrap();
        // 1 Hz bins over a one-second transform
        assert!((peak as i64 - 1000).abs() <= 1, "peak at bin {peak}");
        // Interior amplitude is preserved by the unity-gain kernel.
        let rms = (out.samples()[1000..15000]
            .iter()
            .map(|&s| (s as f64).powi(2))
            .sum::<f64>()
            / 14000.0)
            .sqrt();
        assert!((rms - 0.5 / 2f64.sqrt()).abs() < 5e-3);
    }

    #[test]
    fn removes_content_above_target_nyquist() {
        let out = resample(&tone(12_000.0, 44_100, 0.5), 16_000).unwrap();
        let rms = (out.samples()[500..7500]
            .iter()
            .map(|&s| (s as f64).powi(2))
            .sum::<f64>()
            / 7000.0)
            .sqrt();
        assert!(rms < 1e-3, "alias energy {rms}");
    }
}
