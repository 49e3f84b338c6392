//! Synthetic polyphonic corpora with strong labels.
//!
//! Every class owns a frequency band; bands are log-spaced over 200–7000 Hz
//! with guard gaps between them. Even classes are harmonic combs whose
//! partials fall inside the band, odd classes are noise bursts band-limited
//! to it. Events are mixed over pink background noise at a per-event SNR
//! (event RMS over background RMS). Each clip draws from its own generator
//! seeded by `(seed, clip index)`, so any clip can be regenerated alone.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{write_wav, AudioClip, SAMPLE_RATE};
use crate::metrics::{write_annotations, AnnotationSet, EventAnnotation};
use crate::seed::{derive_indexed, derive_seed};

pub const MAX_CLASSES: usize = 10;
/// Lowest and highest band edge, Hz.
pub const BAND_RANGE: (f64, f64) = (200.0, 7000.0);
/// Minimum silence between two events of the same class, seconds.
pub const SAME_CLASS_GAP: f64 = 0.3;
const RAMP_SECONDS: f64 = 0.01;
const BACKGROUND_RMS: f64 = 0.02;
const PLACEMENT_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub clips: usize,
    pub clip_seconds: f64,
    /// Inclusive range of events drawn per clip.
    pub events_per_clip: (usize, usize),
    /// Event duration range, seconds.
    pub event_duration: (f64, f64),
    /// Per-event SNR range, dB.
    pub snr_db: (f64, f64),
    pub polyphony_max: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            clips: 200,
            clip_seconds: 10.0,
            events_per_clip: (1, 4),
            event_duration: (0.25, 2.0),
            snr_db: (0.0, 10.0),
            polyphony_max: 2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::Config { field, reason });
        if self.num_classes == 0 || self.num_classes > MAX_CLASSES {
            return bad(
                "num_classes",
                format!("must be in 1..={MAX_CLASSES}, got {}", self.num_classes),
            );
        }
        if !(self.clip_seconds.is_finite() && self.clip_seconds >= 1.0) {
            return bad(
                "clip_seconds",
                format!("must be at least 1 s, got {}", self.clip_seconds),
            );
        }
        let (lo, hi) = self.events_per_clip;
        if lo > hi {
            return bad("events_per_clip", format!("minimum {lo} exceeds maximum {hi}"));
        }
        let (dmin, dmax) = self.event_duration;
        if !(dmin > 0.0 && dmin <= dmax && dmax.is_finite()) {
            return bad("event_duration", format!("need 0 < min <= max, got ({dmin}, {dmax})"));
        }
        if dmax > self.clip_seconds {
            return bad(
                "event_duration",
                format!("maximum {dmax} s does not fit in a {} s clip", self.clip_seconds),
            );
        }
        if hi > 0 && self.polyphony_max == 0 {
            return bad("polyphony_max", "must be at least 1 when events are requested".into());
        }
        // Worst case: every event at minimum duration, serialised per
        // polyphony slot, each followed by the same-class gap.
        let per_slot = hi.div_ceil(self.polyphony_max.max(1)) as f64;
        if per_slot * (dmin + SAME_CLASS_GAP) > self.clip_seconds + SAME_CLASS_GAP {
            return bad(
                "events_per_clip",
                format!("{hi} events of at least {dmin} s cannot fit in {} s", self.clip_seconds),
            );
        }
        let (smin, smax) = self.snr_db;
        if !(smin.is_finite() && smax.is_finite() && smin <= smax) {
            return bad("snr_db", format!("need finite min <= max, got ({smin}, {smax})"));
        }
        Ok(())
    }
}

/// `harm0`, `band1`, `harm2`, … matching each class's signature.
pub fn class_names(num_classes: usize) -> Vec<String> {
    (0..num_classes)
        .map(|k| {
            if k % 2 == 0 {
                format!("harm{k}")
            } else {
                format!("band{k}")
            }
        })
        .collect()
}

/// Frequency band `[lo, hi]` in Hz owned by class `k` of `num_classes`.
pub fn class_band(k: usize, num_classes: usize) -> (f64, f64) {
    let (lo, hi) = BAND_RANGE;
    let edge = |i: usize| lo * (hi / lo).powf(i as f64 / num_classes as f64);
    let guard = (hi / lo).powf(0.1 / num_classes as f64);
    (edge(k) * guard, edge(k + 1) / guard)
}

#[derive(Debug, Clone)]
pub struct SynthClip {
    pub id: String,
    pub audio: AudioClip,
    pub events: Vec<EventAnnotation>,
}

pub fn clip_id(index: usize) -> String {
    format!("clip_{index:04}")
}

pub fn generate_clip(cfg: &SynthConfig, index: usize) -> Result<SynthClip> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_indexed(derive_seed(cfg.seed, "clip"), index as u64));
    let sr = SAMPLE_RATE as f64;
    let len = (cfg.clip_seconds * sr).round() as usize;
    let mut planner = FftPlanner::new();

    let mut mix = pink_noise(len, &mut rng, &mut planner);
    let rms = (mix.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt().max(1e-12);
    mix.iter_mut().for_each(|x| *x *= BACKGROUND_RMS / rms);

    let events = place_events(cfg, &mut rng);
    for e in &events {
        let start = (e.onset * sr).round() as usize;
        let end = ((e.offset * sr).round() as usize).min(len);
        let snr = rng.random_range(cfg.snr_db.0..=cfg.snr_db.1);
        let band = class_band(e.class, cfg.num_classes);
        let mut sig = if e.class % 2 == 0 {
            harmonic_comb(end - start, band, &mut rng)
        } else {
            band_noise(end - start, band, &mut rng, &mut planner)
        };
        let sig_rms = (sig.iter().map(|x| x * x).sum::<f64>() / sig.len() as f64)
            .sqrt()
            .max(1e-12);
        let gain = BACKGROUND_RMS * 10f64.powf(snr / 20.0) / sig_rms;
        apply_ramps(&mut sig, (RAMP_SECONDS * sr) as usize);
        for (m, s) in mix[start..end].iter_mut().zip(sig) {
            *m += gain * s;
        }
    }

    let peak = mix.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let scale = if peak > 0.99 { 0.99 / peak } else { 1.0 };
    let samples = mix.into_iter().map(|x| (x * scale) as f32).collect();
    Ok(SynthClip {
        id: clip_id(index),
        audio: AudioClip::new(samples, SAMPLE_RATE)?,
        events,
    })
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<Vec<SynthClip>> {
    cfg.validate()?;
    (0..cfg.clips).map(|i| generate_clip(cfg, i)).collect()
}

/// Draws non-conflicting events: same-class events keep a gap, and at most
/// `polyphony_max` events overlap at any instant. Times are on a 1 ms grid.
fn place_events(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<EventAnnotation> {
    let count = rng.random_range(cfg.events_per_clip.0..=cfg.events_per_clip.1);
    let ms = |x: f64| (x * 1000.0).round() / 1000.0;
    let mut events: Vec<EventAnnotation> = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let class = rng.random_range(0..cfg.num_classes);
            let dur = rng.random_range(cfg.event_duration.0..=cfg.event_duration.1);
            let onset = ms(rng.random_range(0.0..=cfg.clip_seconds - dur));
            let offset = ms(onset + dur).min(cfg.clip_seconds);
            let clash = events
                .iter()
                .any(|e| e.class == class && onset < e.offset + SAME_CLASS_GAP && e.onset < offset + SAME_CLASS_GAP);
            if clash || max_overlap(&events, onset, offset) >= cfg.polyphony_max {
                continue;
            }
            events.push(EventAnnotation { class, onset, offset });
            break;
        }
    }
    events.sort_by(|a, b| a.onset.total_cmp(&b.onset).then(a.class.cmp(&b.class)));
    events
}

/// Largest number of `events` simultaneously active inside `[onset, offset)`.
fn max_overlap(events: &[EventAnnotation], onset: f64, offset: f64) -> usize {
    let mut points: Vec<(f64, i32)> = events
        .iter()
        .filter(|e| e.onset < offset && onset < e.offset)
        .flat_map(|e| [(e.onset.max(onset), 1), (e.offset.min(offset), -1)])
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut active = 0;
    let mut most = 0;
    for (_, d) in points {
        active += d;
        most = most.max(active);
    }
    most as usize
}

fn shaped_noise(
    len: usize,
    rng: &mut ChaCha8Rng,
    planner: &mut FftPlanner<f64>,
    gain: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = (0..len)
        .map(|_| Complex::new(rng.sample(StandardNormal), 0.0))
        .collect();
    planner.plan_fft_forward(len).process(&mut buf);
    let sr = SAMPLE_RATE as f64;
    for (i, c) in buf.iter_mut().enumerate() {
        let bin = i.min(len - i);
        *c *= gain(bin as f64 * sr / len as f64);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.into_iter().map(|c| c.re / len as f64).collect()
}

fn pink_noise(len: usize, rng: &mut ChaCha8Rng, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    shaped_noise(len, rng, planner, |f| 1.0 / f.max(20.0).sqrt())
}

fn band_noise(len: usize, (lo, hi): (f64, f64), rng: &mut ChaCha8Rng, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    shaped_noise(len, rng, planner, |f| if (lo..=hi).contains(&f) { 1.0 } else { 0.0 })
}

/// Partials `h·f0` with `f0 = lo / 3` that fall inside the band, 1/h amplitudes
/// and random phases.
fn harmonic_comb(len: usize, (lo, hi): (f64, f64), rng: &mut ChaCha8Rng) -> Vec<f64> {
    let f0 = lo / 3.0;
    let partials: Vec<(f64, f64, f64)> = (3..)
        .map(|h| h as f64 * f0)
        .take_while(|&f| f <= hi)
        .map(|f| (f, f0 / f, rng.random_range(0.0..2.0 * PI)))
        .collect();
    let sr = SAMPLE_RATE as f64;
    (0..len)
        .map(|n| {
            let t = n as f64 / sr;
            partials
                .iter()
                .map(|&(f, a, ph)| a * (2.0 * PI * f * t + ph).sin())
                .sum()
        })
        .collect()
}

fn apply_ramps(sig: &mut [f64], ramp: usize) {
    let ramp = ramp.min(sig.len() / 2);
    let len = sig.len();
    for i in 0..ramp {
        let g = 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
        sig[i] *= g;
        sig[len - 1 - i] *= g;
    }
}

pub const MANIFEST_HEADER: &str = "clip_id,path,duration";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub clip_id: String,
    /// Relative to the corpus directory.
    pub path: PathBuf,
    pub duration: f64,
}

/// Writes `audio/<id>.wav`, `annotations.tsv`, `manifest.csv` and
/// `synth_config.json` under `dir`, generating one clip at a time.
pub fn write_corpus(dir: &Path, cfg: &SynthConfig) -> Result<Vec<ManifestEntry>> {
    cfg.validate()?;
    let audio_dir = dir.join("audio");
    std::fs::create_dir_all(&audio_dir).map_err(|e| Error::io(&audio_dir, e))?;
    let names = class_names(cfg.num_classes);
    let mut set = AnnotationSet::default();
    let mut manifest = Vec::with_capacity(cfg.clips);
    for i in 0..cfg.clips {
        let clip = generate_clip(cfg, i)?;
        let rel = PathBuf::from("audio").join(format!("{}.wav", clip.id));
        write_wav(&dir.join(&rel), &clip.audio)?;
        manifest.push(ManifestEntry {
            clip_id: clip.id.clone(),
            path: rel,
            duration: clip.audio.duration_seconds(),
        });
        set.insert(clip.id, clip.events);
    }
    write_annotations(&dir.join("annotations.tsv"), &set, &names)?;
    write_manifest(&dir.join("manifest.csv"), &manifest)?;
    let json =
        serde_json::to_string_pretty(cfg).map_err(|e| Error::format(dir.join("synth_config.json"), e.to_string()))?;
    let path = dir.join("synth_config.json");
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut out = format!("{MANIFEST_HEADER}\n");
    for e in entries {
        let _ = writeln!(out, "{},{},{:.3}", e.clip_id, e.path.display(), e.duration);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(MANIFEST_HEADER) {
        return Err(Error::format(path, format!("expected header {MANIFEST_HEADER}")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let duration = f.get(2).and_then(|d| d.parse().ok());
            match (f.len(), duration) {
                (3, Some(duration)) => Ok(ManifestEntry {
                    clip_id: f[0].to_string(),
                    path: PathBuf::from(f[1]),
                    duration,
                }),
                _ => Err(Error::format(
                    path,
                    format!("line {}: expected clip_id,path,duration", n + 2),
                )),
            }
        })
        .collect()
}
