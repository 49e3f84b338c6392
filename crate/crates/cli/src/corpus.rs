//! A generated corpus directory: manifest, strong labels and audio.

use std::path::{Path, PathBuf};

use evidet::frontend::{read_wav, segment_stream, FeatureExtractor, MelFrames, SEGMENT_FRAMES};
use evidet::metrics::{read_annotations, AnnotationSet, EvalClip};
use evidet::model::LabeledClip;
use evidet::synthgen::{class_names, read_manifest, ManifestEntry, SynthConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
    All,
}

pub struct Corpus {
    pub dir: PathBuf,
    pub manifest: Vec<ManifestEntry>,
    pub annotations: AnnotationSet,
    pub class_names: Vec<String>,
}

impl Corpus {
    /// Checks that the directory holds a corpus before any work starts.
    pub fn check(dir: &Path) -> Result<(), CliError> {
        for file in ["manifest.csv", "annotations.tsv", "synth_config.json"] {
            if !dir.join(file).is_file() {
                return Err(CliError::Usage(format!(
                    "{} is not a corpus directory (no {file})",
                    dir.display()
                )));
            }
        }
        Ok(())
    }

    pub fn open(dir: &Path) -> Result<Self, CliError> {
        Self::check(dir)?;
        let cfg_path = dir.join("synth_config.json");
        let text = std::fs::read_to_string(&cfg_path).map_err(|e| evidet::Error::io(&cfg_path, e))?;
        let synth: SynthConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", cfg_path.display())))?;
        let class_names = class_names(synth.num_classes);
        Ok(Self {
            manifest: read_manifest(&dir.join("manifest.csv"))?,
            annotations: read_annotations(&dir.join("annotations.tsv"), &class_names)?,
            class_names,
            dir: dir.to_path_buf(),
        })
    }

    pub fn entries(&self, split: Split, train_fraction: f64) -> &[ManifestEntry] {
        let cut = ((self.manifest.len() as f64 * train_fraction).round() as usize).min(self.manifest.len());
        match split {
            Split::Train => &self.manifest[..cut],
            Split::Eval if cut == self.manifest.len() => &self.manifest[..],
            Split::Eval => &self.manifest[cut..],
            Split::All => &self.manifest[..],
        }
    }

    pub fn features(&self, fx: &FeatureExtractor, entry: &ManifestEntry) -> Result<MelFrames, CliError> {
        let audio = read_wav(&self.dir.join(&entry.path))?;
        Ok(fx.extract(&audio)?)
    }

    pub fn labeled(&self, entries: &[ManifestEntry]) -> Result<Vec<LabeledClip>, CliError> {
        let fx = FeatureExtractor::new();
        entries
            .iter()
            .map(|e| {
                let mel = self.features(&fx, e)?;
                Ok(LabeledClip::new(
                    &mel,
                    self.annotations.events(&e.clip_id),
                    self.class_names.len(),
                ))
            })
            .collect()
    }

    pub fn eval_clips(&self, entries: &[ManifestEntry]) -> Result<Vec<EvalClip>, CliError> {
        let fx = FeatureExtractor::new();
        entries
            .iter()
            .map(|e| {
                let mel = self.features(&fx, e)?;
                Ok(EvalClip {
                    id: e.clip_id.clone(),
                    segments: segment_stream(&mel, SEGMENT_FRAMES),
                    annotations: self.annotations.events(&e.clip_id).to_vec(),
                })
            })
            .collect()
    }
}
