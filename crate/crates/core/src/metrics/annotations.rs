//! Strong-label files in the DESED layout: a tab-separated table with the
//! header `filename onset offset event_label`. The clip id is the filename
//! without its `.wav` extension. Clips without events simply have no rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EventAnnotation;
use crate::error::{Error, Result};

pub const ANNOTATION_HEADER: &str = "filename\tonset\toffset\tevent_label";

/// Events per clip id, in file order within each clip.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    pub clips: BTreeMap<String, Vec<EventAnnotation>>,
}

impl AnnotationSet {
    /// Events of `clip`; empty for clips with no rows.
    pub fn events(&self, clip: &str) -> &[EventAnnotation] {
        self.clips.get(clip).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn insert(&mut self, clip: impl Into<String>, events: Vec<EventAnnotation>) {
        self.clips.insert(clip.into(), events);
    }

    pub fn num_events(&self) -> usize {
        self.clips.values().map(Vec::len).sum()
    }
}

pub fn read_annotations(path: &Path, class_names: &[String]) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim_end) != Some(ANNOTATION_HEADER) {
        return Err(Error::format(path, "missing filename/onset/offset/event_label header"));
    }
    let mut set = AnnotationSet::default();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |why: String| Error::format(path, format!("line {}: {why}", n + 2));
        let fields: Vec<&str> = line.trim_end().split('\t').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 tab-separated fields, got {}", fields.len())));
        }
        let id = fields[0].strip_suffix(".wav").unwrap_or(fields[0]);
        let onset: f64 = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad onset {:?}", fields[1])))?;
        let offset: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad offset {:?}", fields[2])))?;
        let class = class_names
            .iter()
            .position(|c| c == fields[3])
            .ok_or_else(|| bad(format!("unknown class {:?}", fields[3])))?;
        let event = EventAnnotation::new(class, onset, offset).map_err(|e| bad(e.to_string()))?;
        set.clips.entry(id.to_string()).or_default().push(event);
    }
    Ok(set)
}

pub fn write_annotations(path: &Path, set: &AnnotationSet, class_names: &[String]) -> Result<()> {
    let mut out = String::new();
    out.push_str(ANNOTATION_HEADER);
    out.push('\n');
    for (id, events) in &set.clips {
        for e in events {
            let name = class_names
                .get(e.class)
                .ok_or_else(|| Error::shape(format!("name for class {}", e.class), class_names.len()))?;
            let _ = writeln!(out, "{id}.wav\t{:.3}\t{:.3}\t{name}", e.onset, e.offset);
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
