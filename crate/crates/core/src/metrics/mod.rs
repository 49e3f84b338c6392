//! Early-detection scoring.
//!
//! Each annotated event is matched against the first positive decision run
//! of its class that starts inside the tolerance-extended span
//! `[onset + L, offset]` (L ≤ 0). A matched event is a true positive whose
//! delay is `max(d_p − d_t, 0)`; unmatched events are false negatives, and
//! every positive run that starts outside all spans of its class is one false
//! positive. Runs starting inside an already-matched span are absorbed.

mod annotations;
mod sweep;

pub use annotations::{read_annotations, write_annotations, AnnotationSet, ANNOTATION_HEADER};
pub use sweep::{
    evaluate_corpus, sweep_backtrack, sweep_vacuity, BacktrackRow, EvalClip, MonotonicityReport, SweepRow, SweepTable,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Default early tolerance `L` in seconds.
pub const DEFAULT_TOLERANCE: f64 = -0.25;

/// A strong label: one event of class `class` on `[onset, offset)`, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventAnnotation {
    pub class: usize,
    pub onset: f64,
    pub offset: f64,
}

impl EventAnnotation {
    pub fn new(class: usize, onset: f64, offset: f64) -> Result<Self> {
        if !(onset >= 0.0 && offset > onset && offset.is_finite()) {
            return Err(Error::Domain(format!(
                "event needs 0 <= onset < offset, got [{onset}, {offset}]"
            )));
        }
        Ok(Self { class, onset, offset })
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    TruePositive,
    FalsePositive,
    FalseNegative,
}

/// Outcome for one annotated event or one spurious detection run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRecord {
    pub class: usize,
    pub status: Status,
    /// Start of the matched (or spurious) run on the clip timeline.
    pub timeline_time: Option<f64>,
    /// `timeline_time` plus the forward-context wait: when the decision
    /// actually became available.
    pub prediction_time: Option<f64>,
    pub annotation: Option<EventAnnotation>,
    /// Present only for true positives.
    pub delay: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Early tolerance `L`, non-positive seconds.
    pub tolerance: f64,
    /// Literal reading: the first positive must fall inside `[onset, offset]`.
    pub strict: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            strict: false,
        }
    }
}

/// Binary per-segment, per-class decisions for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTimeline {
    pub segment_seconds: f64,
    /// Extra latency before each decision is available (forward steps × segment).
    pub wait_seconds: f64,
    pub num_classes: usize,
    /// `decisions[t][k]`
    pub decisions: Vec<Vec<bool>>,
}

impl DecisionTimeline {
    pub fn duration(&self) -> f64 {
        self.decisions.len() as f64 * self.segment_seconds
    }

    /// Contiguous positive runs of class `k` as `(first, end)` segment ranges.
    pub fn runs(&self, k: usize) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (t, row) in self.decisions.iter().enumerate() {
            match (row[k], start) {
                (true, None) => start = Some(t),
                (false, Some(s)) => {
                    runs.push((s, t));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.decisions.len()));
        }
        runs
    }
}

/// `max(d_p − d_t, 0)`.
pub fn detection_delay(prediction: f64, onset: f64) -> f64 {
    (prediction - onset).max(0.0)
}

pub fn match_events(
    timeline: &DecisionTimeline,
    annotations: &[EventAnnotation],
    cfg: &MatchConfig,
) -> Result<Vec<DetectionRecord>> {
    if cfg.tolerance > 0.0 || !cfg.tolerance.is_finite() {
        return Err(Error::Domain(format!(
            "early tolerance must be <= 0, got {}",
            cfg.tolerance
        )));
    }
    if let Some(t) = timeline
        .decisions
        .iter()
        .position(|row| row.len() != timeline.num_classes)
    {
        return Err(Error::Timeline(format!(
            "segment {t} has {} class decisions, expected {}",
            timeline.decisions[t].len(),
            timeline.num_classes
        )));
    }
    let horizon = timeline.duration() + timeline.segment_seconds;
    for a in annotations {
        if a.class >= timeline.num_classes {
            return Err(Error::Timeline(format!(
                "annotation class {} but the timeline has {} classes",
                a.class, timeline.num_classes
            )));
        }
        if a.onset > horizon {
            return Err(Error::Timeline(format!(
                "annotation onset {:.3} s lies past the {:.3} s decision timeline",
                a.onset,
                timeline.duration()
            )));
        }
    }

    let early = if cfg.strict { 0.0 } else { cfg.tolerance };
    let mut records = Vec::new();
    for k in 0..timeline.num_classes {
        let mut events: Vec<EventAnnotation> = annotations.iter().filter(|a| a.class == k).copied().collect();
        events.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        let mut matched: Vec<Option<f64>> = vec![None; events.len()];

        for (start, _) in timeline.runs(k) {
            let time = start as f64 * timeline.segment_seconds;
            let inside = |a: &EventAnnotation| time >= a.onset + early - 1e-9 && time <= a.offset + 1e-9;
            let candidates: Vec<usize> = (0..events.len()).filter(|&i| inside(&events[i])).collect();
            if candidates.is_empty() {
                records.push(DetectionRecord {
                    class: k,
                    status: Status::FalsePositive,
                    timeline_time: Some(time),
                    prediction_time: Some(time + timeline.wait_seconds),
                    annotation: None,
                    delay: None,
                });
            } else if let Some(&i) = candidates.iter().find(|&&i| matched[i].is_none()) {
                matched[i] = Some(time);
            }
        }

        for (event, hit) in events.into_iter().zip(matched) {
            records.push(match hit {
                Some(time) => {
                    let prediction = time + timeline.wait_seconds;
                    DetectionRecord {
                        class: k,
                        status: Status::TruePositive,
                        timeline_time: Some(time),
                        prediction_time: Some(prediction),
                        annotation: Some(event),
                        delay: Some(detection_delay(prediction, event.onset)),
                    }
                }
                None => DetectionRecord {
                    class: k,
                    status: Status::FalseNegative,
                    timeline_time: None,
                    prediction_time: None,
                    annotation: Some(event),
                    delay: None,
                },
            });
        }
    }
    Ok(records)
}

/// Micro-averaged event-level F1 and mean delay over true positives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarlyF1 {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// `None` when there is nothing to score (TP + FP + FN = 0).
    pub f1: Option<f64>,
    pub mean_delay: Option<f64>,
}

pub fn early_f1(records: &[DetectionRecord]) -> EarlyF1 {
    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let (tp, fp, fn_) = (
        count(Status::TruePositive),
        count(Status::FalsePositive),
        count(Status::FalseNegative),
    );
    let denom = 2 * tp + fp + fn_;
    let delays: Vec<f64> = records.iter().filter_map(|r| r.delay).collect();
    EarlyF1 {
        tp,
        fp,
        fn_,
        f1: (denom > 0).then(|| 2.0 * tp as f64 / denom as f64),
        mean_delay: (!delays.is_empty()).then(|| delays.iter().sum::<f64>() / delays.len() as f64),
    }
}
