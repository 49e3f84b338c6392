//! Online detection over a stream of 4-frame segments.
//!
//! The decision for segment `t` uses the window `[t − m, t + n]`, so it can
//! only be made once segment `t + n` has arrived. Before the stream has `m`
//! segments of history the window repeats the earliest segment; at the end
//! of a stream [`Detector::finish`] decides the remaining segments by
//! repeating the last one.

mod log;
mod rules;

pub use log::{read_detection_log, DetectionLogWriter, LOG_HEADER};
pub use rules::{
    decide_entropy, decide_probability, decide_vacuity, normalized_entropy, DecisionRule,
    DEFAULT_PROBABILITY_THRESHOLD, DEFAULT_UNCERTAINTY_THRESHOLD,
};

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frontend::{build_window, Segment, N_MELS, SEGMENT_FRAMES, SEGMENT_SECONDS};
use crate::metrics::DecisionTimeline;
use crate::model::{EvidenceOutput, PENetParams, Predictor};
use crate::opinion::{BetaEvidence, BinomialOpinion, DEFAULT_BASE_RATE};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Backward context in segments.
    pub context: usize,
    /// Forward context in segments; each one adds a segment of latency.
    pub forward: usize,
    pub rule: DecisionRule,
    /// Optional per-class thresholds replacing `rule`'s global one.
    pub class_thresholds: Option<Vec<f64>>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            context: 3,
            forward: 0,
            rule: DecisionRule::default(),
            class_thresholds: None,
        }
    }
}

impl DetectorConfig {
    fn rule_for(&self, class: usize) -> DecisionRule {
        match &self.class_thresholds {
            Some(t) => self.rule.with_threshold(t[class]),
            None => self.rule,
        }
    }

    /// Applies the configured rule to every class of one segment.
    pub fn decide(&self, out: &EvidenceOutput) -> Vec<bool> {
        out.evidence
            .iter()
            .enumerate()
            .map(|(k, &ev)| self.rule_for(k).decide(ev))
            .collect()
    }

    fn validate(&self, num_classes: usize) -> Result<()> {
        self.rule.validate()?;
        if let Some(t) = &self.class_thresholds {
            if t.len() != num_classes {
                return Err(Error::shape(format!("{num_classes} per-class thresholds"), t.len()));
            }
            for &v in t {
                self.rule.with_threshold(v).validate()?;
            }
        }
        Ok(())
    }
}

/// Decisions for one segment once they became available.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDecision {
    pub segment_index: usize,
    /// Start of the decided segment on the stream timeline.
    pub start_time: f64,
    /// Stream time at which the decision could be emitted.
    pub available_time: f64,
    pub evidence: Vec<BetaEvidence>,
    pub opinions: Vec<BinomialOpinion>,
    pub decisions: Vec<bool>,
}

/// Per-stream detector state.
#[derive(Debug, Clone)]
pub struct Detector {
    predictor: Predictor,
    config: DetectorConfig,
    buffer: VecDeque<Segment>,
    received: usize,
    next_to_decide: usize,
    latches: Vec<Option<f64>>,
}

impl Detector {
    pub fn new(params: &PENetParams, config: DetectorConfig) -> Result<Self> {
        let k = params.shape().num_classes;
        config.validate(k)?;
        Ok(Self {
            predictor: Predictor::new(params),
            buffer: VecDeque::with_capacity(config.context + config.forward + 1),
            config,
            received: 0,
            next_to_decide: 0,
            latches: vec![None; k],
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Start time of the positive run each class is currently in, if any.
    pub fn latches(&self) -> &[Option<f64>] {
        &self.latches
    }

    pub fn segments_received(&self) -> usize {
        self.received
    }

    /// Feeds the next segment; returns the decision that became available,
    /// or `None` while the forward context is still filling.
    pub fn step(&mut self, mut segment: Segment) -> Result<Option<SegmentDecision>> {
        if segment.frames.shape() != (SEGMENT_FRAMES, N_MELS) {
            return Err(Error::shape(
                format!("{SEGMENT_FRAMES}x{N_MELS} segment"),
                format!("{:?}", segment.frames.shape()),
            ));
        }
        segment.index = self.received;
        self.received += 1;
        if self.buffer.len() == self.config.context + self.config.forward + 1 {
            self.buffer.pop_front();
        }
        self.buffer.push_back(segment);
        if self.received <= self.config.forward {
            return Ok(None);
        }
        let t = self.received - 1 - self.config.forward;
        let available = (t + self.config.forward + 1) as f64 * SEGMENT_SECONDS;
        self.decide(t, available).map(Some)
    }

    /// Decides the segments still waiting for forward context, treating the
    /// last segment as repeating.
    pub fn finish(&mut self) -> Result<Vec<SegmentDecision>> {
        let end = self.received as f64 * SEGMENT_SECONDS;
        (self.next_to_decide..self.received)
            .map(|t| self.decide(t, end))
            .collect()
    }

    fn decide(&mut self, t: usize, available_time: f64) -> Result<SegmentDecision> {
        let refs: Vec<&Segment> = self.buffer.iter().collect();
        let window = build_window(&refs, t, self.config.context, self.config.forward)?;
        let out = self.predictor.evidence(&window.frames)?;
        let decisions = self.config.decide(&out);
        let start_time = t as f64 * SEGMENT_SECONDS;
        for (latch, &fired) in self.latches.iter_mut().zip(&decisions) {
            match (fired, *latch) {
                (true, None) => *latch = Some(start_time),
                (false, Some(_)) => *latch = None,
                _ => {}
            }
        }
        self.next_to_decide = t + 1;
        let opinions = out
            .evidence
            .iter()
            .map(|ev| ev.opinion(DEFAULT_BASE_RATE))
            .collect::<Result<_>>()?;
        Ok(SegmentDecision {
            segment_index: t,
            start_time,
            available_time,
            evidence: out.evidence,
            opinions,
            decisions,
        })
    }
}

/// Evidence for every segment of a clip from windows built over the whole
/// clip at once; identical to what [`Detector`] produces segment by segment.
pub fn evidence_offline(
    params: &PENetParams,
    segments: &[Segment],
    context: usize,
    forward: usize,
) -> Result<Vec<EvidenceOutput>> {
    let predictor = Predictor::new(params);
    let refs: Vec<&Segment> = segments.iter().collect();
    (0..segments.len())
        .map(|t| predictor.evidence(&build_window(&refs, t, context, forward)?.frames))
        .collect()
}

/// Decision timeline for metrics, with the forward wait of `forward` segments.
pub fn timeline_from_evidence(
    evidence: &[EvidenceOutput],
    config: &DetectorConfig,
    num_classes: usize,
) -> DecisionTimeline {
    DecisionTimeline {
        segment_seconds: SEGMENT_SECONDS,
        wait_seconds: config.forward as f64 * SEGMENT_SECONDS,
        num_classes,
        decisions: evidence.iter().map(|o| config.decide(o)).collect(),
    }
}
