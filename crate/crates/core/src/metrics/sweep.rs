//! Corpus-level evaluation and the threshold / backtrack sweeps.

use std::fmt::Write as _;

use serde::Serialize;

use super::{early_f1, match_events, DecisionTimeline, EarlyF1, EventAnnotation, MatchConfig};
use crate::error::{Error, Result};
use crate::frontend::Segment;
use crate::model::{EvidenceOutput, PENetParams};
use crate::stream::{evidence_offline, timeline_from_evidence, DecisionRule, DetectorConfig};

/// One evaluation clip: its segments and strong labels.
#[derive(Debug, Clone)]
pub struct EvalClip {
    pub id: String,
    pub segments: Vec<Segment>,
    pub annotations: Vec<EventAnnotation>,
}

/// Scores a set of per-clip timelines together (micro-averaged).
pub fn evaluate_corpus<'a, I>(clips: I, cfg: &MatchConfig) -> Result<EarlyF1>
where
    I: IntoIterator<Item = (&'a DecisionTimeline, &'a [EventAnnotation])>,
{
    let mut records = Vec::new();
    for (timeline, annotations) in clips {
        records.extend(match_events(timeline, annotations, cfg)?);
    }
    Ok(early_f1(&records))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    /// Grid value: the threshold, or the number of forward steps.
    pub value: f64,
    pub mean_delay: Option<f64>,
    pub f1: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Forward-context wait included in every delay.
    pub wait: f64,
}

impl SweepRow {
    fn new(value: f64, wait: f64, s: EarlyF1) -> Self {
        Self {
            value,
            mean_delay: s.mean_delay,
            f1: s.f1,
            tp: s.tp,
            fp: s.fp,
            fn_: s.fn_,
            wait,
        }
    }
}

/// Delay violations of a non-increasing sequence, between consecutive rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub inversions: usize,
    pub max_inversion: f64,
}

impl MonotonicityReport {
    pub fn non_increasing(delays: &[f64]) -> Self {
        let rises: Vec<f64> = delays.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
        Self {
            inversions: rises.len(),
            max_inversion: rises.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn within(&self, allowed: usize, tolerance: f64) -> bool {
        self.inversions == 0 || (self.inversions <= allowed && self.max_inversion <= tolerance)
    }
}

/// `BacktrackRow` rows carry the forward steps in `value`.
pub type BacktrackRow = SweepRow;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub param: String,
    pub rule: String,
    pub rows: Vec<SweepRow>,
    /// Delay trend over rows with a defined mean delay.
    pub monotonicity: Option<MonotonicityReport>,
    /// Backtrack only: every row used the same parameters.
    pub shared_model: Option<bool>,
}

impl SweepTable {
    pub fn best_f1(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.f1.is_some())
            .fold(None, |best: Option<&SweepRow>, r| match best {
                Some(b) if b.f1 >= r.f1 => Some(b),
                _ => Some(r),
            })
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = format!("{},mean_delay,f1,tp,fp,fn,wait\n", self.param);
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3}",
                r.value,
                opt(r.mean_delay),
                opt(r.f1),
                r.tp,
                r.fp,
                r.fn_,
                r.wait
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{} sweep ({} rule)\n", self.param, self.rule);
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>8}  {:>10}  {:>6}  {:>5} {:>5} {:>5}",
            self.param, "delay(s)", "F1", "TP", "FP", "FN"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>8}  {:>10}  {:>6}  {:>5} {:>5} {:>5}",
                r.value,
                opt(r.mean_delay),
                opt(r.f1),
                r.tp,
                r.fp,
                r.fn_
            );
        }
        if let Some(best) = self.best_f1() {
            let _ = writeln!(out, "best F1 at {} = {}", self.param, best.value);
        }
        if let Some(m) = self.monotonicity {
            let _ = writeln!(
                out,
                "delay inversions: {} (largest {:.4} s)",
                m.inversions, m.max_inversion
            );
        }
        if self.shared_model == Some(true) {
            out.push_str("note: one model evaluated at every n\n");
        }
        out
    }
}

fn clip_evidence(
    params: &PENetParams,
    clips: &[EvalClip],
    context: usize,
    forward: usize,
) -> Result<Vec<Vec<EvidenceOutput>>> {
    clips
        .iter()
        .map(|c| evidence_offline(params, &c.segments, context, forward))
        .collect()
}

fn score(
    evidence: &[Vec<EvidenceOutput>],
    clips: &[EvalClip],
    det: &DetectorConfig,
    k: usize,
    cfg: &MatchConfig,
) -> Result<EarlyF1> {
    let timelines: Vec<DecisionTimeline> = evidence.iter().map(|e| timeline_from_evidence(e, det, k)).collect();
    evaluate_corpus(
        timelines.iter().zip(clips.iter().map(|c| c.annotations.as_slice())),
        cfg,
    )
}

/// Evaluates `base`'s rule at each threshold in `grid`. Evidence is
/// computed once and re-thresholded.
pub fn sweep_vacuity(
    params: &PENetParams,
    clips: &[EvalClip],
    base: &DetectorConfig,
    grid: &[f64],
    cfg: &MatchConfig,
) -> Result<SweepTable> {
    let k = params.shape().num_classes;
    let evidence = clip_evidence(params, clips, base.context, base.forward)?;
    let wait = base.forward as f64 * crate::frontend::SEGMENT_SECONDS;
    let mut rows = Vec::with_capacity(grid.len());
    for &v in grid {
        let det = DetectorConfig {
            rule: base.rule.with_threshold(v),
            class_thresholds: None,
            ..base.clone()
        };
        det.rule.validate()?;
        rows.push(SweepRow::new(v, wait, score(&evidence, clips, &det, k, cfg)?));
    }
    let delays: Vec<f64> = rows.iter().filter_map(|r| r.mean_delay).collect();
    Ok(SweepTable {
        param: "threshold".into(),
        rule: base.rule.name().into(),
        monotonicity: Some(MonotonicityReport::non_increasing(&delays)),
        rows,
        shared_model: None,
    })
}

/// Evaluates one model per forward-step count. `models` pairs `n` with the
/// parameters to use at that `n`; pass the same parameters for every entry
/// to evaluate a shared model, which the table then records.
pub fn sweep_backtrack(
    models: &[(usize, &PENetParams)],
    clips: &[EvalClip],
    context: usize,
    rule: DecisionRule,
    cfg: &MatchConfig,
) -> Result<SweepTable> {
    let first = models.first().ok_or(Error::Empty("no models to sweep"))?.1;
    let mut rows = Vec::with_capacity(models.len());
    for &(n, params) in models {
        let det = DetectorConfig {
            context,
            forward: n,
            rule,
            class_thresholds: None,
        };
        let evidence = clip_evidence(params, clips, context, n)?;
        let wait = n as f64 * crate::frontend::SEGMENT_SECONDS;
        rows.push(SweepRow::new(
            n as f64,
            wait,
            score(&evidence, clips, &det, params.shape().num_classes, cfg)?,
        ));
    }
    Ok(SweepTable {
        param: "forward".into(),
        rule: rule.name().into(),
        rows,
        monotonicity: None,
        shared_model: Some(models.iter().all(|(_, p)| *p == first)),
    })
}
