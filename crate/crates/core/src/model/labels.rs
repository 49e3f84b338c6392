use crate::frontend::SEGMENT_SECONDS;
use crate::metrics::EventAnnotation;

/// Segment-resolution targets: segment `t` is positive for class `k` when at
/// least half of its span overlaps an event of class `k`.
pub fn rasterize_labels(annotations: &[EventAnnotation], num_classes: usize, num_segments: usize) -> Vec<Vec<bool>> {
    let mut labels = vec![vec![false; num_classes]; num_segments];
    for e in annotations.iter().filter(|e| e.class < num_classes) {
        let first = (e.onset / SEGMENT_SECONDS).floor().max(0.0) as usize;
        let last = ((e.offset / SEGMENT_SECONDS).ceil() as usize).min(num_segments);
        for (t, row) in labels.iter_mut().enumerate().take(last).skip(first) {
            let start = t as f64 * SEGMENT_SECONDS;
            let overlap = (e.offset.min(start + SEGMENT_SECONDS) - e.onset.max(start)).max(0.0);
            if overlap >= 0.5 * SEGMENT_SECONDS - 1e-12 {
                row[e.class] = true;
            }
        }
    }
    labels
}
