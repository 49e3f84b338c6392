use super::{MelFrames, N_MELS, SEGMENT_FRAMES, SEGMENT_SECONDS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One streaming segment: `SEGMENT_FRAMES` consecutive mel frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub frames: Matrix<f32>,
}

impl Segment {
    pub fn start_time(&self) -> f64 {
        self.index as f64 * SEGMENT_SECONDS
    }
}

/// Non-overlapping consecutive blocks of `seg_frames` frames; a trailing
/// remainder shorter than a block is dropped.
pub fn segment_stream(frames: &MelFrames, seg_frames: usize) -> Vec<Segment> {
    let seg_frames = seg_frames.max(1);
    let m = frames.frames();
    (0..m.rows() / seg_frames)
        .map(|index| Segment {
            index,
            frames: m.slice_rows(index * seg_frames, (index + 1) * seg_frames),
        })
        .collect()
}

/// Model input for segment `segment_index`: segments `[t − m, t + n]`
/// stacked in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    pub frames: Matrix<f32>,
    pub segment_index: usize,
    /// Start time of the first window slot, clamped to the clip start.
    pub start_time: f64,
    pub m: usize,
    pub n: usize,
}

impl FeatureWindow {
    pub fn expected_len(m: usize, n: usize) -> usize {
        (m + n + 1) * SEGMENT_FRAMES
    }
}

/// Assembles the window for segment `t` from `segments`, where
/// `segments[i]` holds segment `first_index + i`. Slots before the first
/// available segment repeat it; slots after the last repeat the last.
pub fn build_window(segments: &[&Segment], t: usize, m: usize, n: usize) -> Result<FeatureWindow> {
    let first = segments
        .first()
        .ok_or(Error::Empty("no segments to build a window from"))?;
    let first_index = first.index;
    let last = segments.len() - 1;
    let mut data = Vec::with_capacity(FeatureWindow::expected_len(m, n) * N_MELS);
    for slot in 0..=(m + n) {
        let wanted = t as isize - m as isize + slot as isize;
        let pos = (wanted - first_index as isize).clamp(0, last as isize) as usize;
        let seg = segments[pos];
        if seg.frames.shape() != (SEGMENT_FRAMES, N_MELS) {
            return Err(Error::shape(
                format!("{SEGMENT_FRAMES}x{N_MELS} segment"),
                format!("{:?}", seg.frames.shape()),
            ));
        }
        data.extend_from_slice(seg.frames.as_slice());
    }
    let rows = data.len() / N_MELS;
    Ok(FeatureWindow {
        frames: Matrix::from_vec(rows, N_MELS, data)?,
        segment_index: t,
        start_time: t.saturating_sub(m) as f64 * SEGMENT_SECONDS,
        m,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> MelFrames {
        let data = (0..n * N_MELS).map(|i| (i / N_MELS) as f32).collect();
        MelFrames::new(Matrix::from_vec(n, N_MELS, data).unwrap()).unwrap()
    }

    #[test]
    fn segment_counts() {
        let segs = segment_stream(&frames(626), 4);
        assert_eq!(segs.len(), 156);
        assert_eq!(segs[155].frames.get(3, 0), 623.0);
        assert_eq!(segment_stream(&frames(4), 4).len(), 1);
        assert_eq!(segment_stream(&frames(3), 4).len(), 0);
        assert!((segs[10].start_time() - 0.64).abs() < 1e-12);
    }

    #[test]
    fn window_edges_repeat_boundary_segments() {
        let segs = segment_stream(&frames(40), 4);
        let refs: Vec<&Segment> = segs.iter().collect();
        let w = build_window(&refs, 1, 3, 2).unwrap();
        assert_eq!(w.frames.rows(), 24);
        // Slots t-3, t-2 and t-1 resolve to segments 0, 0, 0.
        let firsts: Vec<f32> = (0..6).map(|s| w.frames.get(s * 4, 0)).collect();
        assert_eq!(firsts, vec![0.0, 0.0, 0.0, 4.0, 8.0, 12.0]);
        let w = build_window(&refs, 9, 1, 2).unwrap();
        let firsts: Vec<f32> = (0..4).map(|s| w.frames.get(s * 4, 0)).collect();
        assert_eq!(firsts, vec![32.0, 36.0, 36.0, 36.0]);
    }
}
