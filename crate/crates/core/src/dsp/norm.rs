use super::stft::MagSpectrogram;
use super::SEGMENT_LEN;

/// Loss weighting over one analysis segment: 1 over the first half, then a
/// linear ramp from 1 down toward 0 across the second half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaperWeights {
    segment_len: usize,
}

impl Default for TaperWeights {
    fn default() -> Self {
        Self::new(SEGMENT_LEN)
    }
}

impl TaperWeights {
    pub fn new(segment_len: usize) -> Self {
        assert!(segment_len >= 2 && segment_len % 2 == 0, "segment length must be even");
        Self { segment_len }
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    /// Weight of sample `n`; zero at and beyond the segment end.
    pub fn at(&self, n: usize) -> f64 {
        let half = self.segment_len / 2;
        if n < half {
            1.0
        } else if n < self.segment_len {
            1.0 - (n - half) as f64 / half as f64
        } else {
            0.0
        }
    }

    /// Per-sample weights over the whole segment.
    pub fn samples(&self) -> Vec<f64> {
        (0..self.segment_len).map(|n| self.at(n)).collect()
    }

    /// One weight per frame, sampled at the frame's center
    /// (`frame * hop + window / 2`).
    pub fn frame_weights(&self, frames: usize, hop: usize, window: usize) -> Vec<f64> {
        (0..frames).map(|f| self.at(f * hop + window / 2)).collect()
    }
}

/// Sum of magnitudes, frame-weighted by `taper` when given.
pub fn l1_norm(s: &MagSpectrogram, taper: Option<&TaperWeights>) -> f64 {
    match taper {
        None => s.values().iter().map(|&v| v as f64).sum(),
        Some(t) => weighted_l1(s, &t.frame_weights(s.frames(), s.hop(), s.window())),
    }
}

/// Sum of magnitudes with one weight per frame.
pub fn weighted_l1(s: &MagSpectrogram, frame_weights: &[f64]) -> f64 {
    s.values()
        .chunks_exact(s.bins())
        .zip(frame_weights)
        .map(|(col, &w)| {
            if w == 0.0 {
                0.0
            } else {
                w * col.iter().map(|&v| v as f64).sum::<f64>()
            }
        })
        .sum()
}
