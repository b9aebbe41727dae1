use std::sync::Arc;

use realfft::num_complex::Complex32;
use realfft::RealToComplex;
use serde::{Deserialize, Serialize};

use super::fft::forward_f32;
use crate::error::{Error, Result};

/// Non-negative magnitude spectrogram, stored frame-major
/// (`values[frame * bins + bin]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagSpectrogram {
    bins: usize,
    frames: usize,
    hop: usize,
    window: usize,
    values: Vec<f32>,
}

impl MagSpectrogram {
    pub fn new(window: usize, hop: usize, frames: usize, values: Vec<f32>) -> Result<Self> {
        let bins = window / 2 + 1;
        if values.len() != bins * frames {
            return Err(Error::invalid(format!(
                "expected {} values for {bins}x{frames}, got {}",
                bins * frames,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!("magnitude {v} is negative or non-finite")));
        }
        Ok(Self {
            bins,
            frames,
            hop,
            window,
            values,
        })
    }

    pub fn zeros(window: usize, hop: usize, frames: usize) -> Self {
        let bins = window / 2 + 1;
        Self {
            bins,
            frames,
            hop,
            window,
            values: vec![0.0; bins * frames],
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, bin: usize, frame: usize) -> f32 {
        self.values[frame * self.bins + bin]
    }

    pub fn column(&self, frame: usize) -> &[f32] {
        &self.values[frame * self.bins..(frame + 1) * self.bins]
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.bins == other.bins
            && self.frames == other.frames
            && self.hop == other.hop
            && self.window == other.window
    }

    /// Unweighted L1 of each frame.
    pub fn column_norms(&self) -> Vec<f64> {
        self.values
            .chunks_exact(self.bins)
            .map(|c| c.iter().map(|&v| v as f64).sum())
            .collect()
    }
}

/// Reusable magnitude-STFT analyzer with a periodic Hann window.
///
/// Frame `f` covers samples `[f * hop, f * hop + window)`; samples past the
/// end of the input read as zero.
#[derive(Clone)]
pub struct Stft {
    window: usize,
    hop: usize,
    taper: Vec<f32>,
    fft: Arc<dyn RealToComplex<f32>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft")
            .field("window", &self.window)
            .field("hop", &self.hop)
            .finish()
    }
}

impl Stft {
    pub fn new(window: usize, hop: usize) -> Result<Self> {
        if window == 0 || hop == 0 || window % hop != 0 || window % 2 != 0 {
            return Err(Error::invalid(format!(
                "window ({window}) and hop ({hop}) must be positive, window even and a multiple of hop"
            )));
        }
        let taper = (0..window)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / window as f64;
                (0.5 * (1.0 - phi.cos())) as f32
            })
            .collect();
        Ok(Self {
            window,
            hop,
            taper,
            fft: forward_f32(window),
        })
    }

    pub fn bins(&self) -> usize {
        self.window / 2 + 1
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// `ceil(len / hop)`.
    pub fn frame_count(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }

    pub fn analyze(&self, x: &[f32]) -> Result<MagSpectrogram> {
        if x.is_empty() {
            return Err(Error::invalid("cannot analyze an empty signal"));
        }
        let frames = self.frame_count(x.len());
        let mut values = vec![0.0f32; frames * self.bins()];
        self.frames_into(x, 0, &mut values);
        Ok(MagSpectrogram {
            bins: self.bins(),
            frames,
            hop: self.hop,
            window: self.window,
            values,
        })
    }

    /// Writes the magnitudes of frames `first, first + 1, ...` into `out`
    /// (one column of `bins` values per frame, as many as fit).
    pub fn frames_into(&self, x: &[f32], first: usize, out: &mut [f32]) {
        let bins = self.bins();
        let mut input = self.fft.make_input_vec();
        let mut spectrum = self.fft.make_output_vec();
        let mut scratch = self.fft.make_scratch_vec();
        for (k, column) in out.chunks_exact_mut(bins).enumerate() {
            let start = (first + k) * self.hop;
            if start >= x.len() {
                column.fill(0.0);
                continue;
            }
            let avail = (x.len() - start).min(self.window);
            let frame = &x[start..start + avail];
            if frame.iter().all(|&v| v == 0.0) {
                column.fill(0.0);
                continue;
            }
            for (i, slot) in input.iter_mut().enumerate() {
                *slot = if i < avail { frame[i] * self.taper[i] } else { 0.0 };
            }
            self.fft
                .process_with_scratch(&mut input, &mut spectrum, &mut scratch)
                .expect("buffer sizes come from the plan");
            for (dst, c) in column.iter_mut().zip(spectrum.iter()) {
                *dst = magnitude(*c);
            }
        }
    }
}

#[inline]
fn magnitude(c: Complex32) -> f32 {
    (c.re as f64).hypot(c.im as f64) as f32
}

/// Magnitude STFT with a periodic Hann window; `ceil(len / hop)` frames.
pub fn stft_mag(x: &[f32], window: usize, hop: usize) -> Result<MagSpectrogram> {
    Stft::new(window, hop)?.analyze(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{BINS, HOP, SAMPLE_RATE, SEGMENT_FRAMES, SEGMENT_LEN, WINDOW};

    #[test]
    fn segment_shape() {
        let x = vec![0.1f32; SEGMENT_LEN];
        let s = stft_mag(&x, WINDOW, HOP).unwrap();
        assert_eq!(s.bins(), BINS);
        assert_eq!(s.frames(), SEGMENT_FRAMES);
    }

    #[test]
    fn silence_is_zero() {
        let s = stft_mag(&vec![0.0; 5000], WINDOW, HOP).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_empty_and_bad_geometry() {
        assert!(matches!(stft_mag(&[], WINDOW, HOP), Err(Error::InvalidInput(_))));
        assert!(Stft::new(2048, 300).is_err());
        assert!(Stft::new(0, 1).is_err());
    }

    /// Direct O(N^2) DFT of one Hann-windowed frame.
    fn direct_frame_dft(x: &[f32], start: usize, window: usize) -> Vec<f64> {
        let w = |i: usize| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / window as f64).cos());
        (0..=window / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for n in 0..window {
                    let v = x.get(start + n).copied().unwrap_or(0.0) as f64 * w(n);
                    let ph = -2.0 * std::f64::consts::PI * (k * n) as f64 / window as f64;
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn sine_peak_matches_direct_dft() {
        let sr = SAMPLE_RATE as f64;
        let x: Vec<f32> = (0..8192)
            .map(|n| (2.0 * std::f64::consts::PI * 440.0 * n as f64 / sr).sin() as f32)
            .collect();
        let s = stft_mag(&x, WINDOW, HOP).unwrap();
        let frame = 4;
        let oracle = direct_frame_dft(&x, frame * HOP, WINDOW);
        let col = s.column(frame);
        for (a, b) in col.iter().zip(&oracle) {
            assert!((*a as f64 - b).abs() < 1e-3 * oracle.iter().cloned().fold(0.0, f64::max));
        }
        let peak = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
        assert_eq!(peak, (440.0 * 2048.0 / sr).round() as usize);
        assert_eq!(peak, 41);
        let pv = col[peak];
        for (k, &v) in col.iter().enumerate() {
            if k.abs_diff(peak) >= 3 {
                assert!(v < 0.05 * pv, "bin {k}: {v} vs peak {pv}");
            }
        }
    }
}
