//! Signal-processing primitives shared by the decoder and the encoder:
//! magnitude STFT analysis, FFT convolution, frequency-domain fractional
//! delay, and (optionally tapered) L1 norms.
//!
//! Everything here is a pure function of its arguments. Samples are `f32`;
//! transforms used for convolution and shifting run in `f64` and norms
//! accumulate in `f64`.

pub(crate) mod convolve;
mod fft;
mod norm;
mod shift;
mod stft;

pub use convolve::{direct_convolve, fft_convolve, fft_convolve_truncated};
pub use norm::{l1_norm, weighted_l1, TaperWeights};
pub use shift::fractional_shift;
pub use stft::{stft_mag, MagSpectrogram, Stft};

use crate::error::{Error, Result};

/// Default codec sample rate in Hz.
pub const SAMPLE_RATE: u32 = 22050;
/// Analysis window length in samples.
pub const WINDOW: usize = 2048;
/// Analysis hop in samples; also the coarse scheduling grid.
pub const HOP: usize = 256;
/// Magnitude bins for a [`WINDOW`]-point transform.
pub const BINS: usize = WINDOW / 2 + 1;
/// Samples analyzed per encoder segment.
pub const SEGMENT_LEN: usize = 1 << 17;
/// Samples encoded per segment; events must begin before this offset.
pub const HALF_SEGMENT: usize = 1 << 16;
/// STFT frames covering one segment.
pub const SEGMENT_FRAMES: usize = SEGMENT_LEN / HOP;
/// Frames in which an event may begin.
pub const FIRST_HALF_FRAMES: usize = HALF_SEGMENT / HOP;

/// Mono PCM buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcm {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl Pcm {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate: sample_rate.max(1),
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Root-mean-square difference of two equal-length signals (shorter one is
/// zero-extended).
pub fn rms_diff(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len().max(b.len());
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let d = *a.get(i).unwrap_or(&0.0) as f64 - *b.get(i).unwrap_or(&0.0) as f64;
            d * d
        })
        .sum();
    (sum / n as f64).sqrt()
}

/// Normalized cross-correlation of two signals at lag zero.
pub fn normalized_correlation(a: &[f32], b: &[f32]) -> f64 {
    let n = a.len().min(b.len());
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let (x, y) = (a[i] as f64, b[i] as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab / (aa * bb).sqrt()
}

pub fn energy(x: &[f32]) -> f64 {
    x.iter().map(|&v| v as f64 * v as f64).sum()
}
