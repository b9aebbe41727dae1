//! The event decoder.
//!
//! An event is rendered by source-excitation synthesis: a short enveloped
//! noise burst is pushed through a stack of blocks. Each block convolves its
//! input with one or more resonances (sums of exponentially decaying
//! sinusoids), cross-fades between the resonant outputs with a time-varying
//! mixture, and mixes the result with the unfiltered input through a
//! dry/wet gain pair. The last block may instead convolve with a room
//! impulse response drawn from an [`RirBank`]. The rendered event is then
//! scheduled on a segment canvas: coarse placement on the 256-sample frame
//! grid, fine placement by a fractional delay.

mod bank;
mod noise;
mod render;

pub use bank::{RirBank, SYNTHETIC_BANK_SIZE};
pub use noise::{uniform_noise, PRNG_ID, PRNG_NAME};
pub use render::{
    apply_block, place_one_hot, render_burst, render_event, render_resonance, render_source,
};
pub(crate) use render::render_source_limited;

use serde::{Deserialize, Serialize};

use crate::dsp::{HALF_SEGMENT, HOP};
use crate::error::{Error, Result};

pub const MAX_BURST_LEN: u32 = 8192;
pub const MAX_PARTIALS: usize = 64;
pub const MAX_BLOCKS: usize = 8;
/// Default resonance FIR length (about 1.5 s at 22050 Hz).
pub const DEFAULT_FIR_LEN: u32 = 1 << 15;
/// Default number of mixture control frames.
pub const DEFAULT_CONTROL_FRAMES: usize = 32;
/// Fine shifts are strictly smaller than one hop in magnitude.
pub const MAX_FINE_SHIFT: f32 = HOP as f32;
/// Latest frame at which an event may begin within its segment.
pub const MAX_ONSET_FRAME: u32 = (HALF_SEGMENT / HOP - 1) as u32;

/// Noise excitation with a linear attack, optional hold, and linear decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBurst {
    pub duration: u32,
    pub attack: u32,
    pub decay: u32,
    pub gain: f32,
    pub seed: u64,
}

impl NoiseBurst {
    /// Envelope value at sample `n`: `n / attack` while rising, 1 while
    /// holding, then `(duration - n) / decay` over the final `decay` samples.
    pub fn envelope(&self, n: u32) -> f32 {
        if n >= self.duration {
            return 0.0;
        }
        if n < self.attack {
            return n as f32 / self.attack as f32;
        }
        let decay_start = self.duration - self.decay;
        if n >= decay_start {
            return (self.duration - n) as f32 / self.decay as f32;
        }
        1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration == 0 || self.duration > MAX_BURST_LEN {
            return Err(Error::validation(format!(
                "burst duration {} outside 1..={MAX_BURST_LEN}",
                self.duration
            )));
        }
        if self.attack as u64 + self.decay as u64 > self.duration as u64 {
            return Err(Error::validation("burst attack + decay exceeds duration"));
        }
        check_gain("burst gain", self.gain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partial {
    /// Hz, in (0, sample_rate / 2).
    pub freq: f32,
    pub amp: f32,
    /// Exponential decay per sample.
    pub decay_alpha: f32,
    /// Radians.
    pub phase: f32,
}

/// FIR filter `r[n] = sum_p amp_p * exp(-alpha_p n) * sin(2 pi f_p n / sr + phase_p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub partials: Vec<Partial>,
    pub length: u32,
}

impl Resonance {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.length == 0 || self.length as usize > crate::dsp::SEGMENT_LEN {
            return Err(Error::validation(format!("resonance length {} out of range", self.length)));
        }
        if self.partials.is_empty() || self.partials.len() > MAX_PARTIALS {
            return Err(Error::validation(format!(
                "resonance has {} partials, expected 1..={MAX_PARTIALS}",
                self.partials.len()
            )));
        }
        let nyquist = sample_rate as f32 / 2.0;
        for p in &self.partials {
            if !(p.freq > 0.0 && p.freq < nyquist) {
                return Err(Error::validation(format!("partial frequency {} outside (0, {nyquist})", p.freq)));
            }
            check_gain("partial amplitude", p.amp)?;
            check_gain("partial decay", p.decay_alpha)?;
            if !p.phase.is_finite() {
                return Err(Error::validation("partial phase is not finite"));
            }
        }
        Ok(())
    }
}

/// Control points of a time-varying mixture: one row per control frame, one
/// column per resonance, each row a convex combination. Rows are spread
/// evenly over the block output and linearly interpolated per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEnvelope {
    pub control_points: Vec<Vec<f32>>,
}

impl MixtureEnvelope {
    /// Equal weights for `resonances` columns, held constant.
    pub fn constant(resonances: usize) -> Self {
        Self::uniform(resonances, 1)
    }

    pub fn uniform(resonances: usize, control_frames: usize) -> Self {
        let w = 1.0 / resonances as f32;
        Self {
            control_points: vec![vec![w; resonances]; control_frames],
        }
    }

    pub fn columns(&self) -> usize {
        self.control_points.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> usize {
        self.control_points.len()
    }

    pub fn validate(&self, columns: usize) -> Result<()> {
        if self.control_points.is_empty() || self.control_points.len() > u16::MAX as usize {
            return Err(Error::validation("mixture needs 1..=65535 control frames"));
        }
        for row in &self.control_points {
            if row.len() != columns {
                return Err(Error::validation(format!(
                    "mixture row has {} columns, block has {columns} resonances",
                    row.len()
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::validation("mixture weights must be finite and non-negative"));
            }
            let sum: f64 = row.iter().map(|&v| v as f64).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::validation(format!("mixture row sums to {sum}, expected 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockFilter {
    Resonant {
        resonances: Vec<Resonance>,
        mixture: MixtureEnvelope,
    },
    /// A single response taken from the impulse response bank.
    Room { rir_index: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub filter: BlockFilter,
    pub dry_gain: f32,
    pub wet_gain: f32,
}

impl BlockParams {
    /// Number of resonances the block mixes between.
    pub fn expressivity(&self) -> usize {
        match &self.filter {
            BlockFilter::Resonant { resonances, .. } => resonances.len(),
            BlockFilter::Room { .. } => 1,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        check_gain("dry gain", self.dry_gain)?;
        check_gain("wet gain", self.wet_gain)?;
        if let BlockFilter::Resonant { resonances, mixture } = &self.filter {
            if resonances.is_empty() || resonances.len() > u8::MAX as usize {
                return Err(Error::validation("block expressivity must be in 1..=255"));
            }
            for r in resonances {
                r.validate(sample_rate)?;
            }
            mixture.validate(resonances.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventParams {
    pub burst: NoiseBurst,
    pub blocks: Vec<BlockParams>,
    /// Sub-frame delay in samples, `|fine_shift| < 256`.
    pub fine_shift: f32,
    pub amplitude: f32,
}

impl EventParams {
    /// Bank index used by the final room block, if any.
    pub fn rir_index(&self) -> Option<u32> {
        match self.blocks.last().map(|b| &b.filter) {
            Some(BlockFilter::Room { rir_index }) => Some(*rir_index),
            _ => None,
        }
    }

    /// Frequency of the loudest partial in the first audible resonant block;
/// the earliest listed partial wins ties.
    pub fn dominant_frequency(&self) -> Option<f32> {
        self.blocks.iter().find_map(|b| match &b.filter {
            BlockFilter::Resonant { resonances, .. } if b.wet_gain > 0.0 => resonances
                .iter()
                .flat_map(|r| r.partials.iter())
                .reduce(|a, b| if b.amp > a.amp { b } else { a })
                .map(|p| p.freq),
            _ => None,
        })
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        self.burst.validate()?;
        if self.blocks.is_empty() || self.blocks.len() > MAX_BLOCKS {
            return Err(Error::validation(format!("event needs 1..={MAX_BLOCKS} blocks")));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if matches!(b.filter, BlockFilter::Room { .. }) && i + 1 != self.blocks.len() {
                return Err(Error::validation("only the final block may use a room response"));
            }
            b.validate(sample_rate)?;
        }
        if !(self.fine_shift.is_finite() && self.fine_shift.abs() < MAX_FINE_SHIFT) {
            return Err(Error::validation(format!("fine shift {} outside (-256, 256)", self.fine_shift)));
        }
        check_gain("amplitude", self.amplitude)
    }
}

/// An event within one segment: onset on the frame grid plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub onset_frame: u32,
    pub params: EventParams,
}

impl Event {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.onset_frame > MAX_ONSET_FRAME {
            return Err(Error::validation(format!(
                "onset frame {} is not in the first half of the segment",
                self.onset_frame
            )));
        }
        self.params.validate(sample_rate)
    }
}

fn check_gain(what: &str, v: f32) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must be finite and non-negative, got {v}")))
    }
}
