use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{
    BlockFilter, BlockParams, EventParams, MixtureEnvelope, NoiseBurst, Partial, Resonance, RirBank,
    DEFAULT_FIR_LEN, MAX_BURST_LEN, MAX_PARTIALS,
};

/// Coarse search grids for [`fit_event`](super::fit_event).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    /// Fundamental frequencies, Hz.
    pub f0_grid: Vec<f32>,
    /// Resonance decay times to -60 dB, seconds.
    pub decay_grid: Vec<f32>,
    /// Noise burst lengths, samples.
    pub burst_durations: Vec<u32>,
    /// Room responses to try; `None` means every bank entry.
    pub rir_indices: Option<Vec<u32>>,
    /// Harmonic counts for tonal templates.
    pub harmonic_counts: Vec<u32>,
    /// Whether to try the unfiltered noise-burst template.
    pub include_noise: bool,
    pub seeds: Vec<u64>,
}

impl Default for Dictionary {
    fn default() -> Self {
        Self {
            f0_grid: log_grid(40.0, 8000.0, 64),
            decay_grid: vec![0.05, 0.1, 0.25, 0.5, 1.0, 2.0],
            burst_durations: vec![64, 256, 1024],
            rir_indices: None,
            harmonic_counts: vec![1, 4],
            include_noise: true,
            seeds: vec![0],
        }
    }
}

impl Dictionary {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f32 / 2.0;
        if self.f0_grid.is_empty()
            || self.decay_grid.is_empty()
            || self.burst_durations.is_empty()
            || self.harmonic_counts.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::Config("dictionary grids must be non-empty".into()));
        }
        if self.f0_grid.iter().any(|f| !(*f > 0.0 && *f < nyquist)) {
            return Err(Error::Config(format!("f0 grid must lie in (0, {nyquist})")));
        }
        if self.decay_grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Config("decay grid must be positive".into()));
        }
        if self.burst_durations.iter().any(|&b| b == 0 || b > MAX_BURST_LEN) {
            return Err(Error::Config(format!("burst durations must be in 1..={MAX_BURST_LEN}")));
        }
        if self.harmonic_counts.iter().any(|&h| h == 0 || h as usize > MAX_PARTIALS) {
            return Err(Error::Config(format!("harmonic counts must be in 1..={MAX_PARTIALS}")));
        }
        if matches!(&self.rir_indices, Some(v) if v.is_empty()) {
            return Err(Error::Config("explicit room list must be non-empty".into()));
        }
        Ok(())
    }

    /// Room indices to search against `bank`.
    pub fn rooms(&self, bank: &RirBank) -> Result<Vec<u32>> {
        match &self.rir_indices {
            None => Ok((0..bank.len() as u32).collect()),
            Some(v) => {
                if let Some(i) = v.iter().find(|&&i| i as usize >= bank.len()) {
                    return Err(Error::Config(format!("room index {i} outside bank of {}", bank.len())));
                }
                Ok(v.clone())
            }
        }
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f32, hi: f32, n: usize) -> Vec<f32> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi as f64 / lo as f64).ln();
    (0..n)
        .map(|i| (lo as f64 * (ratio * i as f64 / (n - 1) as f64).exp()) as f32)
        .collect()
}

/// The parameter family the encoder searches. A template expands to three
/// blocks: an instrument block of harmonic resonances excited by the burst,
/// a body block resonating at the same fundamental with a longer decay, and
/// an optional room block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTemplate {
    pub f0: f32,
    /// Instrument decay to -60 dB, seconds.
    pub t60: f32,
    /// 0 selects the unfiltered burst (instrument block fully dry).
    pub harmonics: u32,
    /// Partial `k` has amplitude proportional to `k^-tilt`.
    pub tilt: f32,
    /// Detune of a second instrument resonance in cents; 0 means a single
    /// resonance.
    pub detune_cents: f32,
    /// Weight of the detuned resonance at the start and end of the block.
    pub mix_start: f32,
    pub mix_end: f32,
    /// Instrument block dry gain for tonal templates.
    pub instrument_dry: f32,
    pub body_wet: f32,
    pub room: Option<u32>,
    pub room_dry: f32,
    pub burst_len: u32,
    pub seed: u64,
    pub fine_shift: f32,
}

impl EventTemplate {
    pub fn tonal(f0: f32, t60: f32, harmonics: u32, burst_len: u32, seed: u64) -> Self {
        Self {
            f0,
            t60,
            harmonics,
            tilt: 1.0,
            detune_cents: 0.0,
            mix_start: 0.0,
            mix_end: 0.0,
            instrument_dry: 0.0,
            body_wet: 0.0,
            room: None,
            room_dry: 0.0,
            burst_len,
            seed,
            fine_shift: 0.0,
        }
    }

    pub fn noise(burst_len: u32, seed: u64) -> Self {
        Self::tonal(440.0, 0.25, 0, burst_len, seed)
    }

    pub fn is_noise(&self) -> bool {
        self.harmonics == 0
    }

    pub fn to_params(&self, amplitude: f32, sample_rate: u32) -> EventParams {
        let harmonics = self.harmonics.max(1);
        let instrument = if self.detune_cents == 0.0 {
            BlockFilter::Resonant {
                resonances: vec![self.resonance(self.f0, self.t60, harmonics, sample_rate)],
                mixture: MixtureEnvelope::constant(1),
            }
        } else {
            let detuned = self.f0 * 2f32.powf(self.detune_cents / 1200.0);
            let (m0, m1) = (self.mix_start.clamp(0.0, 1.0), self.mix_end.clamp(0.0, 1.0));
            BlockFilter::Resonant {
                resonances: vec![
                    self.resonance(self.f0, self.t60, harmonics, sample_rate),
                    self.resonance(detuned, self.t60, harmonics, sample_rate),
                ],
                mixture: MixtureEnvelope {
                    control_points: vec![vec![1.0 - m0, m0], vec![1.0 - m1, m1]],
                },
            }
        };
        let (dry, wet) = if self.is_noise() { (1.0, 0.0) } else { (self.instrument_dry, 1.0) };
        let mut blocks = vec![
            BlockParams {
                filter: instrument,
                dry_gain: dry,
                wet_gain: wet,
            },
            BlockParams {
                filter: BlockFilter::Resonant {
                    resonances: vec![self.resonance(self.f0, self.t60 * 3.0, harmonics, sample_rate)],
                    mixture: MixtureEnvelope::constant(1),
                },
                dry_gain: 1.0,
                wet_gain: self.body_wet,
            },
        ];
        if let Some(rir_index) = self.room {
            blocks.push(BlockParams {
                filter: BlockFilter::Room { rir_index },
                dry_gain: self.room_dry,
                wet_gain: 1.0,
            });
        }
        let attack = (self.burst_len / 4).min(32);
        EventParams {
            burst: NoiseBurst {
                duration: self.burst_len,
                attack,
                decay: self.burst_len / 2,
                gain: 1.0,
                seed: self.seed,
            },
            blocks,
            fine_shift: self.fine_shift,
            amplitude,
        }
    }

    /// Harmonic partials of `f0` below Nyquist, amplitudes normalized to
    /// sum to one.
    fn resonance(&self, f0: f32, t60: f32, harmonics: u32, sample_rate: u32) -> Resonance {
        let nyquist = sample_rate as f32 / 2.0;
        let alpha = 1000f32.ln() / (t60 * sample_rate as f32);
        let mut partials: Vec<Partial> = (1..=harmonics)
            .map(|k| (k, f0 * k as f32))
            .take_while(|&(_, f)| f < nyquist * 0.98)
            .map(|(k, freq)| Partial {
                freq,
                amp: (k as f32).powf(-self.tilt),
                decay_alpha: alpha,
                phase: 0.0,
            })
            .collect();
        if partials.is_empty() {
            partials.push(Partial {
                freq: f0.min(nyquist * 0.98),
                amp: 1.0,
                decay_alpha: alpha,
                phase: 0.0,
            });
        }
        let total: f32 = partials.iter().map(|p| p.amp).sum();
        for p in &mut partials {
            p.amp /= total;
        }
        Resonance {
            partials,
            length: DEFAULT_FIR_LEN,
        }
    }
}

impl Default for EventTemplate {
    fn default() -> Self {
        Self::tonal(440.0, 0.25, 4, 256, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SAMPLE_RATE;

    #[test]
    fn default_grids() {
        let d = Dictionary::default();
        assert_eq!(d.f0_grid.len(), 64);
        assert!((d.f0_grid[0] - 40.0).abs() < 1e-4);
        assert!((d.f0_grid[63] - 8000.0).abs() < 1e-2);
        assert!(d.validate(SAMPLE_RATE).is_ok());
    }

    #[test]
    fn empty_grid_is_config_error() {
        let d = Dictionary {
            f0_grid: vec![],
            ..Dictionary::default()
        };
        assert!(matches!(d.validate(SAMPLE_RATE), Err(Error::Config(_))));
    }

    #[test]
    fn templates_expand_to_valid_params() {
        let mut t = EventTemplate::tonal(8000.0, 2.0, 4, 1024, 3);
        t.room = Some(7);
        t.detune_cents = 20.0;
        t.mix_end = 1.0;
        let p = t.to_params(0.5, SAMPLE_RATE);
        p.validate(SAMPLE_RATE).unwrap();
        assert_eq!(p.blocks.len(), 3);
        assert_eq!(p.rir_index(), Some(7));
        assert_eq!(p.dominant_frequency(), Some(8000.0));
        let n = EventTemplate::noise(64, 1).to_params(1.0, SAMPLE_RATE);
        n.validate(SAMPLE_RATE).unwrap();
        assert_eq!(n.blocks[0].wet_gain, 0.0);
    }
}
