use serde::{Deserialize, Serialize};

use crate::dsp::{HALF_SEGMENT, HOP, SAMPLE_RATE, SEGMENT_LEN, WINDOW};
use crate::error::{Error, Result};
use crate::synth::{EventParams, RirBank, PRNG_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub sample_rate: u32,
    pub segment_len: u32,
    pub hop_len: u32,
    pub stft_window: u32,
    pub stft_hop: u32,
    pub bank_fingerprint: u64,
    pub bank_len: u32,
    pub prng_id: u16,
    pub total_samples: u64,
}

impl StreamHeader {
    /// Standard geometry for a signal of `total_samples` rendered with `bank`.
    pub fn new(total_samples: u64, bank: &RirBank) -> Self {
        Self {
            sample_rate: SAMPLE_RATE,
            segment_len: SEGMENT_LEN as u32,
            hop_len: HALF_SEGMENT as u32,
            stft_window: WINDOW as u32,
            stft_hop: HOP as u32,
            bank_fingerprint: bank.fingerprint(),
            bank_len: bank.len() as u32,
            prng_id: PRNG_ID,
            total_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let standard = self.sample_rate == SAMPLE_RATE
            && self.segment_len as usize == SEGMENT_LEN
            && self.hop_len as usize == HALF_SEGMENT
            && self.stft_window as usize == WINDOW
            && self.stft_hop as usize == HOP;
        if !standard {
            return Err(Error::validation(format!(
                "unsupported geometry: {} Hz, segment {}/{}, stft {}/{}",
                self.sample_rate, self.segment_len, self.hop_len, self.stft_window, self.stft_hop
            )));
        }
        if self.prng_id != PRNG_ID {
            return Err(Error::validation(format!("unknown noise generator id {}", self.prng_id)));
        }
        if self.total_samples == 0 {
            return Err(Error::validation("total_samples must be positive"));
        }
        Ok(())
    }

    pub fn duration_seconds(&self) -> f64 {
        self.total_samples as f64 / self.sample_rate as f64
    }
}

/// Norms of the encoder step that produced an event (zero when unknown).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepNorms {
    pub pre: f32,
    pub post: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    /// Sample position of the event's frame-grid onset; a multiple of the
    /// STFT hop. The sub-frame remainder lives in `params.fine_shift`.
    pub abs_onset_sample: u64,
    #[serde(default)]
    pub muted: bool,
    #[serde(default)]
    pub step: StepNorms,
    pub params: EventParams,
}

impl StreamEvent {
    /// Onset including the fine shift, in seconds.
    pub fn onset_seconds(&self, sample_rate: u32) -> f64 {
        (self.abs_onset_sample as f64 + self.params.fine_shift as f64) / sample_rate as f64
    }
}

/// A whole signal as an ordered list of events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEncoding {
    pub header: StreamHeader,
    pub events: Vec<StreamEvent>,
}

impl StreamEncoding {
    pub fn empty(total_samples: u64, bank: &RirBank) -> Self {
        Self {
            header: StreamHeader::new(total_samples, bank),
            events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.header.validate()?;
        let hop = self.header.stft_hop as u64;
        let mut prev = 0u64;
        for (i, ev) in self.events.iter().enumerate() {
            if ev.abs_onset_sample >= self.header.total_samples {
                return Err(Error::validation(format!(
                    "event {i}: onset {} not below total_samples {}",
                    ev.abs_onset_sample, self.header.total_samples
                )));
            }
            if ev.abs_onset_sample % hop != 0 {
                return Err(Error::validation(format!("event {i}: onset not on the {hop}-sample grid")));
            }
            if ev.abs_onset_sample < prev {
                return Err(Error::validation(format!("event {i}: events not sorted by onset")));
            }
            prev = ev.abs_onset_sample;
            ev.params
                .validate(self.header.sample_rate)
                .map_err(|e| Error::validation(format!("event {i}: {e}")))?;
            if let Some(r) = ev.params.rir_index() {
                if r >= self.header.bank_len {
                    return Err(Error::validation(format!(
                        "event {i}: room index {r} outside bank of {}",
                        self.header.bank_len
                    )));
                }
            }
            if !(ev.step.pre.is_finite() && ev.step.post.is_finite()) {
                return Err(Error::validation(format!("event {i}: non-finite step norms")));
            }
        }
        Ok(())
    }

    /// Restores onset order after edits; equal onsets keep their order.
    pub fn sort_events(&mut self) {
        self.events.sort_by_key(|e| e.abs_onset_sample);
    }
}
