//! Human- and machine-readable summaries of an encoding. The same schema
//! backs `siac inspect --json` and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::codec::{byte_compression_ratio, serialize};
use crate::error::Result;
use crate::stream::{StreamEncoding, StreamHeader};
use crate::synth::{render_source, BlockFilter, EventParams, RirBank};

/// Envelope floor, relative to the peak, that ends an event (-60 dB).
const DURATION_FLOOR: f32 = 1e-3;
const ENVELOPE_BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub index: usize,
    pub abs_onset_sample: u64,
    pub onset_seconds: f64,
    pub fine_shift: f32,
    pub amplitude: f32,
    pub dominant_frequency: Option<f32>,
    pub rir_index: Option<u32>,
    pub muted: bool,
    pub step_pre_norm: f32,
    pub step_post_norm: f32,
    /// Fraction of the step's residual removed by this event.
    pub step_reduction: f32,
    /// Seconds until the rendered envelope stays 60 dB below its peak;
    /// absent when the event cannot be rendered with the loaded bank.
    pub effective_duration_seconds: Option<f64>,
    pub parameter_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// Scalars stored per event, averaged over events.
    pub mean_parameters_per_event: f64,
    /// Samples per stored scalar, counting one time scalar per event.
    pub scalar_ratio: Option<f64>,
    pub serialized_bytes: usize,
    /// 16-bit PCM bytes over serialized bytes.
    pub byte_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub header: StreamHeader,
    pub bank_fingerprint_hex: String,
    pub duration_seconds: f64,
    pub event_count: usize,
    pub events: Vec<EventReport>,
    pub compression: CompressionReport,
}

/// Number of stored scalars describing `p`, excluding the onset.
pub fn parameter_count(p: &EventParams) -> usize {
    let burst = 5;
    let blocks: usize = p
        .blocks
        .iter()
        .map(|b| {
            2 + match &b.filter {
                BlockFilter::Resonant { resonances, mixture } => {
                    resonances.iter().map(|r| 1 + 4 * r.partials.len()).sum::<usize>()
                        + mixture.rows() * mixture.columns()
                }
                BlockFilter::Room { .. } => 1,
            }
        })
        .sum();
    burst + blocks + 2
}

/// Seconds until the rendered source's block-peak envelope last reaches
/// -60 dB relative to its maximum.
pub fn effective_duration(p: &EventParams, bank: &RirBank) -> Result<f64> {
    let x = render_source(p, bank)?;
    let peaks: Vec<f32> = x
        .chunks(ENVELOPE_BLOCK)
        .map(|c| c.iter().fold(0.0f32, |m, v| m.max(v.abs())))
        .collect();
    let peak = peaks.iter().cloned().fold(0.0f32, f32::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let last = peaks.iter().rposition(|&v| v >= peak * DURATION_FLOOR).unwrap_or(0);
    let end = ((last + 1) * ENVELOPE_BLOCK).min(x.len());
    Ok(end as f64 / bank.sample_rate() as f64)
}

pub fn inspect(enc: &StreamEncoding, bank: &RirBank) -> Result<InspectReport> {
    let sr = enc.header.sample_rate;
    let events: Vec<EventReport> = enc
        .events
        .iter()
        .enumerate()
        .map(|(index, ev)| {
            let (pre, post) = (ev.step.pre, ev.step.post);
            EventReport {
                index,
                abs_onset_sample: ev.abs_onset_sample,
                onset_seconds: ev.onset_seconds(sr),
                fine_shift: ev.params.fine_shift,
                amplitude: ev.params.amplitude,
                dominant_frequency: ev.params.dominant_frequency(),
                rir_index: ev.params.rir_index(),
                muted: ev.muted,
                step_pre_norm: pre,
                step_post_norm: post,
                step_reduction: if pre > 0.0 { (pre - post) / pre } else { 0.0 },
                effective_duration_seconds: effective_duration(&ev.params, bank).ok(),
                parameter_count: parameter_count(&ev.params),
            }
        })
        .collect();
    let n = events.len();
    let total_params: usize = events.iter().map(|e| e.parameter_count).sum();
    let bytes = serialize(enc)?.len();
    let scalar_ratio = (n > 0).then(|| enc.header.total_samples as f64 / (total_params + n) as f64);
    Ok(InspectReport {
        header: enc.header,
        bank_fingerprint_hex: format!("{:016x}", enc.header.bank_fingerprint),
        duration_seconds: enc.header.duration_seconds(),
        event_count: n,
        events,
        compression: CompressionReport {
            mean_parameters_per_event: if n == 0 { 0.0 } else { total_params as f64 / n as f64 },
            scalar_ratio,
            serialized_bytes: bytes,
            byte_ratio: byte_compression_ratio(enc.header.total_samples, bytes),
        },
    })
}

impl InspectReport {
    /// Plain-text rendering for terminals.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let h = &self.header;
        let mut s = String::new();
        let _ = writeln!(s, "sample rate      {} Hz", h.sample_rate);
        let _ = writeln!(s, "total samples    {} ({:.3} s)", h.total_samples, self.duration_seconds);
        let _ = writeln!(s, "segment / hop    {} / {}", h.segment_len, h.hop_len);
        let _ = writeln!(s, "stft             {} / {}", h.stft_window, h.stft_hop);
        let _ = writeln!(s, "bank             {} ({} entries)", self.bank_fingerprint_hex, h.bank_len);
        let _ = writeln!(s, "noise generator  {}", h.prng_id);
        let _ = writeln!(s, "{} events", self.event_count);
        if let Some(r) = self.compression.scalar_ratio {
            let _ = writeln!(
                s,
                "compression      {:.2}x per scalar ({:.1} scalars/event), {:.2}x bytes ({} bytes)",
                r, self.compression.mean_parameters_per_event, self.compression.byte_ratio, self.compression.serialized_bytes
            );
        } else {
            let _ = writeln!(
                s,
                "compression      {:.2}x bytes ({} bytes)",
                self.compression.byte_ratio, self.compression.serialized_bytes
            );
        }
        if !self.events.is_empty() {
            let _ = writeln!(
                s,
                "{:>4} {:>10} {:>11} {:>10} {:>6} {:>12} {:>12} {:>7} {:>9}",
                "#", "onset s", "amplitude", "freq Hz", "room", "pre", "post", "reduce", "dur s"
            );
        }
        for e in &self.events {
            let freq = e.dominant_frequency.map_or("-".to_string(), |f| format!("{f:.1}"));
            let room = e.rir_index.map_or("-".to_string(), |r| r.to_string());
            let dur = e.effective_duration_seconds.map_or("-".to_string(), |d| format!("{d:.3}"));
            let _ = writeln!(
                s,
                "{:>4} {:>10.4} {:>11.4e} {:>10} {:>6} {:>12.2} {:>12.2} {:>6.1}% {:>9}{}",
                e.index,
                e.onset_seconds,
                e.amplitude,
                freq,
                room,
                e.step_pre_norm,
                e.step_post_norm,
                e.step_reduction * 100.0,
                dur,
                if e.muted { " muted" } else { "" }
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::SAMPLE_RATE;
    use crate::encoder::EventTemplate;
    use crate::stream::{StepNorms, StreamEvent};

    #[test]
    fn empty_report() {
        let bank = RirBank::synthetic(SAMPLE_RATE);
        let enc = StreamEncoding::empty(22050, &bank);
        let r = inspect(&enc, &bank).unwrap();
        assert_eq!(r.event_count, 0);
        assert!(r.to_text().contains("0 events"));
        assert!(r.compression.scalar_ratio.is_none());
    }

    #[test]
    fn event_fields() {
        let bank = RirBank::synthetic(SAMPLE_RATE);
        let mut enc = StreamEncoding::empty(44100, &bank);
        let params = EventTemplate::tonal(440.0, 0.1, 1, 256, 0).to_params(0.5, SAMPLE_RATE);
        enc.events.push(StreamEvent {
            abs_onset_sample: 10752,
            muted: false,
            step: StepNorms { pre: 10.0, post: 4.0 },
            params,
        });
        enc.events[0].params.fine_shift = 100.0;
        let r = inspect(&enc, &bank).unwrap();
        let e = &r.events[0];
        assert!((e.onset_seconds - 10852.0 / 22050.0).abs() < 1e-12);
        assert_eq!(e.dominant_frequency, Some(440.0));
        assert!((e.step_reduction - 0.6).abs() < 1e-6);
        // A 0.1 s decay to -60 dB, plus the burst and block rounding.
        let d = e.effective_duration_seconds.unwrap();
        assert!(d > 0.08 && d < 0.13, "{d}");
        assert_eq!(r.compression.scalar_ratio, Some(44100.0 / (e.parameter_count + 1) as f64));
    }
}
