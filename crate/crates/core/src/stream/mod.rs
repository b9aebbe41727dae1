//! Streaming segmentation: long inputs are analyzed in overlapping windows
//! and merged into one absolute-time event stream.
//!
//! Windows of [`SEGMENT_LEN`] samples start every [`HALF_SEGMENT`] samples.
//! Only events beginning in a window's first half are kept; the second half
//! is seen again as the next window's first half. Events fitted just past
//! a window's first half are deferred to the next window. Tails of events
//! already emitted are rendered and removed from each new window before
//! encoding.

mod types;

pub use types::{StepNorms, StreamEncoding, StreamEvent, StreamHeader};

use crate::dsp::{Pcm, Stft, HALF_SEGMENT, HOP, SEGMENT_LEN, WINDOW};
use crate::encoder::{encode_residual, EncoderConfig, Residual};
use crate::error::{Error, Result};
use crate::synth::{render_event, BlockFilter, Event, EventParams, RirBank};

/// Number of analysis windows for a signal of `len` samples.
pub fn segment_count(len: usize) -> usize {
    len.div_ceil(HALF_SEGMENT)
}

pub fn encode_stream(x: &Pcm, cfg: &EncoderConfig, bank: &RirBank) -> Result<StreamEncoding> {
    encode_stream_with_progress(x, cfg, bank, |_, _| {})
}

/// [`encode_stream`], calling `progress(done, total)` after each window.
pub fn encode_stream_with_progress(
    x: &Pcm,
    cfg: &EncoderConfig,
    bank: &RirBank,
    mut progress: impl FnMut(usize, usize),
) -> Result<StreamEncoding> {
    if x.is_empty() {
        return Err(Error::invalid("cannot encode an empty signal"));
    }
    if x.sample_rate() != bank.sample_rate() {
        return Err(Error::invalid(format!(
            "signal is {} Hz but the bank is {} Hz",
            x.sample_rate(),
            bank.sample_rate()
        )));
    }
    cfg.validate(bank.sample_rate())?;
    let samples = x.samples();
    let len = samples.len();
    let stft = Stft::new(WINDOW, HOP)?;
    let mut enc = StreamEncoding::empty(len as u64, bank);
    let total = segment_count(len);

    for k in 0..total {
        let start = k * HALF_SEGMENT;
        let valid = (len - start).min(SEGMENT_LEN);
        let mut window = vec![0.0f32; SEGMENT_LEN];
        window[..valid].copy_from_slice(&samples[start..start + valid]);
        let mut residual = Residual::from_segment(&window)?;

        let mut tails = vec![0.0f32; valid];
        let mut any_tail = false;
        for ev in &enc.events {
            any_tail |= add_event(&mut tails, start as u64, ev, bank)?;
        }
        if any_tail {
            tails.resize(SEGMENT_LEN, 0.0);
            residual.subtract_rendered(&stft.analyze(&tails)?, &tails)?;
        }

        let frame_limit = valid.div_ceil(HOP);
        let seg = encode_residual(residual, frame_limit, k + 1 < total, cfg, bank)?;
        let accepted = seg.reports.iter().filter(|r| r.accepted && !r.deferred);
        for (event, report) in seg.events.into_iter().zip(accepted) {
            enc.events.push(StreamEvent {
                abs_onset_sample: (start + event.onset_frame as usize * HOP) as u64,
                muted: false,
                step: StepNorms {
                    pre: report.pre_norm as f32,
                    post: report.post_norm as f32,
                },
                params: event.params,
            });
        }
        progress(k + 1, total);
    }
    enc.sort_events();
    enc.validate()?;
    Ok(enc)
}

/// Renders every unmuted event and mixes them into `total_samples`.
/// Fails with a bank error when the bank does not match the header, unless
/// `allow_bank_mismatch` is set.
pub fn decode_stream(enc: &StreamEncoding, bank: &RirBank, allow_bank_mismatch: bool) -> Result<Pcm> {
    decode_events(enc, bank, allow_bank_mismatch, |_| true)
}

/// [`decode_stream`] restricted to the events whose index passes `keep`.
pub fn decode_events(
    enc: &StreamEncoding,
    bank: &RirBank,
    allow_bank_mismatch: bool,
    mut keep: impl FnMut(usize) -> bool,
) -> Result<Pcm> {
    enc.validate()?;
    check_bank(&enc.header, bank, allow_bank_mismatch)?;
    let mut out = vec![0.0f32; enc.header.total_samples as usize];
    for (i, ev) in enc.events.iter().enumerate() {
        if !ev.muted && keep(i) {
            add_event(&mut out, 0, ev, bank)?;
        }
    }
    Pcm::new(out, enc.header.sample_rate)
}

pub fn check_bank(header: &StreamHeader, bank: &RirBank, allow_mismatch: bool) -> Result<()> {
    if allow_mismatch {
        return Ok(());
    }
    if header.bank_fingerprint != bank.fingerprint() || header.sample_rate != bank.sample_rate() {
        return Err(Error::Bank(format!(
            "encoding expects bank {:016x} at {} Hz, loaded bank is {:016x} at {} Hz",
            header.bank_fingerprint,
            header.sample_rate,
            bank.fingerprint(),
            bank.sample_rate()
        )));
    }
    Ok(())
}

/// Upper bound on the rendered length of an event's source.
pub fn source_extent(params: &EventParams, bank: &RirBank) -> Result<usize> {
    let mut n = params.burst.duration as usize;
    for b in &params.blocks {
        let fir = match &b.filter {
            BlockFilter::Resonant { resonances, .. } => {
                resonances.iter().map(|r| r.length as usize).max().unwrap_or(1)
            }
            BlockFilter::Room { rir_index } => bank.get(*rir_index)?.len(),
        };
        n += fir - 1;
    }
    Ok(n)
}

/// Adds `ev` into `out`, whose first sample is absolute sample `span_start`.
/// Returns whether anything overlapped the span.
///
/// Each event is rendered on its own canvas starting one hop before its
/// onset (so negative fine shifts have room) and long enough for the whole
/// source plus shift spill.
fn add_event(out: &mut [f32], span_start: u64, ev: &StreamEvent, bank: &RirBank) -> Result<bool> {
    let span_end = span_start + out.len() as u64;
    let abs = ev.abs_onset_sample;
    let origin = abs.saturating_sub(HOP as u64);
    let extent = source_extent(&ev.params, bank)? as u64 + 2 * HOP as u64;
    let canvas_end = (abs + extent).min(span_end);
    if canvas_end <= span_start.max(origin) {
        return Ok(false);
    }
    let event = Event {
        onset_frame: ((abs - origin) / HOP as u64) as u32,
        params: ev.params.clone(),
    };
    let rendered = render_event(&event, (canvas_end - origin) as usize, bank)?;
    let skip = span_start.saturating_sub(origin) as usize;
    let dst = (origin.max(span_start) - span_start) as usize;
    for (o, &v) in out[dst..].iter_mut().zip(&rendered[skip..]) {
        *o += v;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_arithmetic() {
        assert_eq!(segment_count(1), 1);
        assert_eq!(segment_count(HALF_SEGMENT), 1);
        assert_eq!(segment_count(HALF_SEGMENT + 1), 2);
        assert_eq!(segment_count(SEGMENT_LEN), 2);
    }

    #[test]
    fn empty_encoding_decodes_to_silence() {
        let bank = RirBank::synthetic(crate::dsp::SAMPLE_RATE);
        let enc = StreamEncoding::empty(1000, &bank);
        let pcm = decode_stream(&enc, &bank, false).unwrap();
        assert_eq!(pcm.len(), 1000);
        assert!(pcm.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bank_mismatch_is_rejected_unless_overridden() {
        let bank = RirBank::synthetic(crate::dsp::SAMPLE_RATE);
        let mut enc = StreamEncoding::empty(1000, &bank);
        enc.header.bank_fingerprint ^= 1;
        assert!(matches!(decode_stream(&enc, &bank, false), Err(Error::Bank(_))));
        assert!(decode_stream(&enc, &bank, true).is_ok());
    }
}
