use anyhow::{bail, Result};
use clap::Args;
use siac_core::stream::{StreamEncoding, StreamEvent};

/// Conditions on onset time, amplitude and dominant frequency. Ranges are
/// half-open, `[min, max)`.
#[derive(Debug, Clone, Default, Args)]
pub struct Predicate {
    /// Earliest onset, seconds.
    #[arg(long)]
    pub from: Option<f64>,
    /// Onsets before this time, seconds.
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub min_amplitude: Option<f32>,
    #[arg(long)]
    pub max_amplitude: Option<f32>,
    /// Lowest dominant frequency, Hz. Events without a tonal partial never match a band.
    #[arg(long)]
    pub min_freq: Option<f32>,
    #[arg(long)]
    pub max_freq: Option<f32>,
    /// Keep the events that do not match instead.
    #[arg(long)]
    pub invert: bool,
}

fn within<T: PartialOrd>(v: T, lo: Option<T>, hi: Option<T>) -> bool {
    lo.is_none_or(|lo| v >= lo) && hi.is_none_or(|hi| v < hi)
}

impl Predicate {
    pub fn matches(&self, ev: &StreamEvent, sample_rate: u32) -> bool {
        let hit = within(ev.onset_seconds(sample_rate), self.from, self.to)
            && within(ev.params.amplitude, self.min_amplitude, self.max_amplitude)
            && (self.min_freq.is_none() && self.max_freq.is_none()
                || ev
                    .params
                    .dominant_frequency()
                    .is_some_and(|f| within(f, self.min_freq, self.max_freq)));
        hit != self.invert
    }

    pub fn apply(&self, enc: &mut StreamEncoding) -> Result<()> {
        for (lo, hi, what) in [
            (self.from, self.to, "time"),
            (self.min_amplitude.map(f64::from), self.max_amplitude.map(f64::from), "amplitude"),
            (self.min_freq.map(f64::from), self.max_freq.map(f64::from), "frequency"),
        ] {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if lo > hi {
                    bail!("empty {what} range [{lo}, {hi})");
                }
            }
        }
        let sr = enc.header.sample_rate;
        enc.events.retain(|e| self.matches(e, sr));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use siac_core::dsp::SAMPLE_RATE;
    use siac_core::encoder::EventTemplate;
    use siac_core::stream::StepNorms;
    use siac_core::synth::RirBank;

    fn encoding() -> StreamEncoding {
        let bank = RirBank::synthetic(SAMPLE_RATE);
        let mut enc = StreamEncoding::empty(3 * SAMPLE_RATE as u64, &bank);
        for (sec, t, amp) in [
            (0.5, EventTemplate::tonal(220.0, 0.2, 4, 256, 0), 0.1),
            (1.5, EventTemplate::noise(256, 0), 0.5),
        ] {
            let sample = (sec * SAMPLE_RATE as f64) as u64;
            let abs = sample / 256 * 256;
            let mut params = t.to_params(amp, SAMPLE_RATE);
            params.fine_shift = (sample - abs) as f32;
            enc.events.push(StreamEvent {
                abs_onset_sample: abs,
                muted: false,
                step: StepNorms::default(),
                params,
            });
        }
        enc
    }

    fn kept(p: Predicate) -> Vec<u64> {
        let mut enc = encoding();
        p.apply(&mut enc).unwrap();
        enc.events.iter().map(|e| e.abs_onset_sample).collect()
    }

    #[test]
    fn time_range_is_half_open() {
        let first = encoding().events[0].abs_onset_sample;
        assert_eq!(kept(Predicate { from: Some(0.0), to: Some(1.0), ..Default::default() }), vec![first]);
        assert_eq!(kept(Predicate { from: Some(0.5), to: Some(0.5), ..Default::default() }), Vec::<u64>::new());
    }

    #[test]
    fn amplitude_and_band() {
        assert_eq!(kept(Predicate { min_amplitude: Some(0.2), ..Default::default() }).len(), 1);
        assert_eq!(kept(Predicate { min_freq: Some(100.0), max_freq: Some(300.0), ..Default::default() }).len(), 1);
        assert_eq!(kept(Predicate { min_freq: Some(300.0), ..Default::default() }).len(), 0);
    }

    #[test]
    fn invert_and_empty_predicate() {
        assert_eq!(kept(Predicate::default()).len(), 2);
        assert_eq!(kept(Predicate { invert: true, ..Default::default() }).len(), 0);
        let mut enc = encoding();
        assert!(Predicate { from: Some(2.0), to: Some(1.0), ..Default::default() }.apply(&mut enc).is_err());
    }
}
