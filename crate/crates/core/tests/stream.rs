mod common;

use common::{event_at, three_events};
use proptest::prelude::*;
use siac_core::dsp::{normalized_correlation, rms_diff, Pcm, HALF_SEGMENT, HOP, SAMPLE_RATE, SEGMENT_LEN};
use siac_core::encoder::{EncoderConfig, EventTemplate};
use siac_core::stream::{
    decode_events, decode_stream, encode_stream, encode_stream_with_progress, StreamEncoding, StreamEvent,
};
use siac_core::synth::{render_event, Event, RirBank};

fn encoding(total: u64, bank: &RirBank, mut events: Vec<StreamEvent>) -> StreamEncoding {
    events.sort_by_key(|e| e.abs_onset_sample);
    StreamEncoding {
        events,
        ..StreamEncoding::empty(total, bank)
    }
}

#[test]
fn segment_counts_follow_length() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let cfg = EncoderConfig::default();
    for (len, expected) in [(HALF_SEGMENT, 1), (SEGMENT_LEN, 2), (1, 1)] {
        let mut seen = 0;
        let enc = encode_stream_with_progress(&Pcm::silence(len, SAMPLE_RATE), &cfg, &bank, |done, total| {
            assert_eq!(total, expected);
            seen = done;
        })
        .unwrap();
        assert_eq!(seen, expected);
        assert!(enc.events.is_empty());
        assert_eq!(enc.header.total_samples, len as u64);
    }
}

#[test]
fn single_event_decode_matches_render_event() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let total = 50_000u64;
    for sample in [3 * HOP as u64, 3 * HOP as u64 + 77, 100] {
        let ev = event_at(sample, &EventTemplate::tonal(300.0, 0.2, 4, 256, 0), 0.3);
        let enc = encoding(total, &bank, vec![ev.clone()]);
        let decoded = decode_stream(&enc, &bank, false).unwrap();
        assert_eq!(decoded.len(), total as usize);
        let direct = render_event(
            &Event {
                onset_frame: (ev.abs_onset_sample / HOP as u64) as u32,
                params: ev.params.clone(),
            },
            total as usize,
            &bank,
        )
        .unwrap();
        let err = rms_diff(decoded.samples(), &direct);
        assert!(err < 1e-6, "onset {sample}: rms {err}");
    }
}

#[test]
fn tails_are_cut_at_total_samples() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let mut t = EventTemplate::tonal(200.0, 2.0, 4, 1024, 0);
    t.room = Some(7);
    let enc = encoding(3000, &bank, vec![event_at(2560, &t, 0.5)]);
    let pcm = decode_stream(&enc, &bank, false).unwrap();
    assert_eq!(pcm.len(), 3000);
    assert!(pcm.samples()[2600..].iter().any(|&v| v != 0.0));
}

#[test]
fn muted_events_are_silent() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let mut enc = three_events(&bank);
    for e in &mut enc.events {
        e.muted = true;
    }
    let pcm = decode_stream(&enc, &bank, false).unwrap();
    assert!(pcm.samples().iter().all(|&v| v == 0.0));
}

#[test]
fn round_trip_correlates() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let truth = three_events(&bank);
    let x = decode_stream(&truth, &bank, false).unwrap();
    let enc = encode_stream(&x, &EncoderConfig::default(), &bank).unwrap();
    let y = decode_stream(&enc, &bank, false).unwrap();
    let ncc = normalized_correlation(x.samples(), y.samples());
    assert!(ncc >= 0.8, "correlation {ncc}");
    for t in &truth.events {
        assert!(
            enc.events.iter().any(|e| e.abs_onset_sample.abs_diff(t.abs_onset_sample) <= HOP as u64),
            "no event near {}",
            t.abs_onset_sample
        );
    }
}

#[test]
fn event_after_boundary_belongs_to_second_segment() {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let truth_sample = (HALF_SEGMENT + 5000) as u64;
    let truth = encoding(
        (SEGMENT_LEN + 20_000) as u64,
        &bank,
        vec![event_at(truth_sample, &EventTemplate::noise(64, 0), 0.5)],
    );
    let x = decode_stream(&truth, &bank, false).unwrap();
    let enc = encode_stream(&x, &EncoderConfig::default(), &bank).unwrap();
    assert!(enc.events.iter().all(|e| e.abs_onset_sample >= HALF_SEGMENT as u64));
    assert!(enc.events.iter().any(|e| e.abs_onset_sample.abs_diff(truth_sample) <= HOP as u64));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decoding_is_additive(mask in prop::collection::vec(any::<bool>(), 3)) {
        let bank = RirBank::synthetic(SAMPLE_RATE);
        let enc = three_events(&bank);
        let whole = decode_stream(&enc, &bank, false).unwrap();
        let a = decode_events(&enc, &bank, false, |i| mask[i]).unwrap();
        let b = decode_events(&enc, &bank, false, |i| !mask[i]).unwrap();
        let sum: Vec<f32> = a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect();
        prop_assert!(rms_diff(&sum, whole.samples()) < 1e-6);
    }
}
