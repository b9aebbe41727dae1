use std::path::Path;
use std::process::{Command, Output};

use siac_core::codec::{load, read_wav, save, write_wav};
use siac_core::dsp::{normalized_correlation, HOP, SAMPLE_RATE};
use siac_core::encoder::{Dictionary, EventTemplate};
use siac_core::stream::{decode_stream, StepNorms, StreamEncoding, StreamEvent};
use siac_core::synth::RirBank;

fn siac(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siac"))
        .args(args.iter().map(|a| a.as_ref()))
        .env_remove("SIAC_BANK_DIR")
        .output()
        .unwrap()
}

fn event_at(seconds: f64, t: &EventTemplate, amp: f32) -> StreamEvent {
    let sample = (seconds * SAMPLE_RATE as f64) as u64;
    let abs = sample / HOP as u64 * HOP as u64;
    let mut params = t.to_params(amp, SAMPLE_RATE);
    params.fine_shift = (sample - abs) as f32;
    StreamEvent {
        abs_onset_sample: abs,
        muted: false,
        step: StepNorms::default(),
        params,
    }
}

fn three_event_wav(path: &Path) -> Vec<f32> {
    let bank = RirBank::synthetic(SAMPLE_RATE);
    let grid = Dictionary::default().f0_grid;
    let mut enc = StreamEncoding::empty(40_000, &bank);
    enc.events = vec![
        event_at(0.1, &EventTemplate::tonal(grid[22], 0.25, 4, 256, 0), 0.1),
        event_at(0.6, &EventTemplate::noise(256, 0), 0.4),
        event_at(1.2, &EventTemplate::tonal(grid[35], 0.5, 1, 64, 0), 0.1),
    ];
    let pcm = decode_stream(&enc, &bank, false).unwrap();
    write_wav(path, &pcm).unwrap();
    read_wav(path).unwrap().into_samples()
}

#[test]
fn encode_decode_round_trip_correlates() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    let siac_file = dir.path().join("out.siac");
    let back = dir.path().join("back.wav");
    let x = three_event_wav(&wav);

    let out = siac(&[&"encode", &wav, &siac_file]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let out = siac(&[&"decode", &siac_file, &back]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let y = read_wav(&back).unwrap();
    assert_eq!(y.len(), x.len());
    let ncc = normalized_correlation(&x, y.samples());
    assert!(ncc >= 0.8, "correlation {ncc}");
}

#[test]
fn encoding_is_reproducible_and_json_mirrors_binary() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("in.wav");
    three_event_wav(&wav);
    let a = dir.path().join("a.siac");
    let b = dir.path().join("b.siac");
    let j = dir.path().join("c.json");
    for out in [&a, &b, &j] {
        let o = siac(&[&"encode", &wav, out, &"--steps", &"3", &"--seed", &"9"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(load(&a).unwrap(), load(&j).unwrap());
}

#[test]
fn inspect_empty_encoding() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.siac");
    save(&path, &StreamEncoding::empty(22050, &RirBank::synthetic(SAMPLE_RATE))).unwrap();
    let out = siac(&[&"inspect", &path]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 events"), "{text}");
    assert!(text.contains("22050 Hz"), "{text}");

    let out = siac(&[&"inspect", &path, &"--json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["event_count"], 0);
    assert_eq!(v["header"]["total_samples"], 22050);
}

#[test]
fn filter_by_time_range() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.siac");
    let output = dir.path().join("one.json");
    let mut enc = StreamEncoding::empty(3 * SAMPLE_RATE as u64, &RirBank::synthetic(SAMPLE_RATE));
    enc.events = vec![
        event_at(0.5, &EventTemplate::tonal(300.0, 0.2, 4, 256, 0), 0.2),
        event_at(1.5, &EventTemplate::noise(256, 0), 0.2),
    ];
    save(&input, &enc).unwrap();
    let out = siac(&[&"filter", &input, &output, &"--from", &"0", &"--to", &"1.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kept = load(&output).unwrap();
    assert_eq!(kept.events, enc.events[..1]);
}

#[test]
fn errors_exit_nonzero_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.wav");
    let out = siac(&[&"encode", &missing, &dir.path().join("x.siac")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("siac: error:"));

    let garbage = dir.path().join("garbage.siac");
    std::fs::write(&garbage, b"not an encoding").unwrap();
    let out = siac(&[&"inspect", &garbage]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("format error"));

    let out = siac(&[&"inspect", &garbage, &"--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let wav = dir.path().join("in.wav");
    three_event_wav(&wav);
    let out = siac(&[&"encode", &wav, &dir.path().join("y.siac"), &"--stop-threshold", &"1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stop_threshold"));
}

#[test]
fn bank_mismatch_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.siac");
    let mut enc = StreamEncoding::empty(22050, &RirBank::synthetic(SAMPLE_RATE));
    enc.header.bank_fingerprint ^= 1;
    save(&path, &enc).unwrap();
    let wav = dir.path().join("out.wav");
    let out = siac(&[&"decode", &path, &wav]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bank"));
    let out = siac(&[&"decode", &path, &wav, &"--allow-bank-mismatch"]);
    assert!(out.status.success());
    assert_eq!(read_wav(&wav).unwrap().len(), 22050);
}
