#![allow(dead_code)]

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siac_core::dsp::{HOP, SAMPLE_RATE};
use siac_core::encoder::{Dictionary, EventTemplate};
use siac_core::stream::{StepNorms, StreamEncoding, StreamEvent};
use siac_core::synth::{
    BlockFilter, BlockParams, EventParams, MixtureEnvelope, NoiseBurst, Partial, Resonance, RirBank,
};

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f32 {
        (self.0.next_u32() >> 8) as f32 / (1u32 << 24) as f32
    }

    pub fn range(&mut self, lo: f32, hi: f32) -> f32 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn coin(&mut self) -> bool {
        self.0.next_u32() & 1 == 1
    }

    pub fn signal(&mut self, len: usize) -> Vec<f32> {
        (0..len).map(|_| self.range(-1.0, 1.0)).collect()
    }
}

fn random_resonance(g: &mut Gen) -> Resonance {
    let nyquist = SAMPLE_RATE as f32 / 2.0;
    let partials = (0..1 + g.below(4))
        .map(|_| Partial {
            freq: g.range(1.0, nyquist - 1.0),
            amp: g.unit(),
            decay_alpha: g.range(0.0, 0.01),
            phase: g.range(-3.2, 3.2),
        })
        .collect();
    Resonance {
        partials,
        length: 1 + g.below(32768) as u32,
    }
}

fn random_mixture(g: &mut Gen, columns: usize) -> MixtureEnvelope {
    let rows = 1 + g.below(4) as usize;
    let control_points = (0..rows)
        .map(|_| {
            let raw: Vec<f32> = (0..columns).map(|_| g.unit() + 1e-3).collect();
            let sum: f32 = raw.iter().sum();
            raw.iter().map(|v| v / sum).collect()
        })
        .collect();
    MixtureEnvelope { control_points }
}

pub fn random_params(g: &mut Gen, bank_len: u32) -> EventParams {
    let duration = 1 + g.below(8192) as u32;
    let attack = g.below(duration as u64 / 2 + 1) as u32;
    let decay = g.below((duration - attack) as u64 + 1) as u32;
    let mut blocks: Vec<BlockParams> = (0..1 + g.below(3))
        .map(|_| {
            let resonances: Vec<Resonance> = (0..1 + g.below(3)).map(|_| random_resonance(g)).collect();
            let mixture = random_mixture(g, resonances.len());
            BlockParams {
                filter: BlockFilter::Resonant { resonances, mixture },
                dry_gain: g.unit(),
                wet_gain: g.unit(),
            }
        })
        .collect();
    if g.coin() {
        blocks.push(BlockParams {
            filter: BlockFilter::Room {
                rir_index: g.below(bank_len as u64) as u32,
            },
            dry_gain: g.unit(),
            wet_gain: g.unit(),
        });
    }
    EventParams {
        burst: NoiseBurst {
            duration,
            attack,
            decay,
            gain: g.range(0.0, 2.0),
            seed: g.u64(),
        },
        blocks,
        fine_shift: g.range(-255.9, 255.9),
        amplitude: g.range(0.0, 4.0),
    }
}

/// A valid encoding with random geometry-compatible contents.
pub fn random_encoding(seed: u64, bank: &RirBank) -> StreamEncoding {
    let mut g = Gen::new(seed);
    let total = 1 + g.below(2_000_000);
    let mut enc = StreamEncoding::empty(total, bank);
    for _ in 0..g.below(7) {
        let abs = g.below(total) / HOP as u64 * HOP as u64;
        enc.events.push(StreamEvent {
            abs_onset_sample: abs,
            muted: g.coin(),
            step: StepNorms {
                pre: g.range(0.0, 1e4),
                post: g.range(0.0, 1e4),
            },
            params: random_params(&mut g, bank.len() as u32),
        });
    }
    enc.sort_events();
    enc
}

/// An event at an arbitrary sample, split into grid onset and fine shift.
pub fn event_at(sample: u64, t: &EventTemplate, amp: f32) -> StreamEvent {
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

/// Three dictionary events in a 40000-sample clip.
pub fn three_events(bank: &RirBank) -> StreamEncoding {
    let grid = Dictionary::default().f0_grid;
    let mut enc = StreamEncoding::empty(40000, bank);
    enc.events = vec![
        event_at(2048, &EventTemplate::tonal(grid[22], 0.25, 4, 256, 0), 0.1),
        event_at(14000, &EventTemplate::noise(256, 0), 0.4),
        event_at(26000, &EventTemplate::tonal(grid[35], 0.5, 1, 64, 0), 0.1),
    ];
    enc
}
