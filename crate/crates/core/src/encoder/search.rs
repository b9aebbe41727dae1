//! Candidate rendering and scoring for one encoder step.
//!
//! Candidates are rendered into a short local buffer that starts a fixed
//! number of frames before the onset, so whole-frame onset changes are a
//! column shift of the same local spectrogram. Scores use the fit
//! objective `sum w |r - a c|` with the amplitude `a` solved exactly.

use super::dictionary::EventTemplate;
use super::median::weighted_median;
use super::{EncoderConfig, Residual};
use crate::dsp::{fractional_shift, Stft, BINS, HOP, SEGMENT_FRAMES, WINDOW};
use crate::error::Result;
use crate::synth::{render_source_limited, RirBank};

/// Frames of silence rendered ahead of the onset in the local buffer.
pub(super) const PREFIX_FRAMES: usize = WINDOW / HOP;
const PREFIX: usize = PREFIX_FRAMES * HOP;

/// Frames scanned around the loudest column when placing the onset.
const ONSET_BEFORE: usize = 3;
const ONSET_AFTER: usize = 8;

/// Evaluations per golden-section line search.
const GOLDEN_EVALS: usize = 6;

#[derive(Debug, Clone, Copy)]
pub(super) struct Scored {
    pub objective: f64,
}

pub(super) struct Search<'a> {
    residual: &'a Residual,
    bank: &'a RirBank,
    cfg: &'a EncoderConfig,
    stft: Stft,
    sample_rate: u32,
    max_onset: usize,
    pairs: Vec<(f64, f64)>,
    columns: Vec<f32>,
}

/// Global frames `[start, end)` scored for a candidate.
#[derive(Debug, Clone, Copy)]
struct Window {
    start: usize,
    end: usize,
}

impl<'a> Search<'a> {
    pub fn new(residual: &'a Residual, bank: &'a RirBank, cfg: &'a EncoderConfig, max_onset: usize) -> Result<Self> {
        Ok(Self {
            residual,
            bank,
            cfg,
            stft: Stft::new(WINDOW, HOP)?,
            sample_rate: bank.sample_rate(),
            max_onset,
            pairs: Vec::new(),
            columns: Vec::new(),
        })
    }

    fn window(&self, first_onset: usize, last_onset: usize) -> Window {
        let frames = self.residual.spec().frames();
        let start = first_onset.saturating_sub(PREFIX_FRAMES);
        let end = (last_onset + self.cfg.score_frames).saturating_sub(PREFIX_FRAMES).min(frames);
        Window { start, end: end.max(start + 1).min(frames) }
    }

    /// Renders `t` (unit amplitude) into `self.columns`: `frames` columns of
    /// the local buffer whose frame `PREFIX_FRAMES` is the onset.
    fn render_columns(&mut self, t: &EventTemplate, frames: usize) -> Result<()> {
        let len = frames * HOP + WINDOW;
        let params = t.to_params(1.0, self.sample_rate);
        let source = render_source_limited(&params, self.bank, len - PREFIX)?;
        let mut buf = vec![0.0f32; len];
        buf[PREFIX..PREFIX + source.len()].copy_from_slice(&source);
        if t.fine_shift != 0.0 {
            buf = fractional_shift(&buf, t.fine_shift as f64)?;
        }
        self.columns.resize(frames * BINS, 0.0);
        self.stft.frames_into(&buf, 0, &mut self.columns);
        Ok(())
    }

    /// Scores the rendered columns placed at `onset` over `window`.
    fn score_columns(&mut self, onset: usize, window: Window) -> Scored {
        let spec = self.residual.spec();
        let weights = self.residual.frame_weights();
        let local_frames = self.columns.len() / BINS;
        let mut base = 0.0f64;
        self.pairs.clear();
        for g in window.start..window.end {
            let w = weights[g];
            if w == 0.0 {
                continue;
            }
            let r = spec.column(g);
            base += w * r.iter().map(|&v| v as f64).sum::<f64>();
            let j = g as isize + PREFIX_FRAMES as isize - onset as isize;
            if j < 0 || j as usize >= local_frames {
                continue;
            }
            let c = &self.columns[j as usize * BINS..(j as usize + 1) * BINS];
            for (&rv, &cv) in r.iter().zip(c) {
                if cv > 0.0 {
                    self.pairs.push((rv as f64 / cv as f64, w * cv as f64));
                }
            }
        }
        if self.pairs.is_empty() {
            return Scored { objective: base };
        }
        let a = weighted_median(&mut self.pairs).max(0.0);
        // sum w |r - a c| = sum w c |r/c - a| over cells with c > 0, plus
        // the untouched residual everywhere else.
        let mut objective = base;
        for &(ratio, wc) in &self.pairs {
            objective += wc * ((ratio - a).abs() - ratio);
        }
        Scored {
            objective: objective.max(0.0),
        }
    }

    /// Scores `t` with its onset fixed.
    pub fn eval(&mut self, t: &EventTemplate, onset: usize) -> Result<Scored> {
        let window = self.window(onset, onset);
        self.render_columns(t, self.cfg.score_frames)?;
        Ok(self.score_columns(onset, window))
    }

    /// Best onset near `onset` for template `t`.
    pub fn place_onset(&mut self, t: &EventTemplate, around: usize) -> Result<(usize, Scored)> {
        let first = around.saturating_sub(ONSET_BEFORE);
        let last = (around + ONSET_AFTER).min(self.max_onset).max(first);
        let window = self.window(first, last);
        self.render_columns(t, self.cfg.score_frames + (last - first))?;
        let mut best = (first, self.score_columns(first, window));
        for o in first + 1..=last {
            let s = self.score_columns(o, window);
            if s.objective < best.1.objective {
                best = (o, s);
            }
        }
        // Re-score on the single-onset window so later comparisons agree.
        let rescored = self.eval(t, best.0)?;
        Ok((best.0, rescored))
    }

    /// Grid f0 values ranked by spectral salience of the residual just
    /// after `onset`: harmonic sums of the mean magnitude column.
    pub fn screen_f0(&self, onset: usize, grid: &[f32], keep: usize) -> Vec<f32> {
        let spec = self.residual.spec();
        let end = (onset + 12).min(SEGMENT_FRAMES.min(spec.frames()));
        let mut mean = vec![0.0f64; BINS];
        for g in onset..end {
            for (m, &v) in mean.iter_mut().zip(spec.column(g)) {
                *m += v as f64;
            }
        }
        let bin_hz = self.sample_rate as f64 / WINDOW as f64;
        let peak = |f: f64| -> f64 {
            let b = (f / bin_hz).round() as usize;
            if b >= BINS {
                return 0.0;
            }
            let lo = b.saturating_sub(1);
            let hi = (b + 1).min(BINS - 1);
            mean[lo..=hi].iter().cloned().fold(0.0, f64::max)
        };
        let mut scored: Vec<(f64, f32)> = grid
            .iter()
            .map(|&f0| {
                let single = peak(f0 as f64);
                let harmonic: f64 = (1..=4).map(|k| peak(f0 as f64 * k as f64) / k as f64).sum();
                (single.max(harmonic / 2.0), f0)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
        scored.into_iter().take(keep.max(1)).map(|s| s.1).collect()
    }

    /// Golden-section search of one coordinate on `[lo, hi]`, starting from
    /// the incumbent `(t, best)`. Keeps the incumbent unless a probe scores
    /// strictly lower.
    pub fn line_search(
        &mut self,
        t: &mut EventTemplate,
        best: &mut Scored,
        onset: usize,
        coord: Coord,
        lo: f64,
        hi: f64,
    ) -> Result<()> {
        if !(hi > lo) {
            return Ok(());
        }
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let probe = |s: &mut Self, x: f64, t: &mut EventTemplate, best: &mut Scored| -> Result<f64> {
            let mut cand = t.clone();
            coord.set(&mut cand, coord.from_search(x));
            let score = s.eval(&cand, onset)?;
            if score.objective < best.objective {
                *t = cand;
                *best = score;
            }
            Ok(score.objective)
        };
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = probe(self, x1, t, best)?;
        let mut f2 = probe(self, x2, t, best)?;
        for _ in 2..GOLDEN_EVALS {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = probe(self, x1, t, best)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = probe(self, x2, t, best)?;
            }
        }
        Ok(())
    }
}

/// Continuous template coordinates refined by line search. Log-scaled
/// coordinates are searched in the log domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Coord {
    F0,
    T60,
    Tilt,
    Detune,
    MixStart,
    MixEnd,
    InstrumentDry,
    BodyWet,
    RoomDry,
    FineShift,
}

impl Coord {
    pub const ALL: [Coord; 10] = [
        Coord::F0,
        Coord::T60,
        Coord::Tilt,
        Coord::Detune,
        Coord::MixStart,
        Coord::MixEnd,
        Coord::InstrumentDry,
        Coord::BodyWet,
        Coord::RoomDry,
        Coord::FineShift,
    ];

    pub fn applies(self, t: &EventTemplate) -> bool {
        match self {
            Coord::F0 | Coord::Tilt | Coord::Detune | Coord::InstrumentDry => !t.is_noise(),
            Coord::MixStart | Coord::MixEnd => !t.is_noise() && t.detune_cents != 0.0,
            Coord::RoomDry => t.room.is_some(),
            Coord::T60 | Coord::BodyWet | Coord::FineShift => true,
        }
    }

    fn get(self, t: &EventTemplate) -> f64 {
        (match self {
            Coord::F0 => t.f0,
            Coord::T60 => t.t60,
            Coord::Tilt => t.tilt,
            Coord::Detune => t.detune_cents,
            Coord::MixStart => t.mix_start,
            Coord::MixEnd => t.mix_end,
            Coord::InstrumentDry => t.instrument_dry,
            Coord::BodyWet => t.body_wet,
            Coord::RoomDry => t.room_dry,
            Coord::FineShift => t.fine_shift,
        }) as f64
    }

    fn set(self, t: &mut EventTemplate, v: f64) {
        let v = v as f32;
        match self {
            Coord::F0 => t.f0 = v,
            Coord::T60 => t.t60 = v,
            Coord::Tilt => t.tilt = v,
            Coord::Detune => t.detune_cents = v,
            Coord::MixStart => t.mix_start = v,
            Coord::MixEnd => t.mix_end = v,
            Coord::InstrumentDry => t.instrument_dry = v,
            Coord::BodyWet => t.body_wet = v,
            Coord::RoomDry => t.room_dry = v,
            Coord::FineShift => t.fine_shift = v,
        }
    }

    fn is_log(self) -> bool {
        matches!(self, Coord::F0 | Coord::T60)
    }

    fn from_search(self, x: f64) -> f64 {
        if self.is_log() {
            x.exp()
        } else {
            x
        }
    }

    /// Search-domain bounds and the initial bracket half-width.
    fn domain(self, sample_rate: u32) -> (f64, f64, f64) {
        match self {
            Coord::F0 => (20f64.ln(), (sample_rate as f64 * 0.45).ln(), 0.045),
            Coord::T60 => (0.01f64.ln(), 4f64.ln(), 0.5),
            Coord::Tilt => (0.0, 3.0, 1.0),
            Coord::Detune => (-50.0, 50.0, 25.0),
            Coord::MixStart | Coord::MixEnd => (0.0, 1.0, 0.5),
            Coord::InstrumentDry => (0.0, 4.0, 1.0),
            Coord::BodyWet => (0.0, 1.0, 0.25),
            Coord::RoomDry => (0.0, 8.0, 2.0),
            Coord::FineShift => (-128.0, 128.0, 64.0),
        }
    }

    /// Bracket around the current value for refinement round `round`.
    pub fn bracket(self, t: &EventTemplate, sample_rate: u32, round: usize) -> (f64, f64) {
        let (lo, hi, radius) = self.domain(sample_rate);
        let v = self.get(t);
        let centre = if self.is_log() { v.max(1e-6).ln() } else { v };
        let r = radius * 0.5f64.powi(round as i32);
        ((centre - r).max(lo), (centre + r).min(hi))
    }
}
