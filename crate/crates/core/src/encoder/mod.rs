//! Greedy analysis-by-synthesis encoder.
//!
//! Each step picks the loudest frame in the first half of the residual
//! magnitude spectrogram, fits an [`EventTemplate`] there by rendering
//! candidates through the decoder, and subtracts the winner's spectrogram
//! (clamped at zero). Steps that fail to lower the tapered L1 norm are
//! rejected and end the loop.

mod align;
mod dictionary;
mod median;
mod search;

pub use dictionary::{log_grid, Dictionary, EventTemplate};

use serde::{Deserialize, Serialize};

use crate::dsp::{
    weighted_l1, MagSpectrogram, Stft, TaperWeights, FIRST_HALF_FRAMES, HOP, SEGMENT_LEN, WINDOW,
};
use crate::error::{Error, Result};
use crate::synth::{render_event, Event, EventParams, RirBank};
use median::weighted_median;
use search::{Coord, Scored, Search};

/// Column norms below `SILENCE_FLOOR * bins` count as silent.
pub const SILENCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub max_steps: usize,
    /// Stop once the residual norm falls to this fraction of its initial
    /// value; 0 disables the check.
    pub stop_threshold: f64,
    pub dictionary: Dictionary,
    /// Rounds of coordinate-wise refinement after the coarse search.
    pub refine_iters: usize,
    /// Frames scored per candidate during the search.
    pub score_frames: usize,
    /// Fundamentals kept after salience screening.
    pub f0_shortlist: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            max_steps: 32,
            stop_threshold: 0.0,
            dictionary: Dictionary::default(),
            refine_iters: 3,
            score_frames: 96,
            f0_shortlist: 8,
        }
    }
}

impl EncoderConfig {
    /// Defaults with every stochastic choice derived from `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let mut cfg = Self::default();
        cfg.dictionary.seeds = vec![seed];
        cfg
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.stop_threshold) {
            return Err(Error::Config(format!("stop_threshold {} outside [0, 1)", self.stop_threshold)));
        }
        if self.score_frames == 0 || self.f0_shortlist == 0 {
            return Err(Error::Config("score_frames and f0_shortlist must be positive".into()));
        }
        self.dictionary.validate(sample_rate)
    }
}

/// Residual magnitude spectrogram of one segment with its loss weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    spec: MagSpectrogram,
    taper: TaperWeights,
    weights: Vec<f64>,
    initial_norm: f64,
    /// Time-domain counterpart, when the residual came from samples. Used
    /// only to align event timing below the spectrogram's resolution.
    waveform: Option<Vec<f32>>,
}

impl Residual {
    pub fn new(spec: MagSpectrogram, taper: TaperWeights) -> Self {
        let weights = taper.frame_weights(spec.frames(), spec.hop(), spec.window());
        let initial_norm = weighted_l1(&spec, &weights);
        Self {
            spec,
            taper,
            weights,
            initial_norm,
            waveform: None,
        }
    }

    /// Residual of a whole segment of samples.
    pub fn from_segment(x: &[f32]) -> Result<Self> {
        if x.len() != SEGMENT_LEN {
            return Err(Error::invalid(format!("segment must be {SEGMENT_LEN} samples, got {}", x.len())));
        }
        let mut r = Self::new(Stft::new(WINDOW, HOP)?.analyze(x)?, TaperWeights::default());
        r.waveform = Some(x.to_vec());
        Ok(r)
    }

    pub fn waveform(&self) -> Option<&[f32]> {
        self.waveform.as_deref()
    }

    pub fn spec(&self) -> &MagSpectrogram {
        &self.spec
    }

    pub fn taper(&self) -> &TaperWeights {
        &self.taper
    }

    pub fn frame_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted L1 when the residual was created.
    pub fn initial_norm(&self) -> f64 {
        self.initial_norm
    }

    /// Current weighted L1.
    pub fn norm(&self) -> f64 {
        weighted_l1(&self.spec, &self.weights)
    }

    /// In-place `max(residual - ev_spec, 0)`. The waveform, if any, is left
    /// alone; see [`Residual::subtract_rendered`].
    pub fn subtract(&mut self, ev_spec: &MagSpectrogram) -> Result<()> {
        clamped_subtract(&mut self.spec, ev_spec)
    }

    /// Removes a rendered signal and its spectrogram.
    pub fn subtract_rendered(&mut self, ev_spec: &MagSpectrogram, samples: &[f32]) -> Result<()> {
        self.subtract(ev_spec)?;
        if let Some(w) = &mut self.waveform {
            for (a, &b) in w.iter_mut().zip(samples) {
                *a -= b;
            }
        }
        Ok(())
    }

    /// Weighted L1 of `max(residual - ev_spec, 0)` without modifying the
    /// residual. Bit-identical to subtracting and calling [`Residual::norm`].
    pub fn norm_after(&self, ev_spec: &MagSpectrogram) -> Result<f64> {
        if !self.spec.same_shape(ev_spec) {
            return Err(Error::invalid("shape mismatch"));
        }
        let bins = self.spec.bins();
        Ok(self
            .spec
            .values()
            .chunks_exact(bins)
            .zip(ev_spec.values().chunks_exact(bins))
            .zip(&self.weights)
            .map(|((r, e), &w)| {
                if w == 0.0 {
                    0.0
                } else {
                    w * r.iter().zip(e).map(|(&a, &b)| (a - b).max(0.0) as f64).sum::<f64>()
                }
            })
            .sum())
    }
}

fn clamped_subtract(spec: &mut MagSpectrogram, ev_spec: &MagSpectrogram) -> Result<()> {
    if !spec.same_shape(ev_spec) {
        return Err(Error::invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            spec.bins(),
            spec.frames(),
            ev_spec.bins(),
            ev_spec.frames()
        )));
    }
    for (r, &e) in spec.values_mut().iter_mut().zip(ev_spec.values()) {
        *r = (*r - e).max(0.0);
    }
    Ok(())
}

/// `max(r - ev_spec, 0)` as a new residual.
pub fn subtract_event(r: &Residual, ev_spec: &MagSpectrogram) -> Result<Residual> {
    let mut out = r.clone();
    out.subtract(ev_spec)?;
    Ok(out)
}

/// Loudest first-half frame of the residual, or `None` when it is silent.
/// Ties go to the earliest frame.
pub fn select_onset(r: &Residual) -> Option<u32> {
    select_onset_before(r, FIRST_HALF_FRAMES)
}

fn select_onset_before(r: &Residual, frame_limit: usize) -> Option<u32> {
    let spec = r.spec();
    let floor = SILENCE_FLOOR * spec.bins() as f64;
    let mut best: Option<(usize, f64)> = None;
    for f in 0..frame_limit.min(spec.frames()) {
        let norm: f64 = spec.column(f).iter().map(|&v| v as f64).sum();
        if norm >= floor && best.is_none_or(|(_, b)| norm > b) {
            best = Some((f, norm));
        }
    }
    best.map(|(f, _)| f as u32)
}

/// A fitted event and its effect on the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// Refined onset; may differ from the frame passed to [`fit_event`].
    pub onset_frame: u32,
    pub params: EventParams,
    pub template: EventTemplate,
    pub pre_norm: f64,
    pub post_norm: f64,
    /// Magnitude spectrogram of the rendered event on the segment canvas.
    pub spec: MagSpectrogram,
    /// The rendered event on the segment canvas.
    pub signal: Vec<f32>,
}

/// Fits one event near `onset`; see the module docs for the search.
pub fn fit_event(r: &Residual, onset: u32, cfg: &EncoderConfig, bank: &RirBank) -> Result<Fit> {
    fit_event_until(r, onset, cfg, bank, FIRST_HALF_FRAMES - 1)
}

/// [`fit_event`] with onsets allowed up to frame `max_onset`.
fn fit_event_until(r: &Residual, onset: u32, cfg: &EncoderConfig, bank: &RirBank, max_onset: usize) -> Result<Fit> {
    let sr = bank.sample_rate();
    cfg.validate(sr)?;
    let rooms = cfg.dictionary.rooms(bank)?;
    let onset = (onset as usize).min(max_onset);
    let dict = &cfg.dictionary;
    let mut s = Search::new(r, bank, cfg, max_onset)?;

    let seed = dict.seeds[0];
    let burst = *dict
        .burst_durations
        .iter()
        .min_by_key(|&&b| (b as i64 - 256).abs())
        .expect("validated non-empty");
    let decay = dict.decay_grid[dict.decay_grid.len() / 2];
    let harmonics = *dict.harmonic_counts.iter().max().expect("validated non-empty");
    let shortlist = s.screen_f0(onset, &dict.f0_grid, cfg.f0_shortlist);

    // Rough placement with a generic tonal and a generic noise template.
    let mut best = EventTemplate::tonal(shortlist[0], decay, harmonics, burst, seed);
    let (mut at, mut score) = s.place_onset(&best, onset)?;
    if dict.include_noise {
        let noise = EventTemplate::noise(burst, seed);
        let (o, sc) = s.place_onset(&noise, onset)?;
        if sc.objective < score.objective {
            (best, at, score) = (noise, o, sc);
        }
    }

    // Coarse grid over the shortlisted fundamentals.
    for &f0 in &shortlist {
        for &t60 in &dict.decay_grid {
            for &h in &dict.harmonic_counts {
                consider(&mut s, at, EventTemplate::tonal(f0, t60, h, burst, seed), &mut best, &mut score)?;
            }
        }
    }
    if dict.include_noise {
        for &b in &dict.burst_durations {
            consider(&mut s, at, EventTemplate::noise(b, seed), &mut best, &mut score)?;
        }
    }

    (at, score) = s.place_onset(&best, onset)?;

    // One discrete pass per categorical choice.
    for &b in &dict.burst_durations {
        let t = EventTemplate { burst_len: b, ..best.clone() };
        consider(&mut s, at, t, &mut best, &mut score)?;
    }
    for &sd in &dict.seeds[1..] {
        let t = EventTemplate { seed: sd, ..best.clone() };
        consider(&mut s, at, t, &mut best, &mut score)?;
    }
    for room in std::iter::once(None).chain(rooms.iter().map(|&i| Some(i))) {
        let t = EventTemplate {
            room,
            room_dry: 0.0,
            ..best.clone()
        };
        consider(&mut s, at, t, &mut best, &mut score)?;
    }
    if !best.is_noise() {
        for &t60 in &dict.decay_grid {
            let t = EventTemplate { t60, ..best.clone() };
            consider(&mut s, at, t, &mut best, &mut score)?;
        }
        for &h in &dict.harmonic_counts {
            let t = EventTemplate { harmonics: h, ..best.clone() };
            consider(&mut s, at, t, &mut best, &mut score)?;
        }
        for &f0 in &shortlist {
            let t = EventTemplate { f0, ..best.clone() };
            consider(&mut s, at, t, &mut best, &mut score)?;
        }
    }

    (at, score) = s.place_onset(&best, onset)?;

    for round in 0..cfg.refine_iters {
        for coord in Coord::ALL {
            if coord.applies(&best) {
                let (lo, hi) = coord.bracket(&best, sr, round);
                s.line_search(&mut best, &mut score, at, coord, lo, hi)?;
            }
        }
    }

    let (placed, placed_score) = s.place_onset(&best, onset)?;
    if placed != at {
        (at, score) = (placed, placed_score);
        let (lo, hi) = Coord::FineShift.bracket(&best, sr, 0);
        s.line_search(&mut best, &mut score, at, Coord::FineShift, lo, hi)?;
    }

    finish_fit(r, at, best, bank, max_onset)
}

/// Replaces the incumbent when `t` scores strictly lower.
fn consider(
    s: &mut Search,
    at: usize,
    t: EventTemplate,
    best: &mut EventTemplate,
    score: &mut Scored,
) -> Result<()> {
    let sc = s.eval(&t, at)?;
    if sc.objective < score.objective {
        *best = t;
        *score = sc;
    }
    Ok(())
}

/// Evaluates the chosen template on the full segment canvas, then tries
/// moving it to the lag that best matches the residual waveform. The move
/// is kept when it preserves most of the spectral reduction.
fn finish_fit(r: &Residual, onset: usize, template: EventTemplate, bank: &RirBank, max_onset: usize) -> Result<Fit> {
    let fit = evaluate(r, onset, template, bank)?;
    let Some(wave) = r.waveform() else {
        return Ok(fit);
    };
    if fit.params.amplitude == 0.0 {
        return Ok(fit);
    }
    let Some((onset, fine_shift)) = align::best_lag(wave, &fit, max_onset) else {
        return Ok(fit);
    };
    let moved = EventTemplate {
        fine_shift,
        ..fit.template.clone()
    };
    let aligned = evaluate(r, onset, moved, bank)?;
    let gain = fit.pre_norm - fit.post_norm;
    if aligned.params.amplitude > 0.0 && fit.pre_norm - aligned.post_norm >= align::KEEP_FRACTION * gain {
        Ok(aligned)
    } else {
        Ok(fit)
    }
}

/// Renders `template` at `onset` on the segment canvas, fits its amplitude
/// there, and measures the clamped post-subtraction norm.
fn evaluate(r: &Residual, onset: usize, template: EventTemplate, bank: &RirBank) -> Result<Fit> {
    let sr = bank.sample_rate();
    let spec = r.spec();
    let canvas = spec.frames() * spec.hop();
    let stft = Stft::new(spec.window(), spec.hop())?;
    let pre_norm = r.norm();
    let mut event = Event {
        onset_frame: onset as u32,
        params: template.to_params(1.0, sr),
    };
    let unit = stft.analyze(&render_event(&event, canvas, bank)?)?;

    let mut pairs = Vec::new();
    for (g, &w) in r.frame_weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (&rv, &cv) in spec.column(g).iter().zip(unit.column(g)) {
            if cv > 0.0 {
                pairs.push((rv as f64 / cv as f64, w * cv as f64));
            }
        }
    }
    let amplitude = weighted_median(&mut pairs).max(0.0) as f32;
    if amplitude == 0.0 || !amplitude.is_finite() {
        event.params.amplitude = 0.0;
        return Ok(Fit {
            onset_frame: onset as u32,
            params: event.params,
            template,
            pre_norm,
            post_norm: pre_norm,
            spec: MagSpectrogram::zeros(spec.window(), spec.hop(), spec.frames()),
            signal: vec![0.0; canvas],
        });
    }
    event.params.amplitude = amplitude;
    let signal = render_event(&event, canvas, bank)?;
    let ev_spec = stft.analyze(&signal)?;
    let post_norm = r.norm_after(&ev_spec)?;
    Ok(Fit {
        onset_frame: onset as u32,
        params: event.params,
        template,
        pre_norm,
        post_norm,
        spec: ev_spec,
        signal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub onset_frame: u32,
    pub pre_norm: f64,
    pub post_norm: f64,
    pub params: EventParams,
    pub accepted: bool,
    /// Accepted but placed after the first half: removed from the residual
    /// and left for the next window to emit.
    pub deferred: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEncoding {
    pub events: Vec<Event>,
    pub reports: Vec<StepReport>,
    pub initial_norm: f64,
    pub final_norm: f64,
}

/// Encodes one segment of exactly [`SEGMENT_LEN`] samples.
pub fn encode_segment(x: &[f32], cfg: &EncoderConfig, bank: &RirBank) -> Result<SegmentEncoding> {
    encode_residual(Residual::from_segment(x)?, FIRST_HALF_FRAMES, false, cfg, bank)
}

/// Frames past the first half that a deferring encoder may place onsets at.
pub const DEFER_FRAMES: usize = WINDOW / HOP;

/// Runs the greedy loop on a prepared residual. Onset columns are chosen
/// below `frame_limit` and within the first half.
///
/// With `defer_late`, a fit may settle up to [`DEFER_FRAMES`] past the first
/// half. Such a fit is subtracted but not emitted: its onset belongs to the
/// following window, which sees the same samples in its own first half.
pub fn encode_residual(
    mut residual: Residual,
    frame_limit: usize,
    defer_late: bool,
    cfg: &EncoderConfig,
    bank: &RirBank,
) -> Result<SegmentEncoding> {
    cfg.validate(bank.sample_rate())?;
    let initial_norm = residual.norm();
    let mut events = Vec::new();
    let mut reports = Vec::new();
    let limit = frame_limit.min(FIRST_HALF_FRAMES);
    let max_onset = if defer_late {
        frame_limit.min(FIRST_HALF_FRAMES + DEFER_FRAMES)
    } else {
        limit
    }
    .saturating_sub(1);
    for step in 0..cfg.max_steps {
        let pre = residual.norm();
        if pre <= cfg.stop_threshold * initial_norm {
            break;
        }
        let Some(onset) = select_onset_before(&residual, limit) else {
            break;
        };
        let fit = fit_event_until(&residual, onset, cfg, bank, max_onset)?;
        let accepted = fit.params.amplitude > 0.0 && fit.post_norm < pre;
        let deferred = accepted && fit.onset_frame as usize >= FIRST_HALF_FRAMES;
        reports.push(StepReport {
            step,
            onset_frame: fit.onset_frame,
            pre_norm: pre,
            post_norm: if accepted { fit.post_norm } else { pre },
            params: fit.params.clone(),
            accepted,
            deferred,
        });
        if !accepted {
            break;
        }
        residual.subtract_rendered(&fit.spec, &fit.signal)?;
        if deferred {
            continue;
        }
        events.push(Event {
            onset_frame: fit.onset_frame,
            params: fit.params,
        });
    }
    Ok(SegmentEncoding {
        events,
        reports,
        initial_norm,
        final_norm: residual.norm(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyLoss {
    pub total: f64,
    /// Weighted L1 after each subtraction.
    pub per_step: Vec<f64>,
}

/// Subtracts event spectrograms from `input` loudest first (unweighted
/// L1, ties broken by comparing values) and reports the tapered residual.
pub fn greedy_loss(input: &MagSpectrogram, events: &[MagSpectrogram], taper: &TaperWeights) -> Result<GreedyLoss> {
    if let Some(e) = events.iter().find(|e| !input.same_shape(e)) {
        return Err(Error::invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            input.bins(),
            input.frames(),
            e.bins(),
            e.frames()
        )));
    }
    let weights = taper.frame_weights(input.frames(), input.hop(), input.window());
    let mut order: Vec<(f64, &MagSpectrogram)> = events
        .iter()
        .map(|e| (e.values().iter().map(|&v| v as f64).sum(), e))
        .collect();
    order.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            a.1.values()
                .iter()
                .zip(b.1.values())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut residual = input.clone();
    let mut per_step = Vec::with_capacity(order.len());
    for (_, e) in order {
        clamped_subtract(&mut residual, e)?;
        per_step.push(weighted_l1(&residual, &weights));
    }
    Ok(GreedyLoss {
        total: weighted_l1(&residual, &weights),
        per_step,
    })
}
