use super::bank::RirBank;
use super::noise::uniform_noise;
use super::{BlockFilter, BlockParams, Event, EventParams, MixtureEnvelope, NoiseBurst, Resonance};
use crate::dsp::{convolve::convolve_limited, fractional_shift, HOP};
use crate::error::{Error, Result};

/// Samples between exact re-evaluations of the oscillator recurrence.
const ANCHOR_INTERVAL: usize = 1024;

/// Enveloped uniform noise scaled by the burst gain; `duration` samples.
pub fn render_burst(b: &NoiseBurst) -> Vec<f32> {
    if b.gain == 0.0 {
        return vec![0.0; b.duration as usize];
    }
    uniform_noise(b.seed, b.duration as usize)
        .into_iter()
        .enumerate()
        .map(|(n, v)| v * b.envelope(n as u32) * b.gain)
        .collect()
}

/// Renders the resonance FIR. Fails on a partial outside `(0, sr / 2)`.
pub fn render_resonance(r: &Resonance, sample_rate: u32) -> Result<Vec<f32>> {
    render_resonance_limited(r, sample_rate, usize::MAX)
}

fn render_resonance_limited(r: &Resonance, sample_rate: u32, limit: usize) -> Result<Vec<f32>> {
    let nyquist = sample_rate as f64 / 2.0;
    if let Some(p) = r.partials.iter().find(|p| !(p.freq > 0.0 && (p.freq as f64) < nyquist)) {
        return Err(Error::invalid(format!("partial frequency {} outside (0, {nyquist})", p.freq)));
    }
    if r.length == 0 {
        return Err(Error::invalid("resonance length must be positive"));
    }
    let len = (r.length as usize).min(limit);
    let mut acc = vec![0.0f64; len];
    for p in &r.partials {
        if p.amp == 0.0 {
            continue;
        }
        let omega = 2.0 * std::f64::consts::PI * p.freq as f64 / sample_rate as f64;
        let alpha = p.decay_alpha as f64;
        let (amp, phase) = (p.amp as f64, p.phase as f64);
        // Complex rotation z[n+1] = z[n] * exp(-alpha + i omega); the
        // imaginary part is the partial. Re-anchored to the closed form
        // every ANCHOR_INTERVAL samples to bound drift.
        let (step_re, step_im) = {
            let m = (-alpha).exp();
            (m * omega.cos(), m * omega.sin())
        };
        for (chunk_idx, chunk) in acc.chunks_mut(ANCHOR_INTERVAL).enumerate() {
            let n0 = (chunk_idx * ANCHOR_INTERVAL) as f64;
            let mag = amp * (-alpha * n0).exp();
            if mag < 1e-30 {
                break;
            }
            let theta = omega * n0 + phase;
            let (mut re, mut im) = (mag * theta.cos(), mag * theta.sin());
            for slot in chunk.iter_mut() {
                *slot += im;
                let next_re = re * step_re - im * step_im;
                im = re * step_im + im * step_re;
                re = next_re;
            }
        }
    }
    Ok(acc.into_iter().map(|v| v as f32).collect())
}

/// One block: `dry * input + wet * sum_e m_e(t) * (input * r_e)(t)`.
///
/// The output spans `len(input) + max_fir_len - 1` samples with the input
/// zero-padded; mixture control frames are spread over that span.
pub fn apply_block(input: &[f32], block: &BlockParams, bank: &RirBank) -> Result<Vec<f32>> {
    apply_block_limited(input, block, bank, usize::MAX)
}

/// [`apply_block`] truncated to its first `limit` samples. Mixture timing is
/// still laid out over the untruncated span, so the result is an exact
/// prefix of the full block output.
pub(crate) fn apply_block_limited(
    input: &[f32],
    block: &BlockParams,
    bank: &RirBank,
    limit: usize,
) -> Result<Vec<f32>> {
    if input.is_empty() {
        return Err(Error::invalid("block input must be non-empty"));
    }
    match &block.filter {
        BlockFilter::Resonant { resonances, mixture } => {
            if resonances.is_empty() || mixture.columns() != resonances.len() {
                return Err(Error::invalid("mixture columns must match the number of resonances"));
            }
            // Only the first `limit` FIR samples can reach the output.
            let rendered = resonances
                .iter()
                .map(|r| render_resonance_limited(r, bank.sample_rate(), limit))
                .collect::<Result<Vec<_>>>()?;
            let max_fir_len = resonances.iter().map(|r| r.length as usize).max().unwrap_or(1);
            let filters: Vec<&[f32]> = rendered.iter().map(Vec::as_slice).collect();
            mix_block(input, block, &filters, max_fir_len, Some(mixture), limit)
        }
        BlockFilter::Room { rir_index } => {
            let ir = bank.get(*rir_index)?;
            mix_block(input, block, &[ir], ir.len(), None, limit)
        }
    }
}

fn mix_block(
    input: &[f32],
    block: &BlockParams,
    filters: &[&[f32]],
    max_fir_len: usize,
    mixture: Option<&MixtureEnvelope>,
    limit: usize,
) -> Result<Vec<f32>> {
    let full_len = input.len() + max_fir_len - 1;
    let out_len = full_len.min(limit);
    let mut acc = vec![0.0f64; out_len];

    if block.dry_gain != 0.0 {
        let dry = block.dry_gain as f64;
        for (a, &x) in acc.iter_mut().zip(input) {
            *a += dry * x as f64;
        }
    }

    if block.wet_gain != 0.0 {
        let wet = block.wet_gain as f64;
        let rows = mixture.map(|m| m.control_points.as_slice());
        for (e, fir) in filters.iter().enumerate() {
            let wet_e = convolve_limited(input, fir, out_len);
            match rows {
                Some(rows) if !is_constant_one(rows, e) => {
                    let gains = ColumnGains::new(rows, e, full_len);
                    for (t, (a, &y)) in acc.iter_mut().zip(&wet_e).enumerate() {
                        *a += wet * gains.at(t) * y as f64;
                    }
                }
                _ => {
                    for (a, &y) in acc.iter_mut().zip(&wet_e) {
                        *a += wet * y as f64;
                    }
                }
            }
        }
    }
    Ok(acc.into_iter().map(|v| v as f32).collect())
}

fn is_constant_one(rows: &[Vec<f32>], column: usize) -> bool {
    rows.iter().all(|r| r[column] == 1.0)
}

/// Linear interpolation of one mixture column over `span` samples.
struct ColumnGains {
    points: Vec<f64>,
    scale: f64,
}

impl ColumnGains {
    fn new(rows: &[Vec<f32>], column: usize, span: usize) -> Self {
        let points: Vec<f64> = rows.iter().map(|r| r[column] as f64).collect();
        let scale = if points.len() > 1 && span > 1 {
            (points.len() - 1) as f64 / (span - 1) as f64
        } else {
            0.0
        };
        Self { points, scale }
    }

    fn at(&self, t: usize) -> f64 {
        if self.points.len() == 1 {
            return self.points[0];
        }
        let pos = t as f64 * self.scale;
        let i = (pos.floor() as usize).min(self.points.len() - 2);
        let frac = pos - i as f64;
        self.points[i] * (1.0 - frac) + self.points[i + 1] * frac
    }
}

/// Burst through every block, scaled by the event amplitude.
pub fn render_source(params: &EventParams, bank: &RirBank) -> Result<Vec<f32>> {
    render_source_limited(params, bank, usize::MAX)
}

/// The first `limit` samples of [`render_source`].
pub(crate) fn render_source_limited(params: &EventParams, bank: &RirBank, limit: usize) -> Result<Vec<f32>> {
    let mut x = render_burst(&params.burst);
    x.truncate(limit);
    for block in &params.blocks {
        x = apply_block_limited(&x, block, bank, limit)?;
    }
    let a = params.amplitude;
    for v in &mut x {
        *v *= a;
    }
    Ok(x)
}

/// Places `source` on a zero canvas at `offset`: the convolution of the
/// source with a one-hot vector, truncated to the canvas.
pub fn place_one_hot(source: &[f32], offset: usize, canvas_len: usize) -> Vec<f32> {
    let mut canvas = vec![0.0f32; canvas_len];
    if offset < canvas_len {
        let n = source.len().min(canvas_len - offset);
        canvas[offset..offset + n].copy_from_slice(&source[..n]);
    }
    canvas
}

/// Renders an event onto a `canvas_len` canvas: source at
/// `onset_frame * 256`, then the fine shift. Tails past the canvas are cut.
pub fn render_event(event: &Event, canvas_len: usize, bank: &RirBank) -> Result<Vec<f32>> {
    if canvas_len == 0 {
        return Err(Error::invalid("canvas must be non-empty"));
    }
    let offset = event.onset_frame as usize * HOP;
    if let Some(i) = event.params.rir_index() {
        bank.get(i)?;
    }
    if offset >= canvas_len {
        return Ok(vec![0.0; canvas_len]);
    }
    let source = render_source_limited(&event.params, bank, canvas_len - offset)?;
    let canvas = place_one_hot(&source, offset, canvas_len);
    let tau = event.params.fine_shift as f64;
    if tau == 0.0 {
        return Ok(canvas);
    }
    fractional_shift(&canvas, tau)
}
