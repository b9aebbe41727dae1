use super::Fit;
use crate::dsp::convolve::convolve_limited;
use crate::dsp::HOP;

/// Largest timing correction tried, in samples.
const MAX_LAG: isize = HOP as isize + HOP as isize / 2;

/// Share of the spectral reduction an aligned fit must keep to replace the
/// unaligned one.
pub(super) const KEEP_FRACTION: f64 = 0.95;

/// Onset frame and fine shift that place `fit`'s event at the lag of peak
/// cross-correlation with `wave`, or `None` when no positive peak exists.
pub(super) fn best_lag(wave: &[f32], fit: &Fit, max_onset: usize) -> Option<(usize, f32)> {
    let u = &fit.signal;
    let first = u.iter().position(|&v| v != 0.0)?;
    let last = u.iter().rposition(|&v| v != 0.0)?;
    let support = &u[first..=last];
    let reversed: Vec<f32> = support.iter().rev().copied().collect();
    // xcorr(d) = sum_n u[first + n] * wave[first + n + d] = conv[len - 1 + first + d].
    let base = support.len() as isize - 1 + first as isize;
    let conv = convolve_limited(wave, &reversed, (base + MAX_LAG + 2).max(1) as usize);
    let xcorr = |d: isize| -> Option<f64> {
        let i = base + d;
        (i >= 0 && (i as usize) < conv.len()).then(|| conv[i as usize] as f64)
    };

    let onset = fit.onset_frame as f64 * HOP as f64 + fit.params.fine_shift as f64;
    let legal = |d: f64| {
        let e = onset + d;
        e > -(HOP as f64) && e < ((max_onset + 1) * HOP) as f64
    };
    let mut best: Option<(isize, f64)> = None;
    for d in -MAX_LAG..=MAX_LAG {
        if !legal(d as f64) {
            continue;
        }
        if let Some(c) = xcorr(d) {
            if c > 0.0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((d, c));
            }
        }
    }
    let (d, c) = best?;
    let mut lag = d as f64;
    if let (Some(l), Some(r)) = (xcorr(d - 1), xcorr(d + 1)) {
        let curve = l - 2.0 * c + r;
        if curve < 0.0 {
            let delta = (0.5 * (l - r) / curve).clamp(-0.5, 0.5);
            if legal(lag + delta) {
                lag += delta;
            }
        }
    }
    if lag == 0.0 {
        return None;
    }
    let e = onset + lag;
    let frame = ((e / HOP as f64).floor().max(0.0) as usize).min(max_onset);
    let fine = (e - (frame * HOP) as f64) as f32;
    (fine.abs() < HOP as f32).then_some((frame, fine))
}
