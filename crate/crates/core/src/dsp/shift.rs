use realfft::num_complex::Complex64;

use super::fft::{forward_f64, inverse_f64};
use crate::error::{Error, Result};

/// Delays `x` by `tau` samples (negative values advance it) by multiplying
/// its spectrum with `exp(-i 2 pi k tau / N)`.
///
/// The transform length is the next power of two at or above `2 * len(x)`,
/// so any `|tau| < len(x)` lands in the zero padding instead of wrapping
/// onto the output. The result has the length of `x`; content moved past
/// either end is dropped.
pub fn fractional_shift(x: &[f32], tau: f64) -> Result<Vec<f32>> {
    if !tau.is_finite() || tau.abs() >= x.len() as f64 {
        return Err(Error::OutOfRange(format!(
            "shift {tau} must satisfy |tau| < signal length {}",
            x.len()
        )));
    }
    let n = (2 * x.len()).next_power_of_two();
    let fwd = forward_f64(n);
    let inv = inverse_f64(n);
    let mut scratch = vec![Complex64::default(); fwd.get_scratch_len().max(inv.get_scratch_len())];

    let mut buf = fwd.make_input_vec();
    for (dst, src) in buf.iter_mut().zip(x) {
        *dst = *src as f64;
    }
    let mut spectrum = fwd.make_output_vec();
    fwd.process_with_scratch(&mut buf, &mut spectrum, &mut scratch)
        .expect("plan sizes");

    let step = -2.0 * std::f64::consts::PI * tau / n as f64;
    let nyquist = spectrum.len() - 1;
    for (k, c) in spectrum.iter_mut().enumerate() {
        if k == 0 {
            continue;
        }
        if k == nyquist {
            // Keep the Nyquist bin real: use the real part of the phase term.
            *c = Complex64::new(c.re * (step * k as f64).cos(), 0.0);
            continue;
        }
        *c *= Complex64::from_polar(1.0, step * k as f64);
    }
    spectrum[0].im = 0.0;
    inv.process_with_scratch(&mut spectrum, &mut buf, &mut scratch)
        .expect("plan sizes");

    let scale = 1.0 / n as f64;
    Ok(buf[..x.len()].iter().map(|&v| (v * scale) as f32).collect())
}
