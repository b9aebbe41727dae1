use realfft::num_complex::Complex64;

use super::fft::{forward_f64, inverse_f64};
use crate::error::{Error, Result};

/// Full linear convolution, `len(x) + len(h) - 1` samples, computed through
/// zero-padded transforms so nothing wraps around.
pub fn fft_convolve(x: &[f32], h: &[f32]) -> Result<Vec<f32>> {
    if x.is_empty() || h.is_empty() {
        return Err(Error::invalid("convolution operands must be non-empty"));
    }
    Ok(convolve_limited(x, h, usize::MAX))
}

/// The first `max_len` samples of `x * h`. Only the first `max_len` samples
/// of each operand can contribute, so both are cut before transforming.
pub fn fft_convolve_truncated(x: &[f32], h: &[f32], max_len: usize) -> Result<Vec<f32>> {
    if x.is_empty() || h.is_empty() {
        return Err(Error::invalid("convolution operands must be non-empty"));
    }
    if max_len == 0 {
        return Ok(Vec::new());
    }
    Ok(convolve_limited(x, h, max_len))
}

pub(crate) fn convolve_limited(x: &[f32], h: &[f32], max_len: usize) -> Vec<f32> {
    let x = &x[..x.len().min(max_len)];
    let h = &h[..h.len().min(max_len)];
    let full = x.len() + h.len() - 1;
    let out_len = full.min(max_len);

    // Tiny kernels are cheaper in the time domain.
    if x.len().min(h.len()) <= 16 {
        let mut out = direct_convolve(x, h);
        out.truncate(out_len);
        return out;
    }

    let n = full.next_power_of_two();
    let fwd = forward_f64(n);
    let inv = inverse_f64(n);
    let mut scratch = vec![Complex64::default(); fwd.get_scratch_len().max(inv.get_scratch_len())];

    let mut spectrum_x = fwd.make_output_vec();
    let mut spectrum_h = fwd.make_output_vec();
    let mut buf = fwd.make_input_vec();
    for (dst, src) in buf.iter_mut().zip(x) {
        *dst = *src as f64;
    }
    fwd.process_with_scratch(&mut buf, &mut spectrum_x, &mut scratch)
        .expect("plan sizes");
    buf.fill(0.0);
    for (dst, src) in buf.iter_mut().zip(h) {
        *dst = *src as f64;
    }
    fwd.process_with_scratch(&mut buf, &mut spectrum_h, &mut scratch)
        .expect("plan sizes");

    for (a, b) in spectrum_x.iter_mut().zip(&spectrum_h) {
        *a *= *b;
    }
    // The inverse requires purely real DC and Nyquist bins.
    spectrum_x[0].im = 0.0;
    if let Some(last) = spectrum_x.last_mut() {
        last.im = 0.0;
    }
    inv.process_with_scratch(&mut spectrum_x, &mut buf, &mut scratch)
        .expect("plan sizes");

    let scale = 1.0 / n as f64;
    buf[..out_len].iter().map(|&v| (v * scale) as f32).collect()
}

/// Direct O(n*m) convolution, accumulated in `f64`.
pub fn direct_convolve(x: &[f32], h: &[f32]) -> Vec<f32> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0f64; x.len() + h.len() - 1];
    for (i, &xv) in x.iter().enumerate() {
        if xv == 0.0 {
            continue;
        }
        for (j, &hv) in h.iter().enumerate() {
            out[i + j] += xv as f64 * hv as f64;
        }
    }
    out.into_iter().map(|v| v as f32).collect()
}
