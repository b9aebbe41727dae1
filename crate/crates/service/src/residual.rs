//! Input-versus-reconstruction spectrogram image and norm table.

use base64::Engine;
use serde::Serialize;
use siac_core::dsp::{stft_mag, Pcm, HOP, WINDOW};
use siac_core::stream::StreamEncoding;

const MAX_ROWS: usize = 256;
const MAX_COLUMNS: usize = 2048;
const FLOOR_DB: f32 = -80.0;

#[derive(Debug, Serialize)]
pub struct StepRow {
    pub index: usize,
    pub onset_seconds: f64,
    pub pre_norm: f32,
    pub post_norm: f32,
    pub reduction: f32,
}

#[derive(Debug, Serialize)]
pub struct ResidualReport {
    pub width: u32,
    pub height: u32,
    /// Grayscale PNG of `|input - reconstruction|` magnitudes in dB, low
    /// frequencies at the bottom.
    pub png_base64: String,
    pub input_norm: f64,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub steps: Vec<StepRow>,
}

pub fn residual_report(input: &Pcm, reconstruction: &Pcm, enc: &StreamEncoding) -> siac_core::Result<ResidualReport> {
    let a = stft_mag(input.samples(), WINDOW, HOP)?;
    let b = stft_mag(reconstruction.samples(), WINDOW, HOP)?;
    let (bins, frames) = (a.bins(), a.frames().min(b.frames()));
    let diff: Vec<f32> = (0..frames)
        .flat_map(|f| {
            let (ca, cb) = (a.column(f), b.column(f));
            ca.iter().zip(cb).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()
        })
        .collect();
    let input_norm: f64 = a.values().iter().map(|&v| v as f64).sum();
    let residual_norm: f64 = diff.iter().map(|&v| v as f64).sum();

    let row_group = bins.div_ceil(MAX_ROWS);
    let col_group = frames.div_ceil(MAX_COLUMNS).max(1);
    let height = bins.div_ceil(row_group);
    let width = frames.div_ceil(col_group).max(1);
    let mut pooled = vec![0.0f32; width * height];
    for f in 0..frames {
        for k in 0..bins {
            let cell = &mut pooled[(height - 1 - k / row_group) * width + f / col_group];
            *cell = cell.max(diff[f * bins + k]);
        }
    }
    let peak = pooled.iter().cloned().fold(0.0f32, f32::max);
    let pixels: Vec<u8> = pooled
        .iter()
        .map(|&v| {
            if peak == 0.0 || v == 0.0 {
                return 0;
            }
            let db = (20.0 * (v / peak).log10()).max(FLOOR_DB);
            (255.0 * (1.0 - db / FLOOR_DB)).round() as u8
        })
        .collect();

    let mut png_bytes = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut png_bytes, width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| siac_core::Error::InvalidInput(e.to_string()))?;
        writer
            .write_image_data(&pixels)
            .map_err(|e| siac_core::Error::InvalidInput(e.to_string()))?;
    }

    let sr = enc.header.sample_rate;
    let steps = enc
        .events
        .iter()
        .enumerate()
        .map(|(index, e)| StepRow {
            index,
            onset_seconds: e.onset_seconds(sr),
            pre_norm: e.step.pre,
            post_norm: e.step.post,
            reduction: if e.step.pre > 0.0 { (e.step.pre - e.step.post) / e.step.pre } else { 0.0 },
        })
        .collect();
    Ok(ResidualReport {
        width: width as u32,
        height: height as u32,
        png_base64: base64::engine::general_purpose::STANDARD.encode(png_bytes),
        input_norm,
        residual_norm,
        relative_residual: if input_norm > 0.0 { residual_norm / input_norm } else { 0.0 },
        steps,
    })
}
