use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::{Pcm, SAMPLE_RATE};
use crate::error::{Error, Result};

/// Half-width of the resampling kernel, in output-band zero crossings.
const SINC_ZERO_CROSSINGS: f64 = 32.0;

/// Reads a WAV file as mono (first channel) at the codec sample rate.
pub fn read_wav(path: &Path) -> Result<Pcm> {
    read_wav_resampled(path, SAMPLE_RATE)
}

pub fn read_wav_resampled(path: &Path, sample_rate: u32) -> Result<Pcm> {
    let file = std::fs::File::open(path)?;
    decode_wav(std::io::BufReader::new(file), sample_rate)
}

/// [`read_wav`] from an in-memory file.
pub fn read_wav_bytes(bytes: &[u8]) -> Result<Pcm> {
    decode_wav(Cursor::new(bytes), SAMPLE_RATE)
}

fn decode_wav<R: Read>(reader: R, sample_rate: u32) -> Result<Pcm> {
    let mut wav = WavReader::new(reader).map_err(wav_error)?;
    let spec = wav.spec();
    let channels = spec.channels.max(1) as usize;
    let first_channel: Vec<f32> = match spec.sample_format {
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::Format(format!("unsupported float width {}", spec.bits_per_sample)));
            }
            wav.samples::<f32>()
                .step_by(channels)
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_error)?
        }
        SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !(8..=32).contains(&bits) {
                return Err(Error::Format(format!("unsupported integer width {bits}")));
            }
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            wav.samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_error)?
        }
    };
    if first_channel.is_empty() {
        return Err(Error::Format("zero-length data chunk".into()));
    }
    let samples = if spec.sample_rate == sample_rate {
        first_channel
    } else {
        resample(&first_channel, spec.sample_rate, sample_rate)?
    };
    Pcm::new(samples, sample_rate).map_err(|e| Error::Format(e.to_string()))
}

/// Any failure while decoding the RIFF stream is a format problem; the file
/// itself was already opened.
fn wav_error(e: hound::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::Format(other.to_string()),
    }
}

/// Writes 16-bit PCM at the codec sample rate, clipping to [-1, 1].
pub fn write_wav(path: &Path, pcm: &Pcm) -> Result<()> {
    let file = std::fs::File::create(path)?;
    encode_wav(std::io::BufWriter::new(file), pcm)
}

/// [`write_wav`] into memory.
pub fn wav_bytes(pcm: &Pcm) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    encode_wav(&mut cursor, pcm)?;
    Ok(cursor.into_inner())
}

fn encode_wav<W: Write + Seek>(writer: W, pcm: &Pcm) -> Result<()> {
    let resampled;
    let samples = if pcm.sample_rate() == SAMPLE_RATE {
        pcm.samples()
    } else {
        resampled = resample(pcm.samples(), pcm.sample_rate(), SAMPLE_RATE)?;
        &resampled
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::new(writer, spec).map_err(write_error)?;
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(write_error)?;
    }
    w.finalize().map_err(write_error)
}

/// Band-limited resampling with a Hann-windowed sinc kernel. The cutoff
/// follows the lower of the two Nyquist rates.
pub fn resample(x: &[f32], from: u32, to: u32) -> Result<Vec<f32>> {
    if from == 0 || to == 0 {
        return Err(Error::invalid("sample rates must be positive"));
    }
    if from == to || x.is_empty() {
        return Ok(x.to_vec());
    }
    let ratio = to as f64 / from as f64;
    let cutoff = ratio.min(1.0);
    let half_width = SINC_ZERO_CROSSINGS / cutoff;
    let out_len = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    let out = (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len() - 1);
            let mut acc = 0.0f64;
            for (k, &v) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - k as f64;
                let window = 0.5 * (1.0 + (std::f64::consts::PI * d / half_width).cos());
                acc += v as f64 * cutoff * sinc(cutoff * d) * window;
            }
            acc as f32
        })
        .collect();
    Ok(out)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}
