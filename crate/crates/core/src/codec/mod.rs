//! Persistence: the `.siac` binary event-stream format, its JSON mirror,
//! WAV input/output, and compression-rate arithmetic.

mod format;
mod wav;

pub use format::{parse, serialize, EMPTY_FILE_LEN, HEADER_LEN, MAGIC, VERSION};
pub use wav::{read_wav, read_wav_bytes, read_wav_resampled, resample, wav_bytes, write_wav};

use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::StreamEncoding;

/// Samples per coded scalar: `n_samples / (n_events * (params + times))`.
pub fn compression_ratio(
    n_samples: u64,
    n_events: u64,
    params_per_event: u64,
    time_scalars_per_event: u64,
) -> Result<f64> {
    let denominator = n_events * params_per_event + n_events * time_scalars_per_event;
    if n_samples == 0 || denominator == 0 {
        return Err(Error::invalid("compression ratio needs positive sample and scalar counts"));
    }
    Ok(n_samples as f64 / denominator as f64)
}

/// 16-bit PCM size over serialized size.
pub fn byte_compression_ratio(total_samples: u64, serialized_len: usize) -> f64 {
    (total_samples * 2) as f64 / serialized_len as f64
}

/// Pretty-printed JSON mirror; field names match the binary schema.
pub fn to_json(enc: &StreamEncoding) -> Result<String> {
    enc.validate()?;
    serde_json::to_string_pretty(enc).map_err(|e| Error::Format(e.to_string()))
}

pub fn from_json(text: &str) -> Result<StreamEncoding> {
    let enc: StreamEncoding = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    enc.validate()?;
    Ok(enc)
}

/// Reads binary, or the JSON mirror when the path ends in `.json`.
pub fn load(path: &Path) -> Result<StreamEncoding> {
    let bytes = std::fs::read(path)?;
    if is_json_path(path) {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format(e.to_string()))?;
        from_json(text)
    } else {
        parse(&bytes)
    }
}

/// Writes binary, or the JSON mirror when the path ends in `.json`.
pub fn save(path: &Path, enc: &StreamEncoding) -> Result<()> {
    if is_json_path(path) {
        std::fs::write(path, to_json(enc)?)?;
    } else {
        std::fs::write(path, serialize(enc)?)?;
    }
    Ok(())
}

fn is_json_path(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
