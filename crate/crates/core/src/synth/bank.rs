//! Room impulse response bank: the fixed filters of each event's final
//! decoder block.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::noise::uniform_noise;
use crate::error::{Error, Result};

/// Entries in the generated fallback bank.
pub const SYNTHETIC_BANK_SIZE: usize = 8;
const SYNTHETIC_SEED: u64 = 0x5349_4143_5249_5200;
const SYNTHETIC_T60_RANGE: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, PartialEq)]
pub struct RirBank {
    sample_rate: u32,
    names: Vec<String>,
    entries: Vec<Vec<f32>>,
    fingerprint: u64,
}

impl RirBank {
    /// Builds a bank from raw responses, normalizing each to unit peak.
    pub fn from_entries(sample_rate: u32, named: Vec<(String, Vec<f32>)>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Bank("sample rate must be positive".into()));
        }
        let mut names = Vec::with_capacity(named.len());
        let mut entries = Vec::with_capacity(named.len());
        for (name, mut ir) in named {
            let peak = ir.iter().fold(0.0f32, |m, v| m.max(v.abs()));
            if ir.is_empty() || !peak.is_finite() || peak == 0.0 {
                return Err(Error::Bank(format!("impulse response {name:?} is empty or silent")));
            }
            for v in &mut ir {
                *v /= peak;
            }
            names.push(name);
            entries.push(ir);
        }
        let fingerprint = fingerprint(sample_rate, &entries);
        Ok(Self {
            sample_rate,
            names,
            entries,
            fingerprint,
        })
    }

    /// Eight exponentially decaying noise responses with T60 log-spaced over
    /// 0.1 to 2.0 seconds, from a fixed seed.
    pub fn synthetic(sample_rate: u32) -> Self {
        let (lo, hi) = SYNTHETIC_T60_RANGE;
        let named = (0..SYNTHETIC_BANK_SIZE)
            .map(|i| {
                let frac = i as f64 / (SYNTHETIC_BANK_SIZE - 1) as f64;
                let t60 = lo * (hi / lo).powf(frac);
                let len = (t60 * sample_rate as f64).ceil() as usize;
                let alpha = 1000f64.ln() / (t60 * sample_rate as f64);
                let noise = uniform_noise(SYNTHETIC_SEED + i as u64, len);
                let ir = noise
                    .iter()
                    .enumerate()
                    .map(|(n, &v)| (v as f64 * (-alpha * n as f64).exp()) as f32)
                    .collect();
                (format!("synthetic-{i:02}-t60-{:.3}s", t60), ir)
            })
            .collect();
        Self::from_entries(sample_rate, named).expect("synthetic responses are non-silent")
    }

    /// Loads every `.wav` file in `dir`; index order is lexicographic
    /// filename order. Files are resampled to `sample_rate`, first channel.
    pub fn from_dir(dir: &Path, sample_rate: u32) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::Bank(format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
            })
            .collect();
        paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
        if paths.is_empty() {
            return Err(Error::Bank(format!("no .wav files in {}", dir.display())));
        }
        let mut named = Vec::with_capacity(paths.len());
        for path in paths {
            let pcm = crate::codec::read_wav_resampled(&path, sample_rate)
                .map_err(|e| Error::Bank(format!("{}: {e}", path.display())))?;
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            named.push((name, pcm.into_samples()));
        }
        Self::from_entries(sample_rate, named)
    }

    /// Loads `dir` when given, otherwise the synthetic bank.
    pub fn load_or_synthetic(dir: Option<&Path>, sample_rate: u32) -> Result<Self> {
        match dir {
            Some(d) => Self::from_dir(d, sample_rate),
            None => Ok(Self::synthetic(sample_rate)),
        }
    }

    pub fn get(&self, index: u32) -> Result<&[f32]> {
        self.entries
            .get(index as usize)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Bank(format!("index {index} out of range for bank of {}", self.len())))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// First eight bytes of a SHA-256 over the rate and all entry samples.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

fn fingerprint(sample_rate: u32, entries: &[Vec<f32>]) -> u64 {
    let mut h = Sha256::new();
    h.update(sample_rate.to_le_bytes());
    h.update((entries.len() as u64).to_le_bytes());
    for e in entries {
        h.update((e.len() as u64).to_le_bytes());
        for v in e {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_bank_shape() {
        let bank = RirBank::synthetic(22050);
        assert_eq!(bank.len(), 8);
        let first = bank.get(0).unwrap();
        let last = bank.get(7).unwrap();
        assert_eq!(first.len(), 2205);
        assert_eq!(last.len(), 44100);
        for i in 0..8 {
            let ir = bank.get(i).unwrap();
            let peak = ir.iter().fold(0.0f32, |m, v| m.max(v.abs()));
            assert!((peak - 1.0).abs() < 1e-6);
        }
        assert_eq!(bank.fingerprint(), RirBank::synthetic(22050).fingerprint());
        assert_ne!(bank.fingerprint(), RirBank::synthetic(16000).fingerprint());
    }

    #[test]
    fn missing_index_is_bank_error() {
        let bank = RirBank::synthetic(22050);
        assert!(matches!(bank.get(8), Err(Error::Bank(_))));
    }

    #[test]
    fn rejects_silent_entry() {
        let r = RirBank::from_entries(22050, vec![("z".into(), vec![0.0; 10])]);
        assert!(matches!(r, Err(Error::Bank(_))));
    }
}
