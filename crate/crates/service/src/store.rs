//! On-disk layout, one directory per session:
//!
//! ```text
//! <data_dir>/<id>/source.wav     upload as received
//! <data_dir>/<id>/initial.siac   encoder output
//! <data_dir>/<id>/current.siac   latest revision
//! <data_dir>/<id>/journal.jsonl  one JournalEntry per line
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use siac_core::codec::{parse, serialize};
use siac_core::stream::StreamEncoding;

use crate::edit::JournalEntry;

pub const SOURCE: &str = "source.wav";
pub const INITIAL: &str = "initial.siac";
pub const CURRENT: &str = "current.siac";
pub const JOURNAL: &str = "journal.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn corrupt(path: &Path, message: impl ToString) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}

pub fn write_encoding(path: &Path, enc: &StreamEncoding) -> Result<(), StoreError> {
    let bytes = serialize(enc).map_err(|e| corrupt(path, e))?;
    write_atomic(path, &bytes)
}

pub fn read_encoding(path: &Path) -> Result<StreamEncoding, StoreError> {
    let bytes = fs::read(path).map_err(io(path))?;
    parse(&bytes).map_err(|e| corrupt(path, e))
}

pub fn append_journal(dir: &Path, entry: &JournalEntry) -> Result<(), StoreError> {
    let path = dir.join(JOURNAL);
    let mut line = serde_json::to_string(entry).map_err(|e| corrupt(&path, e))?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io(&path))?;
    f.write_all(line.as_bytes()).map_err(io(&path))?;
    f.sync_data().map_err(io(&path))
}

pub fn read_journal(dir: &Path) -> Result<Vec<JournalEntry>, StoreError> {
    let path = dir.join(JOURNAL);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(&path)(e)),
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| corrupt(&path, e)))
        .collect()
}

pub fn create_dir(dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io(dir))
}

pub fn write_source(dir: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    write_atomic(&dir.join(SOURCE), bytes)
}

pub fn read_source(dir: &Path) -> Result<Vec<u8>, StoreError> {
    let path = dir.join(SOURCE);
    fs::read(&path).map_err(io(&path))
}

/// Session directories under `data_dir`, by id.
pub fn list_sessions(data_dir: &Path) -> Result<Vec<(String, PathBuf)>, StoreError> {
    let mut out = Vec::new();
    let entries = match fs::read_dir(data_dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(io(data_dir)(e)),
    };
    for entry in entries {
        let entry = entry.map_err(io(data_dir))?;
        let path = entry.path();
        if path.is_dir() {
            if let Some(id) = path.file_name().and_then(|n| n.to_str()) {
                out.push((id.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}
