//! Event edits and the append-only journal that records them.

use serde::{Deserialize, Serialize};
use siac_core::synth::MAX_FINE_SHIFT;
use siac_core::stream::StreamEncoding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edit {
    MoveBySeconds(f64),
    Mute(bool),
    Amplitude(f32),
    Delete,
}

/// PATCH body: exactly one field.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    pub move_by_seconds: Option<f64>,
    pub mute: Option<bool>,
    pub amplitude: Option<f32>,
    pub delete: Option<bool>,
}

impl EditRequest {
    pub fn into_edit(self) -> Result<Edit, EditError> {
        let mut edits = Vec::new();
        if let Some(s) = self.move_by_seconds {
            edits.push(Edit::MoveBySeconds(s));
        }
        if let Some(m) = self.mute {
            edits.push(Edit::Mute(m));
        }
        if let Some(a) = self.amplitude {
            edits.push(Edit::Amplitude(a));
        }
        match self.delete {
            Some(true) => edits.push(Edit::Delete),
            Some(false) => return Err(EditError::Invalid("delete must be true".into())),
            None => {}
        }
        match <[Edit; 1]>::try_from(edits) {
            Ok([e]) => Ok(e),
            Err(v) => Err(EditError::Invalid(format!("expected exactly one edit, got {}", v.len()))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EditError {
    #[error("no event {0}")]
    NoEvent(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// Revision produced by this edit.
    pub revision: u64,
    pub event: usize,
    pub edit: Edit,
}

/// Applies `edit` to event `index` of a copy of `enc`. The result is
/// re-sorted by onset and validated.
pub fn apply(enc: &StreamEncoding, index: usize, edit: &Edit) -> Result<StreamEncoding, EditError> {
    if index >= enc.events.len() {
        return Err(EditError::NoEvent(index));
    }
    let mut out = enc.clone();
    let sr = out.header.sample_rate as f64;
    let hop = out.header.stft_hop as f64;
    match edit {
        Edit::MoveBySeconds(dt) => {
            if !dt.is_finite() {
                return Err(EditError::Invalid("move must be finite".into()));
            }
            let ev = &mut out.events[index];
            let fine = ev.params.fine_shift as f64 + dt * sr;
            let onset = ev.abs_onset_sample as f64 + fine;
            if !(0.0..out.header.total_samples as f64).contains(&onset) {
                return Err(EditError::Invalid(format!(
                    "onset {:.3} s outside the clip",
                    onset / sr
                )));
            }
            if (fine as f32).abs() < MAX_FINE_SHIFT {
                ev.params.fine_shift = fine as f32;
            } else {
                let mut abs = (onset / hop).floor() * hop;
                let mut rest = (onset - abs) as f32;
                if rest >= MAX_FINE_SHIFT {
                    abs += hop;
                    rest = 0.0;
                }
                ev.abs_onset_sample = abs as u64;
                ev.params.fine_shift = rest;
            }
        }
        Edit::Mute(m) => out.events[index].muted = *m,
        Edit::Amplitude(a) => out.events[index].params.amplitude = *a,
        Edit::Delete => {
            out.events.remove(index);
        }
    }
    out.sort_events();
    out.validate().map_err(|e| EditError::Invalid(e.to_string()))?;
    Ok(out)
}

/// Replays `journal` onto `initial`, checking that revisions count up from 1.
pub fn replay(initial: &StreamEncoding, journal: &[JournalEntry]) -> Result<(StreamEncoding, u64), EditError> {
    let mut enc = initial.clone();
    for (i, entry) in journal.iter().enumerate() {
        if entry.revision != i as u64 + 1 {
            return Err(EditError::Invalid(format!(
                "journal entry {i} has revision {}, expected {}",
                entry.revision,
                i + 1
            )));
        }
        enc = apply(&enc, entry.event, &entry.edit)?;
    }
    Ok((enc, journal.len() as u64))
}
