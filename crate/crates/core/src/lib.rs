//! Sparse, event-based audio codec.
//!
//! Audio is represented as a short list of events, each an onset time plus
//! the explicit parameters of a source-excitation synthesizer. The
//! [`encoder`] finds events greedily by analysis-by-synthesis against a
//! magnitude spectrogram, the [`synth`] module renders them back to PCM,
//! [`stream`] handles arbitrarily long inputs segment by segment, and
//! [`codec`] persists the result.

pub mod codec;
pub mod dsp;
pub mod encoder;
pub mod error;
pub mod report;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};
