//! The `.siac` binary container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SIAC"
//!      4     2  version (1)
//!      6     4  sample_rate
//!     10     4  segment_len
//!     14     4  hop_len
//!     18     4  stft_window
//!     22     4  stft_hop
//!     26     8  bank_fingerprint
//!     34     4  bank_len
//!     38     2  prng_id
//!     40     8  total_samples
//!     48     4  event_count
//!     52     4  CRC-32 of bytes 0..52
//!     56     -  event records, each a u32 byte length then the record
//!    end-4   4  CRC-32 of all event records
//! ```
//!
//! Every field is little-endian; every real is an IEEE-754 `f32`.

use crate::error::{Error, Result};
use crate::stream::{StepNorms, StreamEncoding, StreamEvent, StreamHeader};
use crate::synth::{
    BlockFilter, BlockParams, EventParams, MixtureEnvelope, NoiseBurst, Partial, Resonance,
};

pub const MAGIC: &[u8; 4] = b"SIAC";
pub const VERSION: u16 = 1;
/// Bytes covered by the header checksum.
pub const HEADER_LEN: usize = 52;
/// Size of a file with no events.
pub const EMPTY_FILE_LEN: usize = HEADER_LEN + 4 + 4;

const KIND_RESONANT: u8 = 0;
const KIND_ROOM: u8 = 1;
const FLAG_MUTED: u8 = 1;

pub fn serialize(enc: &StreamEncoding) -> Result<Vec<u8>> {
    enc.validate()?;
    let count = u32::try_from(enc.events.len()).map_err(|_| Error::invalid("too many events"))?;
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    let h = &enc.header;
    w.u32(h.sample_rate);
    w.u32(h.segment_len);
    w.u32(h.hop_len);
    w.u32(h.stft_window);
    w.u32(h.stft_hop);
    w.u64(h.bank_fingerprint);
    w.u32(h.bank_len);
    w.u16(h.prng_id);
    w.u64(h.total_samples);
    w.u32(count);
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);

    let body_start = w.buf.len();
    for ev in &enc.events {
        let mut rec = Writer::default();
        write_event(&mut rec, ev);
        w.u32(rec.buf.len() as u32);
        w.bytes(&rec.buf);
    }
    let body_crc = crc32fast::hash(&w.buf[body_start..]);
    w.u32(body_crc);
    Ok(w.buf)
}

pub fn parse(bytes: &[u8]) -> Result<StreamEncoding> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}")));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let header = StreamHeader {
        sample_rate: r.u32()?,
        segment_len: r.u32()?,
        hop_len: r.u32()?,
        stft_window: r.u32()?,
        stft_hop: r.u32()?,
        bank_fingerprint: r.u64()?,
        bank_len: r.u32()?,
        prng_id: r.u16()?,
        total_samples: r.u64()?,
    };
    let count = r.u32()?;
    let computed = crc32fast::hash(&bytes[..HEADER_LEN]);
    let stored = r.u32()?;
    if stored != computed {
        return Err(Error::Checksum {
            section: "header",
            stored,
            computed,
        });
    }
    header.validate()?;

    let body_start = r.pos;
    if bytes.len() < body_start + 4 {
        return Err(Error::Truncated {
            offset: body_start,
            needed: 4,
            available: bytes.len() - body_start,
        });
    }
    let body_end = bytes.len() - 4;
    let computed = crc32fast::hash(&bytes[body_start..body_end]);
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("4 bytes"));

    // Each record carries at least its length prefix; a count larger than
    // the body could hold is truncation, not a huge allocation.
    let max_records = (body_end - body_start) / 4;
    let mut events = Vec::with_capacity((count as usize).min(max_records));
    let mut body = Reader {
        buf: &bytes[..body_end],
        pos: body_start,
    };
    for i in 0..count {
        let len = body.u32()? as usize;
        let start = body.pos;
        let rec = body.take(len)?;
        let mut rr = Reader {
            buf: &bytes[..start + len],
            pos: start,
        };
        let ev = read_event(&mut rr).map_err(|e| match e {
            Error::Truncated { .. } => Error::Format(format!("event {i}: record shorter than its contents")),
            other => other,
        })?;
        if rr.pos != start + rec.len() {
            return Err(Error::Format(format!("event {i}: {} unused bytes in record", start + len - rr.pos)));
        }
        events.push(ev);
    }
    if body.pos != body_end {
        return Err(Error::Format(format!("{} trailing bytes after events", body_end - body.pos)));
    }
    if stored != computed {
        return Err(Error::Checksum {
            section: "events",
            stored,
            computed,
        });
    }
    let enc = StreamEncoding { header, events };
    enc.validate()?;
    Ok(enc)
}

fn write_event(w: &mut Writer, ev: &StreamEvent) {
    w.u64(ev.abs_onset_sample);
    w.u8(if ev.muted { FLAG_MUTED } else { 0 });
    let p = &ev.params;
    w.f32(p.fine_shift);
    w.f32(p.amplitude);
    w.f32(ev.step.pre);
    w.f32(ev.step.post);
    let b = &p.burst;
    w.u32(b.duration);
    w.u32(b.attack);
    w.u32(b.decay);
    w.f32(b.gain);
    w.u64(b.seed);
    w.u8(p.blocks.len() as u8);
    for block in &p.blocks {
        match &block.filter {
            BlockFilter::Resonant { resonances, mixture } => {
                w.u8(KIND_RESONANT);
                w.f32(block.dry_gain);
                w.f32(block.wet_gain);
                w.u8(resonances.len() as u8);
                for r in resonances {
                    w.u32(r.length);
                    w.u8(r.partials.len() as u8);
                    for p in &r.partials {
                        w.f32(p.freq);
                        w.f32(p.amp);
                        w.f32(p.decay_alpha);
                        w.f32(p.phase);
                    }
                }
                w.u16(mixture.rows() as u16);
                for row in &mixture.control_points {
                    for &v in row {
                        w.f32(v);
                    }
                }
            }
            BlockFilter::Room { rir_index } => {
                w.u8(KIND_ROOM);
                w.f32(block.dry_gain);
                w.f32(block.wet_gain);
                w.u32(*rir_index);
            }
        }
    }
}

fn read_event(r: &mut Reader) -> Result<StreamEvent> {
    let abs_onset_sample = r.u64()?;
    let flags = r.u8()?;
    if flags & !FLAG_MUTED != 0 {
        return Err(Error::validation(format!("unknown event flags {flags:#04x}")));
    }
    let fine_shift = r.f32()?;
    let amplitude = r.f32()?;
    let step = StepNorms {
        pre: r.f32()?,
        post: r.f32()?,
    };
    let burst = NoiseBurst {
        duration: r.u32()?,
        attack: r.u32()?,
        decay: r.u32()?,
        gain: r.f32()?,
        seed: r.u64()?,
    };
    let n_blocks = r.u8()?;
    let mut blocks = Vec::with_capacity(n_blocks as usize);
    for _ in 0..n_blocks {
        let kind = r.u8()?;
        let dry_gain = r.f32()?;
        let wet_gain = r.f32()?;
        let filter = match kind {
            KIND_RESONANT => {
                let e = r.u8()? as usize;
                let mut resonances = Vec::with_capacity(e);
                for _ in 0..e {
                    let length = r.u32()?;
                    let n = r.u8()? as usize;
                    let mut partials = Vec::with_capacity(n);
                    for _ in 0..n {
                        partials.push(Partial {
                            freq: r.f32()?,
                            amp: r.f32()?,
                            decay_alpha: r.f32()?,
                            phase: r.f32()?,
                        });
                    }
                    resonances.push(Resonance { partials, length });
                }
                let rows = r.u16()? as usize;
                let mut control_points = Vec::with_capacity(rows.min(r.remaining() / 4 + 1));
                for _ in 0..rows {
                    let row = (0..e).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                    control_points.push(row);
                }
                BlockFilter::Resonant {
                    resonances,
                    mixture: MixtureEnvelope { control_points },
                }
            }
            KIND_ROOM => BlockFilter::Room { rir_index: r.u32()? },
            other => return Err(Error::validation(format!("unknown block kind {other}"))),
        };
        blocks.push(BlockParams {
            filter,
            dry_gain,
            wet_gain,
        });
    }
    Ok(StreamEvent {
        abs_onset_sample,
        muted: flags & FLAG_MUTED != 0,
        step,
        params: EventParams {
            burst,
            blocks,
            fine_shift,
            amplitude,
        },
    })
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n,
                available: self.remaining(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_bits(self.u32()?))
    }
}
