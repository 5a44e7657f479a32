//! Binary dataset files (little-endian).
//!
//! ```text
//! "AMCD"  u16 version=1  u16 mod_count  mod_count × (u8 len, ASCII name)
//! u32 sample_count  u16 frame_len
//! sample_count × (u8 mod_id, i8 snr_db, frame_len × f32 I, frame_len × f32 Q)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::synth::dataset::{Dataset, IqFrame, LabeledSample};
use crate::synth::ModType;

pub const DATASET_MAGIC: [u8; 4] = *b"AMCD";
pub const DATASET_VERSION: u16 = 1;

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.frame_len == 0 || ds.frame_len > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!("frame_len {} does not fit the file format", ds.frame_len)));
    }
    let count = u32::try_from(ds.len()).map_err(|_| Error::InvalidArgument("too many samples".into()))?;
    let mut out = Vec::with_capacity(64 + ds.len() * (2 + 8 * ds.frame_len));
    out.extend_from_slice(&DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(ModType::ALL.len() as u16).to_le_bytes());
    for m in ModType::ALL {
        out.push(m.name().len() as u8);
        out.extend_from_slice(m.name().as_bytes());
    }
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&(ds.frame_len as u16).to_le_bytes());
    for s in &ds.samples {
        out.push(s.mod_type.id());
        out.push(s.snr_db as u8);
        for v in s.frame.i.iter().chain(&s.frame.q) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated { offset: self.pos as u64, what, needed: (n - (self.buf.len() - self.pos)) as u64 });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode_dataset(buf: &[u8]) -> Result<Dataset> {
    let mut c = Cursor { buf, pos: 0 };
    let magic: [u8; 4] = c.take(4, "magic")?.try_into().unwrap();
    if magic != DATASET_MAGIC {
        return Err(Error::BadMagic { offset: 0, expected: DATASET_MAGIC, found: magic });
    }
    let version = c.u16("version")?;
    if version != DATASET_VERSION {
        return Err(Error::VersionMismatch { offset: 4, found: version, expected: DATASET_VERSION });
    }
    let mod_count = c.u16("mod_count")? as usize;
    let mut table = Vec::with_capacity(mod_count);
    for _ in 0..mod_count {
        let at = c.pos as u64;
        let len = c.u8("name length")? as usize;
        let raw = c.take(len, "name")?;
        let name = std::str::from_utf8(raw)
            .ok()
            .and_then(|s| s.parse::<ModType>().ok())
            .ok_or_else(|| Error::Malformed { offset: at, detail: format!("unknown modulation name {:?}", String::from_utf8_lossy(raw)) })?;
        table.push(name);
    }
    let count = c.u32("sample_count")? as usize;
    let frame_len = c.u16("frame_len")? as usize;
    if frame_len == 0 {
        return Err(Error::Malformed { offset: (c.pos - 2) as u64, detail: "frame_len is zero".into() });
    }
    let record = 2 + 8 * frame_len;
    let available = (buf.len() - c.pos) / record;
    if available < count {
        let at = c.pos + available * record;
        return Err(Error::Truncated { offset: at as u64, what: "record", needed: (c.pos + count * record - buf.len()) as u64 });
    }
    let mut samples = Vec::with_capacity(count);
    let floats = |bytes: &[u8]| -> Vec<f32> {
        bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect()
    };
    for _ in 0..count {
        let at = c.pos as u64;
        let id = c.u8("mod_id")? as usize;
        let snr = c.u8("snr_db")? as i8;
        let mod_type = *table
            .get(id)
            .ok_or_else(|| Error::Malformed { offset: at, detail: format!("mod_id {id} outside name table of {mod_count}") })?;
        let i = floats(c.take(4 * frame_len, "I plane")?);
        let q = floats(c.take(4 * frame_len, "Q plane")?);
        let frame = IqFrame::new(i, q).map_err(|e| Error::Malformed { offset: at, detail: e.to_string() })?;
        samples.push(LabeledSample { frame, mod_type, snr_db: snr });
    }
    if c.pos != buf.len() {
        return Err(Error::TrailingData { offset: c.pos as u64 });
    }
    Dataset::new(frame_len, samples)
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_dataset(ds)?).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    decode_dataset(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
