//! Weight files (little-endian).
//!
//! ```text
//! "AMCW"  u16 version=1  u32 spec_len  spec_len bytes of JSON ModelSpec
//! u32 tensor_count  tensor_count × (u8 name_len, ASCII name, u8 rank,
//!                                    rank × u32 dims, f32 data)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::models::network::Network;
use crate::models::spec::ModelSpec;
use crate::tensor::Tensor;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"AMCW";
pub const WEIGHTS_VERSION: u16 = 1;

pub fn encode_weights(net: &Network<f32>) -> Result<Vec<u8>> {
    let spec = serde_json::to_vec(net.spec()).map_err(|e| Error::InvalidArgument(format!("spec serialization: {e}")))?;
    let mut out = Vec::with_capacity(16 + spec.len() + 4 * net.param_count() + 64 * net.params().len());
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec);
    out.extend_from_slice(&(net.params().len() as u32).to_le_bytes());
    for p in net.params() {
        let name = p.name.as_bytes();
        let len = u8::try_from(name.len()).map_err(|_| Error::InvalidArgument(format!("tensor name {} too long", p.name)))?;
        out.push(len);
        out.extend_from_slice(name);
        out.push(p.value.rank() as u8);
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let left = self.buf.len() - self.pos;
        if left < n {
            return Err(Error::Truncated { offset: self.pos as u64, what, needed: (n - left) as u64 });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses a weight file into its spec and named tensors.
pub fn decode_weights(buf: &[u8]) -> Result<(ModelSpec, Vec<(String, Tensor<f32>)>)> {
    let mut r = Reader { buf, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != WEIGHTS_MAGIC {
        return Err(Error::BadMagic { offset: 0, expected: WEIGHTS_MAGIC, found: magic });
    }
    let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != WEIGHTS_VERSION {
        return Err(Error::VersionMismatch { offset: 4, found: version, expected: WEIGHTS_VERSION });
    }
    let spec_len = r.u32("spec length")? as usize;
    let spec_at = r.pos as u64;
    let spec: ModelSpec = serde_json::from_slice(r.take(spec_len, "spec")?)
        .map_err(|e| Error::Malformed { offset: spec_at, detail: format!("spec: {e}") })?;
    let count = r.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let at = r.pos as u64;
        let len = r.take(1, "name length")?[0] as usize;
        let name = String::from_utf8(r.take(len, "name")?.to_vec())
            .map_err(|_| Error::Malformed { offset: at, detail: "tensor name is not ASCII".into() })?;
        let rank = r.take(1, "rank")?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dims")? as usize);
        }
        let n: usize = shape.iter().product();
        if rank == 0 || n == 0 {
            return Err(Error::Malformed { offset: at, detail: format!("tensor {name} has shape {shape:?}") });
        }
        let data = r
            .take(4 * n, "tensor data")?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        tensors.push((name, Tensor::new(shape, data)?));
    }
    if r.pos != buf.len() {
        return Err(Error::TrailingData { offset: r.pos as u64 });
    }
    Ok((spec, tensors))
}

pub fn save_weights(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(net)?).map_err(|e| Error::io(path, e))
}

/// Loads a network using the model description stored in the file.
pub fn load_weights(path: impl AsRef<Path>) -> Result<Network<f32>> {
    let path = path.as_ref();
    let (spec, tensors) = decode_weights(&std::fs::read(path).map_err(|e| Error::io(path, e))?)?;
    Network::from_tensors(&spec, tensors)
}

/// Loads weights into `spec`, failing with a shape-table mismatch when the
/// file was written for a different architecture.
pub fn load_weights_for(spec: &ModelSpec, path: impl AsRef<Path>) -> Result<Network<f32>> {
    let path = path.as_ref();
    let (_, tensors) = decode_weights(&std::fs::read(path).map_err(|e| Error::io(path, e))?)?;
    Network::from_tensors(spec, tensors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::spec::{build_lstm_baseline, build_scrnn, ScrnnVariant};
    use crate::rng::SeededRng;

    #[test]
    fn round_trip_and_size() {
        let spec = build_scrnn(ScrnnVariant { kernel_count: 64, ..Default::default() }).unwrap();
        let net = Network::<f32>::new(&spec, &mut SeededRng::new(2)).unwrap();
        let bytes = encode_weights(&net).unwrap();
        let (spec2, tensors) = decode_weights(&bytes).unwrap();
        assert_eq!(spec2, spec);
        let back = Network::from_tensors(&spec2, tensors).unwrap();
        assert_eq!(encode_weights(&back).unwrap(), bytes);

        let spec_len = serde_json::to_vec(&spec).unwrap().len();
        let table: usize = net.params().iter().map(|p| 1 + p.name.len() + 1 + 4 * p.value.rank()).sum();
        assert_eq!(bytes.len(), 4 + 2 + 4 + spec_len + 4 + table + 4 * spec.count_params().unwrap());
    }

    #[test]
    fn different_spec_is_a_shape_table_mismatch() {
        let net = Network::<f32>::new(&build_scrnn(ScrnnVariant::default()).unwrap(), &mut SeededRng::new(1)).unwrap();
        let (_, tensors) = decode_weights(&encode_weights(&net).unwrap()).unwrap();
        let other = build_scrnn(ScrnnVariant { kernel_size: 3, ..Default::default() }).unwrap();
        assert!(matches!(Network::from_tensors(&other, tensors.clone()), Err(Error::ShapeTableMismatch { .. })));
        assert!(matches!(Network::from_tensors(&build_lstm_baseline(), tensors), Err(Error::ShapeTableMismatch { .. })));
    }

    #[test]
    fn corrupt_headers() {
        let net = Network::<f32>::new(&build_lstm_baseline(), &mut SeededRng::new(1)).unwrap();
        let mut bytes = encode_weights(&net).unwrap();
        let good = bytes.clone();
        bytes[0] = b'X';
        assert!(matches!(decode_weights(&bytes), Err(Error::BadMagic { offset: 0, .. })));
        let mut bytes = good.clone();
        bytes[4] = 9;
        assert!(matches!(decode_weights(&bytes), Err(Error::VersionMismatch { offset: 4, .. })));
        let cut = &good[..good.len() - 3];
        assert!(matches!(decode_weights(cut), Err(Error::Truncated { what: "tensor data", .. })));
    }
}
