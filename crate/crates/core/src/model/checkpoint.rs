//! Binary checkpoint layout (all integers and floats little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `OODLABCK` |
//! | 4 | `u32` format version (1) |
//! | 4 | `u32` layer count `L` |
//! | 4·(L+1) | `u32` layer widths: input, hidden…, `c + 1` |
//! | per layer | weights `out × in` row-major `f64`, then `out` biases `f64` |
//! | 24 | β as three `f64`: inlier, resized, synthesized |

use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Layer, MlpParams};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::losses::Beta;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"OODLABCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint(params: &MlpParams, beta: Beta) -> Vec<u8> {
    let sizes = params.sizes();
    let mut out = Vec::with_capacity(8 + 4 * (sizes.len() + 2) + 8 * (params.parameter_count() + 3));
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.layers.len() as u32).to_le_bytes());
    for s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for layer in &params.layers {
        for v in layer.weight.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in beta.to_array() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn decode_inner(bytes: &[u8]) -> std::result::Result<(MlpParams, Beta), String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = r.u32()? as usize;
    if count == 0 || count > 64 {
        return Err(format!("implausible layer count {count}"));
    }
    let sizes = (0..=count).map(|_| r.u32().map(|v| v as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
    if sizes.contains(&0) || *sizes.last().expect("non-empty") < 2 {
        return Err(format!("invalid layer sizes {sizes:?}"));
    }
    let mut layers = Vec::with_capacity(count);
    for w in sizes.windows(2) {
        let (inp, out) = (w[0], w[1]);
        let weights = (0..inp * out).map(|_| r.f64()).collect::<std::result::Result<Vec<_>, _>>()?;
        let bias = (0..out).map(|_| r.f64()).collect::<std::result::Result<Vec<_>, _>>()?;
        let weight = Array2::from_shape_vec((out, inp), weights).map_err(|e| e.to_string())?;
        layers.push(Layer { weight, bias: Array1::from(bias) });
    }
    let beta = Beta::from([r.f64()?, r.f64()?, r.f64()?]);
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    let params = MlpParams { layers };
    params.validate().map_err(|e| e.to_string())?;
    Ok((params, beta))
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<(MlpParams, Beta)> {
    decode_inner(bytes).map_err(|reason| Error::format(path, reason))
}

pub fn write_checkpoint(path: &Path, params: &MlpParams, beta: Beta) -> Result<()> {
    write_atomic(path, &encode_checkpoint(params, beta))
}

pub fn read_checkpoint(path: &Path) -> Result<(MlpParams, Beta)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn round_trip_is_exact() {
        let params = MlpParams::init(3, &[5, 4], 2, &mut RngStream::new(9, 0)).unwrap();
        let beta = Beta::from([0.9, 1.1, -0.25]);
        let bytes = encode_checkpoint(&params, beta);
        assert_eq!(bytes.len(), 8 + 4 + 4 + 4 * 4 + 8 * (params.parameter_count() + 3));
        assert_eq!(&bytes[..8], b"OODLABCK");
        let (p2, b2) = decode_checkpoint(&bytes, Path::new("mem")).unwrap();
        assert_eq!(p2, params);
        assert_eq!(b2, beta);
    }

    #[test]
    fn header_layout() {
        let params = MlpParams::zeros(2, &[], 1).unwrap();
        let bytes = encode_checkpoint(&params, Beta::default());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &2u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 24 + 8 * 6 + 24);
        assert_eq!(&bytes[bytes.len() - 8..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_corruption() {
        let params = MlpParams::zeros(2, &[3], 1).unwrap();
        let bytes = encode_checkpoint(&params, Beta::default());
        let p = Path::new("mem");
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1], p).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra, p).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_checkpoint(&magic, p).is_err());
        let mut version = bytes;
        version[8] = 2;
        assert!(matches!(decode_checkpoint(&version, p), Err(Error::Format { .. })));
    }
}
