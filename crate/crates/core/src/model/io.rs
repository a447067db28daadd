//! Model file format (all integers little-endian):
//!
//! ```text
//! "TRB1" | version u32 | mode u8 (0 joint, 1 translational) | layer count u32
//! per layer: n_visible u32 | n_hidden u32 | W (row-major f64) | b_hidden f64 | b_visible f64
//! [translational layer, same encoding]
//! FNV-1a 64 checksum of every preceding byte, u64
//! ```

use std::fs;
use std::path::Path;

use super::autoencoder::DeepAutoencoder;
use super::rbm::Rbm;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAGIC: &[u8; 4] = b"TRB1";
const VERSION: u32 = 1;
/// Refuse to allocate layers larger than this many parameters.
const MAX_LAYER_PARAMS: u64 = 1 << 28;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn put_layer(out: &mut Vec<u8>, rbm: &Rbm) {
    out.extend_from_slice(&(rbm.n_visible() as u32).to_le_bytes());
    out.extend_from_slice(&(rbm.n_hidden() as u32).to_le_bytes());
    for v in rbm
        .weights()
        .data()
        .iter()
        .chain(rbm.hidden_bias())
        .chain(rbm.visible_bias())
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_model(model: &DeepAutoencoder) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(model.trbm().is_some() as u8);
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for layer in model.layers() {
        put_layer(&mut out, layer);
    }
    if let Some(t) = model.trbm() {
        put_layer(&mut out, t);
    }
    let sum = fnv1a64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            what: "model",
            offset: self.pos,
            msg: msg.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("truncated: need {n} more bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn layer(&mut self) -> Result<Rbm> {
        let at = self.pos;
        let nv = self.u32()? as usize;
        let nh = self.u32()? as usize;
        let params = (nv as u64) * (nh as u64) + nv as u64 + nh as u64;
        if nv == 0 || nh == 0 || params > MAX_LAYER_PARAMS {
            return Err(Error::Parse {
                what: "model",
                offset: at,
                msg: format!("layer dimensions {nv}x{nh} out of range"),
            });
        }
        let w = self.f64s(nv * nh)?;
        let hb = self.f64s(nh)?;
        let vb = self.f64s(nv)?;
        Rbm::new(Matrix::new(nh, nv, w)?, hb, vb).map_err(|e| Error::Parse {
            what: "model",
            offset: at,
            msg: e.to_string(),
        })
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<DeepAutoencoder> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Parse {
            what: "model",
            offset: 0,
            msg: "bad magic".into(),
        });
    }
    if bytes.len() < 8 + 4 {
        return Err(r.err("truncated"));
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
    if fnv1a64(body) != stored {
        return Err(Error::Parse {
            what: "model",
            offset: bytes.len() - 8,
            msg: "checksum mismatch".into(),
        });
    }
    let mut r = Reader { bytes: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(r.err(format!("unsupported version {version}")));
    }
    let mode = r.take(1)?[0];
    if mode > 1 {
        return Err(r.err(format!("unknown mode byte {mode}")));
    }
    let count = r.u32()? as usize;
    if count == 0 || count > 64 {
        return Err(r.err(format!("layer count {count} out of range")));
    }
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        layers.push(r.layer()?);
    }
    let trbm = if mode == 1 { Some(r.layer()?) } else { None };
    if r.pos != body.len() {
        return Err(r.err("trailing bytes before checksum"));
    }
    DeepAutoencoder::new(layers, trbm).map_err(|e| Error::Parse {
        what: "model",
        offset: 13,
        msg: e.to_string(),
    })
}

pub fn save_model(model: &DeepAutoencoder, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DeepAutoencoder> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rbm::init_rbm;
    use crate::numerics::RandomStream;

    fn sample_model(translational: bool) -> DeepAutoencoder {
        let mut rng = RandomStream::new(17);
        let layers = vec![
            init_rbm(9, 5, 0.1, &mut rng).unwrap(),
            init_rbm(5, 3, 0.1, &mut rng).unwrap(),
        ];
        let trbm = translational.then(|| init_rbm(5, 5, 0.1, &mut rng).unwrap());
        DeepAutoencoder::new(layers, trbm).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for t in [false, true] {
            let m = sample_model(t);
            let bytes = encode_model(&m);
            assert_eq!(&bytes[..4], b"TRB1");
            assert_eq!(bytes[8], t as u8);
            let back = decode_model(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(encode_model(&back), bytes);
        }
    }

    #[test]
    fn corrupted_magic() {
        let mut bytes = encode_model(&sample_model(false));
        bytes[0] = b'X';
        assert!(matches!(decode_model(&bytes), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn flipped_payload_byte_fails_checksum() {
        let mut bytes = encode_model(&sample_model(false));
        bytes[40] ^= 0x10;
        assert!(decode_model(&bytes).is_err());
    }

    #[test]
    fn truncation() {
        let bytes = encode_model(&sample_model(true));
        assert!(decode_model(&bytes[..bytes.len() - 9]).is_err());
        assert!(decode_model(&bytes[..6]).is_err());
    }

    /// Re-encodes with a fresh checksum so only the structural check fires.
    fn reseal(mut body: Vec<u8>) -> Vec<u8> {
        let sum = fnv1a64(&body);
        body.extend_from_slice(&sum.to_le_bytes());
        body
    }

    #[test]
    fn layer_chain_mismatch() {
        let mut rng = RandomStream::new(3);
        let a = init_rbm(9, 5, 0.1, &mut rng).unwrap();
        let b = init_rbm(4, 3, 0.1, &mut rng).unwrap();
        let mut body = Vec::new();
        body.extend_from_slice(MAGIC);
        body.extend_from_slice(&VERSION.to_le_bytes());
        body.push(0);
        body.extend_from_slice(&2u32.to_le_bytes());
        put_layer(&mut body, &a);
        put_layer(&mut body, &b);
        let err = decode_model(&reseal(body)).unwrap_err();
        assert!(err.to_string().contains("hidden units"), "{err}");
    }

    #[test]
    fn dimension_overflow() {
        let mut body = Vec::new();
        body.extend_from_slice(MAGIC);
        body.extend_from_slice(&VERSION.to_le_bytes());
        body.push(0);
        body.extend_from_slice(&1u32.to_le_bytes());
        body.extend_from_slice(&u32::MAX.to_le_bytes());
        body.extend_from_slice(&u32::MAX.to_le_bytes());
        let err = decode_model(&reseal(body)).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn file_round_trip_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.trb");
        let m = sample_model(true);
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
        assert!(matches!(load_model(dir.path().join("nope.trb")), Err(Error::MissingArtifact(_))));
    }
}
