//! Binary (P5) and ASCII (P2) PGM reading, P5 writing.

use std::fs;
use std::path::Path;

use super::frame::{Dims, UltrasoundFrame, DEFAULT_MM_PER_PX};
use crate::error::{Error, Result};

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        what: "pgm",
        offset,
        msg: msg.into(),
    }
}

struct Header {
    ascii: bool,
    dims: Dims,
    maxval: u32,
    /// Offset of the first payload byte.
    payload: usize,
}

fn skip_ws_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_uint(bytes: &[u8], pos: usize) -> Result<(u32, usize)> {
    let start = skip_ws_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(parse_err(start, "expected unsigned integer"));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text
        .parse::<u32>()
        .map_err(|_| parse_err(start, format!("integer {text} out of range")))?;
    Ok((value, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(parse_err(0, "file too short for magic number"));
    }
    let ascii = match &bytes[..2] {
        b"P5" => false,
        b"P2" => true,
        other => {
            return Err(parse_err(
                0,
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let (width, pos) = read_uint(bytes, 2)?;
    let (height, pos) = read_uint(bytes, pos)?;
    let (maxval, pos) = read_uint(bytes, pos)?;
    if width == 0 || height == 0 {
        return Err(parse_err(pos, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(pos, format!("maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte separates the header from a binary raster
    let separated = bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace());
    if !separated && !ascii {
        return Err(parse_err(pos, "missing whitespace after maxval"));
    }
    Ok(Header {
        ascii,
        dims: Dims::new(width as usize, height as usize),
        maxval,
        payload: if separated { pos + 1 } else { pos },
    })
}

/// Decodes PGM bytes into intensities `raw / maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<UltrasoundFrame> {
    let h = parse_header(bytes)?;
    let n = h.dims.area();
    let maxval = h.maxval as f64;
    let mut values = Vec::with_capacity(n);
    if h.ascii {
        let mut pos = h.payload.min(bytes.len());
        for _ in 0..n {
            let (v, next) = read_uint(bytes, pos).map_err(|e| match e {
                Error::Parse { offset, .. } if offset >= bytes.len() => {
                    parse_err(offset, format!("truncated payload: expected {n} samples"))
                }
                other => other,
            })?;
            if v > h.maxval {
                return Err(parse_err(pos, format!("sample {v} exceeds maxval")));
            }
            values.push(v as f64 / maxval);
            pos = next;
        }
    } else {
        let bps = if h.maxval > 255 { 2 } else { 1 };
        let need = n * bps;
        let payload = bytes.get(h.payload..).unwrap_or(&[]);
        if payload.len() < need {
            return Err(parse_err(
                h.payload + payload.len(),
                format!("truncated payload: need {need} bytes, found {}", payload.len()),
            ));
        }
        for i in 0..n {
            let raw = if bps == 1 {
                payload[i] as u32
            } else {
                u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as u32
            };
            if raw > h.maxval {
                return Err(parse_err(h.payload + i * bps, format!("sample {raw} exceeds maxval")));
            }
            values.push(raw as f64 / maxval);
        }
    }
    UltrasoundFrame::new(h.dims, values, DEFAULT_MM_PER_PX, 0)
}

/// Encodes a frame as binary P5 with the given maxval (255 or 65535 typical).
pub fn encode_pgm(frame: &UltrasoundFrame, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(Error::domain("pgm maxval must be positive"));
    }
    let header = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval);
    let mut out = header.into_bytes();
    let m = maxval as f64;
    for &v in frame.intensities() {
        let raw = (v * m).round() as u16;
        if maxval > 255 {
            out.extend_from_slice(&raw.to_be_bytes());
        } else {
            out.push(raw as u8);
        }
    }
    Ok(out)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<UltrasoundFrame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_pgm(frame: &UltrasoundFrame, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(frame, maxval)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ascii_example() {
        let f = decode_pgm(b"P2\n2 2\n255\n0 128\n255 64\n").unwrap();
        let expected = [0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0];
        assert_eq!(f.dims(), Dims::new(2, 2));
        for (a, b) in f.intensities().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.intensities()[1] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn comments_in_header() {
        let f = decode_pgm(b"P2\n# made by hand\n2 1 # trailing\n10\n5 10\n").unwrap();
        assert_eq!(f.intensities(), &[0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_magic() {
        match decode_pgm(b"P7\n1 1\n255\n\0") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_truncated_payload() {
        match decode_pgm(b"P5\n4 4\n255\n\x01\x02\x03") {
            Err(Error::Parse { offset, msg, .. }) => {
                assert_eq!(offset, 14);
                assert!(msg.contains("truncated"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(decode_pgm(b"P2\n2 2\n255\n1 2 3").is_err());
    }

    #[test]
    fn rejects_bad_maxval() {
        assert!(decode_pgm(b"P5\n1 1\n70000\n\0\0").is_err());
        assert!(decode_pgm(b"P5\n1 1\n0\n\0").is_err());
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let f = decode_pgm(b"P5\n2 1\n65535\n\xff\xff\x80\x00").unwrap();
        assert_eq!(f.intensities()[0], 1.0);
        assert!((f.intensities()[1] - 32768.0 / 65535.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn save_load_round_trip(
            w in 1usize..12,
            h in 1usize..12,
            seed in any::<u64>(),
            wide in any::<bool>(),
        ) {
            let mut rng = crate::numerics::RandomStream::new(seed);
            let data = (0..w * h).map(|_| rng.next_f64()).collect();
            let frame = UltrasoundFrame::new(Dims::new(w, h), data, 0.35, 0).unwrap();
            let maxval = if wide { 65535 } else { 255 };
            let back = decode_pgm(&encode_pgm(&frame, maxval).unwrap()).unwrap();
            prop_assert_eq!(back.dims(), frame.dims());
            for (a, b) in back.intensities().iter().zip(frame.intensities()) {
                prop_assert!((a - b).abs() <= 1.0 / maxval as f64);
            }
            // quantized values survive a second trip exactly
            let again = decode_pgm(&encode_pgm(&back, maxval).unwrap()).unwrap();
            prop_assert_eq!(again.intensities(), back.intensities());
        }
    }
}
