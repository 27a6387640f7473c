//! Binary trace files.
//!
//! Layout (little endian): 4-byte magic `SPUT`, u16 format version,
//! u16 label count, u32 width, u32 height, then `width * height * len`
//! u16 labels, variable-major. The per-variable length is implied by the
//! file size.

use std::path::Path;

use crate::reference::SampleTrace;
use crate::{Error, Result};

pub const TRACE_MAGIC: &[u8; 4] = b"SPUT";
pub const TRACE_VERSION: u16 = 1;
pub const TRACE_HEADER_LEN: usize = 16;

pub fn encode_trace(trace: &SampleTrace) -> Vec<u8> {
    let mut out = Vec::with_capacity(TRACE_HEADER_LEN + 2 * trace.as_slice().len());
    out.extend_from_slice(TRACE_MAGIC);
    out.extend_from_slice(&TRACE_VERSION.to_le_bytes());
    out.extend_from_slice(&(trace.label_count() as u16).to_le_bytes());
    out.extend_from_slice(&(trace.width() as u32).to_le_bytes());
    out.extend_from_slice(&(trace.height() as u32).to_le_bytes());
    for &l in trace.as_slice() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn decode_trace(bytes: &[u8]) -> Result<SampleTrace> {
    if bytes.len() < TRACE_HEADER_LEN {
        return Err(Error::Trace(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != TRACE_MAGIC {
        return Err(Error::Trace("bad magic".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != TRACE_VERSION {
        return Err(Error::Trace(format!("unsupported version {version}")));
    }
    let labels = u16_at(6) as usize;
    let (width, height) = (u32_at(8) as usize, u32_at(12) as usize);
    let vars = width * height;
    let body = &bytes[TRACE_HEADER_LEN..];
    if vars == 0 || !body.len().is_multiple_of(2 * vars) {
        return Err(Error::Trace(format!(
            "body of {} bytes does not divide into {vars} variables",
            body.len()
        )));
    }
    let len = body.len() / (2 * vars);
    let data = body
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    SampleTrace::from_parts(width, height, labels, len, data)
        .map_err(|e| Error::Trace(e.to_string()))
}

pub fn write_trace(path: impl AsRef<Path>, trace: &SampleTrace) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_trace(trace)).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<SampleTrace> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(w in 1usize..6, h in 1usize..6, len in 0usize..20, seed in any::<u64>()) {
            let labels = 5;
            let mut x = seed;
            let data = (0..w * h * len).map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 33) % labels as u64) as u16
            }).collect();
            let t = SampleTrace::from_parts(w, h, labels, len, data).unwrap();
            let bytes = encode_trace(&t);
            prop_assert_eq!(bytes.len(), TRACE_HEADER_LEN + 2 * w * h * len);
            prop_assert_eq!(decode_trace(&bytes).unwrap(), t);
        }
    }

    #[test]
    fn corrupt_files_rejected() {
        let t = SampleTrace::from_parts(2, 1, 3, 2, vec![0, 1, 2, 0]).unwrap();
        let good = encode_trace(&t);
        assert!(decode_trace(&good[..10]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_trace(&bad).is_err());
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(decode_trace(&bad).is_err());
        assert!(decode_trace(&good[..good.len() - 2]).is_err());
        let mut bad = good;
        bad[6] = 2; // label count 2 makes the stored label 2 invalid
        assert!(decode_trace(&bad).is_err());
    }
}
