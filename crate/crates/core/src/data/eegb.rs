//! EEGB: a minimal little-endian container for one channels x samples trial.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EEGB"
//! 4       2     version (u16, currently 1)
//! 6       4     n_channels (u32)
//! 10      4     n_samples (u32)
//! 14      8     sample_rate (f64)
//! 22      ...   n_channels * n_samples f64, row-major
//! ```

use std::fs;
use std::path::Path;

use crate::dsp::Signal;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EEGB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 22;

pub fn encode_trial(sig: &Signal) -> Result<Vec<u8>> {
    let (c, n) = (sig.n_channels(), sig.n_samples());
    if c == 0 || n == 0 {
        return Err(Error::Input(format!("refusing to write an empty {c}x{n} trial")));
    }
    let too_big = |v: usize| u32::try_from(v).map_err(|_| Error::Input(format!("dimension {v} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * c * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&too_big(c)?.to_le_bytes());
    out.extend_from_slice(&too_big(n)?.to_le_bytes());
    out.extend_from_slice(&sig.sample_rate().to_le_bytes());
    for row in sig.rows() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_trial(bytes: &[u8], path: &Path) -> Result<Signal> {
    let fail = |offset: usize, msg: String| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        msg,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fail(bytes.len(), format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, "bad magic, expected \"EEGB\"".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(fail(4, format!("unsupported version {version}")));
    }
    let c = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let fs = f64::from_le_bytes(bytes[14..22].try_into().unwrap());
    if c == 0 || n == 0 {
        return Err(fail(6, format!("empty dimensions {c}x{n}")));
    }
    let expected = HEADER_LEN + 8 * c * n;
    if bytes.len() != expected {
        return Err(fail(
            bytes.len().min(expected),
            format!("expected {expected} bytes for {c}x{n} samples, found {}", bytes.len()),
        ));
    }
    let mut rows = Vec::with_capacity(c);
    for r in 0..c {
        let base = HEADER_LEN + 8 * r * n;
        rows.push(
            bytes[base..base + 8 * n]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    Signal::new(rows, fs).map_err(|e| fail(14, e.to_string()))
}

pub fn write_trial(path: &Path, sig: &Signal) -> Result<()> {
    let bytes = encode_trial(sig)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_trial(path: &Path) -> Result<Signal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trial(&bytes, path)
}
