//! PPTF feature-matrix file format.
//!
//! Layout, all little-endian: magic `PPTF`, u32 version (= 1), u32 T,
//! u32 D, f32 frame_rate, u8 kind, then T*D f32 payload, row-major.
//! The same container carries internally computed features and external
//! SSL layer dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DspError, FeatureKind, FeatureMatrix};

const MAGIC: &[u8; 4] = b"PPTF";
const VERSION: u32 = 1;

pub(super) fn write_pptf(m: &FeatureMatrix, path: &Path) -> Result<(), DspError> {
    let mut out = Vec::with_capacity(17 + m.as_flat().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.num_frames() as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(m.frame_rate as f32).to_le_bytes());
    out.push(m.kind.as_u8());
    for &v in m.as_flat() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

pub(super) fn read_pptf(path: &Path) -> Result<FeatureMatrix, DspError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 17 {
        return Err(DspError::MalformedFeatureFile("file too short".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(DspError::MalformedFeatureFile("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(DspError::VersionMismatch(version));
    }
    let t = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let frame_rate = f32::from_le_bytes(bytes[16..20].try_into().unwrap()) as f64;
    let kind = FeatureKind::from_u8(bytes[20])
        .ok_or_else(|| DspError::MalformedFeatureFile(format!("bad kind {}", bytes[20])))?;
    if d == 0 {
        return Err(DspError::MalformedFeatureFile("zero dimension".into()));
    }

    let payload = &bytes[21..];
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| DspError::MalformedFeatureFile("size overflow".into()))?;
    if payload.len() != expected {
        return Err(DspError::MalformedFeatureFile(format!(
            "payload {} bytes, expected {}",
            payload.len(),
            expected
        )));
    }

    let mut data = Vec::with_capacity(t * d);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(DspError::MalformedFeatureFile(
                "non-finite feature entry".into(),
            ));
        }
        data.push(v);
    }
    Ok(FeatureMatrix::from_flat(data, d, frame_rate, kind, 0))
}
