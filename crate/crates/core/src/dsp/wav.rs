//! Minimal RIFF/WAVE reader and writer. Reads PCM (8/16/24/32-bit int)
//! and 32-bit float, mono or stereo; stereo is averaged down to mono.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{DspError, Waveform};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Load a WAV file as a mono waveform with samples in `[-1, 1]`.
///
/// Multi-channel input is reduced by averaging channels; the original
/// sample rate is preserved.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform, DspError> {
    let bytes = fs::read(path.as_ref())?;
    parse_wav(&bytes)
}

fn parse_wav(bytes: &[u8]) -> Result<Waveform, DspError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(DspError::MalformedWav("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .ok_or_else(|| DspError::MalformedWav("chunk size overflow".into()))?;
        if body_end > bytes.len() {
            return Err(DspError::MalformedWav(format!(
                "truncated chunk {:?}",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(FmtChunk::parse(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| DspError::MalformedWav("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| DspError::MalformedWav("no data chunk".into()))?;

    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(DspError::UnsupportedEncoding(format!(
            "{} channels (expected 1 or 2)",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(DspError::MalformedWav("zero sample rate".into()));
    }

    let bytes_per_sample = match (fmt.format_tag, fmt.bits_per_sample) {
        (FORMAT_PCM, 8) => 1,
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 24) => 3,
        (FORMAT_PCM, 32) => 4,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (tag, bits) => {
            return Err(DspError::UnsupportedEncoding(format!(
                "format tag {tag:#06x} at {bits} bits"
            )))
        }
    };

    let channels = fmt.channels as usize;
    let frame_bytes = bytes_per_sample * channels;
    if data.len() % frame_bytes != 0 {
        return Err(DspError::MalformedWav(
            "data chunk not a whole number of frames".into(),
        ));
    }
    let num_frames = data.len() / frame_bytes;
    if num_frames == 0 {
        return Err(DspError::MalformedWav("empty data chunk".into()));
    }

    let mut samples = Vec::with_capacity(num_frames);
    for frame in 0..num_frames {
        let mut acc = 0.0f64;
        for ch in 0..channels {
            let off = frame * frame_bytes + ch * bytes_per_sample;
            let raw = &data[off..off + bytes_per_sample];
            acc += decode_sample(fmt.format_tag, fmt.bits_per_sample, raw);
        }
        samples.push((acc / channels as f64).clamp(-1.0, 1.0));
    }

    Ok(Waveform::new(samples, fmt.sample_rate))
}

fn decode_sample(format_tag: u16, bits: u16, raw: &[u8]) -> f64 {
    match (format_tag, bits) {
        // 8-bit PCM is unsigned with midpoint 128.
        (FORMAT_PCM, 8) => (raw[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => i16::from_le_bytes([raw[0], raw[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => {
            let v = i32::from_le_bytes([0, raw[0], raw[1], raw[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (FORMAT_PCM, 32) => {
            i32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64 / 2_147_483_648.0
        }
        (FORMAT_IEEE_FLOAT, 32) => f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64,
        _ => unreachable!("format validated before decoding"),
    }
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

impl FmtChunk {
    fn parse(body: &[u8]) -> Result<Self, DspError> {
        if body.len() < 16 {
            return Err(DspError::MalformedWav("fmt chunk too short".into()));
        }
        let mut format_tag = u16::from_le_bytes([body[0], body[1]]);
        let channels = u16::from_le_bytes([body[2], body[3]]);
        let sample_rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
        let bits_per_sample = u16::from_le_bytes([body[14], body[15]]);
        if format_tag == FORMAT_EXTENSIBLE {
            // The effective format is the first two bytes of the SubFormat GUID.
            if body.len() < 26 {
                return Err(DspError::MalformedWav(
                    "extensible fmt chunk too short".into(),
                ));
            }
            format_tag = u16::from_le_bytes([body[24], body[25]]);
        }
        Ok(Self {
            format_tag,
            channels,
            sample_rate,
            bits_per_sample,
        })
    }
}

/// Write a mono 16-bit PCM WAV file. Samples are clamped to `[-1, 1]`.
pub fn write_wav_i16(
    path: impl AsRef<Path>,
    samples: &[f64],
    sample_rate: u32,
) -> Result<(), DspError> {
    let data: Vec<u8> = samples
        .iter()
        .flat_map(|&s| {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            v.to_le_bytes()
        })
        .collect();
    write_riff(path, sample_rate, FORMAT_PCM, 16, &data)
}

/// Write a mono 32-bit float WAV file.
pub fn write_wav_f32(
    path: impl AsRef<Path>,
    samples: &[f64],
    sample_rate: u32,
) -> Result<(), DspError> {
    let data: Vec<u8> = samples
        .iter()
        .flat_map(|&s| (s as f32).to_le_bytes())
        .collect();
    write_riff(path, sample_rate, FORMAT_IEEE_FLOAT, 32, &data)
}

fn write_riff(
    path: impl AsRef<Path>,
    sample_rate: u32,
    format_tag: u16,
    bits: u16,
    data: &[u8],
) -> Result<(), DspError> {
    let bytes_per_sample = (bits / 8) as u32;
    let mut out = Vec::with_capacity(44 + data.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format_tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * bytes_per_sample).to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);

    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes_16(samples: &[i16], channels: u16, rate: u32) -> Vec<u8> {
        let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&data);
        out
    }

    #[test]
    fn sixteen_bit_scaling() {
        let w = parse_wav(&wav_bytes_16(&[16384], 1, 16000)).unwrap();
        assert_eq!(w.sample_rate, 16000);
        assert!((w.samples[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn stereo_averages_to_mono() {
        // 0.2 and 0.4 in 16-bit PCM.
        let l = (0.2f64 * 32768.0) as i16;
        let r = (0.4f64 * 32768.0) as i16;
        let w = parse_wav(&wav_bytes_16(&[l, r], 2, 16000)).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w.samples[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn one_second_sample_count() {
        let samples = vec![0i16; 16000];
        let w = parse_wav(&wav_bytes_16(&samples, 1, 16000)).unwrap();
        assert_eq!(w.len(), 16000);
        assert_eq!(w.sample_rate, 16000);
        assert!((w.duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_data_rejected() {
        let mut bytes = wav_bytes_16(&[0, 0, 0, 0], 1, 16000);
        bytes.truncate(bytes.len() - 3);
        match parse_wav(&bytes) {
            Err(DspError::MalformedWav(_)) => {}
            other => panic!("expected MalformedWav, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = wav_bytes_16(&[0, 0], 1, 16000);
        bytes[0] = b'X';
        assert!(matches!(parse_wav(&bytes), Err(DspError::MalformedWav(_))));
    }

    #[test]
    fn unsupported_bit_depth_rejected() {
        let mut bytes = wav_bytes_16(&[0, 0], 1, 16000);
        // Patch bits_per_sample to 12.
        let off = 12 + 8 + 14;
        bytes[off..off + 2].copy_from_slice(&12u16.to_le_bytes());
        assert!(matches!(
            parse_wav(&bytes),
            Err(DspError::UnsupportedEncoding(_))
        ));
    }

    #[test]
    fn float_roundtrip_via_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let samples: Vec<f64> = (0..100).map(|i| (i as f64 / 100.0) - 0.5).collect();
        write_wav_f32(&path, &samples, 22050).unwrap();
        let w = load_wav(&path).unwrap();
        assert_eq!(w.sample_rate, 22050);
        assert_eq!(w.len(), 100);
        for (a, b) in w.samples.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn i16_writer_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t16.wav");
        let samples = vec![0.0, 0.25, -0.25, 1.0, -1.0];
        write_wav_i16(&path, &samples, 16000).unwrap();
        let w = load_wav(&path).unwrap();
        for (a, b) in w.samples.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn eight_bit_unsigned_midpoint() {
        // Hand-build an 8-bit mono file: values 128 (zero) and 255 (near +1).
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36u32 + 2).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&8000u32.to_le_bytes());
        out.extend_from_slice(&8000u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&8u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&2u32.to_le_bytes());
        out.extend_from_slice(&[128u8, 255u8]);
        let w = parse_wav(&out).unwrap();
        assert!(w.samples[0].abs() < 1e-9);
        assert!((w.samples[1] - 127.0 / 128.0).abs() < 1e-9);
    }
}
