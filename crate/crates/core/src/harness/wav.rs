//! RIFF/WAVE reading and writing: 16-bit PCM and 32-bit IEEE float.

use std::path::Path;

use crate::error::{Error, Result};
use crate::transforms::Signal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedWav {
    pub signal: Signal,
    pub channels: u16,
    pub format: SampleFormat,
    /// Non-fatal issues, e.g. dropped channels.
    pub warnings: Vec<String>,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Fmt {
    format: SampleFormat,
    channels: u16,
    sample_rate: u32,
}

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::WavParse {
        offset: offset as u64,
        message: message.into(),
    }
}

fn read_u16(b: &[u8], at: usize) -> Result<u16> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| parse_error(at, "unexpected end of file"))
}

fn read_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| parse_error(at, "unexpected end of file"))
}

fn parse_fmt(b: &[u8], start: usize, size: usize) -> Result<Fmt> {
    if size < 16 {
        return Err(parse_error(
            start,
            format!("fmt chunk of {size} bytes is too short"),
        ));
    }
    let mut tag = read_u16(b, start)?;
    let channels = read_u16(b, start + 2)?;
    let sample_rate = read_u32(b, start + 4)?;
    let bits = read_u16(b, start + 14)?;
    if tag == FORMAT_EXTENSIBLE {
        if size < 40 {
            return Err(parse_error(start, "extensible fmt chunk is too short"));
        }
        tag = read_u16(b, start + 24)?;
    }
    let format = match (tag, bits) {
        (FORMAT_PCM, 16) => SampleFormat::Pcm16,
        (FORMAT_FLOAT, 32) => SampleFormat::Float32,
        _ => {
            return Err(Error::WavUnsupported(format!(
                "format tag {tag} with {bits} bits per sample (need 16-bit PCM or 32-bit float)"
            )))
        }
    };
    if channels == 0 {
        return Err(parse_error(start + 2, "zero channels"));
    }
    if sample_rate == 0 {
        return Err(parse_error(start + 4, "zero sample rate"));
    }
    Ok(Fmt {
        format,
        channels,
        sample_rate,
    })
}

/// Decodes a WAVE file held in memory. Multichannel files keep only their
/// first channel.
pub fn parse_wav(bytes: &[u8]) -> Result<LoadedWav> {
    if bytes.len() < 12 {
        return Err(parse_error(
            bytes.len(),
            "file shorter than the RIFF header",
        ));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(parse_error(0, "missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(parse_error(8, "missing WAVE tag"));
    }
    let mut fmt: Option<Fmt> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)? as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if body + size > bytes.len() {
                    return Err(parse_error(body, "fmt chunk runs past end of file"));
                }
                fmt = Some(parse_fmt(bytes, body, size)?);
            }
            b"data" => {
                let f = fmt.ok_or_else(|| parse_error(pos, "data chunk before fmt chunk"))?;
                let available = bytes.len() - body;
                if size > available {
                    return Err(parse_error(
                        bytes.len(),
                        format!("data chunk declares {size} bytes but only {available} remain"),
                    ));
                }
                return decode(&bytes[body..body + size], body, f);
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(parse_error(pos.min(bytes.len()), "no data chunk"))
}

fn decode(data: &[u8], offset: usize, f: Fmt) -> Result<LoadedWav> {
    let width = match f.format {
        SampleFormat::Pcm16 => 2,
        SampleFormat::Float32 => 4,
    };
    let frame = width * f.channels as usize;
    if !data.len().is_multiple_of(frame) {
        return Err(parse_error(
            offset + data.len() - data.len() % frame,
            format!(
                "data length {} is not a whole number of {frame}-byte frames",
                data.len()
            ),
        ));
    }
    let samples: Vec<f64> = data
        .chunks_exact(frame)
        .map(|fr| match f.format {
            SampleFormat::Pcm16 => i16::from_le_bytes([fr[0], fr[1]]) as f64 / 32768.0,
            SampleFormat::Float32 => f32::from_le_bytes([fr[0], fr[1], fr[2], fr[3]]) as f64,
        })
        .collect();
    if samples.is_empty() {
        return Err(parse_error(offset, "data chunk holds no samples"));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(parse_error(offset + i * frame, "non-finite sample"));
    }
    let mut warnings = Vec::new();
    if f.channels > 1 {
        warnings.push(format!(
            "{} channels present, only the first is used",
            f.channels
        ));
    }
    Ok(LoadedWav {
        signal: Signal::new(samples, f.sample_rate)?,
        channels: f.channels,
        format: f.format,
        warnings,
    })
}

/// Reads a WAVE file, optionally keeping only its first `crop_seconds`.
pub fn load_wav(path: &Path, crop_seconds: Option<f64>) -> Result<LoadedWav> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut wav = parse_wav(&bytes).map_err(|e| match e {
        Error::WavParse { offset, message } => Error::WavParse {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        Error::WavUnsupported(m) => Error::WavUnsupported(format!("{}: {m}", path.display())),
        other => other,
    })?;
    for w in &wav.warnings {
        log::warn!("{}: {w}", path.display());
    }
    if let Some(secs) = crop_seconds {
        let keep = (secs * wav.signal.sample_rate as f64).round() as usize;
        if keep > 0 && keep < wav.signal.len() {
            wav.signal.samples.truncate(keep);
        }
    }
    Ok(wav)
}

/// Encodes a mono signal. PCM output is clipped to `[-1, 1)`.
pub fn encode_wav(signal: &Signal, format: SampleFormat) -> Vec<u8> {
    let (tag, width) = match format {
        SampleFormat::Pcm16 => (FORMAT_PCM, 2u16),
        SampleFormat::Float32 => (FORMAT_FLOAT, 4u16),
    };
    let data_len = signal.len() * width as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate * width as u32).to_le_bytes());
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&(8 * width).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &v in &signal.samples {
        match format {
            SampleFormat::Pcm16 => {
                let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            SampleFormat::Float32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
        }
    }
    if data_len % 2 == 1 {
        out.push(0);
    }
    out
}

pub fn write_wav(path: &Path, signal: &Signal, format: SampleFormat) -> Result<()> {
    std::fs::write(path, encode_wav(signal, format)).map_err(|e| Error::io(path, e))
}
