//! RIFF/WAVE reading and writing, restricted to 16-bit mono PCM.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AudioError, AudioSignal, CANONICAL_SAMPLE_RATE};

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioSignal, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let signal = decode_wav(&bytes)?;
    if signal.sample_rate() != CANONICAL_SAMPLE_RATE {
        log::warn!(
            "{}: sample rate {} Hz differs from the canonical {} Hz",
            path.display(),
            signal.sample_rate(),
            CANONICAL_SAMPLE_RATE
        );
    }
    Ok(signal)
}

pub fn save_wav(signal: &AudioSignal, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_wav(signal))?;
    file.flush()?;
    Ok(())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    sample_rate: u32,
}

fn parse_fmt(chunk: &[u8]) -> Result<Format, AudioError> {
    if chunk.len() < 16 {
        return Err(AudioError::MalformedHeader(format!("fmt chunk is {} bytes, need 16", chunk.len())));
    }
    let mut format = u16_at(chunk, 0);
    let channels = u16_at(chunk, 2);
    let sample_rate = u32_at(chunk, 4);
    let block_align = u16_at(chunk, 12);
    let bits = u16_at(chunk, 14);

    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the subformat GUID
        if chunk.len() < 40 {
            return Err(AudioError::MalformedHeader("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk".into()));
        }
        format = u16_at(chunk, 24);
    }
    if format != FORMAT_PCM {
        return Err(AudioError::UnsupportedEncoding(format!("format code {format:#06x} is not PCM")));
    }
    if channels != 1 {
        return Err(AudioError::UnsupportedEncoding(format!("{channels} channels; only mono is supported")));
    }
    if bits != 16 {
        return Err(AudioError::UnsupportedEncoding(format!("{bits}-bit samples; only 16-bit is supported")));
    }
    if block_align != 2 {
        return Err(AudioError::MalformedHeader(format!("block align {block_align} inconsistent with 16-bit mono")));
    }
    if sample_rate == 0 {
        return Err(AudioError::MalformedHeader("sample rate is zero".into()));
    }
    Ok(Format { sample_rate })
}

/// Parses an in-memory WAV file.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioSignal, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::MalformedHeader("missing RIFF/WAVE signature".into()));
    }
    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                AudioError::MalformedHeader(format!(
                    "chunk `{}` declares {size} bytes past end of file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => format = Some(parse_fmt(body)?),
            b"data" => {
                let fmt = format
                    .ok_or_else(|| AudioError::MalformedHeader("data chunk precedes fmt chunk".into()))?;
                if size % 2 != 0 {
                    return Err(AudioError::MalformedHeader(format!("data chunk of {size} bytes is not whole samples")));
                }
                let samples = body.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
                return AudioSignal::new(samples, fmt.sample_rate);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    Err(AudioError::MalformedHeader(if format.is_none() {
        "no fmt chunk".into()
    } else {
        "no data chunk".into()
    }))
}

/// Serializes as a canonical 44-byte-header PCM WAV.
pub fn encode_wav(signal: &AudioSignal) -> Vec<u8> {
    let data_len = (signal.len() * 2) as u32;
    let rate = signal.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in signal.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
