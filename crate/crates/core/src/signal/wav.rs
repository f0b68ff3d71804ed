use std::io::Write;
use std::path::Path;

use super::{AudioClip, SignalError, MAX_SAMPLE_RATE, MIN_SAMPLE_RATE};
use crate::scalar::Scalar;

const PCM: u16 = 1;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads a mono 16-bit PCM RIFF/WAVE file.
pub fn load_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioClip<T>, SignalError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    parse_wav(&bytes, path.to_string_lossy())
}

pub fn parse_wav<T: Scalar>(bytes: &[u8], source_id: impl Into<String>) -> Result<AudioClip<T>, SignalError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(SignalError::CorruptHeader("missing RIFF/WAVE signature".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| SignalError::CorruptHeader(format!("chunk {:?} overruns file", String::from_utf8_lossy(id))))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(SignalError::CorruptHeader("fmt chunk shorter than 16 bytes".into()));
                }
                fmt = Some((u16_at(body, 0), u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => {
                data = Some(body);
                break;
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| SignalError::CorruptHeader("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| SignalError::CorruptHeader("no data chunk".into()))?;
    if format != PCM {
        return Err(SignalError::UnsupportedFormat(format!("audio format tag {format}, expected PCM")));
    }
    if channels != 1 {
        return Err(SignalError::UnsupportedFormat(format!("{channels} channels, expected mono")));
    }
    if bits != 16 {
        return Err(SignalError::UnsupportedFormat(format!("{bits}-bit samples, expected 16")));
    }
    if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&rate) {
        return Err(SignalError::UnsupportedRate(rate));
    }
    if data.len() < 2 {
        return Err(SignalError::EmptyAudio);
    }
    let scale = T::of(32768.0);
    let samples = data
        .chunks_exact(2)
        .map(|c| T::from_i16(i16::from_le_bytes([c[0], c[1]])).unwrap() / scale)
        .collect();
    AudioClip::new(samples, rate, source_id)
}

/// Quantizes to 16-bit PCM. Values are rounded and clamped to the i16 range.
pub fn encode_wav_pcm16<T: Scalar>(clip: &AudioClip<T>) -> Vec<u8> {
    let n = clip.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in clip.samples() {
        let q = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav_pcm16<T: Scalar>(clip: &AudioClip<T>, path: impl AsRef<Path>) -> Result<(), SignalError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_wav_pcm16(clip))?;
    Ok(())
}
