//! Mono PCM16 WAV reading and writing.
//!
//! Only the layout the loss pipeline consumes is accepted: RIFF/WAVE,
//! format tag 1 (PCM), one channel, 16-bit signed little-endian samples at
//! 16 kHz. Chunks other than `fmt ` and `data` are skipped.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Sample rate every pipeline entry point expects.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;

const PCM16_SCALE: f64 = 32768.0;

/// A mono waveform with amplitudes nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidClip("no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidClip(format!("sample {i} is not finite")));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidClip("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedWav(msg.into())
}

/// Decode an in-memory WAV file.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let riff_size = read_u32(bytes, 4) as usize;
    if riff_size != bytes.len() - 8 {
        return Err(malformed(format!(
            "RIFF size {} disagrees with file length {}",
            riff_size,
            bytes.len()
        )));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos < bytes.len() {
        if bytes.len() - pos < 8 {
            return Err(malformed("truncated chunk header"));
        }
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| {
                malformed(format!(
                    "chunk {:?} declares {} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    size,
                    bytes.len() - body_start
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                fmt = Some(FmtChunk {
                    format_tag: read_u16(body, 0),
                    channels: read_u16(body, 2),
                    sample_rate: read_u32(body, 4),
                    bits_per_sample: read_u16(body, 14),
                });
            }
            b"data" => {
                if data.is_some() {
                    return Err(malformed("multiple data chunks"));
                }
                data = Some(body);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }
    if pos != bytes.len() {
        return Err(malformed("chunk padding runs past end of file"));
    }

    let fmt = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;

    if fmt.format_tag != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "format tag {} (only PCM = 1)",
            fmt.format_tag
        )));
    }
    if fmt.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels (only mono)",
            fmt.channels
        )));
    }
    if fmt.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "{} bits per sample (only 16)",
            fmt.bits_per_sample
        )));
    }
    if fmt.sample_rate != PIPELINE_SAMPLE_RATE {
        return Err(Error::SampleRateMismatch {
            expected: PIPELINE_SAMPLE_RATE,
            found: fmt.sample_rate,
        });
    }
    if data.len() % 2 != 0 {
        return Err(malformed("data chunk holds a partial sample"));
    }
    if data.is_empty() {
        return Err(malformed("data chunk is empty"));
    }

    let samples = data
        .chunks_exact(2)
        .map(|b| f64::from(i16::from_le_bytes([b[0], b[1]])) / PCM16_SCALE)
        .collect();
    AudioClip::new(samples, fmt.sample_rate)
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

fn quantize(sample: f64) -> i16 {
    (sample * PCM16_SCALE)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Encode a clip as a canonical 44-byte-header PCM16 mono WAV.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        out.extend_from_slice(&quantize(s).to_le_bytes());
    }
    out
}

/// Write a clip as PCM16 mono. Samples are clamped to [-1, 32767/32768].
pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_wav(clip))?;
    Ok(())
}

/// A one-second 440 Hz sinusoid (reference) and the same tone with
/// seeded uniform white noise added (estimate), as `(estimate, reference)`.
pub fn synthetic_pair(seed: u64) -> (AudioClip, AudioClip) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rate = PIPELINE_SAMPLE_RATE;
    let reference: Vec<f64> = (0..rate)
        .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 440.0 * f64::from(i) / f64::from(rate)).sin())
        .collect();
    let estimate = reference
        .iter()
        .map(|s| s + rng.random_range(-0.05..0.05))
        .collect();
    (
        AudioClip::new(estimate, rate).expect("finite samples"),
        AudioClip::new(reference, rate).expect("finite samples"),
    )
}
