//! Loading, validating and normalising speech audio.
//!
//! Only RIFF/WAVE linear PCM is accepted (8, 16, 24 or 32 bit integer
//! samples). Multichannel files are averaged down to mono.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

pub const MIN_SAMPLE_RATE_HZ: u32 = 8000;

/// Mono speech signal with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub source_id: String,
}

impl AudioClip {
    /// Validates the sample rate and that every sample is finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32, source_id: impl Into<String>) -> Result<Self> {
        if sample_rate_hz < MIN_SAMPLE_RATE_HZ {
            return Err(Error::SampleRateTooLow(sample_rate_hz));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
            source_id: source_id.into(),
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn is_silent(&self) -> bool {
        self.samples.iter().all(|&s| s == 0.0)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }
}

/// Reads a linear PCM WAV file into a mono clip scaled to [-1, 1].
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| classify_hound_error(path, e))?;
    let spec = reader.spec();

    if spec.sample_format != SampleFormat::Int {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            message: "floating-point samples (expected integer PCM)".into(),
        });
    }
    if !matches!(spec.bits_per_sample, 8 | 16 | 24 | 32) {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            message: format!("{} bits per sample", spec.bits_per_sample),
        });
    }
    let channels = spec.channels.max(1) as usize;
    let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;

    let raw: Vec<i32> = reader
        .into_samples::<i32>()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| classify_hound_error(path, e))?;
    if raw.len() < channels {
        return Err(Error::EmptyAudio {
            path: path.to_path_buf(),
        });
    }

    let samples = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64 * scale).sum::<f64>() / channels as f64)
        .collect();

    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    AudioClip::new(samples, spec.sample_rate, source_id)
}

fn classify_hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            message: "not linear PCM".into(),
        },
        other => Error::Unreadable {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Writes a mono clip as integer PCM. Samples outside [-1, 1] are clipped.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>, bits_per_sample: u16) -> Result<()> {
    if !matches!(bits_per_sample, 8 | 16 | 24 | 32) {
        return Err(crate::error::invalid(
            "bits_per_sample",
            format!("{bits_per_sample} (expected 8, 16, 24 or 32)"),
        ));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample,
        sample_format: SampleFormat::Int,
    };
    let full = (1i64 << (bits_per_sample - 1)) as f64;
    let max_code = full - 1.0;
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(|e| Error::Unreadable {
        path: path.as_ref().to_path_buf(),
        message: e.to_string(),
    })?;
    for &s in &clip.samples {
        let code = (s.clamp(-1.0, 1.0) * full).round().clamp(-full, max_code) as i32;
        writer.write_sample(code).map_err(|e| Error::Unreadable {
            path: path.as_ref().to_path_buf(),
            message: e.to_string(),
        })?;
    }
    writer.finalize().map_err(|e| Error::Unreadable {
        path: path.as_ref().to_path_buf(),
        message: e.to_string(),
    })
}

/// Scales the clip so its largest absolute sample is 1. Silent clips are
/// returned unchanged.
pub fn peak_normalize(clip: &AudioClip) -> AudioClip {
    let peak = clip.peak();
    if peak == 0.0 {
        tracing::warn!(source = %clip.source_id, silent = true, "peak normalisation skipped: silent clip");
        return clip.clone();
    }
    AudioClip {
        samples: clip.samples.iter().map(|s| s / peak).collect(),
        sample_rate_hz: clip.sample_rate_hz,
        source_id: clip.source_id.clone(),
    }
}

/// Keeps clips strictly longer than `min_duration_s`, preserving order.
pub fn filter_by_duration(clips: Vec<AudioClip>, min_duration_s: f64) -> Vec<AudioClip> {
    clips
        .into_iter()
        .filter(|c| c.duration_s() > min_duration_s)
        .collect()
}
