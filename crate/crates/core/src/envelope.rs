//! Amplitude- and frequency-modulation envelopes.
//!
//! The AM envelope is the magnitude of the analytic signal, block-averaged
//! down to the envelope rate and smoothed with a short centered moving
//! average. The FM envelope is an F0 contour from a normalised
//! cross-correlation tracker, centred on its median with unvoiced frames
//! pinned to zero, then interpolated onto the same envelope grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::dsp;
use crate::error::{invalid, Error, Result};

pub const MIN_ENV_RATE_HZ: f64 = 20.0;

/// Voiced candidates within this fraction of the best correlation are
/// considered equivalent; the shortest lag among them wins.
const SUBHARMONIC_TOLERANCE: f64 = 0.95;
const MEDIAN_FILTER_FRAMES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvelopeKind {
    #[serde(rename = "AM")]
    Am,
    #[serde(rename = "FM")]
    Fm,
}

impl EnvelopeKind {
    pub const BOTH: [EnvelopeKind; 2] = [EnvelopeKind::Am, EnvelopeKind::Fm];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeKind::Am => "AM",
            EnvelopeKind::Fm => "FM",
        }
    }
}

impl fmt::Display for EnvelopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Uniformly sampled modulation envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub values: Vec<f64>,
    pub rate_hz: f64,
    pub source_id: String,
}

impl Envelope {
    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }

    /// Sample times in seconds.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |j| j as f64 / self.rate_hz)
    }
}

fn check_env_rate(env_rate_hz: f64) -> Result<()> {
    if !(env_rate_hz >= MIN_ENV_RATE_HZ) || !env_rate_hz.is_finite() {
        return Err(invalid(
            "env_rate_hz",
            format!("{env_rate_hz} (must be at least {MIN_ENV_RATE_HZ} Hz)"),
        ));
    }
    Ok(())
}

/// AM envelope: |analytic(x)| averaged over blocks of one envelope period
/// centred on each output instant, then smoothed by a centered moving
/// average of `smooth_ms` (rounded to an odd number of envelope samples).
pub fn am_envelope(clip: &AudioClip, env_rate_hz: f64, smooth_ms: f64) -> Result<Envelope> {
    check_env_rate(env_rate_hz)?;
    if env_rate_hz >= clip.sample_rate_hz as f64 {
        return Err(invalid(
            "env_rate_hz",
            format!("{env_rate_hz} must be below the audio rate {}", clip.sample_rate_hz),
        ));
    }
    if !(smooth_ms >= 0.0) {
        return Err(invalid("smooth_ms", format!("{smooth_ms} (must be >= 0)")));
    }
    if clip.duration_s() < 1.0 {
        return Err(Error::TooShort {
            what: "AM envelope",
            needed_s: 1.0,
            actual_s: clip.duration_s(),
        });
    }

    let magnitude: Vec<f64> = dsp::analytic_signal(&clip.samples)
        .iter()
        .map(|c| c.norm())
        .collect();

    let sr = clip.sample_rate_hz as f64;
    let n = magnitude.len();
    let n_out = (clip.duration_s() * env_rate_hz).round() as usize;
    let half_block = 0.5 / env_rate_hz;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &m in &magnitude {
        prefix.push(prefix.last().unwrap() + m);
    }
    let decimated: Vec<f64> = (0..n_out)
        .map(|j| {
            let t = j as f64 / env_rate_hz;
            let lo = (((t - half_block) * sr).round().max(0.0) as usize).min(n - 1);
            let hi = (((t + half_block) * sr).round() as usize).clamp(lo + 1, n);
            ((prefix[hi] - prefix[lo]) / (hi - lo) as f64).max(0.0)
        })
        .collect();

    let half = (smooth_ms / 1000.0 * env_rate_hz / 2.0 + 1e-9).floor() as usize;
    let values = dsp::centered_moving_average(&decimated, 2 * half + 1);

    Ok(Envelope {
        kind: EnvelopeKind::Am,
        values,
        rate_hz: env_rate_hz,
        source_id: clip.source_id.clone(),
    })
}

/// Pitch-tracker settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F0Params {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub frame_len_s: f64,
    pub hop_s: f64,
    pub voicing_threshold: f64,
}

impl Default for F0Params {
    fn default() -> Self {
        Self {
            f0_min_hz: 60.0,
            f0_max_hz: 400.0,
            frame_len_s: 0.040,
            hop_s: 0.010,
            voicing_threshold: 0.30,
        }
    }
}

impl F0Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0_min_hz > 0.0) || !(self.f0_min_hz < self.f0_max_hz) {
            return Err(invalid(
                "f0 bounds",
                format!("need 0 < min < max, got {}..{}", self.f0_min_hz, self.f0_max_hz),
            ));
        }
        if !(self.hop_s > 0.0) {
            return Err(invalid("hop_s", format!("{} (must be > 0)", self.hop_s)));
        }
        if !(self.frame_len_s >= 2.0 / self.f0_min_hz - 1e-12) {
            return Err(invalid(
                "frame_len_s",
                format!(
                    "{} is shorter than two periods of f0_min ({} s)",
                    self.frame_len_s,
                    2.0 / self.f0_min_hz
                ),
            ));
        }
        Ok(())
    }
}

/// Frame-wise F0 estimates; `0.0` marks an unvoiced frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Track {
    pub f0_hz: Vec<f64>,
    pub hop_s: f64,
    pub frame_len_s: f64,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Duration of the analysed clip.
    pub duration_s: f64,
    pub source_id: String,
}

impl F0Track {
    /// Centre time of frame `i`.
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 * self.hop_s + 0.5 * self.frame_len_s
    }

    pub fn voiced(&self) -> impl Iterator<Item = f64> + '_ {
        self.f0_hz.iter().copied().filter(|&f| f > 0.0)
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_hz.is_empty() {
            0.0
        } else {
            self.voiced().count() as f64 / self.f0_hz.len() as f64
        }
    }
}

/// Normalised cross-correlation pitch tracker.
///
/// For every frame the NCCF is evaluated over lags covering
/// `[f0_min, f0_max]`. A frame is voiced when its best correlation reaches
/// `voicing_threshold`; among lag peaks within 5% of the best, the shortest
/// lag is taken, refined by parabolic interpolation. Voiced values are then
/// median-filtered over 5 frames (unvoiced neighbours are ignored).
pub fn track_f0(clip: &AudioClip, params: &F0Params) -> Result<F0Track> {
    params.validate()?;
    let sr = clip.sample_rate_hz as f64;
    let frame_len = (params.frame_len_s * sr).round() as usize;
    let hop = ((params.hop_s * sr).round() as usize).max(1);
    if clip.samples.len() < frame_len || frame_len == 0 {
        return Err(Error::TooShort {
            what: "F0 tracking",
            needed_s: params.frame_len_s,
            actual_s: clip.duration_s(),
        });
    }
    let lag_min = ((sr / params.f0_max_hz).floor() as usize).max(2);
    let lag_max = (sr / params.f0_min_hz).ceil() as usize;

    // Zero-pad so the comparison window of the final frames stays in range.
    let mut s = clip.samples.clone();
    s.resize(clip.samples.len() + lag_max + 2, 0.0);
    let mut energy_prefix = Vec::with_capacity(s.len() + 1);
    energy_prefix.push(0.0);
    for &v in &s {
        energy_prefix.push(energy_prefix.last().unwrap() + v * v);
    }
    let energy = |start: usize| (energy_prefix[start + frame_len] - energy_prefix[start]).max(0.0);

    let n_frames = (clip.samples.len() - frame_len) / hop + 1;
    let mut nccf = vec![0.0; lag_max + 2];
    let mut raw = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let m = i * hop;
        let frame = &s[m..m + frame_len];
        let e0 = energy(m);
        for (k, slot) in nccf.iter_mut().enumerate().take(lag_max + 2).skip(lag_min - 1) {
            let denom = (e0 * energy(m + k)).sqrt();
            *slot = if denom > 1e-20 {
                let cross: f64 = frame.iter().zip(&s[m + k..m + k + frame_len]).map(|(a, b)| a * b).sum();
                cross / denom
            } else {
                0.0
            };
        }
        raw.push(pick_period(&nccf, lag_min, lag_max, params.voicing_threshold).map_or(0.0, |lag| {
            (sr / lag).clamp(params.f0_min_hz, params.f0_max_hz)
        }));
    }

    Ok(F0Track {
        f0_hz: median_filter_voiced(&raw, MEDIAN_FILTER_FRAMES),
        hop_s: hop as f64 / sr,
        frame_len_s: frame_len as f64 / sr,
        f0_min_hz: params.f0_min_hz,
        f0_max_hz: params.f0_max_hz,
        duration_s: clip.duration_s(),
        source_id: clip.source_id.clone(),
    })
}

/// Fractional period (in samples) of a voiced frame, or `None` if unvoiced.
fn pick_period(nccf: &[f64], lag_min: usize, lag_max: usize, threshold: f64) -> Option<f64> {
    let best = nccf[lag_min..=lag_max]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(best >= threshold) {
        return None;
    }
    let is_peak = |k: usize| nccf[k] >= nccf[k - 1] && nccf[k] >= nccf[k + 1];
    let lag = (lag_min..=lag_max)
        .find(|&k| nccf[k] >= SUBHARMONIC_TOLERANCE * best && is_peak(k))
        .or_else(|| (lag_min..=lag_max).find(|&k| nccf[k] == best))?;

    let (a, b, c) = (nccf[lag - 1], nccf[lag], nccf[lag + 1]);
    let curvature = a - 2.0 * b + c;
    let delta = if curvature < 0.0 {
        (0.5 * (a - c) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Some(lag as f64 + delta)
}

fn median_filter_voiced(raw: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..raw.len())
        .map(|i| {
            if raw[i] <= 0.0 {
                return 0.0;
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(raw.len());
            let voiced: Vec<f64> = raw[lo..hi].iter().copied().filter(|&f| f > 0.0).collect();
            dsp::median(&voiced).unwrap_or(raw[i])
        })
        .collect()
}

/// FM envelope: F0 minus the median voiced F0 on voiced frames, 0 on
/// unvoiced frames, linearly interpolated from frame centres onto the
/// envelope grid.
pub fn fm_envelope(track: &F0Track, env_rate_hz: f64) -> Result<Envelope> {
    check_env_rate(env_rate_hz)?;
    let voiced: Vec<f64> = track.voiced().collect();
    let median = dsp::median(&voiced).ok_or(Error::FullyUnvoiced)?;

    let centred: Vec<f64> = track
        .f0_hz
        .iter()
        .map(|&f| if f > 0.0 { f - median } else { 0.0 })
        .collect();
    let times: Vec<f64> = (0..centred.len()).map(|i| track.frame_time(i)).collect();

    let n_out = (track.duration_s * env_rate_hz).round() as usize;
    let values = (0..n_out)
        .map(|j| dsp::interp_linear(&times, &centred, j as f64 / env_rate_hz))
        .collect();
    Ok(Envelope {
        kind: EnvelopeKind::Fm,
        values,
        rate_hz: env_rate_hz,
        source_id: track.source_id.clone(),
    })
}

/// Median voiced F0 of a track, if any frame is voiced.
pub fn median_f0(track: &F0Track) -> Option<f64> {
    dsp::median(&track.voiced().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const SR: u32 = 16_000;

    fn clip_from(f: impl Fn(f64) -> f64, secs: f64) -> AudioClip {
        let n = (secs * SR as f64).round() as usize;
        AudioClip::new((0..n).map(|i| f(i as f64 / SR as f64)).collect(), SR, "t").unwrap()
    }

    fn interior(env: &Envelope, margin_s: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let dur = env.duration_s();
        env.times()
            .zip(env.values.iter().copied())
            .filter(move |(t, _)| *t >= margin_s && *t <= dur - margin_s)
    }

    #[test]
    fn am_tone_envelope_matches_closed_form() {
        let clip = clip_from(|t| (1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos()) * (2.0 * PI * 200.0 * t).sin(), 10.0);
        let env = am_envelope(&clip, 100.0, 50.0).unwrap();
        assert_eq!(env.values.len(), 1000);
        for (t, v) in interior(&env, 0.5) {
            let expected = 1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos();
            assert!((v - expected).abs() < 0.05, "t={t} v={v} expected={expected}");
        }
    }

    #[test]
    fn pure_tone_envelope_is_flat() {
        let clip = clip_from(|t| (2.0 * PI * 200.0 * t).sin(), 5.0);
        let env = am_envelope(&clip, 100.0, 50.0).unwrap();
        for (_, v) in interior(&env, 0.5) {
            assert!((v - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn silent_clip_gives_zero_envelope() {
        let env = am_envelope(&clip_from(|_| 0.0, 2.0), 100.0, 50.0).unwrap();
        assert!(env.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn am_rejects_short_clip_and_low_rate() {
        let short = clip_from(|t| t, 0.5);
        assert!(matches!(am_envelope(&short, 100.0, 50.0), Err(Error::TooShort { .. })));
        let ok = clip_from(|t| t, 1.5);
        assert!(am_envelope(&ok, 10.0, 50.0).is_err());
    }

    fn sawtooth(f0: f64) -> impl Fn(f64) -> f64 {
        move |t| 2.0 * (t * f0 - (t * f0 + 0.5).floor())
    }

    #[test]
    fn sawtooth_pitch_is_recovered() {
        let track = track_f0(&clip_from(sawtooth(220.0), 2.0), &F0Params::default()).unwrap();
        let med = median_f0(&track).unwrap();
        assert!((med - 220.0).abs() <= 2.0, "median {med}");
        assert!(track.voiced_fraction() > 0.9);
    }

    #[test]
    fn white_noise_is_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2 * SR as usize;
        let clip = AudioClip::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), SR, "n").unwrap();
        let track = track_f0(&clip, &F0Params::default()).unwrap();
        assert!(track.voiced_fraction() <= 0.1, "voiced {}", track.voiced_fraction());
    }

    #[test]
    fn silence_is_unvoiced() {
        let track = track_f0(&clip_from(|_| 0.0, 1.0), &F0Params::default()).unwrap();
        assert!(track.f0_hz.iter().all(|&f| f == 0.0));
        assert!(matches!(fm_envelope(&track, 100.0), Err(Error::FullyUnvoiced)));
    }

    #[test]
    fn invalid_bounds_rejected() {
        let p = F0Params {
            f0_min_hz: 300.0,
            f0_max_hz: 200.0,
            ..Default::default()
        };
        assert!(track_f0(&clip_from(|_| 0.0, 1.0), &p).is_err());
    }

    fn track_of(values: Vec<f64>, duration_s: f64) -> F0Track {
        F0Track {
            f0_hz: values,
            hop_s: 0.01,
            frame_len_s: 0.04,
            f0_min_hz: 60.0,
            f0_max_hz: 400.0,
            duration_s,
            source_id: "t".into(),
        }
    }

    #[test]
    fn constant_track_gives_zero_fm() {
        let env = fm_envelope(&track_of(vec![200.0; 300], 3.0), 100.0).unwrap();
        assert_eq!(env.values.len(), 300);
        assert!(env.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn alternating_voicing_pins_to_zero() {
        let env = fm_envelope(&track_of(vec![200.0, 0.0, 200.0, 0.0], 0.05), 100.0).unwrap();
        assert!(env.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vibrato_fm_envelope_follows_modulation() {
        let fc = 220.0;
        let depth = 10.0;
        let fm = 5.0;
        let clip = clip_from(
            |t| (2.0 * PI * (fc * t + depth * (1.0 - (2.0 * PI * fm * t).cos()) / (2.0 * PI * fm))).sin(),
            4.0,
        );
        let track = track_f0(&clip, &F0Params::default()).unwrap();
        let med = median_f0(&track).unwrap();
        assert!((med - fc).abs() < 2.0, "median {med}");
        let env = fm_envelope(&track, 100.0).unwrap();
        for (t, v) in interior(&env, 0.2) {
            let expected = fc + depth * (2.0 * PI * fm * t).sin() - med;
            assert!((v - expected).abs() < 2.0, "t={t} v={v} expected={expected}");
        }
    }

    #[test]
    fn fm_median_is_zero_on_grid_for_odd_count() {
        let track = track_of(vec![190.0, 0.0, 210.0, 200.0, 0.0, 230.0, 180.0], 0.1);
        let m = median_f0(&track).unwrap();
        assert_eq!(m, 200.0);
        let centred: Vec<f64> = track.voiced().map(|f| f - m).collect();
        assert_eq!(dsp::median(&centred), Some(0.0));
    }

    #[test]
    fn pitch_track_shifts_with_signal() {
        let hop = (0.01 * SR as f64) as usize;
        let base: Vec<f64> = (0..SR as usize)
            .map(|i| {
                let t = i as f64 / SR as f64;
                sawtooth(150.0 + 40.0 * t)(t)
            })
            .collect();
        let k = 7;
        let mut shifted = vec![0.0; k * hop];
        shifted.extend_from_slice(&base);
        let a = track_f0(&AudioClip::new(base, SR, "a").unwrap(), &F0Params::default()).unwrap();
        let b = track_f0(&AudioClip::new(shifted, SR, "b").unwrap(), &F0Params::default()).unwrap();
        for i in 5..a.f0_hz.len() - 5 {
            assert!((a.f0_hz[i] - b.f0_hz[i + k]).abs() < 1e-9, "frame {i}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn am_envelope_is_homogeneous(c in 0.01f64..20.0, fm in 1.0f64..9.0) {
            let clip = clip_from(|t| (1.0 + 0.4 * (2.0 * PI * fm * t).cos()) * (2.0 * PI * 300.0 * t).sin(), 1.5);
            let scaled = AudioClip::new(clip.samples.iter().map(|x| x * c).collect(), SR, "s").unwrap();
            let a = am_envelope(&clip, 100.0, 50.0).unwrap();
            let b = am_envelope(&scaled, 100.0, 50.0).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((c * x - y).abs() <= 1e-9 * (1.0 + c));
                prop_assert!(*x >= 0.0);
            }
        }

        #[test]
        fn envelope_length_tracks_duration(n in 16_000usize..40_000, rate in 20.0f64..200.0) {
            let clip = AudioClip::new(vec![0.1; n], SR, "l").unwrap();
            let env = am_envelope(&clip, rate, 50.0).unwrap();
            let expected = clip.duration_s() * rate;
            prop_assert!((env.values.len() as f64 - expected).abs() <= 1.0);
        }
    }
}
