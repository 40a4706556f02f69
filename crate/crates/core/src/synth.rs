//! Synthetic test signals with known rhythm properties.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio_io::{AudioClip, MIN_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SynthKind {
    /// `(1 + depth cos(2 pi fm t)) sin(2 pi fc t)`
    AmTone,
    /// Sinusoid whose frequency is `fc + depth sin(2 pi fm t)` (depth in Hz).
    Vibrato,
    /// `AmTone` whose modulation rate switches from `mod_freq_hz` to
    /// `step_mod_freq_hz` halfway through, phase-continuously.
    AmStep,
    /// Seeded uniform noise in [-1, 1).
    Noise,
    Silence,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "am_tone" => Ok(SynthKind::AmTone),
            "vibrato" => Ok(SynthKind::Vibrato),
            "am_step" => Ok(SynthKind::AmStep),
            "noise" => Ok(SynthKind::Noise),
            "silence" => Ok(SynthKind::Silence),
            other => Err(Error::InvalidSynthSpec(format!("unknown kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub carrier_hz: f64,
    pub mod_freq_hz: f64,
    pub mod_depth: f64,
    /// Second modulation rate for `AmStep`.
    pub step_mod_freq_hz: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            kind: SynthKind::AmTone,
            carrier_hz: 200.0,
            mod_freq_hz: 4.0,
            mod_depth: 0.5,
            step_mod_freq_hz: 6.0,
            duration_s: 10.0,
            sample_rate_hz: 16_000,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn new(kind: SynthKind) -> Self {
        let mut spec = Self {
            kind,
            ..Self::default()
        };
        if kind == SynthKind::Vibrato {
            spec.carrier_hz = 220.0;
            spec.mod_freq_hz = 5.0;
            spec.mod_depth = 10.0;
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynthSpec(m));
        if !(self.duration_s >= 4.0) || !self.duration_s.is_finite() {
            return bad(format!("duration {} s is below 4 s", self.duration_s));
        }
        if self.sample_rate_hz < MIN_SAMPLE_RATE_HZ {
            return bad(format!("sample rate {} Hz is below 8000 Hz", self.sample_rate_hz));
        }
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        let in_band = |f: f64| f > 0.0 && f < 10.0;
        match self.kind {
            SynthKind::AmTone | SynthKind::AmStep | SynthKind::Vibrato => {
                if !in_band(self.mod_freq_hz) {
                    return bad(format!("modulation {} Hz outside (0, 10)", self.mod_freq_hz));
                }
                if self.kind == SynthKind::AmStep && !in_band(self.step_mod_freq_hz) {
                    return bad(format!("step modulation {} Hz outside (0, 10)", self.step_mod_freq_hz));
                }
                if !(self.carrier_hz > 0.0 && self.carrier_hz + self.mod_depth.abs() < nyquist) {
                    return bad(format!("carrier {} Hz invalid for this sample rate", self.carrier_hz));
                }
                if self.kind == SynthKind::Vibrato {
                    if !(self.mod_depth > 0.0 && self.mod_depth < self.carrier_hz) {
                        return bad(format!("vibrato depth {} Hz invalid", self.mod_depth));
                    }
                } else if !(0.0..=1.0).contains(&self.mod_depth) {
                    return bad(format!("AM depth {} outside [0, 1]", self.mod_depth));
                }
            }
            SynthKind::Noise | SynthKind::Silence => {}
        }
        Ok(())
    }
}

/// Renders the signal. AM kinds are scaled by `1 / (1 + depth)` so every
/// sample stays within [-1, 1].
pub fn synthesize(spec: &SynthSpec) -> Result<AudioClip> {
    spec.validate()?;
    let sr = spec.sample_rate_hz as f64;
    let n = (spec.duration_s * sr).round() as usize;
    let t = |i: usize| i as f64 / sr;
    let samples: Vec<f64> = match spec.kind {
        SynthKind::AmTone => {
            let g = 1.0 / (1.0 + spec.mod_depth);
            (0..n)
                .map(|i| {
                    let t = t(i);
                    g * (1.0 + spec.mod_depth * (2.0 * PI * spec.mod_freq_hz * t).cos())
                        * (2.0 * PI * spec.carrier_hz * t).sin()
                })
                .collect()
        }
        SynthKind::AmStep => {
            let g = 1.0 / (1.0 + spec.mod_depth);
            let switch = spec.duration_s / 2.0;
            (0..n)
                .map(|i| {
                    let t = t(i);
                    let cycles = if t < switch {
                        spec.mod_freq_hz * t
                    } else {
                        spec.mod_freq_hz * switch + spec.step_mod_freq_hz * (t - switch)
                    };
                    g * (1.0 + spec.mod_depth * (2.0 * PI * cycles).cos())
                        * (2.0 * PI * spec.carrier_hz * t).sin()
                })
                .collect()
        }
        SynthKind::Vibrato => {
            let wm = 2.0 * PI * spec.mod_freq_hz;
            (0..n)
                .map(|i| {
                    let t = t(i);
                    // Exact integral of the instantaneous frequency.
                    let phase = 2.0 * PI * (spec.carrier_hz * t + spec.mod_depth * (1.0 - (wm * t).cos()) / wm);
                    phase.sin()
                })
                .collect()
        }
        SynthKind::Noise => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        SynthKind::Silence => vec![0.0; n],
    };
    let id = format!("{:?}_{}", spec.kind, spec.seed).to_ascii_lowercase();
    AudioClip::new(samples, spec.sample_rate_hz, id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_spec_is_bit_identical() {
        for kind in [SynthKind::AmTone, SynthKind::Vibrato, SynthKind::AmStep, SynthKind::Noise, SynthKind::Silence] {
            let spec = SynthSpec {
                seed: 42,
                duration_s: 4.0,
                ..SynthSpec::new(kind)
            };
            assert_eq!(synthesize(&spec).unwrap(), synthesize(&spec).unwrap());
        }
        let a = synthesize(&SynthSpec { seed: 1, duration_s: 4.0, ..SynthSpec::new(SynthKind::Noise) }).unwrap();
        let b = synthesize(&SynthSpec { seed: 2, duration_s: 4.0, ..SynthSpec::new(SynthKind::Noise) }).unwrap();
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn samples_stay_in_range() {
        for kind in [SynthKind::AmTone, SynthKind::AmStep, SynthKind::Vibrato, SynthKind::Noise] {
            let c = synthesize(&SynthSpec { duration_s: 4.0, mod_depth: if kind == SynthKind::Vibrato { 10.0 } else { 1.0 }, ..SynthSpec::new(kind) }).unwrap();
            assert!(c.peak() <= 1.0 + 1e-12);
            assert_eq!(c.samples.len(), 64_000);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = SynthSpec::default();
        for spec in [
            SynthSpec { duration_s: 3.0, ..base.clone() },
            SynthSpec { mod_freq_hz: 10.0, ..base.clone() },
            SynthSpec { mod_freq_hz: 0.0, ..base.clone() },
            SynthSpec { mod_depth: 1.5, ..base.clone() },
            SynthSpec { sample_rate_hz: 4000, ..base.clone() },
            SynthSpec { carrier_hz: 9000.0, ..base.clone() },
            SynthSpec { kind: SynthKind::AmStep, step_mod_freq_hz: 12.0, ..base.clone() },
        ] {
            assert!(matches!(synthesize(&spec), Err(Error::InvalidSynthSpec(_))), "{spec:?}");
        }
    }

    #[test]
    fn kind_parses_from_cli_spelling() {
        assert_eq!("am-tone".parse::<SynthKind>().unwrap(), SynthKind::AmTone);
        assert_eq!("AM_STEP".parse::<SynthKind>().unwrap(), SynthKind::AmStep);
        assert!("chirp".parse::<SynthKind>().is_err());
        assert_eq!(serde_json::to_string(&SynthKind::AmTone).unwrap(), "\"AM_TONE\"");
    }
}
