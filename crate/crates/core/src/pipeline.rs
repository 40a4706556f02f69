//! End-to-end per-file analysis: normalise, build both envelopes, then the
//! spectrum and spectrogram features of each.

use serde::{Deserialize, Serialize};

use crate::audio_io::{peak_normalize, AudioClip};
use crate::envelope::{am_envelope, fm_envelope, track_f0, Envelope, F0Params, F0Track};
use crate::error::{invalid, Error, Result};
use crate::features::{assemble, FeatureVector, SpectrumFeatures, N_DCT};
use crate::lf_spectrogram::{
    compute_lf_spectrogram, extract_trajectories, trajectory_variances, LfSpectrogram, TrajectoryOrder,
    TrajectorySet,
};
use crate::lf_spectrum::{
    dct_features, lf_spectrum_of, pick_r_formants, spectral_measures, threshold_features, LfSpectrum,
    SpectralMeasures, SpectrumParams,
};

/// Every signal-side tunable with its default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub min_duration_s: f64,
    pub env_rate_hz: f64,
    pub smooth_ms: f64,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub f0_frame_s: f64,
    pub f0_hop_s: f64,
    pub voicing_threshold: f64,
    pub zero_pad_factor: usize,
    pub taper: bool,
    pub n_formants: usize,
    pub peak_threshold: f64,
    pub min_peak_separation_hz: f64,
    pub rolloff_fraction: f64,
    pub window_s: f64,
    pub hop_s: f64,
    pub trajectory_order: TrajectoryOrder,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let f0 = F0Params::default();
        Self {
            min_duration_s: 4.0,
            env_rate_hz: 100.0,
            smooth_ms: 50.0,
            f0_min_hz: f0.f0_min_hz,
            f0_max_hz: f0.f0_max_hz,
            f0_frame_s: f0.frame_len_s,
            f0_hop_s: f0.hop_s,
            voicing_threshold: f0.voicing_threshold,
            zero_pad_factor: 4,
            taper: false,
            n_formants: 6,
            peak_threshold: 0.5,
            min_peak_separation_hz: 0.3,
            rolloff_fraction: 0.85,
            window_s: 3.0,
            hop_s: 0.1,
            trajectory_order: TrajectoryOrder::ByMagnitude,
        }
    }
}

impl AnalysisConfig {
    pub fn f0_params(&self) -> F0Params {
        F0Params {
            f0_min_hz: self.f0_min_hz,
            f0_max_hz: self.f0_max_hz,
            frame_len_s: self.f0_frame_s,
            hop_s: self.f0_hop_s,
            voicing_threshold: self.voicing_threshold,
        }
    }

    pub fn spectrum_params(&self) -> SpectrumParams {
        SpectrumParams {
            zero_pad_factor: self.zero_pad_factor,
            taper: self.taper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.f0_params().validate()?;
        if !(self.min_duration_s >= 0.0) {
            return Err(invalid("min_duration_s", "must be >= 0"));
        }
        if self.n_formants == 0 {
            return Err(invalid("n_formants", "must be at least 1"));
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold < 1.0) {
            return Err(invalid("peak_threshold", "must be in (0, 1)"));
        }
        if !(self.min_peak_separation_hz >= 0.0) {
            return Err(invalid("min_peak_separation_hz", "must be >= 0"));
        }
        if !(self.rolloff_fraction > 0.0 && self.rolloff_fraction <= 1.0) {
            return Err(invalid("rolloff_fraction", "must be in (0, 1]"));
        }
        if self.zero_pad_factor == 0 {
            return Err(invalid("zero_pad_factor", "must be at least 1"));
        }
        if !(self.window_s >= 2.0) {
            return Err(invalid("window_s", "must be at least 2 s (LF spectrum minimum)"));
        }
        if !(self.hop_s > 0.0) {
            return Err(invalid("hop_s", "must be > 0"));
        }
        Ok(())
    }
}

/// All intermediate products for one envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeAnalysis {
    pub envelope: Envelope,
    pub spectrum: LfSpectrum,
    pub features: SpectrumFeatures,
    /// Set when the spectrum was all zero and the spectral measures were
    /// replaced by zeros.
    pub zero_spectrum: bool,
    pub spectrogram: LfSpectrogram,
    pub trajectories: TrajectorySet,
    pub variances: Vec<f64>,
}

pub fn analyze_envelope(env: Envelope, cfg: &AnalysisConfig) -> Result<EnvelopeAnalysis> {
    let spectrum = lf_spectrum_of(&env.values, env.rate_hz, env.kind, cfg.spectrum_params())?;
    let r_formants = pick_r_formants(&spectrum, cfg.n_formants, cfg.min_peak_separation_hz);
    let threshold = threshold_features(&spectrum, cfg.peak_threshold, cfg.min_peak_separation_hz)?;
    let dct = dct_features(&spectrum, N_DCT)?;
    let (measures, zero_spectrum) = match spectral_measures(&spectrum, cfg.rolloff_fraction) {
        Ok(m) => (m, false),
        Err(Error::ZeroSpectrum) => (
            SpectralMeasures {
                centroid_hz: 0.0,
                spread_hz: 0.0,
                rolloff_hz: 0.0,
                flatness: 0.0,
                entropy: 0.0,
                skewness: 0.0,
                kurtosis: 0.0,
            },
            true,
        ),
        Err(e) => return Err(e),
    };

    let spectrogram = compute_lf_spectrogram(&env, cfg.window_s, cfg.hop_s, cfg.spectrum_params())?;
    let trajectories = extract_trajectories(
        &spectrogram,
        cfg.n_formants,
        cfg.min_peak_separation_hz,
        cfg.trajectory_order,
    );
    let variances = trajectory_variances(&trajectories)?;

    Ok(EnvelopeAnalysis {
        envelope: env,
        spectrum,
        features: SpectrumFeatures {
            threshold,
            dct,
            measures,
            r_formants,
        },
        zero_spectrum,
        spectrogram,
        trajectories,
        variances,
    })
}

/// Analysis of one clip. FM failures are kept rather than propagated so
/// callers can still use the AM side (e.g. for plotting).
#[derive(Debug)]
pub struct ClipAnalysis {
    pub clip: AudioClip,
    pub am: EnvelopeAnalysis,
    pub f0: F0Track,
    pub fm: Result<EnvelopeAnalysis>,
}

pub fn analyze_clip(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<ClipAnalysis> {
    cfg.validate()?;
    let clip = peak_normalize(clip);
    let am = analyze_envelope(am_envelope(&clip, cfg.env_rate_hz, cfg.smooth_ms)?, cfg)?;
    let f0 = track_f0(&clip, &cfg.f0_params())?;
    let fm = fm_envelope(&f0, cfg.env_rate_hz).and_then(|env| analyze_envelope(env, cfg));
    Ok(ClipAnalysis { clip, am, f0, fm })
}

/// Features of one file plus any non-fatal warnings.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub vector: FeatureVector,
    pub warnings: Vec<String>,
}

/// Runs the full pipeline. Clips at or below `min_duration_s` and clips
/// without any voiced frame are rejected.
pub fn extract_features(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<Extraction> {
    if clip.duration_s() <= cfg.min_duration_s {
        return Err(Error::TooShort {
            what: "duration filter",
            needed_s: cfg.min_duration_s,
            actual_s: clip.duration_s(),
        });
    }
    let analysis = analyze_clip(clip, cfg)?;
    let fm = analysis.fm?;
    let am = analysis.am;
    let mut warnings = Vec::new();
    for (side, a) in [("AM", &am), ("FM", &fm)] {
        if a.zero_spectrum {
            warnings.push(format!("{side} spectrum is all zero; spectral measures set to 0"));
        }
    }
    let vector = assemble(&clip.source_id, &am.features, &fm.features, &am.variances, &fm.variances)?;
    Ok(Extraction { vector, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize, SynthKind, SynthSpec};

    #[test]
    fn default_config_round_trips_and_rejects_unknown_keys() {
        let cfg = AnalysisConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<AnalysisConfig>(&json).unwrap(), cfg);
        assert!(serde_json::from_str::<AnalysisConfig>(r#"{"bogus": 1}"#).is_err());
        let partial: AnalysisConfig = serde_json::from_str(r#"{"hop_s": 0.2}"#).unwrap();
        assert_eq!(partial.hop_s, 0.2);
        assert_eq!(partial.window_s, 3.0);
    }

    #[test]
    fn am_tone_end_to_end() {
        let clip = synthesize(&SynthSpec {
            duration_s: 6.0,
            ..SynthSpec::new(SynthKind::AmTone)
        })
        .unwrap();
        let a = analyze_clip(&clip, &AnalysisConfig::default()).unwrap();
        let top = a.am.features.r_formants.freqs_hz[0];
        assert!((top - 4.0).abs() <= a.am.spectrum.resolution_hz, "top {top}");
    }

    #[test]
    fn silence_has_no_fm() {
        let clip = synthesize(&SynthSpec {
            duration_s: 5.0,
            ..SynthSpec::new(SynthKind::Silence)
        })
        .unwrap();
        let a = analyze_clip(&clip, &AnalysisConfig::default()).unwrap();
        assert!(a.am.spectrum.is_zero());
        assert!(matches!(a.fm, Err(Error::FullyUnvoiced)));
        assert!(matches!(
            extract_features(&clip, &AnalysisConfig::default()),
            Err(Error::FullyUnvoiced)
        ));
    }

    #[test]
    fn short_clip_filtered() {
        let clip = AudioClip::new(vec![0.1; 4 * 16_000], 16_000, "x").unwrap();
        assert!(matches!(
            extract_features(&clip, &AnalysisConfig::default()),
            Err(Error::TooShort { .. })
        ));
    }
}
