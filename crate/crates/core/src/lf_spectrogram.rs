//! Moving-window LF spectrogram, rhythm-formant trajectories and their
//! variances.

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::envelope::{Envelope, EnvelopeKind};
use crate::error::{invalid, Error, Result};
use crate::lf_spectrum::{lf_spectrum_of, pick_r_formants, SpectrumParams};

pub const DEFAULT_WINDOW_S: f64 = 3.0;
pub const DEFAULT_HOP_S: f64 = 0.1;

/// Time-stacked LF spectra; each row is max-normalised on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfSpectrogram {
    /// Window centres in seconds.
    pub frame_times_s: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// frames x bins
    pub mags: Vec<Vec<f64>>,
    pub resolution_hz: f64,
    pub window_s: f64,
    pub hop_s: f64,
    pub kind: EnvelopeKind,
}

impl LfSpectrogram {
    pub fn n_frames(&self) -> usize {
        self.mags.len()
    }
}

/// `floor((duration - window) / hop) + 1`, with a small tolerance so that
/// exact multiples are not lost to rounding.
pub fn frame_count(duration_s: f64, window_s: f64, hop_s: f64) -> usize {
    ((duration_s - window_s) / hop_s + 1e-9).floor() as usize + 1
}

pub fn compute_lf_spectrogram(
    env: &Envelope,
    window_s: f64,
    hop_s: f64,
    params: SpectrumParams,
) -> Result<LfSpectrogram> {
    if !(window_s > 0.0) {
        return Err(invalid("window_s", format!("{window_s} (must be > 0)")));
    }
    if !(hop_s > 0.0) {
        return Err(invalid("hop_s", format!("{hop_s} (must be > 0)")));
    }
    let duration = env.duration_s();
    if duration < window_s - 1e-9 {
        return Err(Error::TooShort {
            what: "LF spectrogram",
            needed_s: window_s,
            actual_s: duration,
        });
    }

    let n = env.values.len();
    let win = ((window_s * env.rate_hz).round() as usize).min(n);
    let n_frames = frame_count(duration, window_s, hop_s);
    let mut mags = Vec::with_capacity(n_frames);
    let mut frame_times_s = Vec::with_capacity(n_frames);
    let mut freqs_hz = Vec::new();
    let mut resolution_hz = 0.0;
    for i in 0..n_frames {
        let start = ((i as f64 * hop_s * env.rate_hz).round() as usize).min(n - win);
        let row = lf_spectrum_of(&env.values[start..start + win], env.rate_hz, env.kind, params)?;
        if i == 0 {
            freqs_hz = row.freqs_hz;
            resolution_hz = row.resolution_hz;
        }
        mags.push(row.mags);
        frame_times_s.push(i as f64 * hop_s + 0.5 * window_s);
    }

    Ok(LfSpectrogram {
        frame_times_s,
        freqs_hz,
        mags,
        resolution_hz,
        window_s,
        hop_s,
        kind: env.kind,
    })
}

/// How the per-frame peaks are assigned to trajectory slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryOrder {
    /// Slot k holds the k-th largest peak.
    #[default]
    ByMagnitude,
    /// The top-n peaks sorted by ascending frequency; sentinels last.
    ByFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub formant_freq_traj: Vec<Vec<f64>>,
    pub formant_mag_traj: Vec<Vec<f64>>,
    pub frame_times_s: Vec<f64>,
}

pub fn extract_trajectories(
    sg: &LfSpectrogram,
    n: usize,
    min_separation_hz: f64,
    order: TrajectoryOrder,
) -> TrajectorySet {
    let mut freq = vec![Vec::with_capacity(sg.n_frames()); n];
    let mut mag = vec![Vec::with_capacity(sg.n_frames()); n];
    for row in &sg.mags {
        let spec = crate::lf_spectrum::LfSpectrum {
            freqs_hz: sg.freqs_hz.clone(),
            mags: row.clone(),
            resolution_hz: sg.resolution_hz,
            kind: sg.kind,
        };
        let peaks = pick_r_formants(&spec, n, min_separation_hz);
        let mut slots: Vec<(f64, f64)> = peaks.freqs_hz.into_iter().zip(peaks.mags).collect();
        if order == TrajectoryOrder::ByFrequency {
            slots[..peaks.count].sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        for (k, (f, m)) in slots.into_iter().enumerate() {
            freq[k].push(f);
            mag[k].push(m);
        }
    }
    TrajectorySet {
        formant_freq_traj: freq,
        formant_mag_traj: mag,
        frame_times_s: sg.frame_times_s.clone(),
    }
}

/// Population variances: the frequency trajectories first, then the
/// magnitude trajectories.
pub fn trajectory_variances(ts: &TrajectorySet) -> Result<Vec<f64>> {
    if ts.frame_times_s.len() < 2 {
        return Err(Error::TooShort {
            what: "trajectory variance (needs two spectrogram frames)",
            needed_s: 2.0,
            actual_s: ts.frame_times_s.len() as f64,
        });
    }
    Ok(ts
        .formant_freq_traj
        .iter()
        .chain(&ts.formant_mag_traj)
        .map(|t| dsp::variance(t))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn envelope(f: impl Fn(f64) -> f64, secs: f64, rate: f64) -> Envelope {
        let n = (secs * rate).round() as usize;
        Envelope {
            kind: EnvelopeKind::Am,
            values: (0..n).map(|i| f(i as f64 / rate)).collect(),
            rate_hz: rate,
            source_id: "t".into(),
        }
    }

    fn stationary(fm: f64) -> impl Fn(f64) -> f64 {
        move |t| 1.0 + 0.5 * (2.0 * PI * fm * t).cos()
    }

    fn stepped(t: f64) -> f64 {
        // Phase-continuous switch from 2 Hz to 6 Hz at t = 5 s.
        let phase = if t < 5.0 { 2.0 * t } else { 10.0 + 6.0 * (t - 5.0) };
        1.0 + 0.5 * (2.0 * PI * phase).cos()
    }

    #[test]
    fn ten_second_envelope_has_71_frames() {
        let sg = compute_lf_spectrogram(&envelope(stationary(4.0), 10.0, 100.0), 3.0, 0.1, SpectrumParams::default()).unwrap();
        assert_eq!(sg.n_frames(), 71);
        assert!((sg.frame_times_s[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_rows_peak_at_modulation() {
        let sg = compute_lf_spectrogram(&envelope(stationary(4.0), 10.0, 100.0), 3.0, 0.1, SpectrumParams::default()).unwrap();
        for row in &sg.mags {
            let (i, _) = row.iter().enumerate().fold((0, f64::MIN), |b, (i, &m)| if m > b.1 { (i, m) } else { b });
            assert!((sg.freqs_hz[i] - 4.0).abs() <= sg.resolution_hz);
        }
        let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByMagnitude);
        for &f in &ts.formant_freq_traj[0] {
            assert!((f - ts.formant_freq_traj[0][0]).abs() <= sg.resolution_hz);
        }
    }

    #[test]
    fn stationary_rows_are_highly_correlated() {
        let sg = compute_lf_spectrogram(&envelope(stationary(3.0), 10.0, 100.0), 3.0, 0.1, SpectrumParams::default()).unwrap();
        let corr = |a: &[f64], b: &[f64]| {
            let (ma, mb) = (dsp::mean(a), dsp::mean(b));
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
            cov / (va * vb).sqrt()
        };
        for w in sg.mags[1..sg.n_frames() - 1].windows(2) {
            assert!(corr(&w[0], &w[1]) >= 0.95);
        }
    }

    #[test]
    fn stepped_modulation_moves_the_peak() {
        let sg = compute_lf_spectrogram(&envelope(stepped, 10.0, 100.0), 3.0, 0.1, SpectrumParams::default()).unwrap();
        let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByMagnitude);
        let rf1 = &ts.formant_freq_traj[0];
        assert!((rf1[0] - 2.0).abs() <= 2.0 * sg.resolution_hz);
        assert!((rf1[rf1.len() - 1] - 6.0).abs() <= 2.0 * sg.resolution_hz);

        let st = compute_lf_spectrogram(&envelope(stationary(4.0), 10.0, 100.0), 3.0, 0.1, SpectrumParams::default()).unwrap();
        let vs = trajectory_variances(&extract_trajectories(&st, 6, 0.3, TrajectoryOrder::ByMagnitude)).unwrap();
        let vstep = trajectory_variances(&ts).unwrap();
        assert!(vstep[0] > vs[0]);
    }

    #[test]
    fn short_envelope_rejected() {
        assert!(matches!(
            compute_lf_spectrogram(&envelope(stationary(4.0), 2.5, 100.0), 3.0, 0.1, SpectrumParams::default()),
            Err(Error::TooShort { .. })
        ));
    }

    fn spectrogram_of(rows: Vec<Vec<f64>>) -> LfSpectrogram {
        let n_bins = rows[0].len();
        LfSpectrogram {
            frame_times_s: (0..rows.len()).map(|i| 1.5 + 0.1 * i as f64).collect(),
            freqs_hz: (1..=n_bins).map(|k| k as f64).collect(),
            mags: rows,
            resolution_hz: 1.0,
            window_s: 3.0,
            hop_s: 0.1,
            kind: EnvelopeKind::Am,
        }
    }

    #[test]
    fn zero_rows_give_zero_trajectories() {
        let sg = spectrogram_of(vec![vec![0.0; 10]; 4]);
        let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByMagnitude);
        assert!(ts.formant_freq_traj.iter().chain(&ts.formant_mag_traj).all(|t| t.iter().all(|&v| v == 0.0)));
        assert_eq!(trajectory_variances(&ts).unwrap(), vec![0.0; 12]);
    }

    #[test]
    fn sentinel_fill_per_frame() {
        // Peaks at 3 Hz (1.0) and 7 Hz (0.4).
        let row = vec![0.0, 0.1, 1.0, 0.1, 0.0, 0.1, 0.4, 0.1, 0.0, 0.0];
        let sg = spectrogram_of(vec![row.clone(), row]);
        let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByMagnitude);
        let frame0: Vec<f64> = ts.formant_freq_traj.iter().map(|t| t[0]).collect();
        assert_eq!(frame0, vec![3.0, 7.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn by_frequency_sorts_real_peaks() {
        let row = vec![0.0, 0.4, 0.0, 0.1, 1.0, 0.1, 0.0, 0.7, 0.0, 0.0];
        let sg = spectrogram_of(vec![row.clone(), row]);
        let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByFrequency);
        let frame0: Vec<f64> = ts.formant_freq_traj.iter().map(|t| t[0]).collect();
        assert_eq!(frame0, vec![2.0, 5.0, 8.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn variance_examples() {
        let mut ts = TrajectorySet {
            formant_freq_traj: vec![vec![3.0, 3.0]; 6],
            formant_mag_traj: vec![vec![0.5, 0.5]; 6],
            frame_times_s: vec![1.5, 1.6],
        };
        assert_eq!(trajectory_variances(&ts).unwrap(), vec![0.0; 12]);
        ts.formant_freq_traj[0] = vec![2.0, 4.0];
        assert_eq!(trajectory_variances(&ts).unwrap()[0], 1.0);
        ts.frame_times_s.truncate(1);
        assert!(trajectory_variances(&ts).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn frame_count_matches_formula(dur_ms in 3000u32..12_000, hop_ms in 20u32..700) {
            let d = dur_ms as f64 / 1000.0;
            let hop = hop_ms as f64 / 1000.0;
            let env = envelope(stationary(4.0), d, 100.0);
            let sg = compute_lf_spectrogram(&env, 3.0, hop, SpectrumParams::default()).unwrap();
            let expected = ((env.values.len() as u32 * 10 - 3000) / hop_ms + 1) as usize;
            prop_assert_eq!(sg.n_frames(), expected);
        }

        #[test]
        fn magnitude_ranks_are_ordered(fa in 1.0f64..9.0, fb in 1.0f64..9.0, secs in 4.0f64..8.0) {
            let env = envelope(move |t| 1.0 + 0.5 * (2.0 * PI * fa * t).cos() + 0.3 * (2.0 * PI * fb * t).cos(), secs, 100.0);
            let sg = compute_lf_spectrogram(&env, 3.0, 0.25, SpectrumParams::default()).unwrap();
            let ts = extract_trajectories(&sg, 6, 0.3, TrajectoryOrder::ByMagnitude);
            for f in 0..sg.n_frames() {
                for k in 0..5 {
                    prop_assert!(ts.formant_mag_traj[k][f] >= ts.formant_mag_traj[k + 1][f]);
                }
            }
            prop_assert!(trajectory_variances(&ts).unwrap().iter().all(|&v| v >= 0.0));
        }
    }
}
