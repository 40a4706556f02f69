//! Low-frequency (0-10 Hz) spectrum of a modulation envelope and the
//! whole-utterance measures derived from it.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::envelope::{Envelope, EnvelopeKind};
use crate::error::{invalid, Error, Result};

/// Upper edge of the rhythm band.
pub const LF_MAX_HZ: f64 = 10.0;
pub const MIN_SPECTRUM_SPAN_S: f64 = 2.0;

/// Max-normalised magnitude spectrum on bins with 0 < f <= 10 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfSpectrum {
    pub freqs_hz: Vec<f64>,
    pub mags: Vec<f64>,
    pub resolution_hz: f64,
    pub kind: EnvelopeKind,
}

impl LfSpectrum {
    pub fn is_zero(&self) -> bool {
        self.mags.iter().all(|&m| m == 0.0)
    }

    pub fn len(&self) -> usize {
        self.mags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mags.is_empty()
    }

    /// Frequency of the largest bin (first one on ties).
    pub fn argmax_hz(&self) -> Option<f64> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &m) in self.mags.iter().enumerate() {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        best.map(|(i, _)| self.freqs_hz[i])
    }
}

/// Spectrum computation options beyond the envelope itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub zero_pad_factor: usize,
    /// Apply a Hann taper before the transform.
    pub taper: bool,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self {
            zero_pad_factor: 4,
            taper: false,
        }
    }
}

/// Mean-removed, zero-padded FFT magnitude of the envelope restricted to
/// (0, 10] Hz and divided by its maximum.
pub fn compute_lf_spectrum(env: &Envelope, zero_pad_factor: usize) -> Result<LfSpectrum> {
    lf_spectrum_of(
        &env.values,
        env.rate_hz,
        env.kind,
        SpectrumParams {
            zero_pad_factor,
            taper: false,
        },
    )
}

/// Same as [`compute_lf_spectrum`] on a raw slice of envelope samples.
pub fn lf_spectrum_of(
    values: &[f64],
    rate_hz: f64,
    kind: EnvelopeKind,
    params: SpectrumParams,
) -> Result<LfSpectrum> {
    if params.zero_pad_factor == 0 {
        return Err(invalid("zero_pad_factor", "must be at least 1"));
    }
    let span = values.len() as f64 / rate_hz;
    if span < MIN_SPECTRUM_SPAN_S - 1e-9 {
        return Err(Error::TooShort {
            what: "LF spectrum",
            needed_s: MIN_SPECTRUM_SPAN_S,
            actual_s: span,
        });
    }
    if rate_hz <= 2.0 * LF_MAX_HZ {
        return Err(invalid("rate_hz", format!("{rate_hz} leaves no margin over the 10 Hz band")));
    }

    let scale_ref: f64 = values.iter().map(|v| v.abs()).sum();
    let mean = dsp::mean(values);
    let mut centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    if params.taper {
        let n = centred.len();
        for (i, v) in centred.iter_mut().enumerate() {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1).max(1) as f64).cos();
            *v *= w;
        }
    }

    let n_fft = params.zero_pad_factor * values.len().next_power_of_two();
    let resolution_hz = rate_hz / n_fft as f64;
    let last_bin = (LF_MAX_HZ / resolution_hz + 1e-9).floor() as usize;
    let full = dsp::padded_magnitudes(&centred, n_fft, last_bin + 1);

    let freqs_hz: Vec<f64> = (1..=last_bin).map(|k| k as f64 * resolution_hz).collect();
    let mut mags: Vec<f64> = full[1..=last_bin].to_vec();
    let max = mags.iter().copied().fold(0.0, f64::max);
    // Residue of mean removal on a constant envelope is rounding noise.
    if max <= 1e-12 * scale_ref.max(f64::MIN_POSITIVE) || max == 0.0 {
        mags.iter_mut().for_each(|m| *m = 0.0);
    } else {
        mags.iter_mut().for_each(|m| *m /= max);
    }

    Ok(LfSpectrum {
        freqs_hz,
        mags,
        resolution_hz,
        kind,
    })
}

/// Dominant peaks of a spectrum ordered by descending magnitude. Missing
/// entries are padded with `(0 Hz, 0)`; `count` is the number of real peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub freqs_hz: Vec<f64>,
    pub mags: Vec<f64>,
    pub count: usize,
}

/// Indices of local maxima. Plateaus report their middle index; the two
/// endpoints are never peaks.
fn local_maxima(mags: &[f64]) -> Vec<usize> {
    let n = mags.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if mags[i] > mags[i - 1] {
            let mut j = i;
            while j + 1 < n && mags[j + 1] == mags[i] {
                j += 1;
            }
            if j + 1 < n && mags[j + 1] < mags[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Local maxima after separation pruning, ordered by descending magnitude
/// (ties: lower frequency first). A peak is dropped when a larger kept peak
/// lies closer than `min_separation_hz`.
pub fn find_peaks(spec: &LfSpectrum, min_separation_hz: f64) -> Vec<(f64, f64)> {
    let mut candidates: Vec<usize> = local_maxima(&spec.mags);
    candidates.sort_by(|&a, &b| spec.mags[b].total_cmp(&spec.mags[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        let f = spec.freqs_hz[c];
        if kept
            .iter()
            .all(|&k| (spec.freqs_hz[k] - f).abs() >= min_separation_hz - 1e-12)
        {
            kept.push(c);
        }
    }
    kept.into_iter()
        .map(|i| (spec.freqs_hz[i], spec.mags[i]))
        .collect()
}

/// The `n` strongest rhythm formants.
pub fn pick_r_formants(spec: &LfSpectrum, n: usize, min_separation_hz: f64) -> PeakSet {
    let peaks = find_peaks(spec, min_separation_hz);
    let count = peaks.len().min(n);
    let mut freqs_hz = vec![0.0; n];
    let mut mags = vec![0.0; n];
    for (i, (f, m)) in peaks.into_iter().take(n).enumerate() {
        freqs_hz[i] = f;
        mags[i] = m;
    }
    PeakSet {
        freqs_hz,
        mags,
        count,
    }
}

/// Peak count, mean frequency and frequency variance of peaks at or above
/// a magnitude threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFeatures {
    pub ndp: usize,
    pub mfdp_hz: f64,
    pub vfdp_hz2: f64,
}

pub fn threshold_features(
    spec: &LfSpectrum,
    threshold: f64,
    min_separation_hz: f64,
) -> Result<ThresholdFeatures> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", format!("{threshold} (must be in (0, 1))")));
    }
    let freqs: Vec<f64> = find_peaks(spec, min_separation_hz)
        .into_iter()
        .filter(|&(_, m)| m >= threshold)
        .map(|(f, _)| f)
        .collect();
    Ok(ThresholdFeatures {
        ndp: freqs.len(),
        mfdp_hz: dsp::mean(&freqs),
        vfdp_hz2: dsp::variance(&freqs),
    })
}

/// First `k` coefficients of the unnormalised DCT-II of the magnitudes,
/// `X_k = sum_n x_n cos(pi/N (n + 1/2) k)`.
///
/// Evaluated through a length-2N FFT of the mirrored sequence:
/// `X_k = Re(exp(-i pi k / 2N) Y_k) / 2`.
pub fn dct_features(spec: &LfSpectrum, k: usize) -> Result<Vec<f64>> {
    dct2(&spec.mags, k)
}

pub fn dct2(x: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 {
        return Err(invalid("spectrum", "empty"));
    }
    if k > n {
        return Err(invalid("k", format!("{k} exceeds the {n} available bins")));
    }
    let mut buf: Vec<Complex64> = x
        .iter()
        .chain(x.iter().rev())
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(2 * n)
        .process(&mut buf);
    Ok((0..k)
        .map(|q| {
            let phase = -std::f64::consts::PI * q as f64 / (2.0 * n as f64);
            0.5 * (Complex64::from_polar(1.0, phase) * buf[q]).re
        })
        .collect())
}

/// Settings for [`spectral_measures`].
pub const DEFAULT_ROLLOFF_FRACTION: f64 = 0.85;
const FLATNESS_FLOOR: f64 = 1e-12;

/// Distribution-shape descriptors of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasures {
    pub centroid_hz: f64,
    pub spread_hz: f64,
    pub rolloff_hz: f64,
    pub flatness: f64,
    pub entropy: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl SpectralMeasures {
    pub fn to_array(self) -> [f64; 7] {
        [
            self.centroid_hz,
            self.spread_hz,
            self.rolloff_hz,
            self.flatness,
            self.entropy,
            self.skewness,
            self.kurtosis,
        ]
    }
}

/// Seven shape measures, treating `p_i = m_i / sum(m)` as a distribution
/// over the bin frequencies.
///
/// Rolloff is the lowest frequency at which cumulative squared magnitude
/// reaches `rolloff_fraction` of the total. Flatness is computed over all
/// bins and is 0 as soon as any bin is exactly zero. Entropy is normalised
/// by `log2 N`. Skewness and kurtosis are 0 when the spread is 0.
pub fn spectral_measures(spec: &LfSpectrum, rolloff_fraction: f64) -> Result<SpectralMeasures> {
    if !(rolloff_fraction > 0.0 && rolloff_fraction <= 1.0) {
        return Err(invalid(
            "rolloff_fraction",
            format!("{rolloff_fraction} (must be in (0, 1])"),
        ));
    }
    let total: f64 = spec.mags.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroSpectrum);
    }
    let n = spec.mags.len();
    let p: Vec<f64> = spec.mags.iter().map(|m| m / total).collect();
    let f = &spec.freqs_hz;

    let centroid: f64 = p.iter().zip(f).map(|(p, f)| p * f).sum();
    let moment = |order: i32| -> f64 {
        p.iter()
            .zip(f)
            .map(|(p, f)| p * (f - centroid).powi(order))
            .sum()
    };
    let spread = moment(2).sqrt();
    let (skewness, kurtosis) = if spread > 0.0 {
        (moment(3) / spread.powi(3), moment(4) / spread.powi(4))
    } else {
        (0.0, 0.0)
    };

    let energy_total: f64 = spec.mags.iter().map(|m| m * m).sum();
    let target = rolloff_fraction * energy_total;
    let mut cumulative = 0.0;
    let mut rolloff = f[n - 1];
    for (m, &freq) in spec.mags.iter().zip(f) {
        cumulative += m * m;
        if cumulative >= target {
            rolloff = freq;
            break;
        }
    }

    let flatness = if spec.mags.contains(&0.0) {
        0.0
    } else {
        let log_mean = spec.mags.iter().map(|m| m.max(FLATNESS_FLOOR).ln()).sum::<f64>() / n as f64;
        (log_mean.exp() / (total / n as f64)).clamp(0.0, 1.0)
    };

    let entropy = if n > 1 {
        let h: f64 = p.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum();
        (h / (n as f64).log2()).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(SpectralMeasures {
        centroid_hz: centroid,
        spread_hz: spread,
        rolloff_hz: rolloff,
        flatness,
        entropy,
        skewness,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn env(values: Vec<f64>, rate: f64) -> Envelope {
        Envelope {
            kind: EnvelopeKind::Am,
            values,
            rate_hz: rate,
            source_id: "t".into(),
        }
    }

    fn spectrum(freqs: Vec<f64>, mags: Vec<f64>) -> LfSpectrum {
        let resolution_hz = freqs.get(1).map_or(0.1, |f| f - freqs[0]);
        LfSpectrum {
            freqs_hz: freqs,
            mags,
            resolution_hz,
            kind: EnvelopeKind::Am,
        }
    }

    /// 0.1 Hz grid over (0, 10] with triangular lobes at the given peaks.
    fn handcrafted(peaks: &[(f64, f64)]) -> LfSpectrum {
        let freqs: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
        let mags = freqs
            .iter()
            .map(|&f| {
                peaks
                    .iter()
                    .map(|&(pf, pm)| (pm * (1.0 - (f - pf).abs() / 0.5)).max(0.0))
                    .fold(0.0, f64::max)
            })
            .collect();
        spectrum(freqs, mags)
    }

    fn modulated(fs: &[f64], secs: f64, rate: f64) -> Envelope {
        let n = (secs * rate) as usize;
        env(
            (0..n)
                .map(|i| {
                    let t = i as f64 / rate;
                    1.0 + fs.iter().map(|f| 0.5 * (2.0 * PI * f * t).cos()).sum::<f64>()
                })
                .collect(),
            rate,
        )
    }

    #[test]
    fn single_cosine_peaks_at_its_frequency() {
        let s = compute_lf_spectrum(&modulated(&[4.0], 10.0, 100.0), 4).unwrap();
        assert!((s.resolution_hz - 100.0 / 4096.0).abs() < 1e-15);
        let top = s.argmax_hz().unwrap();
        assert!((top - 4.0).abs() <= s.resolution_hz, "top {top}");
        assert_eq!(s.mags.iter().copied().fold(0.0, f64::max), 1.0);
        assert!(s.freqs_hz[0] > 0.0 && *s.freqs_hz.last().unwrap() <= LF_MAX_HZ);
    }

    #[test]
    fn constant_envelope_gives_zero_spectrum() {
        for c in [1.0, 0.3, 7.77] {
            let s = compute_lf_spectrum(&env(vec![c; 500], 100.0), 4).unwrap();
            assert!(s.is_zero(), "c={c}");
        }
    }

    #[test]
    fn two_cosines_give_two_unit_peaks() {
        let s = compute_lf_spectrum(&modulated(&[2.0, 5.0], 10.0, 100.0), 4).unwrap();
        let at = |f: f64| {
            let i = ((f / s.resolution_hz).round() as usize) - 1;
            s.mags[i - 2..=i + 2].iter().copied().fold(0.0, f64::max)
        };
        assert!((at(2.0) - 1.0).abs() < 0.05);
        assert!((at(5.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn spectrum_rejects_short_envelope() {
        assert!(matches!(
            compute_lf_spectrum(&env(vec![1.0; 150], 100.0), 4),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn r_formants_of_handcrafted_spectrum() {
        let s = handcrafted(&[(2.0, 1.0), (4.0, 0.8), (6.0, 0.6)]);
        let p = pick_r_formants(&s, 3, 0.3);
        assert_eq!(p.count, 3);
        for (got, want) in p.freqs_hz.iter().zip([2.0, 4.0, 6.0]) {
            assert!((got - want).abs() < 1e-9);
        }
        for (got, want) in p.mags.iter().zip([1.0, 0.8, 0.6]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn r_formant_sentinels() {
        let zero = spectrum((1..=100).map(|k| k as f64 * 0.1).collect(), vec![0.0; 100]);
        let p = pick_r_formants(&zero, 6, 0.3);
        assert_eq!(p.count, 0);
        assert_eq!(p.freqs_hz, vec![0.0; 6]);
        assert_eq!(p.mags, vec![0.0; 6]);

        let one = handcrafted(&[(5.0, 1.0)]);
        let p = pick_r_formants(&one, 6, 0.3);
        assert_eq!(p.count, 1);
        assert!((p.freqs_hz[0] - 5.0).abs() < 1e-9);
        assert_eq!(&p.freqs_hz[1..], &[0.0; 5]);
    }

    #[test]
    fn plateau_peak_reports_middle() {
        let s = spectrum(
            (1..=7).map(|k| k as f64).collect(),
            vec![0.0, 1.0, 1.0, 1.0, 0.0, 0.5, 0.0],
        );
        let p = find_peaks(&s, 0.0);
        assert_eq!(p, vec![(3.0, 1.0), (6.0, 0.5)]);
    }

    #[test]
    fn separation_prunes_smaller_neighbour() {
        let s = spectrum(
            (1..=9).map(|k| k as f64 * 0.1).collect(),
            vec![0.0, 1.0, 0.5, 0.8, 0.0, 0.0, 0.6, 0.2, 0.0],
        );
        let p = find_peaks(&s, 0.3);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].1, 1.0);
        assert_eq!(p[1].1, 0.6);
    }

    #[test]
    fn threshold_feature_examples() {
        let s = handcrafted(&[(2.0, 1.0), (4.0, 0.8), (6.0, 0.3)]);
        let t = threshold_features(&s, 0.5, 0.3).unwrap();
        assert_eq!(t.ndp, 2);
        assert!((t.mfdp_hz - 3.0).abs() < 1e-9);
        assert!((t.vfdp_hz2 - 1.0).abs() < 1e-9);

        let zero = spectrum((1..=100).map(|k| k as f64 * 0.1).collect(), vec![0.0; 100]);
        let t = threshold_features(&zero, 0.5, 0.3).unwrap();
        assert_eq!((t.ndp, t.mfdp_hz, t.vfdp_hz2), (0, 0.0, 0.0));

        let t = threshold_features(&handcrafted(&[(5.0, 1.0)]), 0.5, 0.3).unwrap();
        assert_eq!(t.ndp, 1);
        assert!((t.mfdp_hz - 5.0).abs() < 1e-9);
        assert_eq!(t.vfdp_hz2, 0.0);

        assert!(threshold_features(&zero, 1.0, 0.3).is_err());
        assert!(threshold_features(&zero, 0.0, 0.3).is_err());
    }

    #[test]
    fn dct_of_constant_and_basis_vector() {
        let n = 40;
        let c = 0.7;
        let x = dct2(&vec![c; n], 4).unwrap();
        assert!((x[0] - n as f64 * c).abs() < 1e-9);
        for v in &x[1..] {
            assert!(v.abs() < 1e-9);
        }
        let basis: Vec<f64> = (0..n)
            .map(|i| (PI / n as f64 * (i as f64 + 0.5) * 2.0).cos())
            .collect();
        let x = dct2(&basis, 4).unwrap();
        assert!((x[2] - n as f64 / 2.0).abs() < 1e-9);
        for q in [0, 1, 3] {
            assert!(x[q].abs() < 1e-9);
        }
        assert!(dct2(&[1.0, 2.0], 3).is_err());
        assert!(dct2(&[], 0).is_err());
    }

    #[test]
    fn uniform_spectrum_measures() {
        let freqs: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
        let m = spectral_measures(&spectrum(freqs, vec![1.0; 100]), 0.85).unwrap();
        assert!((m.flatness - 1.0).abs() < 1e-12);
        assert!((m.entropy - 1.0).abs() < 1e-12);
        assert!(m.skewness.abs() < 1e-12);
        assert!((m.centroid_hz - 5.05).abs() < 1e-12);
    }

    #[test]
    fn single_bin_measures() {
        let freqs: Vec<f64> = (1..=100).map(|k| k as f64 * 0.1).collect();
        let mut mags = vec![0.0; 100];
        mags[49] = 1.0;
        let m = spectral_measures(&spectrum(freqs, mags), 0.85).unwrap();
        assert!((m.centroid_hz - 5.0).abs() < 1e-12);
        assert_eq!(m.spread_hz, 0.0);
        assert!((m.rolloff_hz - 5.0).abs() < 1e-12);
        assert_eq!(m.flatness, 0.0);
        assert_eq!(m.entropy, 0.0);
        assert_eq!((m.skewness, m.kurtosis), (0.0, 0.0));
    }

    #[test]
    fn zero_spectrum_measures_error() {
        let s = spectrum(vec![0.1, 0.2], vec![0.0, 0.0]);
        assert!(matches!(spectral_measures(&s, 0.85), Err(Error::ZeroSpectrum)));
    }

    fn arb_spectrum() -> impl Strategy<Value = LfSpectrum> {
        prop::collection::vec(0.0f64..1.0, 8..200).prop_map(|mut mags| {
            let max = mags.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                mags.iter_mut().for_each(|m| *m /= max);
            } else {
                mags[0] = 1.0;
            }
            let n = mags.len();
            let res = LF_MAX_HZ / n as f64;
            spectrum((1..=n).map(|k| k as f64 * res).collect(), mags)
        })
    }

    proptest! {
        #[test]
        fn ndp_monotone_in_threshold(s in arb_spectrum(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let tl = threshold_features(&s, lo, 0.3).unwrap();
            let th = threshold_features(&s, hi, 0.3).unwrap();
            prop_assert!(tl.ndp >= th.ndp);
        }

        #[test]
        fn measure_ranges(s in arb_spectrum()) {
            let m = spectral_measures(&s, 0.85).unwrap();
            prop_assert!(m.centroid_hz > 0.0 && m.centroid_hz <= LF_MAX_HZ);
            prop_assert!((0.0..=1.0).contains(&m.entropy));
            prop_assert!((0.0..=1.0).contains(&m.flatness));
            if m.spread_hz > 0.0 {
                prop_assert!(m.kurtosis >= m.skewness * m.skewness + 1.0 - 1e-9);
            }
        }

        #[test]
        fn peaks_are_local_maxima_and_sorted(s in arb_spectrum()) {
            let p = pick_r_formants(&s, 6, 0.3);
            prop_assert!(p.count <= 6);
            for w in p.mags[..p.count].windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
            for i in 0..p.count {
                let idx = s.freqs_hz.iter().position(|&f| f == p.freqs_hz[i]).unwrap();
                prop_assert!(idx > 0 && idx + 1 < s.len());
                prop_assert!(s.mags[idx] >= s.mags[idx - 1] && s.mags[idx] >= s.mags[idx + 1]);
            }
        }

        #[test]
        fn formants_invariant_to_envelope_scale(scale in 0.01f64..100.0, f in 1.0f64..9.0) {
            let base = modulated(&[f], 4.0, 100.0);
            let scaled = env(base.values.iter().map(|v| v * scale).collect(), 100.0);
            let a = pick_r_formants(&compute_lf_spectrum(&base, 4).unwrap(), 6, 0.3);
            let b = pick_r_formants(&compute_lf_spectrum(&scaled, 4).unwrap(), 6, 0.3);
            prop_assert_eq!(&a.freqs_hz, &b.freqs_hz);
            let s = compute_lf_spectrum(&base, 4).unwrap();
            prop_assert!((a.freqs_hz[0] - f).abs() <= s.resolution_hz);
        }
    }
}
