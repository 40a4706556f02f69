//! Small numeric helpers shared by the envelope and spectrum modules.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Analytic signal of a real sequence via the frequency-domain method:
/// keep DC (and Nyquist for even lengths), double positive frequencies,
/// zero negative frequencies, inverse transform.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let positive_end = if n.is_multiple_of(2) { half } else { half + 1 };
    for c in buf.iter_mut().take(positive_end).skip(1) {
        *c *= 2.0;
    }
    for c in buf.iter_mut().skip(half + 1) {
        *c = Complex64::new(0.0, 0.0);
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv);
    buf
}

/// Magnitudes of the first `n_bins` bins of the DFT of `x` zero-padded to `n_fft`.
pub fn padded_magnitudes(x: &[f64], n_fft: usize, n_bins: usize) -> Vec<f64> {
    debug_assert!(x.len() <= n_fft);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    FftPlanner::<f64>::new()
        .plan_fft_forward(n_fft)
        .process(&mut buf);
    buf.iter().take(n_bins).map(|c| c.norm()).collect()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Median; the mean of the two central values for even lengths.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Centered moving average; the window shrinks at the edges instead of
/// padding with zeros.
pub fn centered_moving_average(x: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 || x.is_empty() {
        return x.to_vec();
    }
    let half = width / 2;
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Linear interpolation of (xs, ys) at `t`; holds the end values outside
/// the sampled range. `xs` must be ascending.
pub fn interp_linear(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    match xs.len() {
        0 => 0.0,
        1 => ys[0],
        n => {
            if t <= xs[0] {
                return ys[0];
            }
            if t >= xs[n - 1] {
                return ys[n - 1];
            }
            let j = xs.partition_point(|&v| v <= t);
            let (x0, x1) = (xs[j - 1], xs[j]);
            let w = (t - x0) / (x1 - x0);
            ys[j - 1] * (1.0 - w) + ys[j] * w
        }
    }
}
