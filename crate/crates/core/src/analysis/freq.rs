//! Frequency estimation from sampled traces.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::TraceSeries;

/// Minimum number of samples for spectral estimation.
pub const MIN_FFT_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FreqError {
    #[error("no dominant frequency: signal is constant")]
    NoDominantFrequency,
    #[error("spectral estimate needs at least {MIN_FFT_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign changes of `value - reference`. Samples exactly at the reference are
/// skipped, so a run of them between opposite signs counts as one crossing.
pub fn count_crossings(values: &[f64], reference: f64) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for &v in values {
        let s = sign(v - reference);
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

/// Frequency from the crossing count: `crossings / (2 · duration)`.
pub fn zero_cross_frequency(trace: &TraceSeries<f64>, reference: f64) -> f64 {
    count_crossings(trace.values(), reference) as f64 / (2.0 * trace.duration())
}

/// Crossing instants of `value - reference`, linearly interpolated between samples.
pub fn crossing_times(trace: &TraceSeries<f64>, reference: f64) -> Vec<f64> {
    let (t, v) = (trace.times(), trace.values());
    let mut out = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for k in 0..v.len() {
        let d = v[k] - reference;
        if d == 0.0 {
            continue;
        }
        if let Some((tp, dp)) = last {
            if sign(d) != sign(dp) {
                out.push(tp + (t[k] - tp) * dp / (dp - d));
            }
        }
        last = Some((t[k], d));
    }
    out
}

/// Frequency from interpolated crossing instants: `(N - 1) / (2 (t_N - t_1))`.
/// Measures whole half-periods only, so it does not carry the ±1-count
/// quantization of [`zero_cross_frequency`]. Returns 0 with fewer than two crossings.
pub fn zero_cross_frequency_interpolated(trace: &TraceSeries<f64>, reference: f64) -> f64 {
    let c = crossing_times(trace, reference);
    if c.len() < 2 {
        return 0.0;
    }
    (c.len() - 1) as f64 / (2.0 * (c[c.len() - 1] - c[0]))
}

/// Dominant frequency of the mean-removed, Hann-windowed spectrum, refined by
/// parabolic interpolation of the log-magnitude peak.
pub fn fft_dominant_frequency(trace: &TraceSeries<f64>) -> Result<f64, FreqError> {
    let n = trace.len();
    if n < MIN_FFT_SAMPLES {
        return Err(FreqError::TooFewSamples(n));
    }
    let mean = trace.mean();
    let scale = trace.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spread = trace.values().iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    if !(spread > 1e-12 * scale) || spread == 0.0 {
        return Err(FreqError::NoDominantFrequency);
    }

    let padded = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = trace
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    buf.resize(padded, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);

    let mag: Vec<f64> = buf[..=padded / 2].iter().map(|c| c.norm()).collect();
    let peak = (1..mag.len())
        .max_by(|&a, &b| mag[a].total_cmp(&mag[b]))
        .ok_or(FreqError::NoDominantFrequency)?;
    if mag[peak] == 0.0 {
        return Err(FreqError::NoDominantFrequency);
    }
    let mut bin = peak as f64;
    if peak + 1 < mag.len() && mag[peak - 1] > 0.0 && mag[peak + 1] > 0.0 {
        let (a, b, c) = (mag[peak - 1].ln(), mag[peak].ln(), mag[peak + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            bin += 0.5 * (a - c) / denom;
        }
    }
    Ok(bin / (padded as f64 * trace.dt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(f: f64, fs: f64, secs: f64, offset: f64) -> TraceSeries<f64> {
        let n = (fs * secs).round() as usize + 1;
        TraceSeries::uniform(0.0, 1.0 / fs, (0..n).map(|k| (2.0 * PI * f * k as f64 / fs).sin() + offset).collect())
            .unwrap()
    }

    #[test]
    fn constant_signal_has_no_crossings() {
        let tr = TraceSeries::uniform(0.0, 0.01, vec![2.0; 100]).unwrap();
        assert_eq!(zero_cross_frequency(&tr, 2.0), 0.0);
        assert_eq!(zero_cross_frequency_interpolated(&tr, 2.0), 0.0);
        assert_eq!(fft_dominant_frequency(&tr), Err(FreqError::NoDominantFrequency));
    }

    #[test]
    fn five_hertz_sine() {
        let tr = tone(5.0, 1000.0, 1.0, 0.0);
        assert!((zero_cross_frequency(&tr, 0.0) - 5.0).abs() <= 0.5);
        assert!((zero_cross_frequency_interpolated(&tr, 0.0) - 5.0).abs() < 1e-6);
    }

    #[test]
    fn offset_sine_about_its_offset() {
        let tr = tone(12.0, 1000.0, 2.0, 0.3);
        assert!((zero_cross_frequency(&tr, 0.3) - 12.0).abs() <= 0.25);
    }

    #[test]
    fn samples_on_the_reference_count_once() {
        let v = [1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        assert_eq!(count_crossings(&v, 0.0), 2);
    }

    #[test]
    fn fft_single_tone() {
        let f = fft_dominant_frequency(&tone(5.0, 1000.0, 2.0, 0.0)).unwrap();
        assert!((f - 5.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn fft_two_tones_picks_the_strong_one() {
        let fs = 1000.0;
        let v = (0..2001)
            .map(|k| {
                let t = k as f64 / fs;
                (2.0 * PI * 5.0 * t).sin() + 0.2 * (2.0 * PI * 20.0 * t).sin()
            })
            .collect();
        let f = fft_dominant_frequency(&TraceSeries::uniform(0.0, 1.0 / fs, v).unwrap()).unwrap();
        assert!((f - 5.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn fft_needs_samples() {
        let tr = TraceSeries::uniform(0.0, 0.1, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(fft_dominant_frequency(&tr), Err(FreqError::TooFewSamples(3)));
    }

    proptest::proptest! {
        #[test]
        fn zero_cross_and_fft_agree_within_a_bin(f in 2.0f64..40.0, phase in 0.0f64..6.28, secs in 1.0f64..3.0) {
            let fs = 500.0;
            let n = (fs * secs) as usize;
            let tr = TraceSeries::uniform(0.0, 1.0 / fs, (0..n).map(|k| (2.0 * PI * f * k as f64 / fs + phase).sin()).collect()).unwrap();
            let bin = 1.0 / tr.duration();
            let zc = zero_cross_frequency(&tr, 0.0);
            let spec = fft_dominant_frequency(&tr).unwrap();
            proptest::prop_assert!((zc - spec).abs() <= bin, "zc {} fft {} bin {}", zc, spec, bin);
        }
    }
}
