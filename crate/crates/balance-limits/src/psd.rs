//! Welch power spectral density: Hann-windowed, mean-removed segments,
//! averaged periodograms, one-sided density.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{CliError, Result};

pub const DEFAULT_OVERLAP: f64 = 0.5;
pub const MAX_OVERLAP: f64 = 0.9;

/// One-sided spectral density; `power` has units of signal² per Hz.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Frequency resolution in Hz.
    pub fn bin_width(&self) -> f64 {
        match self.freqs.as_slice() {
            [a, b, ..] => b - a,
            _ => 0.0,
        }
    }

    /// Largest-power bin above DC as `(freq, power)`.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.freqs.iter().zip(&self.power).skip(1).fold(
            None,
            |best: Option<(f64, f64)>, (&f, &p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((f, p)),
            },
        )
    }

    /// `Σ power · Δf`, the variance the spectrum accounts for.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_width()
    }
}

/// Welch estimate of the PSD of `signal` sampled every `dt` seconds, using
/// segments of `segment_len` samples overlapping by the fraction `overlap`.
pub fn welch(signal: &[f64], dt: f64, segment_len: usize, overlap: f64) -> Result<Spectrum> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::data(
            "dt",
            format!("sample spacing must be > 0, got {dt}"),
        ));
    }
    if segment_len < 2 {
        return Err(CliError::data("segment_len", "must be at least 2"));
    }
    if signal.len() < segment_len {
        return Err(CliError::data(
            "segment_len",
            format!(
                "trajectory too short: {} samples for segments of {segment_len}",
                signal.len()
            ),
        ));
    }
    if !(0.0..=MAX_OVERLAP).contains(&overlap) {
        return Err(CliError::data(
            "overlap",
            format!("must lie in [0, {MAX_OVERLAP}], got {overlap}"),
        ));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(CliError::data("signal", "contains non-finite samples"));
    }

    let n = segment_len;
    let step = (n - (overlap * n as f64).round() as usize).max(1);
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect();
    let win_energy: f64 = window.iter().map(|w| w * w).sum();
    let fs = 1.0 / dt;
    let bins = n / 2 + 1;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut acc = vec![0.0; bins];
    let mut segments = 0usize;
    let mut start = 0;
    while start + n <= signal.len() {
        let seg = &signal[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * win_energy * segments as f64);
    let power = acc
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            // DC and, for even lengths, the Nyquist bin have no mirror image.
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                1.0
            } else {
                2.0
            };
            a * scale * one_sided
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    Ok(Spectrum { freqs, power })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_peak() {
        let dt = 1e-3;
        let z: Vec<f64> = (0..60_000)
            .map(|i| (std::f64::consts::TAU * 1.5 * i as f64 * dt).sin())
            .collect();
        let s = welch(&z, dt, 8192, DEFAULT_OVERLAP).unwrap();
        let (f, _) = s.peak().unwrap();
        assert!((f - 1.5).abs() <= s.bin_width(), "peak at {f}");
        // Variance of a unit sinusoid is 1/2.
        assert!((s.total_power() - 0.5).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_arguments() {
        let z = vec![0.0; 100];
        assert!(welch(&z, 1e-3, 200, 0.5)
            .unwrap_err()
            .to_string()
            .contains("too short"));
        assert!(welch(&z, 1e-3, 50, 0.95)
            .unwrap_err()
            .to_string()
            .contains("overlap"));
        assert!(welch(&z, 0.0, 50, 0.5)
            .unwrap_err()
            .to_string()
            .contains("dt"));
        assert!(welch(&z, 1e-3, 1, 0.5).is_err());
    }

    #[test]
    fn frequencies_ascend_from_zero() {
        let z: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.1).cos()).collect();
        let s = welch(&z, 0.01, 256, 0.0).unwrap();
        assert_eq!(s.freqs.len(), 129);
        assert_eq!(s.freqs[0], 0.0);
        assert!((s.freqs[128] - 50.0).abs() < 1e-12);
        assert!(s.freqs.windows(2).all(|w| w[1] > w[0]));
    }
}
