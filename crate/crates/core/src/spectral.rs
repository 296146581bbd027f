//! Discrete Fourier spectra of sampled time series and the exponential
//! correlation-length fit.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Amplitude spectrum of a uniformly sampled series.
#[derive(Debug, Clone)]
pub struct Spectrum<S> {
    /// Frequencies in MHz (cycles per microsecond), DC first.
    pub freqs_mhz: Vec<S>,
    /// DFT amplitudes |X_k| for k = 0 ..= n/2.
    pub amplitudes: Vec<S>,
    /// Frequency resolution 1/horizon.
    pub bin_mhz: S,
}

impl<S: Scalar> Spectrum<S> {
    /// Largest local maximum at or above `f_min` (frequency, amplitude).
    pub fn dominant_peak(&self, f_min: S) -> Option<(S, S)> {
        self.local_maxima(f_min).into_iter().next()
    }

    /// Local maxima sorted by descending amplitude.
    pub fn local_maxima(&self, f_min: S) -> Vec<(S, S)> {
        let a = &self.amplitudes;
        let mut peaks = Vec::new();
        for k in 1..a.len().saturating_sub(1) {
            if self.freqs_mhz[k] < f_min {
                continue;
            }
            if a[k] > a[k - 1] && a[k] >= a[k + 1] {
                peaks.push((self.freqs_mhz[k], a[k]));
            }
        }
        peaks.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
        peaks
    }

    /// Amplitude at the bin closest to `f_mhz`.
    pub fn amplitude_near(&self, f_mhz: S) -> S {
        let k = (f_mhz / self.bin_mhz).round().to_f64_lossy().max(0.0) as usize;
        self.amplitudes.get(k).copied().unwrap_or(S::zero())
    }
}

/// Plain DFT of a real series sampled at uniform spacing `dt_us`; the mean
/// is subtracted before transforming so oscillation lines are not swamped
/// by the DC bin.
pub fn dft_spectrum<S: Scalar>(series: &[S], dt_us: S) -> Result<Spectrum<S>> {
    if series.len() < 32 {
        return Err(Error::InvalidInput(format!(
            "need at least 32 samples, got {}",
            series.len()
        )));
    }
    if dt_us <= S::zero() {
        return Err(Error::NonUniformSampling("nonpositive sample spacing".into()));
    }
    let n = series.len();
    let mean = series.iter().copied().sum::<S>() / S::of(n as f64);
    let horizon = dt_us * S::of(n as f64);
    let bin = S::one() / horizon;
    let mut freqs = Vec::with_capacity(n / 2 + 1);
    let mut amps = Vec::with_capacity(n / 2 + 1);
    let tau = S::of(std::f64::consts::TAU);
    for k in 0..=(n / 2) {
        let mut re = S::zero();
        let mut im = S::zero();
        let w = tau * S::of(k as f64) / S::of(n as f64);
        for (j, &x) in series.iter().enumerate() {
            let phase = w * S::of(j as f64);
            let v = x - mean;
            re = re + v * phase.cos();
            im = im - v * phase.sin();
        }
        freqs.push(bin * S::of(k as f64));
        amps.push((re * re + im * im).sqrt());
    }
    Ok(Spectrum { freqs_mhz: freqs, amplitudes: amps, bin_mhz: bin })
}

/// Least-squares exponential correlation length from (distance, correlator)
/// samples: fits `ln C = a - l / xi` over the entries with positive
/// correlator. Returns `(xi, usable)`; `usable = false` (with `xi = 0`)
/// when fewer than three distinct distances carry positive weight.
pub fn correlation_length<S: Scalar>(points: &[(S, S)]) -> (S, bool) {
    let mut usable: Vec<(S, S)> = points
        .iter()
        .filter(|(_, c)| *c > S::of(1e-12))
        .map(|&(l, c)| (l, c.ln()))
        .collect();
    usable.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    usable.dedup_by(|a, b| (a.0 - b.0).abs() < S::of(1e-9));
    if usable.len() < 3 {
        return (S::zero(), false);
    }
    let n = S::of(usable.len() as f64);
    let sx = usable.iter().map(|p| p.0).sum::<S>();
    let sy = usable.iter().map(|p| p.1).sum::<S>();
    let sxx = usable.iter().map(|p| p.0 * p.0).sum::<S>();
    let sxy = usable.iter().map(|p| p.0 * p.1).sum::<S>();
    let denom = n * sxx - sx * sx;
    if denom.abs() < S::of(1e-12) {
        return (S::zero(), false);
    }
    let slope = (n * sxy - sx * sy) / denom;
    if slope < -S::of(1e-12) {
        (-S::one() / slope, true)
    } else {
        (S::infinity(), true)
    }
}
