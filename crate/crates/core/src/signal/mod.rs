//! Complex I/Q signals, the Hilbert transform and I/Q demodulation.

mod iq32;
mod subsample;
mod synth;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;

pub use iq32::{read_iq32, write_iq32, IqSidecar};
pub use subsample::{extract_subsample, subsample_start, SubsampleSpec};
pub use synth::{
    baseline_waveform, default_profiles, synthesize_components, synthesize_emitter_signal,
    EmitterProfile, SignalComponents, BASELINE_CARRIERS, BASELINE_SYMBOL_LEN,
    INFERRED_SIGNAL_LENGTH,
};

/// Complex baseband time series with its sample rate and provenance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
    pub emitter_id: Option<u32>,
    pub snr_db: Option<f64>,
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(IqSignal {
            samples,
            sample_rate_hz,
            emitter_id: None,
            snr_db: None,
        })
    }

    pub fn with_labels(mut self, emitter_id: Option<u32>, snr_db: Option<f64>) -> Self {
        self.emitter_id = emitter_id;
        self.snr_db = snr_db;
        self
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Hilbert transform of a real sequence, computed with the `-i·sign(f)`
/// frequency-domain multiplier. DC and (for even lengths) Nyquist are zeroed.
pub fn hilbert_transform(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::invalid(format!(
            "hilbert transform needs at least 2 samples, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("hilbert transform input is not finite"));
    }
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::forward(&mut buf);
    let minus_i = Complex64::new(0.0, -1.0);
    for (k, v) in buf.iter_mut().enumerate() {
        // positive frequencies 1..ceil(n/2), negative above n/2
        if k == 0 || 2 * k == n {
            *v = Complex64::new(0.0, 0.0);
        } else if 2 * k < n {
            *v *= minus_i;
        } else {
            *v *= -minus_i;
        }
    }
    fft::inverse(&mut buf);
    Ok(buf.into_iter().map(|v| v.re).collect())
}

/// Shifts the real passband signal `x` down by `f0_hz`:
/// `I = x cos + H[x] sin`, `Q = H[x] cos - x sin`.
pub fn demodulate_iq(x: &[f64], f0_hz: f64, sample_rate_hz: f64) -> Result<IqSignal> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(f0_hz > 0.0 && f0_hz < sample_rate_hz / 2.0) {
        return Err(Error::invalid(format!(
            "center frequency {f0_hz} Hz outside (0, {}) Hz",
            sample_rate_hz / 2.0
        )));
    }
    let h = hilbert_transform(x)?;
    let w = 2.0 * PI * f0_hz / sample_rate_hz;
    let samples = x
        .iter()
        .zip(&h)
        .enumerate()
        .map(|(t, (&xv, &hv))| {
            let (s, c) = (w * t as f64).sin_cos();
            Complex64::new(xv * c + hv * s, hv * c - xv * s)
        })
        .collect();
    IqSignal::new(samples, sample_rate_hz)
}

/// Inverse of [`demodulate_iq`]: `x = I cos - Q sin`.
pub fn remodulate(iq: &IqSignal, f0_hz: f64) -> Vec<f64> {
    let w = 2.0 * PI * f0_hz / iq.sample_rate_hz();
    iq.samples()
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let (s, c) = (w * t as f64).sin_cos();
            v.re * c - v.im * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        for &(n, k) in &[(64usize, 3usize), (101, 7), (256, 100)] {
            let w = 2.0 * PI * k as f64 / n as f64;
            let x: Vec<f64> = (0..n).map(|t| (w * t as f64).cos()).collect();
            let want: Vec<f64> = (0..n).map(|t| (w * t as f64).sin()).collect();
            assert!(max_abs_diff(&hilbert_transform(&x).unwrap(), &want) <= 1e-9);
        }
    }

    #[test]
    fn hilbert_of_sine_is_negative_cosine() {
        let (n, k) = (128usize, 5usize);
        let w = 2.0 * PI * k as f64 / n as f64;
        let x: Vec<f64> = (0..n).map(|t| (w * t as f64).sin()).collect();
        let want: Vec<f64> = (0..n).map(|t| -(w * t as f64).cos()).collect();
        assert!(max_abs_diff(&hilbert_transform(&x).unwrap(), &want) <= 1e-9);
    }

    #[test]
    fn hilbert_kills_constant() {
        let h = hilbert_transform(&[3.5; 17]).unwrap();
        assert!(h.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hilbert_rejects_short_input() {
        assert!(matches!(
            hilbert_transform(&[]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(hilbert_transform(&[1.0]).is_err());
        assert!(hilbert_transform(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn demodulating_the_carrier_gives_unit_i() {
        let (n, fs, f0) = (1000usize, 1000.0, 50.0);
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * f0 * t as f64 / fs).cos())
            .collect();
        let iq = demodulate_iq(&x, f0, fs).unwrap();
        for s in &iq.samples()[10..n - 10] {
            assert!((s.re - 1.0).abs() <= 1e-9 && s.im.abs() <= 1e-9, "{s}");
        }
    }

    #[test]
    fn demodulating_offset_tone_gives_rotating_phasor() {
        let (n, fs, f0, d) = (1000usize, 1000.0, 100.0, 7.0);
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * (f0 + d) * t as f64 / fs).cos())
            .collect();
        let iq = demodulate_iq(&x, f0, fs).unwrap();
        for (t, s) in iq.samples().iter().enumerate().take(n - 10).skip(10) {
            let ph = 2.0 * PI * d * t as f64 / fs;
            assert!((s.re - ph.cos()).abs() <= 1e-6);
            assert!((s.im - ph.sin()).abs() <= 1e-6);
        }
    }

    #[test]
    fn demodulate_rejects_bad_center() {
        let x = vec![0.0; 16];
        assert!(demodulate_iq(&x, 0.0, 100.0).is_err());
        assert!(demodulate_iq(&x, 50.0, 100.0).is_err());
        assert!(demodulate_iq(&x, -1.0, 100.0).is_err());
    }

    proptest! {
        #[test]
        fn hilbert_twice_negates(coeffs in prop::collection::vec(-1.0f64..1.0, 1..20), n in 40usize..120) {
            // zero-mean, Nyquist-free band-limited sequence
            let x: Vec<f64> = (0..n).map(|t| {
                coeffs.iter().enumerate().map(|(j, c)| {
                    let k = 1 + j % ((n - 1) / 2);
                    c * (2.0 * PI * k as f64 * t as f64 / n as f64 + j as f64).cos()
                }).sum()
            }).collect();
            let hh = hilbert_transform(&hilbert_transform(&x).unwrap()).unwrap();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!(max_abs_diff(&hh, &neg) <= 1e-9);
        }

        #[test]
        fn demodulation_round_trips(x in prop::collection::vec(-2.0f64..2.0, 8..200), f0 in 1.0f64..49.0) {
            let iq = demodulate_iq(&x, f0, 100.0).unwrap();
            let back = remodulate(&iq, f0);
            prop_assert!(max_abs_diff(&back, &x) <= 1e-9);
        }
    }
}
