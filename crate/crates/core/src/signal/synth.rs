//! Synthetic emitters: a shared multicarrier baseline passed through
//! per-emitter hardware impairments, plus calibrated Gaussian noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::IqSignal;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Signal length implied by a 1120-point window being 56 ppm of a recording.
/// The source never states the length directly; this is an inferred default.
pub const INFERRED_SIGNAL_LENGTH: usize = 20_000_000;

/// Samples per baseline symbol.
pub const BASELINE_SYMBOL_LEN: usize = 64;

/// Occupied subcarrier bins of the baseline symbol. The band sits entirely at
/// positive frequency so that quadratic products, cubic products and the I/Q
/// image land in distinguishable regions of the bispectrum.
pub const BASELINE_CARRIERS: std::ops::RangeInclusive<usize> = 2..=13;

/// Hardware impairment parameters of one transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterProfile {
    pub emitter_id: u32,
    /// Memoryless polynomial `a1 u + a2 u^2 + a3 u^3`.
    pub poly_coeffs: [f64; 3],
    pub iq_gain_imbalance: f64,
    pub iq_phase_skew_rad: f64,
    /// `[re, im]`
    pub dc_offset: [f64; 2],
}

impl EmitterProfile {
    /// A distortion-free transmitter.
    pub fn ideal(emitter_id: u32) -> Self {
        EmitterProfile {
            emitter_id,
            poly_coeffs: [1.0, 0.0, 0.0],
            iq_gain_imbalance: 1.0,
            iq_phase_skew_rad: 0.0,
            dc_offset: [0.0, 0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.poly_coeffs.iter().all(|v| v.is_finite())
            && self.iq_gain_imbalance.is_finite()
            && self.iq_phase_skew_rad.is_finite()
            && self.dc_offset.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(format!(
                "emitter {} has non-finite impairment parameters",
                self.emitter_id
            )));
        }
        if self.poly_coeffs[0] == 0.0 {
            return Err(Error::invalid(format!(
                "emitter {} has no linear term",
                self.emitter_id
            )));
        }
        Ok(())
    }

    /// Applies polynomial distortion, I/Q imbalance and DC offset to one sample.
    pub fn impair(&self, u: Complex64) -> Complex64 {
        let [a1, a2, a3] = self.poly_coeffs;
        let u2 = u * u;
        let v = u * a1 + u2 * a2 + u2 * u * a3;
        let (s, c) = self.iq_phase_skew_rad.sin_cos();
        let q = self.iq_gain_imbalance * (v.im * c - v.re * s);
        Complex64::new(v.re + self.dc_offset[0], q + self.dc_offset[1])
    }
}

/// Impairment profiles for `count` emitters. The first four are fixed; the
/// rest are drawn deterministically around the same operating point.
pub fn default_profiles(count: usize) -> Vec<EmitterProfile> {
    const FIXED: [([f64; 3], f64, f64, [f64; 2]); 4] = [
        ([1.0, 0.10, 0.0], 1.0, 0.0, [0.0, 0.0]),
        ([1.0, 0.30, 0.05], 1.1, 0.1, [0.01, 0.0]),
        ([1.0, 0.20, 0.15], 0.85, -0.2, [0.0, 0.02]),
        ([1.0, 0.45, -0.05], 1.05, 0.3, [-0.01, 0.01]),
    ];
    (0..count)
        .map(|i| {
            if let Some(&(poly_coeffs, g, phi, dc)) = FIXED.get(i) {
                return EmitterProfile {
                    emitter_id: i as u32,
                    poly_coeffs,
                    iq_gain_imbalance: g,
                    iq_phase_skew_rad: phi,
                    dc_offset: dc,
                };
            }
            let mut rng = stream(0, Purpose::Profiles, i as u64, 0);
            EmitterProfile {
                emitter_id: i as u32,
                poly_coeffs: [
                    1.0,
                    rng.random_range(0.0..0.3),
                    rng.random_range(-0.06..0.06),
                ],
                iq_gain_imbalance: rng.random_range(0.9..1.1),
                iq_phase_skew_rad: rng.random_range(-0.15..0.15),
                dc_offset: [rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)],
            }
        })
        .collect()
}

/// Emitter-independent multicarrier waveform with unit mean power.
///
/// Each symbol of [`BASELINE_SYMBOL_LEN`] samples is a sum of unit-amplitude
/// complex exponentials on [`BASELINE_CARRIERS`] with uniformly random phases.
pub fn baseline_waveform(num_points: usize, rng_seed: u64) -> Vec<Complex64> {
    let carriers: Vec<usize> = BASELINE_CARRIERS.collect();
    let scale = 1.0 / (carriers.len() as f64).sqrt();
    let table: Vec<Vec<Complex64>> = carriers
        .iter()
        .map(|&k| {
            (0..BASELINE_SYMBOL_LEN)
                .map(|t| {
                    Complex64::from_polar(
                        scale,
                        2.0 * PI * (k * t) as f64 / BASELINE_SYMBOL_LEN as f64,
                    )
                })
                .collect()
        })
        .collect();
    let mut rng = stream(rng_seed, Purpose::Baseline, 0, 0);
    let mut out = Vec::with_capacity(num_points);
    let mut symbol = vec![Complex64::new(0.0, 0.0); BASELINE_SYMBOL_LEN];
    while out.len() < num_points {
        symbol
            .iter_mut()
            .for_each(|s| *s = Complex64::new(0.0, 0.0));
        for row in &table {
            let phase = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            for (s, e) in symbol.iter_mut().zip(row) {
                *s += phase * e;
            }
        }
        let take = (num_points - out.len()).min(BASELINE_SYMBOL_LEN);
        out.extend_from_slice(&symbol[..take]);
    }
    out
}

/// Impaired signal and additive noise, kept apart.
#[derive(Debug, Clone)]
pub struct SignalComponents {
    pub clean: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Generates the impaired waveform and the noise sequence separately.
/// `snr_db = +inf` disables noise.
pub fn synthesize_components(
    profile: &EmitterProfile,
    num_points: usize,
    snr_db: f64,
    rng_seed: u64,
) -> Result<SignalComponents> {
    profile.validate()?;
    if num_points == 0 {
        return Err(Error::invalid("num_points must be positive"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!(
            "snr_db must be a number, got {snr_db}"
        )));
    }
    let clean: Vec<Complex64> = baseline_waveform(num_points, rng_seed)
        .into_iter()
        .map(|u| profile.impair(u))
        .collect();
    let noise = if snr_db == f64::INFINITY {
        vec![Complex64::new(0.0, 0.0); num_points]
    } else {
        let sigma = (mean_power(&clean) / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
        let mut rng = stream(rng_seed, Purpose::Noise, profile.emitter_id as u64, 0);
        (0..num_points)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * sigma
            })
            .collect()
    };
    Ok(SignalComponents { clean, noise })
}

/// Synthesizes `num_points` samples (at least 1120) of an emitter's signal.
pub fn synthesize_emitter_signal(
    profile: &EmitterProfile,
    num_points: usize,
    snr_db: f64,
    rng_seed: u64,
) -> Result<IqSignal> {
    if num_points < 1120 {
        return Err(Error::invalid(format!(
            "signal needs at least 1120 points, got {num_points}"
        )));
    }
    synthesize_raw(profile, num_points, snr_db, rng_seed, 1.0)
}

pub(crate) fn synthesize_raw(
    profile: &EmitterProfile,
    num_points: usize,
    snr_db: f64,
    rng_seed: u64,
    sample_rate_hz: f64,
) -> Result<IqSignal> {
    let SignalComponents { clean, noise } =
        synthesize_components(profile, num_points, snr_db, rng_seed)?;
    let samples = clean.into_iter().zip(noise).map(|(c, n)| c + n).collect();
    Ok(IqSignal::new(samples, sample_rate_hz)?.with_labels(
        Some(profile.emitter_id),
        snr_db.is_finite().then_some(snr_db),
    ))
}
