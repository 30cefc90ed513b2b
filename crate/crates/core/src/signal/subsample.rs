use rand::Rng;
use serde::{Deserialize, Serialize};

use super::IqSignal;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Window length and stream key for random subsample extraction. Windows are
/// drawn with replacement and may overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsampleSpec {
    pub length_points: usize,
    pub rng_seed: u64,
    pub replacement: bool,
}

impl SubsampleSpec {
    pub fn new(length_points: usize, rng_seed: u64) -> Self {
        SubsampleSpec {
            length_points,
            rng_seed,
            replacement: true,
        }
    }
}

impl Default for SubsampleSpec {
    fn default() -> Self {
        SubsampleSpec::new(1120, 0)
    }
}

/// Start index of window `draw_index`, uniform over `[0, signal_len - length]`.
pub fn subsample_start(signal_len: usize, spec: &SubsampleSpec, draw_index: u64) -> Result<usize> {
    if spec.length_points == 0 || spec.length_points > signal_len {
        return Err(Error::invalid(format!(
            "window of {} points does not fit in a {signal_len}-point signal",
            spec.length_points
        )));
    }
    let span = signal_len - spec.length_points;
    if span == 0 {
        return Ok(0);
    }
    let mut rng = stream(spec.rng_seed, Purpose::Subsample, draw_index, 0);
    Ok(rng.random_range(0..=span))
}

/// Extracts the `draw_index`-th random contiguous window of `signal`.
pub fn extract_subsample(
    signal: &IqSignal,
    spec: &SubsampleSpec,
    draw_index: u64,
) -> Result<IqSignal> {
    let start = subsample_start(signal.len(), spec, draw_index)?;
    let window = signal.samples()[start..start + spec.length_points].to_vec();
    Ok(IqSignal::new(window, signal.sample_rate_hz())?
        .with_labels(signal.emitter_id, signal.snr_db))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn ramp(n: usize) -> IqSignal {
        IqSignal::new((0..n).map(|i| Complex64::new(i as f64, 0.0)).collect(), 1.0).unwrap()
    }

    #[test]
    fn window_fraction_is_56_ppm() {
        let frac = 1120.0 / super::super::INFERRED_SIGNAL_LENGTH as f64;
        assert!((frac - 56e-6).abs() < 1e-12);
        let s = subsample_start(
            super::super::INFERRED_SIGNAL_LENGTH,
            &SubsampleSpec::default(),
            3,
        )
        .unwrap();
        assert!(s <= super::super::INFERRED_SIGNAL_LENGTH - 1120);
    }

    #[test]
    fn full_length_window_is_whole_signal() {
        let sig = ramp(50).with_labels(Some(4), Some(3.0));
        let w = extract_subsample(&sig, &SubsampleSpec::new(50, 9), 17).unwrap();
        assert_eq!(w, sig);
    }

    #[test]
    fn windows_are_deterministic_and_contiguous() {
        let sig = ramp(10_000);
        let spec = SubsampleSpec::new(280, 42);
        let a = extract_subsample(&sig, &spec, 5).unwrap();
        let b = extract_subsample(&sig, &spec, 5).unwrap();
        assert_eq!(a, b);
        let s0 = a.samples()[0].re;
        assert!(a
            .samples()
            .iter()
            .enumerate()
            .all(|(i, v)| v.re == s0 + i as f64));
    }

    #[test]
    fn oversize_window_is_rejected() {
        assert!(extract_subsample(&ramp(10), &SubsampleSpec::new(11, 0), 0).is_err());
    }

    #[test]
    fn start_indices_are_uniform() {
        // chi-square over 32 bins, 31 dof, critical value at alpha = 0.001
        const CRITICAL: f64 = 61.098_306_081_058_13;
        let len = 100_000 + 31;
        let spec = SubsampleSpec::new(32, 7);
        let span = len - 32 + 1;
        let mut bins = [0u64; 32];
        let draws = 100_000u64;
        for d in 0..draws {
            let s = subsample_start(len, &spec, d).unwrap();
            bins[s * 32 / span] += 1;
        }
        let expected = draws as f64 / 32.0;
        let chi2: f64 = bins
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < CRITICAL, "chi2 = {chi2}");
    }
}
