use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use sei_core::bispectrum::{bispectrum_fft, downsample_power, featurize, Scaling};
use sei_core::rng::{stream, Purpose};
use sei_core::signal::{
    extract_subsample, synthesize_emitter_signal, EmitterProfile, IqSignal, SubsampleSpec,
};

fn gaussian(seed: u64, draw: u64, n: usize) -> IqSignal {
    let mut rng = stream(seed, Purpose::Noise, draw, 0);
    let s = (0..n)
        .map(|_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) / 2f64.sqrt()
        })
        .collect();
    IqSignal::new(s, 1.0).unwrap()
}

fn mean_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).sum::<f64>() / v.len() as f64
}

#[test]
fn averaging_suppresses_gaussian_noise() {
    let (n, m) = (64, 200);
    let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
    let mut single = 0.0;
    for draw in 0..m {
        let b = bispectrum_fft(&gaussian(11, draw, n)).unwrap();
        if draw == 0 {
            single = mean_norm(b.values());
        }
        acc.iter_mut()
            .zip(b.values())
            .for_each(|(a, v)| *a += v / m as f64);
    }
    let ratio = single / mean_norm(&acc);
    // independent averages shrink like sqrt(M) ≈ 14
    assert!(ratio >= 5.0, "suppression factor {ratio}");
}

#[test]
fn cubic_term_changes_the_mean_image() {
    let base = EmitterProfile {
        poly_coeffs: [1.0, 0.0, 0.0],
        ..EmitterProfile::ideal(0)
    };
    let cubic = EmitterProfile {
        poly_coeffs: [1.0, 0.0, 0.05],
        ..base.clone()
    };
    let mean_power = |p: &EmitterProfile| {
        let sig = synthesize_emitter_signal(p, 100_000, 30.0, 5).unwrap();
        let spec = SubsampleSpec::new(1120, 9);
        let mut acc = vec![0.0; 224 * 224];
        for draw in 0..100 {
            let w = extract_subsample(&sig, &spec, draw).unwrap();
            let pw = downsample_power(&bispectrum_fft(&w).unwrap(), 5).unwrap();
            acc.iter_mut()
                .zip(&pw.values)
                .for_each(|(a, v)| *a += v / 100.0);
        }
        acc
    };
    let (a, b) = (mean_power(&base), mean_power(&cubic));
    let diff: f64 = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(
        diff / norm > 0.01,
        "relative Frobenius distance {}",
        diff / norm
    );
}

#[test]
fn full_size_window_gives_224_square_image() {
    let sig = synthesize_emitter_signal(&EmitterProfile::ideal(3), 5000, 10.0, 1).unwrap();
    let w = extract_subsample(&sig, &SubsampleSpec::new(1120, 2), 0).unwrap();
    for scaling in [Scaling::Linear, Scaling::LogMagnitude] {
        let img = featurize(&w, 5, scaling).unwrap();
        assert_eq!(
            (img.width, img.height, img.pixels.len()),
            (224, 224, 224 * 224 * 3)
        );
        assert_eq!(img.source_emitter, Some(3));
        assert_eq!(featurize(&w, 5, scaling).unwrap(), img);
    }
}
