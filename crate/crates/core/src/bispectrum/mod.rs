//! Third-order spectral estimation and conversion to feature images.
//!
//! The estimator uses circular lags and a time average for the expectation,
//! so the frequency-domain triple product equals the 2-D Fourier transform
//! of the sample third-order cumulant exactly:
//!
//! ```text
//! B(k1, k2) = X(k1) X(k2) conj(X(k1 + k2)) / N
//! ```

mod image;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::signal::IqSignal;

pub use image::{
    apply_colormap, downsample_power, featurize, jet_rgb, quantize_rescale, read_bsp, write_bsp,
    write_png, BispectrumImage, PowerGrid, QuantGrid, Scaling,
};

/// Full N×N complex bispectrum, row index `k1`, column index `k2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BispectrumGrid {
    n: usize,
    values: Vec<Complex64>,
}

impl BispectrumGrid {
    fn zeros(n: usize) -> Self {
        BispectrumGrid {
            n,
            values: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn get(&self, k1: usize, k2: usize) -> Complex64 {
        self.values[k1 * self.n + k2]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Builds a grid from raw row-major values.
    pub fn from_values(n: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "{} values do not form a {n}x{n} grid",
                values.len()
            )));
        }
        Ok(BispectrumGrid { n, values })
    }

    /// Largest entrywise deviation relative to the larger of the two grid maxima.
    pub fn relative_error(&self, other: &BispectrumGrid) -> f64 {
        assert_eq!(self.n, other.n);
        let scale = self
            .values
            .iter()
            .chain(&other.values)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

fn centered(sample: &IqSignal) -> Vec<Complex64> {
    let x = sample.samples();
    let mean = x.iter().sum::<Complex64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Bispectrum of one subsample via the DFT triple product.
pub fn bispectrum_fft(sample: &IqSignal) -> Result<BispectrumGrid> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "bispectrum needs at least 4 samples, got {n}"
        )));
    }
    let mut x = centered(sample);
    fft::forward(&mut x);
    let inv_n = 1.0 / n as f64;
    let conj: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
    let mut grid = BispectrumGrid::zeros(n);
    for (k1, row) in grid.values.chunks_exact_mut(n).enumerate() {
        let a = x[k1] * inv_n;
        for (k2, out) in row.iter_mut().enumerate() {
            let k3 = if k1 + k2 >= n { k1 + k2 - n } else { k1 + k2 };
            *out = a * x[k2] * conj[k3];
        }
    }
    Ok(grid)
}

/// Largest length accepted by [`bispectrum_lag_oracle`].
pub const LAG_ORACLE_MAX_N: usize = 32;

/// Direct transcription of the cumulant definition: the 2-D DFT over circular
/// lags of `(1/N) Σ_t conj(x(t)) x(t+τ1) x(t+τ2)`. O(N⁴); for testing.
pub fn bispectrum_lag_oracle(sample: &IqSignal) -> Result<BispectrumGrid> {
    let n = sample.len();
    if n > LAG_ORACLE_MAX_N {
        return Err(Error::invalid(format!(
            "lag-domain oracle refuses N = {n} > {LAG_ORACLE_MAX_N}"
        )));
    }
    if n < 4 {
        return Err(Error::invalid(format!(
            "bispectrum needs at least 4 samples, got {n}"
        )));
    }
    let x = centered(sample);
    let mut cumulant = vec![Complex64::new(0.0, 0.0); n * n];
    for t1 in 0..n {
        for t2 in 0..n {
            let s: Complex64 = (0..n)
                .map(|t| x[t].conj() * x[(t + t1) % n] * x[(t + t2) % n])
                .sum();
            cumulant[t1 * n + t2] = s / n as f64;
        }
    }
    let mut grid = BispectrumGrid::zeros(n);
    let w = -2.0 * std::f64::consts::PI / n as f64;
    for k1 in 0..n {
        for k2 in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for t1 in 0..n {
                for t2 in 0..n {
                    let phase = w * ((k1 * t1 + k2 * t2) % n) as f64;
                    acc += Complex64::from_polar(1.0, phase) * cumulant[t1 * n + t2];
                }
            }
            grid.values[k1 * n + k2] = acc;
        }
    }
    Ok(grid)
}
