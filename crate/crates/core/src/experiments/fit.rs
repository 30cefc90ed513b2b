use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line `y = slope·x + intercept` with its R².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "linear fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid(
            "linear fit needs at least two distinct x values",
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
    })
}

/// Error-reduction factors after `n` measurements: averaging Gaussian
/// errors gives `1/√n`; voting at eight votes per decade gives `10^(-n/8)`.
pub fn bagging_comparison(n: u64) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::invalid("bagging comparison needs n >= 1"));
    }
    let n = n as f64;
    Ok((1.0 / n.sqrt(), 10f64.powf(-n / 8.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..15)
            .map(|i| -(i as f64))
            .map(|x| (x, -7.77 * x + 12.98))
            .collect();
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope + 7.77).abs() < 1e-12);
        assert!((f.intercept - 12.98).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_points_interpolate() {
        let f = linear_fit(&[(1.0, 2.0), (3.0, -1.0)]).unwrap();
        assert_eq!(f.r_squared, 1.0);
        assert_eq!(f.slope, -1.5);
    }

    #[test]
    fn alternating_noise() {
        // y = x ± 1 on x = 0..9; hand OLS: sxx = 82.5, sxy = 82.5 - 5 = 77.5
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| (i as f64, i as f64 + if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let f = linear_fit(&pts).unwrap();
        assert!((f.slope - 77.5 / 82.5).abs() < 1e-12);
        assert!((0.9..=1.1).contains(&f.slope));
        assert!(f.r_squared < 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_fit(&[(1.0, 2.0)]).is_err());
        assert!(linear_fit(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert_eq!(
            linear_fit(&[(0.0, 4.0), (1.0, 4.0)]).unwrap().r_squared,
            1.0
        );
    }

    #[test]
    fn bagging_factors() {
        let (g, v) = bagging_comparison(72).unwrap();
        assert!((g - 0.118).abs() <= 0.001);
        assert_eq!(v, 1e-9);
        let (g, v) = bagging_comparison(1).unwrap();
        assert_eq!(g, 1.0);
        // 10^(-1/8), not 2^(-1/4)
        assert!((v - 0.749_894_209_332_455_8).abs() < 1e-15);
        let (g, v) = bagging_comparison(8).unwrap();
        assert!((g - 0.35355).abs() < 1e-5);
        assert_eq!(v, 0.1);
        assert!(bagging_comparison(0).is_err());
    }
}
