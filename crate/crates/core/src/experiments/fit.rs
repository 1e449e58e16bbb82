//! Power-law fits `y = prefactor * N^exponent` by least squares in log-log
//! space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of points accepted by [`fit_power_law`].
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub n_points: usize,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::Fit { needed: MIN_FIT_POINTS, reason: format!("got {} points", points.len()) });
    }
    if let Some(&(n, y)) = points.iter().find(|&&(n, y)| !(y > 0.0 && n > 0.0 && y.is_finite() && n.is_finite())) {
        return Err(Error::Fit { needed: MIN_FIT_POINTS, reason: format!("point ({n}, {y}) is not positive") });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let count = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / count;
    let my = ys.iter().sum::<f64>() / count;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit { needed: MIN_FIT_POINTS, reason: "all N values coincide".into() });
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    let ns = points.iter().map(|p| p.0);
    Ok(ScalingFit {
        exponent,
        prefactor: intercept.exp(),
        r_squared,
        n_min: ns.clone().fold(f64::INFINITY, f64::min),
        n_max: ns.fold(f64::NEG_INFINITY, f64::max),
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn linear_law() {
        let pts: Vec<(f64, f64)> = (6..=14).map(|n| (n as f64, 2.0 * n as f64)).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!((fit.prefactor - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_exponent() {
        let pts: Vec<(f64, f64)> = (6..=14).map(|n| (n as f64, 0.7)).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
        assert!((fit.prefactor - 0.7).abs() < 1e-12);
    }

    #[test]
    fn noisy_square_root_is_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = (6..=14)
            .map(|n| {
                let noise = 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0);
                (n as f64, 0.3 * (n as f64).sqrt() * noise)
            })
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent - 0.5).abs() < 0.02, "{}", fit.exponent);
        assert!((0.0..=1.0).contains(&fit.r_squared));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_power_law(&[(6.0, 1.0), (7.0, 1.0), (8.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(6.0, 1.0), (7.0, 0.0), (8.0, 1.0), (9.0, 1.0)]).is_err());
    }
}
