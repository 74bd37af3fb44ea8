use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::moments::MomentSet;
use crate::resolvent::Threshold;

/// Residuals below this are treated as solver noise at the smallest eps.
pub const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFit {
    /// Least-squares `eps^2` coefficient of `z - (±m)` on `[eps^2, eps^3, eps^4]`.
    pub c2_hat: C64,
    /// `∓(m/2) U^2` for the threshold entry `U`.
    pub c2_target: C64,
    /// Least-squares `eps^3` coefficient of `z - (two-term prediction)` on
    /// `[eps^3, eps^4]`.
    pub c3_hat: C64,
    /// The printed third-order coefficient `±m U F`.
    pub c3_target: C64,
    /// `∓m U F`, the coefficient of the `kappa`-form expansion.
    pub c3_target_kappa: C64,
    /// Log-log slope of `|z - three-term prediction|` against `eps`.
    pub residual_exponent: f64,
    /// Same against the `kappa`-form prediction.
    pub residual_exponent_kappa: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub eps: f64,
    /// `(m - z) / (2 m eps^2 log^2 eps)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonPoint {
    pub eps: f64,
    pub lambda_s: f64,
    /// `|z - m - lambdaS|`.
    pub residual: f64,
    /// `sqrt(eps)|lambdaS| + eps^3`.
    pub band: f64,
    /// `residual / band`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRangeFit {
    pub ratios: Vec<RatioPoint>,
    /// `|ratio - 1|` never grows as `eps` decreases.
    pub monotone_toward_one: bool,
    pub comparison: Vec<ComparisonPoint>,
    /// Largest ratio between `c` at consecutive couplings.
    pub c_spread: Option<f64>,
}

/// Least squares with a real design matrix and complex data.
fn lstsq(eps: &[f64], powers: &[i32], y: &[C64]) -> Result<Vec<C64>> {
    let a = DMatrix::from_fn(eps.len(), powers.len(), |i, j| eps[i].powi(powers[j]));
    let svd = a.svd(true, true);
    let solve = |b: DVector<f64>| {
        svd.solve(&b, 1e-14).map_err(|e| Error::Convergence(format!("least squares: {e}")))
    };
    let re = solve(DVector::from_iterator(y.len(), y.iter().map(|z| z.re)))?;
    let im = solve(DVector::from_iterator(y.len(), y.iter().map(|z| z.im)))?;
    Ok(re.iter().zip(im.iter()).map(|(r, i)| C64::new(*r, *i)).collect())
}

/// Largest `max/min` ratio between neighbours.
pub fn step_spread(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0].max(w[1]) / w[0].min(w[1])).fold(1.0, f64::max)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-log slope of `residual` against `eps`, dropping the smallest `eps`
/// when its residual is at the noise floor.
fn residual_exponent(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.len() > 2 && pts.last().is_some_and(|p| p.1 < NOISE_FLOOR) {
        pts.pop();
    }
    let pts: Vec<_> = pts.into_iter().filter(|p| p.1 > 0.0).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    ols_slope(&x, &y)
}

/// Expansion coefficients from `(eps, z)` pairs near the given threshold.
pub fn fit_coefficients(series: &[(f64, C64)], m: f64, moments: &MomentSet, threshold: Threshold) -> Result<CoefficientFit> {
    if series.len() < 4 {
        return Err(Error::InvalidParameter(format!("coefficient fits need at least 4 rows, got {}", series.len())));
    }
    let (s, u, f) = match threshold {
        Threshold::PlusM => (1.0, moments.u[(0, 0)], moments.f_plus[(0, 0)]),
        Threshold::MinusM => (-1.0, moments.u[(1, 1)], moments.f_minus[(1, 1)]),
    };
    let eps: Vec<f64> = series.iter().map(|p| p.0).collect();
    let c2_target = -u * u * (s * m / 2.0);
    let shifted: Vec<C64> = series.iter().map(|(_, z)| z - s * m).collect();
    let c2_hat = lstsq(&eps, &[2, 3, 4], &shifted)?[0];
    let after2: Vec<C64> = series.iter().map(|(e, z)| z - s * m - c2_target * e * e).collect();
    let c3_hat = lstsq(&eps, &[3, 4], &after2)?[0];
    let c3_target = u * f * (s * m);
    let c3_target_kappa = -c3_target;
    let resid = |c3: C64, c4: C64| -> Vec<(f64, f64)> {
        series
            .iter()
            .map(|(e, z)| (*e, (z - s * m - c2_target * e * e - c3 * e.powi(3) - c4 * e.powi(4)).norm()))
            .collect()
    };
    let residual_exponent = residual_exponent(&resid(c3_target, C64::from(0.0)));
    let residual_exponent_kappa = self::residual_exponent(&resid(c3_target_kappa, -f * f * (s * m / 2.0)));
    Ok(CoefficientFit {
        c2_hat,
        c2_target,
        c3_hat,
        c3_target,
        c3_target_kappa,
        residual_exponent,
        residual_exponent_kappa,
        points_used: series.len(),
    })
}

/// Long-range ratios and, where `lambda_s` is known, the comparison band.
pub fn fit_long_range(series: &[(f64, C64)], m: f64, lambda_s: &[Option<f64>]) -> Result<LongRangeFit> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter("long-range fits need at least 2 rows".into()));
    }
    if series.iter().any(|p| !(p.0 > 0.0 && p.0 < 1.0)) {
        return Err(Error::InvalidParameter("long-range fits need eps in (0, 1)".into()));
    }
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| series[b].0.total_cmp(&series[a].0));
    let ratios: Vec<RatioPoint> = order
        .iter()
        .map(|&i| {
            let (eps, z) = series[i];
            RatioPoint { eps, ratio: (m - z.re) / (2.0 * m * eps * eps * eps.ln().powi(2)) }
        })
        .collect();
    let monotone_toward_one = ratios.windows(2).all(|w| (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs());
    let comparison: Vec<ComparisonPoint> = order
        .iter()
        .filter_map(|&i| {
            let (eps, z) = series[i];
            let lambda_s = (*lambda_s.get(i)?)?;
            let residual = (z - m - lambda_s).norm();
            let band = eps.sqrt() * lambda_s.abs() + eps.powi(3);
            Some(ComparisonPoint { eps, lambda_s, residual, band, c: residual / band })
        })
        .collect();
    let c: Vec<f64> = comparison.iter().map(|p| p.c).collect();
    let c_spread = (c.len() >= 2).then(|| step_spread(&c));
    Ok(LongRangeFit { ratios, monotone_toward_one, comparison, c_spread })
}
