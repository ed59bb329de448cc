//! Weighted least-squares fit of a model flop curve in the single parameter n̄.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::optimize::scan_minimize;
use super::SidebandRecord;
use crate::error::{Error, Result};

/// Confidence level of one standard deviation, 1 − 0.317.
pub const ONE_SIGMA_LEVEL: f64 = 0.683;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub gt: f64,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub nbar_hat: f64,
    pub variance: f64,
    pub objective_at_min: f64,
    pub points_used: usize,
}

/// Quantile of the F(d1, d2) distribution at probability `p`.
pub fn f_quantile(d1: f64, d2: f64, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("quantile level {p} outside [0, 1)")));
    }
    let dist = FisherSnedecor::new(d1, d2).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Red-sideband fit points with binomial standard errors.
///
/// A frequency of exactly 0 or 1 would give a zero error bar; those use the
/// Jeffreys-regularized frequency for σ only.
pub fn red_points(g: f64, records: &[SidebandRecord]) -> Vec<FitPoint> {
    records
        .iter()
        .filter(|r| r.shots_red > 0)
        .map(|r| {
            let f = r.f_red();
            let fs = if r.excited_red == 0 || r.excited_red == r.shots_red {
                (r.excited_red as f64 + 0.5) / (r.shots_red as f64 + 1.0)
            } else {
                f
            };
            FitPoint {
                gt: g * r.t(),
                value: f,
                sigma: (fs * (1.0 - fs) / r.shots_red as f64).sqrt(),
            }
        })
        .collect()
}

/// Minimizes S(n̄) = Σ ((P(gtᵢ, n̄) − xᵢ)/σᵢ)² over `bracket`.
///
/// The variance is [Σ(Aᵢ/σᵢ)²]⁻¹ (S_L − S(n̂)) with
/// S_L = S(n̂)(1 + F(1, m−1, 0.683)/(m−1)) and Aᵢ = ∂P/∂n̄ at n̂.
pub fn fit_estimator<M>(model: M, points: &[FitPoint], bracket: (f64, f64)) -> Result<FitResult>
where
    M: Fn(f64, f64) -> Result<f64>,
{
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut pts: Vec<FitPoint> = points.to_vec();
    if pts.len() < 2 {
        return Err(Error::NoUsableRecords(format!("fit needs at least 2 points, got {}", pts.len())));
    }
    if pts.iter().any(|p| !(p.sigma > 0.0 && p.sigma.is_finite())) {
        return Err(Error::InvalidInput("fit points need positive finite sigma".into()));
    }
    // Fixed summation order makes the result independent of input order.
    pts.sort_by(|a, b| {
        (a.gt, a.value, a.sigma)
            .partial_cmp(&(b.gt, b.value, b.sigma))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let objective = |n: f64| -> Result<f64> {
        let mut s = 0.0;
        for p in &pts {
            s += ((model(p.gt, n)? - p.value) / p.sigma).powi(2);
        }
        Ok(s)
    };
    let (n_hat, s_min) = scan_minimize(objective, lo, hi, 81, 1e-12)?;
    let edge = 1e-6 * (hi - lo);
    if (n_hat - lo < edge && lo > 0.0) || hi - n_hat < edge {
        return Err(Error::BracketEdge(n_hat));
    }
    let m = pts.len();
    let h = 1e-4 * (1.0 + n_hat);
    let (a, b) = if n_hat - h >= 0.0 { (n_hat - h, n_hat + h) } else { (n_hat, n_hat + 2.0 * h) };
    let mut info = 0.0;
    for p in &pts {
        let d = (model(p.gt, b)? - model(p.gt, a)?) / (b - a);
        info += (d / p.sigma).powi(2);
    }
    let f = f_quantile(1.0, (m - 1) as f64, ONE_SIGMA_LEVEL)?;
    let s_l = s_min * (1.0 + f / (m - 1) as f64);
    Ok(FitResult {
        nbar_hat: n_hat,
        variance: (s_l - s_min) / info,
        objective_at_min: s_min,
        points_used: m,
    })
}
