//! Weighted straight-line fit of temperature against delay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingPoint {
    pub delay_s: f64,
    pub nbar: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingFit {
    /// Quanta per second.
    pub rate: f64,
    pub rate_sigma: f64,
    pub intercept: f64,
    pub intercept_sigma: f64,
    pub covariance: f64,
    pub chi2: f64,
    pub points_used: usize,
}

pub fn heating_fit(points: &[HeatingPoint]) -> Result<HeatingFit> {
    if points.len() < 2 {
        return Err(Error::NoUsableRecords("heating fit needs at least two points".into()));
    }
    if points.iter().any(|p| !(p.sigma > 0.0)) {
        return Err(Error::InvalidInput("heating points need positive sigma".into()));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = p.sigma.powi(-2);
        s += w;
        sx += w * p.delay_s;
        sy += w * p.nbar;
        sxx += w * p.delay_s * p.delay_s;
        sxy += w * p.delay_s * p.nbar;
    }
    let det = s * sxx - sx * sx;
    if det <= 0.0 {
        return Err(Error::InvalidInput("delays must not all coincide".into()));
    }
    let rate = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2 = points
        .iter()
        .map(|p| ((p.nbar - intercept - rate * p.delay_s) / p.sigma).powi(2))
        .sum();
    Ok(HeatingFit {
        rate,
        rate_sigma: (s / det).sqrt(),
        intercept,
        intercept_sigma: (sxx / det).sqrt(),
        covariance: -sx / det,
        chi2,
        points_used: points.len(),
    })
}
