//! Maximum-likelihood estimate of n̄ from single-ion excitation under a
//! bichromatic drive.

use serde::{Deserialize, Serialize};

use super::optimize::scan_minimize;
use crate::crystal::ModeSpec;
use crate::dynamics::bichromatic_excitation;
use crate::error::{Error, Result};

/// Counts may be fractional so that expected counts can be fed directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BichromaticPoint {
    pub gt: f64,
    pub shots: f64,
    pub excited: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BichromaticRecord {
    pub t_s: f64,
    pub shots: u64,
    pub excited: u64,
}

/// Bichromatic data file: the mode, the index of the read-out ion and its
/// excitation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BichromaticData {
    pub mode: ModeSpec,
    pub ion: usize,
    pub records: Vec<BichromaticRecord>,
}

impl BichromaticData {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut d: BichromaticData = serde_json::from_str(s)?;
        d.mode = d.mode.validated()?;
        if d.ion >= d.mode.n_ions() {
            return Err(Error::InvalidInput(format!("ion index {} out of range", d.ion)));
        }
        Ok(d)
    }

    pub fn points(&self) -> Vec<BichromaticPoint> {
        self.records
            .iter()
            .map(|r| BichromaticPoint {
                gt: self.mode.g * r.t_s,
                shots: r.shots as f64,
                excited: r.excited as f64,
            })
            .collect()
    }

    pub fn eta(&self) -> f64 {
        self.mode.eta[self.ion]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BichromaticEstimate {
    pub nbar_hat: f64,
    pub variance: f64,
    pub log_likelihood: f64,
    pub points_used: usize,
}

const THETA_MAX: f64 = 1e6;

/// Binomial log-likelihood as a function of θ = 2n̄ + 1.
fn log_likelihood(eta: f64, pts: &[BichromaticPoint], theta: f64) -> f64 {
    pts.iter()
        .map(|p| {
            let a = 2.0 * (p.gt * eta).powi(2);
            let z = (-a * theta).exp();
            let prob = 0.5 * (1.0 - z);
            let mut l = (p.shots - p.excited) * (0.5 * (1.0 + z)).ln();
            if p.excited > 0.0 {
                l += p.excited * if prob > 0.0 { prob.ln() } else { f64::NEG_INFINITY };
            }
            l
        })
        .sum()
}

/// Observed information −∂²ℓ/∂θ².
fn observed_information(eta: f64, pts: &[BichromaticPoint], theta: f64) -> f64 {
    pts.iter()
        .map(|p| {
            let a = 2.0 * (p.gt * eta).powi(2);
            let z = (-a * theta).exp();
            let prob = 0.5 * (1.0 - z);
            let d1 = 0.5 * a * z;
            let d2 = -0.5 * a * a * z;
            let q = 1.0 - prob;
            let mut v = -(p.shots - p.excited) * (d2 / q + (d1 / q).powi(2));
            if p.excited > 0.0 {
                v += p.excited * (d2 / prob - (d1 / prob).powi(2));
            }
            -v
        })
        .sum()
}

pub fn estimate_bichromatic(eta_i: f64, points: &[BichromaticPoint]) -> Result<BichromaticEstimate> {
    if eta_i == 0.0 || !eta_i.is_finite() {
        return Err(Error::InvalidInput("read-out ion must couple to the mode".into()));
    }
    let pts: Vec<BichromaticPoint> = points.iter().copied().filter(|p| p.shots > 0.0 && p.gt > 0.0).collect();
    if pts.is_empty() {
        return Err(Error::NoUsableRecords("no bichromatic points with gt > 0".into()));
    }
    if pts.iter().any(|p| p.excited < 0.0 || p.excited > p.shots) {
        return Err(Error::InvalidInput("excited count outside [0, shots]".into()));
    }
    if pts.iter().all(|p| p.excited == 0.0) {
        return Err(Error::Uninformative("no excitations recorded".into()));
    }
    if pts.iter().all(|p| p.excited >= 0.5 * p.shots) {
        return Err(Error::Uninformative("all points at or above the contrast limit 1/2".into()));
    }
    let nll = |s: f64| Ok(-log_likelihood(eta_i, &pts, s.exp()));
    let (s, v) = scan_minimize(nll, 0.0, THETA_MAX.ln(), 241, 1e-13)?;
    if THETA_MAX.ln() - s < 1e-6 {
        return Err(Error::Uninformative("likelihood keeps increasing with temperature".into()));
    }
    let theta = s.exp();
    let info = observed_information(eta_i, &pts, theta);
    if !(info > 0.0) {
        return Err(Error::Uninformative("zero observed information".into()));
    }
    Ok(BichromaticEstimate {
        nbar_hat: (theta - 1.0) / 2.0,
        variance: 1.0 / (4.0 * info),
        log_likelihood: -v,
        points_used: pts.len(),
    })
}

/// Noiseless expected counts for a given temperature.
pub fn expected_points(eta_i: f64, nbar: f64, gts: &[f64], shots: f64) -> Vec<BichromaticPoint> {
    gts.iter()
        .map(|&gt| BichromaticPoint {
            gt,
            shots,
            excited: shots * bichromatic_excitation(eta_i, nbar, gt),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_round_trip() {
        let gts: Vec<f64> = (1..=10).map(|k| 0.3 * k as f64).collect();
        let e = estimate_bichromatic(0.5, &expected_points(0.5, 1.0, &gts, 1000.0)).unwrap();
        assert!((e.nbar_hat - 1.0).abs() < 1e-6);
        let z = estimate_bichromatic(0.5, &expected_points(0.5, 0.0, &gts, 1000.0)).unwrap();
        assert!(z.nbar_hat.abs() < 1e-6);
    }

    #[test]
    fn information_matches_finite_difference() {
        let gts = [0.5, 1.0, 1.5];
        let pts = expected_points(0.4, 0.7, &gts, 500.0);
        let (t, h) = (2.4, 1e-4);
        let fd = -(log_likelihood(0.4, &pts, t + h) - 2.0 * log_likelihood(0.4, &pts, t)
            + log_likelihood(0.4, &pts, t - h))
            / (h * h);
        let an = observed_information(0.4, &pts, t);
        assert!((fd - an).abs() / an < 1e-4);
    }

    #[test]
    fn uninformative_data() {
        let zero = [BichromaticPoint { gt: 1.0, shots: 100.0, excited: 0.0 }];
        assert!(matches!(estimate_bichromatic(0.5, &zero), Err(Error::Uninformative(_))));
        let half = [BichromaticPoint { gt: 1.0, shots: 100.0, excited: 50.0 }];
        assert!(matches!(estimate_bichromatic(0.5, &half), Err(Error::Uninformative(_))));
    }
}
