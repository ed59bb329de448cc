//! Fisher information of binary sideband measurements and the resulting
//! Cramér–Rao bounds.
//!
//! Uncertainties are reported as σ·√𝒩, the standard deviation for a single
//! shot in total; divide by √𝒩 for 𝒩 shots.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::optimize::{find_root, minimize, scan_minimize};
use crate::dynamics::{bichromatic_excitation, ExcitationModel};
use crate::error::{Error, Result};
use crate::ratio::{self, RatioPolynomial};

/// Per-shot Fisher information of a two-outcome measurement,
/// (∂P)²(1/P + 1/(1−P)).
pub fn fisher_binary(p: f64, dp: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateProbability(p));
    }
    Ok(dp * dp * (1.0 / p + 1.0 / (1.0 - p)))
}

/// Per-shot Fisher information with 𝒩/2 shots on each sideband.
pub fn sideband_fisher(model: &dyn ExcitationModel, nbar: f64, gt: f64) -> Result<f64> {
    let (pr, pb) = model.probabilities(nbar, gt)?;
    let (dr, db) = model.derivatives(nbar, gt)?;
    Ok(0.5 * (fisher_binary(pr, dr)? + fisher_binary(pb, db)?))
}

/// Roots of `f` on (lo, hi], located by sign changes on a grid of spacing
/// `step` and refined with Brent's method.
pub fn scan_roots<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev = (lo, f(lo)?);
    for k in 1..=n {
        let x = (lo + step * k as f64).min(hi);
        let v = f(x)?;
        if v == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && prev.1.signum() != v.signum() {
            roots.push(find_root(&f, prev.0, x, 1e-13)?);
        }
        prev = (x, v);
    }
    Ok(roots)
}

/// Zeros of the blue-sideband Fisher information of a single ion in gt > 0,
/// i.e. zeros of ∂P_b/∂n̄.
pub fn single_ion_blue_fisher_zeros(nbar: f64, gt_max: f64) -> Result<Vec<f64>> {
    let n_max = crate::thermal::cutoff(nbar, 1e-14) + 1;
    let db = |gt: f64| Ok(ratio::single_ion_flop_derivatives(nbar, gt, n_max).1);
    scan_roots(db, 1e-3, gt_max, 1e-3)
}

/// Largest u²e^{−2u}/(1 − e^{−2u}) over u > 0.
fn bichromatic_gain() -> f64 {
    static GAIN: OnceLock<f64> = OnceLock::new();
    *GAIN.get_or_init(|| {
        let g = |u: f64| Ok(-(u * u * (-2.0 * u).exp() / (1.0 - (-2.0 * u).exp())));
        -minimize(g, 0.05, 5.0, 1e-12).expect("smooth objective").1
    })
}

/// Per-shot Fisher information of the bichromatic single-ion signal.
pub fn bichromatic_fisher(eta_i: f64, nbar: f64, gt: f64) -> Result<f64> {
    let p = bichromatic_excitation(eta_i, nbar, gt);
    let a = 2.0 * (gt * eta_i).powi(2);
    let dp = a * (-a * (2.0 * nbar + 1.0)).exp();
    fisher_binary(p, dp)
}

/// Cramér–Rao bound σ·√𝒩 for the bichromatic estimator at the optimal time.
///
/// With u = 2(gtη)²(2n̄+1) the information is 4g(u)/(2n̄+1)² where
/// g(u) = u²e^{−2u}/(1 − e^{−2u}), independent of η and of the crystal.
pub fn bichromatic_crb(nbar: f64) -> f64 {
    (2.0 * nbar + 1.0) / (2.0 * bichromatic_gain().sqrt())
}

/// σ·√𝒩 of the ratio estimator at the true probabilities.
pub fn estimator_sigma(model: &dyn ExcitationModel, poly: &RatioPolynomial, nbar: f64, gt: f64) -> Result<f64> {
    let (pr, pb) = model.probabilities(nbar, gt)?;
    let r1 = poly.derivative(nbar, gt);
    Ok(ratio::crystal_variance(pr, pb, r1, 1.0)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbRow {
    pub nbar: f64,
    /// Ratio-estimator σ·√𝒩 minimized over gt ≤ cutoff.
    pub estimator_sigma: f64,
    pub estimator_gt: f64,
    pub cutoff_gt: f64,
    /// Sideband Cramér–Rao bound σ·√𝒩 minimized over gt ≤ `gt_max`.
    pub sideband_crb: f64,
    pub sideband_gt: f64,
    pub bichromatic_crb: f64,
}

/// The three uncertainty curves versus n̄.
pub fn crb_curves<C>(
    model: &dyn ExcitationModel,
    poly: &RatioPolynomial,
    nbar_grid: &[f64],
    cutoff: C,
    gt_max: f64,
) -> Result<Vec<CrbRow>>
where
    C: Fn(f64) -> Result<f64>,
{
    nbar_grid
        .iter()
        .map(|&nbar| {
            let cut = cutoff(nbar)?.min(gt_max);
            let lo = 1e-3 * cut;
            let est = |gt: f64| estimator_sigma(model, poly, nbar, gt).or(Ok(f64::INFINITY));
            let (estimator_gt, estimator_sigma) = scan_minimize(est, lo, cut, 121, 1e-9)?;
            let crb = |gt: f64| {
                Ok(match sideband_fisher(model, nbar, gt) {
                    Ok(f) if f > 0.0 => f.powf(-0.5),
                    _ => f64::INFINITY,
                })
            };
            let (sideband_gt, sideband_crb) = scan_minimize(crb, 1e-3 * gt_max, gt_max, 601, 1e-9)?;
            Ok(CrbRow {
                nbar,
                estimator_sigma,
                estimator_gt,
                cutoff_gt: cut,
                sideband_crb,
                sideband_gt,
                bichromatic_crb: bichromatic_crb(nbar),
            })
        })
        .collect()
}
