//! Temperature estimators built on sideband data.

pub mod bichromatic;
pub mod fisher;
pub mod fit;
pub mod heating;
pub mod optimize;

use serde::{Deserialize, Serialize};

use crate::crystal::ModeSpec;
use crate::error::{Error, Result};
use crate::ratio::{self, EstimateAtTime, RatioPolynomial};

/// Shot counts for one interrogation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidebandRecord {
    pub t_s: f64,
    pub shots_red: u64,
    pub excited_red: u64,
    pub shots_blue: u64,
    pub excited_blue: u64,
}

impl SidebandRecord {
    pub fn new(t_s: f64, shots_red: u64, excited_red: u64, shots_blue: u64, excited_blue: u64) -> Self {
        SidebandRecord {
            t_s,
            shots_red,
            excited_red,
            shots_blue,
            excited_blue,
        }
    }

    pub fn t(&self) -> f64 {
        self.t_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_red == 0 || self.shots_blue == 0 {
            return Err(Error::InvalidInput("record has zero shots".into()));
        }
        if self.excited_red > self.shots_red || self.excited_blue > self.shots_blue {
            return Err(Error::InvalidInput("excited count exceeds shots".into()));
        }
        if !(self.t().is_finite() && self.t() >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid time {}", self.t())));
        }
        Ok(())
    }

    pub fn f_red(&self) -> f64 {
        self.excited_red as f64 / self.shots_red as f64
    }

    pub fn f_blue(&self) -> f64 {
        self.excited_blue as f64 / self.shots_blue as f64
    }
}

/// Measurement file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub mode: ModeSpec,
    pub records: Vec<SidebandRecord>,
}

impl MeasurementSet {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut m: MeasurementSet = serde_json::from_str(s)?;
        m.mode = m.mode.validated()?;
        Ok(m)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded {
    pub t_s: f64,
    pub gt: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub per_time: Vec<EstimateAtTime>,
    pub nbar_final: f64,
    pub sigma_final: f64,
    pub discarded: Vec<Discarded>,
    pub cutoff_gt: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioOptions {
    /// Drop per-time estimates farther than this many sample standard
    /// deviations from the weighted mean, then recombine.
    pub outlier_sigma: Option<f64>,
}

/// Jeffreys-regularized frequency used when a plug-in moment would vanish.
fn jeffreys(k: u64, n: u64) -> f64 {
    (k as f64 + 0.5) / (n as f64 + 1.0)
}

/// Ratio estimate for one record, or the reason it cannot be used.
pub fn estimate_record(
    poly: &RatioPolynomial,
    g: f64,
    rec: &SidebandRecord,
    cutoff_gt: f64,
) -> std::result::Result<EstimateAtTime, String> {
    rec.validate().map_err(|e| e.to_string())?;
    let gt = g * rec.t();
    if gt > cutoff_gt {
        return Err(format!("gt = {gt} beyond cutoff {cutoff_gt}"));
    }
    let (fr, fb) = (rec.f_red(), rec.f_blue());
    if fr >= fb {
        return Err(format!("f_r = {fr} is not below f_b = {fb}"));
    }
    let r = ratio::naive_ratio(fr, fb);
    let nbar_raw = poly.invert(r, gt).map_err(|e| e.to_string())?;
    let r1 = poly.derivative(nbar_raw, gt);
    let r2 = poly.second_derivative(nbar_raw, gt);
    if r1 <= 0.0 {
        return Err(format!("ratio polynomial not increasing at nbar = {nbar_raw}"));
    }
    let regularized = fr == 0.0 || fb == 1.0;
    let (pr, pb) = if regularized {
        (
            jeffreys(rec.excited_red, rec.shots_red),
            jeffreys(rec.excited_blue, rec.shots_blue),
        )
    } else {
        (fr, fb)
    };
    let (bias, variance) = ratio::crystal_moments(pr, pb, r1, r2, rec.shots_red, rec.shots_blue)
        .map_err(|e| e.to_string())?;
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(format!("non-positive variance {variance}"));
    }
    Ok(EstimateAtTime {
        gt,
        t_s: rec.t(),
        f_red: fr,
        f_blue: fb,
        ratio: r,
        nbar_raw,
        nbar_hat: nbar_raw - bias,
        bias,
        variance,
        shots_red: rec.shots_red,
        shots_blue: rec.shots_blue,
        regularized,
    })
}

/// Bias and variance of a per-time estimate with the plug-in values taken at
/// `nbar` instead of at the record's own noisy frequencies. The blue
/// frequency is kept and the red probability follows from R_t(nbar).
fn moments_at(poly: &RatioPolynomial, e: &EstimateAtTime, nbar: f64) -> Option<(f64, f64)> {
    let n = nbar.max(0.0);
    let r1 = poly.derivative(n, e.gt);
    if !(r1 > 0.0) {
        return None;
    }
    let pb = if e.f_blue >= 1.0 {
        jeffreys(e.shots_blue, e.shots_blue)
    } else {
        e.f_blue
    };
    let r = poly.value(n, e.gt);
    let pr = pb * r / (1.0 + r);
    let (bias, variance) = ratio::crystal_moments(
        pr,
        pb,
        r1,
        poly.second_derivative(n, e.gt),
        e.shots_red,
        e.shots_blue,
    )
    .ok()?;
    (variance > 0.0 && variance.is_finite()).then_some((bias, variance))
}

const POOL_MAX_ITER: usize = 200;
const POOL_TOL: f64 = 1e-12;

/// Re-evaluates every per-time bias and variance at the combined estimate
/// and iterates to self-consistency. Per-record plug-in weights correlate
/// with the noise of each record, which pulls the weighted mean towards
/// low draws at short times.
fn pool(poly: &RatioPolynomial, per_time: &mut [EstimateAtTime]) -> Result<(f64, f64)> {
    let pairs = |v: &[EstimateAtTime]| v.iter().map(|e| (e.nbar_hat, e.variance)).collect::<Vec<_>>();
    let mut mean = weighted_mean(&pairs(per_time)).0;
    let mut step = f64::INFINITY;
    for _ in 0..POOL_MAX_ITER {
        for e in per_time.iter_mut() {
            if let Some((bias, variance)) = moments_at(poly, e, mean) {
                e.bias = bias;
                e.variance = variance;
                e.nbar_hat = e.nbar_raw - bias;
            }
        }
        let (next, sigma) = weighted_mean(&pairs(per_time));
        step = (next - mean).abs();
        mean = next;
        if step <= POOL_TOL * (1.0 + mean.abs()) {
            return Ok((mean, sigma));
        }
    }
    Err(Error::NoConvergence {
        iterations: POOL_MAX_ITER,
        residual: step,
    })
}

/// Inverse-variance weighted mean and its standard deviation.
pub fn weighted_mean(values: &[(f64, f64)]) -> (f64, f64) {
    let (mut sw, mut swx) = (0.0, 0.0);
    for &(x, var) in values {
        sw += 1.0 / var;
        swx += x / var;
    }
    (swx / sw, sw.powf(-0.5))
}

/// Σ (n̄ − n̄ᵢ)²/σᵢ², minimized by [`weighted_mean`].
pub fn weighted_objective(nbar: f64, values: &[(f64, f64)]) -> f64 {
    values.iter().map(|&(x, var)| (nbar - x).powi(2) / var).sum()
}

pub fn estimate_sideband_ratio(mode: &ModeSpec, records: &[SidebandRecord], cutoff_gt: f64) -> Result<EstimateReport> {
    estimate_sideband_ratio_with(mode, records, cutoff_gt, &RatioOptions::default())
}

/// Bias-corrected ratio estimates per record combined by inverse-variance
/// weighting, with the per-time moments evaluated at the combined estimate.
pub fn estimate_sideband_ratio_with(
    mode: &ModeSpec,
    records: &[SidebandRecord],
    cutoff_gt: f64,
    options: &RatioOptions,
) -> Result<EstimateReport> {
    let poly = RatioPolynomial::for_mode(mode);
    let mut per_time = Vec::new();
    let mut discarded = Vec::new();
    for rec in records {
        match estimate_record(&poly, mode.g, rec, cutoff_gt) {
            Ok(e) => per_time.push(e),
            Err(reason) => discarded.push(Discarded {
                t_s: rec.t(),
                gt: mode.g * rec.t(),
                reason,
            }),
        }
    }
    if per_time.is_empty() {
        return Err(Error::NoUsableRecords(format!(
            "{} record(s) given, none usable below gt = {cutoff_gt}",
            records.len()
        )));
    }
    let (mut mean, mut sigma) = pool(&poly, &mut per_time)?;
    if let Some(k) = options.outlier_sigma {
        if per_time.len() >= 3 {
            let m = per_time.len() as f64;
            let avg = per_time.iter().map(|e| e.nbar_hat).sum::<f64>() / m;
            let sd = (per_time.iter().map(|e| (e.nbar_hat - avg).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
            let (keep, drop): (Vec<_>, Vec<_>) = per_time
                .into_iter()
                .partition(|e| (e.nbar_hat - mean).abs() <= k * sd);
            for e in drop {
                discarded.push(Discarded {
                    t_s: e.t_s,
                    gt: e.gt,
                    reason: format!("outlier: {} is more than {k} sample std from {mean}", e.nbar_hat),
                });
            }
            if keep.is_empty() {
                return Err(Error::NoUsableRecords("all estimates rejected as outliers".into()));
            }
            per_time = keep;
            (mean, sigma) = pool(&poly, &mut per_time)?;
        }
    }
    Ok(EstimateReport {
        per_time,
        nbar_final: mean,
        sigma_final: sigma,
        discarded,
        cutoff_gt,
    })
}
