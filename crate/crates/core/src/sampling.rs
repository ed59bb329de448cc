//! Seeded binomial sampling of sideband campaigns, Monte Carlo checks of the
//! estimator moments, and cutoff times of the truncated ratio polynomial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crystal::{com, ModeSpec};
use crate::dynamics::{CrystalModel, ExcitationModel, SidebandKind};
use crate::error::{Error, Result};
use crate::estimators::SidebandRecord;
use crate::ratio::{self, RatioPolynomial};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub mode: ModeSpec,
    pub nbar_true: f64,
    pub gt_grid: Vec<f64>,
    /// Shots on each sideband, 𝒩/2.
    pub shots_per_sideband: u64,
    pub seed: u64,
    pub trials: usize,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots_per_sideband == 0 {
            return Err(Error::InvalidInput("shots_per_sideband must be at least 1".into()));
        }
        if self.gt_grid.is_empty() || self.gt_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::InvalidInput("gt_grid must be non-empty and non-negative".into()));
        }
        if !(self.nbar_true.is_finite() && self.nbar_true >= 0.0) {
            return Err(Error::InvalidInput("nbar_true must be non-negative".into()));
        }
        if self.gt_grid.len() >= 1 << 23 {
            return Err(Error::InvalidInput("gt_grid too long".into()));
        }
        Ok(())
    }
}

/// Generator for one (gt index, trial, sideband) cell. Each cell gets its own
/// ChaCha stream, so draws do not depend on scheduling.
pub fn cell_rng(seed: u64, gt_index: usize, trial: usize, kind: SidebandKind) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = match kind {
        SidebandKind::Red => 0,
        SidebandKind::Blue => 1,
    };
    rng.set_stream(((trial as u64) << 24) | ((gt_index as u64) << 1) | side);
    rng
}

pub fn draw_binomial(rng: &mut ChaCha8Rng, shots: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    Binomial::new(shots, p).expect("probability in [0, 1]").sample(rng)
}

/// Exact (P_r, P_b) on the campaign grid.
pub fn campaign_probabilities(config: &CampaignConfig, model: &dyn ExcitationModel) -> Result<Vec<(f64, f64)>> {
    config
        .gt_grid
        .iter()
        .map(|&gt| model.probabilities(config.nbar_true, gt))
        .collect()
}

fn draw_records(config: &CampaignConfig, probs: &[(f64, f64)], trial: usize) -> Vec<SidebandRecord> {
    let m = config.shots_per_sideband;
    config
        .gt_grid
        .iter()
        .zip(probs)
        .enumerate()
        .map(|(k, (&gt, &(pr, pb)))| {
            let er = draw_binomial(&mut cell_rng(config.seed, k, trial, SidebandKind::Red), m, pr);
            let eb = draw_binomial(&mut cell_rng(config.seed, k, trial, SidebandKind::Blue), m, pb);
            SidebandRecord::new(gt / config.mode.g, m, er, m, eb)
        })
        .collect()
}

/// One synthetic campaign: binomial counts at every grid point.
pub fn sample_campaign(config: &CampaignConfig, model: &dyn ExcitationModel, trial: usize) -> Result<Vec<SidebandRecord>> {
    config.validate()?;
    let probs = campaign_probabilities(config, model)?;
    Ok(draw_records(config, &probs, trial))
}

/// `config.trials` campaigns, in trial order.
pub fn sample_trials(config: &CampaignConfig, model: &dyn ExcitationModel) -> Result<Vec<Vec<SidebandRecord>>> {
    config.validate()?;
    let probs = campaign_probabilities(config, model)?;
    Ok((0..config.trials)
        .into_par_iter()
        .map(|t| draw_records(config, &probs, t))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub gt: f64,
    pub p_red: f64,
    pub p_blue: f64,
    /// Estimate from the exact probabilities. Equal to the truth for a single
    /// ion; for a crystal it differs by the truncation error of R_t.
    pub noiseless_nbar: f64,
    /// Mean estimate minus `noiseless_nbar`.
    pub empirical_bias: f64,
    pub empirical_variance: f64,
    /// Mean of the bias-corrected estimates minus `noiseless_nbar`.
    pub corrected_bias: f64,
    pub predicted_bias: f64,
    pub predicted_variance: f64,
    pub trials_used: usize,
    pub trials_failed: usize,
}

/// Empirical bias and variance of the uncorrected ratio estimate at each
/// grid point, against the asymptotic formulas at the true probabilities.
/// Bias is measured from the noiseless estimate, so the truncation error of
/// R_t is not counted as sampling bias.
pub fn validate_estimator_moments(config: &CampaignConfig, model: &dyn ExcitationModel) -> Result<Vec<MomentReport>> {
    config.validate()?;
    let poly = RatioPolynomial::for_mode(&config.mode);
    let probs = campaign_probabilities(config, model)?;
    let m = config.shots_per_sideband;
    let nbar = config.nbar_true;
    config
        .gt_grid
        .iter()
        .zip(&probs)
        .enumerate()
        .map(|(k, (&gt, &(pr, pb)))| {
            let outcomes: Vec<Option<(f64, f64)>> = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let er = draw_binomial(&mut cell_rng(config.seed, k, t, SidebandKind::Red), m, pr);
                    let eb = draw_binomial(&mut cell_rng(config.seed, k, t, SidebandKind::Blue), m, pb);
                    let rec = SidebandRecord::new(gt / config.mode.g, m, er, m, eb);
                    crate::estimators::estimate_record(&poly, config.mode.g, &rec, f64::INFINITY)
                        .ok()
                        .map(|e| (e.nbar_raw, e.nbar_hat))
                })
                .collect();
            let ok: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
            let n = ok.len() as f64;
            let mean = ok.iter().map(|x| x.0).sum::<f64>() / n;
            let mean_corr = ok.iter().map(|x| x.1).sum::<f64>() / n;
            let var = ok.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let n0 = poly.invert(ratio::naive_ratio(pr, pb), gt).unwrap_or(nbar);
            let r1 = poly.derivative(n0, gt);
            let r2 = poly.second_derivative(n0, gt);
            let shots = 2.0 * m as f64;
            Ok(MomentReport {
                gt,
                p_red: pr,
                p_blue: pb,
                noiseless_nbar: n0,
                empirical_bias: mean - n0,
                empirical_variance: var,
                corrected_bias: mean_corr - n0,
                predicted_bias: ratio::crystal_bias(pr, pb, r1, r2, shots)?,
                predicted_variance: ratio::crystal_variance(pr, pb, r1, shots)?,
                trials_used: ok.len(),
                trials_failed: config.trials - ok.len(),
            })
        })
        .collect()
}

/// Default upper end of the cutoff scan, 0.6 periods of 2π.
pub const CUTOFF_GT_MAX: f64 = 0.6 * std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffOptions {
    pub epsilon: f64,
    /// Compare |n̂ − n̄|/n̄ instead of |n̂ − n̄| against epsilon.
    pub relative: bool,
    pub gt_max: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            epsilon: 5e-3,
            relative: false,
            gt_max: CUTOFF_GT_MAX,
            step: 0.005,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub mode_label: String,
    pub nbar: f64,
    pub epsilon: f64,
    pub relative: bool,
    /// Cutoff pulse area gt*.
    pub gt_star: f64,
    /// gt*/(2π).
    pub gt_star_cycles: f64,
    /// Set when the deviation stayed below epsilon over the whole scan.
    pub reached_grid_max: bool,
}

/// Whether inverting the exact ratio at `gt` misses `nbar` by more than allowed.
fn exceeds(model: &dyn ExcitationModel, poly: &RatioPolynomial, nbar: f64, gt: f64, opts: &CutoffOptions) -> Result<bool> {
    let (pr, pb) = model.probabilities(nbar, gt)?;
    if pb - pr <= ratio::MIN_SIDEBAND_GAP {
        return Ok(true);
    }
    let Ok(n_hat) = poly.invert(ratio::naive_ratio(pr, pb), gt) else {
        return Ok(true);
    };
    let dev = (n_hat - nbar).abs();
    let scale = if opts.relative { nbar } else { 1.0 };
    Ok(dev > opts.epsilon * scale)
}

pub fn cutoff_time_with(
    model: &dyn ExcitationModel,
    poly: &RatioPolynomial,
    label: &str,
    nbar: f64,
    opts: &CutoffOptions,
) -> Result<CutoffResult> {
    if !(opts.epsilon > 0.0 && opts.step > 0.0 && opts.gt_max > 0.0) {
        return Err(Error::InvalidInput("cutoff options must be positive".into()));
    }
    if opts.relative && nbar <= 0.0 {
        return Err(Error::InvalidInput("relative epsilon needs nbar > 0".into()));
    }
    let n = (opts.gt_max / opts.step).round() as usize;
    let mut prev = 0.0;
    for k in 1..=n {
        let gt = (opts.step * k as f64).min(opts.gt_max);
        if exceeds(model, poly, nbar, gt, opts)? {
            let (mut lo, mut hi) = (prev, gt);
            while hi - lo > opts.tolerance {
                let mid = 0.5 * (lo + hi);
                if exceeds(model, poly, nbar, mid, opts)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let gt_star = 0.5 * (lo + hi);
            return Ok(CutoffResult {
                mode_label: label.to_string(),
                nbar,
                epsilon: opts.epsilon,
                relative: opts.relative,
                gt_star,
                gt_star_cycles: gt_star / std::f64::consts::TAU,
                reached_grid_max: false,
            });
        }
        prev = gt;
    }
    Ok(CutoffResult {
        mode_label: label.to_string(),
        nbar,
        epsilon: opts.epsilon,
        relative: opts.relative,
        gt_star: opts.gt_max,
        gt_star_cycles: opts.gt_max / std::f64::consts::TAU,
        reached_grid_max: true,
    })
}

/// Largest gt up to which the truncated ratio polynomial, fed exact
/// probabilities, returns n̄ within epsilon.
pub fn cutoff_time(mode: &ModeSpec, nbar: f64, opts: &CutoffOptions) -> Result<CutoffResult> {
    let model = CrystalModel::new(mode, nbar, opts.gt_max)?;
    let poly = RatioPolynomial::for_mode(mode);
    cutoff_time_with(&model, &poly, &mode.label, nbar, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveRow {
    pub gt: f64,
    pub p_red_mean: f64,
    pub p_blue_mean: f64,
    pub naive_ratio: f64,
    pub p_red_global: f64,
    pub p_blue_global: f64,
    pub global_ratio: f64,
    /// Root of the ratio polynomial for the global ratio, if admissible.
    pub global_estimate: Option<f64>,
}

/// Mean-excitation ratio next to the global-excitation estimate for a COM mode.
pub fn naive_vs_global_demo(n_ions: usize, nbar: f64, gt_grid: &[f64]) -> Result<Vec<NaiveRow>> {
    let mode = com(n_ions, 1.0);
    let gt_max = gt_grid.iter().fold(0.0f64, |m, x| m.max(*x));
    let model = CrystalModel::with_mean(&mode, nbar, gt_max)?;
    let poly = RatioPolynomial::for_mode(&mode);
    gt_grid
        .iter()
        .map(|&gt| {
            let (mr, mb) = model.mean_probabilities(nbar, gt)?;
            let (pr, pb) = model.probabilities(nbar, gt)?;
            let global_ratio = ratio::naive_ratio(pr, pb);
            Ok(NaiveRow {
                gt,
                p_red_mean: mr,
                p_blue_mean: mb,
                naive_ratio: ratio::naive_ratio(mr, mb),
                p_red_global: pr,
                p_blue_global: pb,
                global_ratio,
                global_estimate: if global_ratio.is_finite() && global_ratio >= 0.0 {
                    poly.invert(global_ratio, gt).ok()
                } else {
                    None
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SingleIonModel;

    fn config(trials: usize) -> CampaignConfig {
        CampaignConfig {
            mode: com(1, 1.0),
            nbar_true: 0.3,
            gt_grid: vec![0.5, 1.0, 1.5],
            shots_per_sideband: 200,
            seed: 7,
            trials,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let c = config(50);
        let a = sample_trials(&c, &SingleIonModel).unwrap();
        let b = sample_trials(&c, &SingleIonModel).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_campaign(&c, &SingleIonModel, 3).unwrap(), a[3]);
        let mut d = c.clone();
        d.seed = 8;
        assert_ne!(sample_trials(&d, &SingleIonModel).unwrap(), a);
    }

    #[test]
    fn large_shot_frequencies() {
        let mut c = config(1);
        c.shots_per_sideband = 10_000_000;
        let probs = campaign_probabilities(&c, &SingleIonModel).unwrap();
        let recs = sample_campaign(&c, &SingleIonModel, 0).unwrap();
        for (r, (pr, pb)) in recs.iter().zip(probs) {
            let m = c.shots_per_sideband as f64;
            assert!((r.f_red() - pr).abs() < 5.0 * (pr * (1.0 - pr) / m).sqrt());
            assert!((r.f_blue() - pb).abs() < 5.0 * (pb * (1.0 - pb) / m).sqrt());
        }
    }

    #[test]
    fn single_ion_cutoff_reaches_grid_max() {
        let poly = RatioPolynomial::for_mode(&com(1, 1.0));
        let opts = CutoffOptions { gt_max: 1.0, ..Default::default() };
        let r = cutoff_time_with(&SingleIonModel, &poly, "ion", 0.1, &opts).unwrap();
        assert!(r.reached_grid_max && r.gt_star == 1.0);
    }

    #[test]
    fn naive_and_global_coincide_for_one_ion() {
        let rows = naive_vs_global_demo(1, 0.5, &[0.3, 0.9, 1.4]).unwrap();
        for r in rows {
            assert!((r.naive_ratio - r.global_ratio).abs() < 1e-12);
            assert!((r.global_estimate.unwrap() - 0.5).abs() < 1e-7);
        }
    }
}
