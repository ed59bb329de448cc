//! Tabular data behind the standard diagnostic plots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crystal::{chain_modes, com, make_mode_spec, Axis, ChainConfig, ModeSpec};
use crate::dynamics::{CrystalModel, SingleIonModel};
use crate::error::Result;
use crate::estimators::fisher::{crb_curves, CrbRow};
use crate::ratio::{self, RatioPolynomial};
use crate::sampling::{cutoff_time, cutoff_time_with, naive_vs_global_demo, CutoffOptions, NaiveRow};

/// Normalized transverse (or axial) chain modes as mode specs, ordered by
/// ascending frequency and labelled `N<n>-m<k>`.
pub fn chain_mode_specs(n_ions: usize, anisotropy: f64, axis: Axis, g: f64) -> Result<Vec<ModeSpec>> {
    chain_modes(&ChainConfig { n_ions, anisotropy, axis })?
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut spec = make_mode_spec(&m.eta_unit, g, &format!("N{n_ions}-m{k}"))?;
            spec.frequency = Some(m.frequency);
            Ok(spec)
        })
        .collect()
}

pub fn fig2(n_ions: usize, nbar: f64, gt_max: f64, points: usize) -> Result<Vec<NaiveRow>> {
    let grid: Vec<f64> = (1..=points).map(|k| gt_max * k as f64 / points as f64).collect();
    naive_vs_global_demo(n_ions, nbar, &grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub nbar: f64,
    pub gt: f64,
    pub p_red: f64,
    pub p_blue: f64,
    /// 𝒩 times the bias.
    pub bias_scaled: f64,
    /// √(𝒩 variance)/n̄.
    pub rel_sigma_scaled: f64,
}

/// Single-ion bias and relative uncertainty versus gt.
pub fn fig3(nbars: &[f64], gt_max: f64, points: usize) -> Vec<Fig3Row> {
    let mut rows = Vec::new();
    for &nbar in nbars {
        for k in 1..=points {
            let gt = gt_max * k as f64 / points as f64;
            let (pr, pb) = ratio::single_ion_flops_auto(nbar, gt);
            let (Ok(b), Ok(v)) = (ratio::single_ion_bias(pr, pb, 1.0), ratio::single_ion_variance(pr, pb, 1.0)) else {
                continue;
            };
            rows.push(Fig3Row {
                nbar,
                gt,
                p_red: pr,
                p_blue: pb,
                bias_scaled: b,
                rel_sigma_scaled: v.sqrt() / nbar,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub n_ions: usize,
    pub mode_index: usize,
    pub label: String,
    pub frequency: f64,
    pub is_com: bool,
    pub gt_star: f64,
    pub gt_star_cycles: f64,
    pub reached_grid_max: bool,
}

/// Cutoff times of every transverse mode of linear chains.
pub fn fig4(ions: std::ops::RangeInclusive<usize>, anisotropy: f64, nbar: f64, opts: &CutoffOptions) -> Result<Vec<Fig4Row>> {
    let mut rows = Vec::new();
    for n in ions {
        let modes = chain_mode_specs(n, anisotropy, Axis::Transverse, 1.0)?;
        let found = modes
            .par_iter()
            .enumerate()
            .map(|(k, m)| {
                let r = cutoff_time(m, nbar, opts)?;
                Ok(Fig4Row {
                    n_ions: n,
                    mode_index: k,
                    label: m.label.clone(),
                    frequency: m.frequency.unwrap_or(f64::NAN),
                    is_com: m.is_uniform(),
                    gt_star: r.gt_star,
                    gt_star_cycles: r.gt_star_cycles,
                    reached_grid_max: r.reached_grid_max,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(found);
    }
    Ok(rows)
}

/// Uncertainty curves for the COM mode of `n_ions` ions.
pub fn fig6(n_ions: usize, nbar_grid: &[f64], opts: &CutoffOptions) -> Result<Vec<CrbRow>> {
    let mode = com(n_ions, 1.0);
    let nbar_max = nbar_grid.iter().fold(0.0f64, |m, x| m.max(*x));
    let gt_max = std::f64::consts::TAU;
    let model = CrystalModel::new(&mode, nbar_max, gt_max.max(opts.gt_max))?;
    let poly = RatioPolynomial::for_mode(&mode);
    let cutoff = |nbar: f64| Ok(cutoff_time_with(&model, &poly, &mode.label, nbar, opts)?.gt_star);
    crb_curves(&model, &poly, nbar_grid, cutoff, gt_max)
}

/// Single-ion counterpart of [`fig6`], useful as a sanity check.
pub fn fig6_single_ion(nbar_grid: &[f64]) -> Result<Vec<CrbRow>> {
    let poly = RatioPolynomial::for_mode(&com(1, 1.0));
    crb_curves(&SingleIonModel, &poly, nbar_grid, |_| Ok(std::f64::consts::TAU), std::f64::consts::TAU)
}

/// Column descriptions for the figure CSV files.
pub fn schema(which: &str) -> Option<&'static str> {
    Some(match which {
        "fig2" => "gt: pulse area g*t\np_red_mean, p_blue_mean: mean excitation per ion\nnaive_ratio: p_red_mean/(p_blue_mean-p_red_mean)\np_red_global, p_blue_global: probability that any ion is excited\nglobal_ratio: p_red_global/(p_blue_global-p_red_global)\nglobal_estimate: root of the ratio polynomial for global_ratio (empty if none)\n",
        "fig3" => "nbar: mean phonon number\ngt: pulse area g*t\np_red, p_blue: single-ion sideband probabilities\nbias_scaled: total shots times estimator bias\nrel_sigma_scaled: sqrt(total shots * variance)/nbar\n",
        "fig4" => "n_ions: chain length\nmode_index: transverse mode index, ascending frequency\nlabel: mode label\nfrequency: mode frequency in units of the axial trap frequency\nis_com: centre-of-mass mode\ngt_star: cutoff pulse area\ngt_star_cycles: gt_star/(2 pi)\nreached_grid_max: no cutoff found below the scan limit\n",
        "fig6" => "nbar: mean phonon number\nestimator_sigma: ratio estimator sigma*sqrt(total shots), minimized over gt <= cutoff\nestimator_gt: minimizing gt\ncutoff_gt: cutoff pulse area\nsideband_crb: sideband Cramer-Rao sigma*sqrt(total shots), minimized over gt <= 2 pi\nsideband_gt: minimizing gt\nbichromatic_crb: bichromatic single-ion Cramer-Rao sigma*sqrt(total shots)\n",
        _ => return None,
    })
}
