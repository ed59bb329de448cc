//! Exact sideband dynamics of a single motional mode coupled to N spins.
//!
//! H_r = g(J₊a + J₋a†) and H_b = g(J₊a† + J₋a) act within small
//! excitation-conserving blocks, one per thermal Fock level. A mode with
//! equal |ηᵢ| is handled in the symmetric (Dicke) subspace, which needs only
//! N + 1 states per block.

pub mod block;
pub mod series;
pub mod spectral;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use block::{Block, SidebandKind, MAX_BLOCK_IONS};
pub use spectral::{BlockSpectrum, Method};

use crate::crystal::ModeSpec;
use crate::error::{Error, Result};
use crate::ratio;
use crate::thermal;

/// Thermal weight allowed outside the propagated Fock levels.
pub const THERMAL_TAIL: f64 = thermal::DEFAULT_TAIL;

/// Symmetric-subspace block of the COM mode for Fock level `fock`.
pub fn dicke_block(n_ions: usize, kind: SidebandKind, fock: usize) -> (DMatrix<f64>, Vec<f64>) {
    let top = match kind {
        SidebandKind::Red => n_ions.min(fock),
        SidebandKind::Blue => n_ions,
    };
    let dim = top + 1;
    let n = n_ions as f64;
    let mut h = DMatrix::zeros(dim, dim);
    for m in 0..top {
        let phonons = match kind {
            SidebandKind::Red => fock - m,
            SidebandKind::Blue => fock + m + 1,
        } as f64;
        let mf = m as f64;
        let v = ((mf + 1.0) * (n - mf) / n).sqrt() * phonons.sqrt();
        h[(m, m + 1)] = v;
        h[(m + 1, m)] = v;
    }
    (h, (0..dim).map(|m| m as f64).collect())
}

/// Block spectra for Fock levels 0 ..= n_max of one sideband.
#[derive(Debug, Clone)]
pub struct SidebandSpectra {
    pub kind: SidebandKind,
    pub n_ions: usize,
    pub levels: Vec<BlockSpectrum>,
    /// Largest gt at which Krylov spectra are guaranteed accurate.
    pub gt_max: f64,
    pub symmetric: bool,
}

impl SidebandSpectra {
    /// Full spin-space blocks for an arbitrary coupling vector.
    pub fn exact(eta: &[f64], kind: SidebandKind, n_max: usize, gt_max: f64, with_mean: bool, method: Method) -> Result<Self> {
        let levels = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let block = Block::build(eta.len(), kind, n)?;
                let exc = with_mean.then(|| block.excitations());
                spectral::block_spectrum(&block.sparse(eta), exc.as_deref(), gt_max, method)
            })
            .collect::<Result<Vec<_>>>()?;
        let dense_only = method == Method::Dense
            || (method == Method::Auto && (1usize << eta.len()) <= spectral::DENSE_LIMIT);
        Ok(SidebandSpectra {
            kind,
            n_ions: eta.len(),
            levels,
            gt_max: if dense_only { f64::INFINITY } else { gt_max },
            symmetric: false,
        })
    }

    /// Symmetric-subspace blocks for a mode with equal |ηᵢ|.
    pub fn dicke(n_ions: usize, kind: SidebandKind, n_max: usize, with_mean: bool) -> Self {
        let levels = (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let (h, exc) = dicke_block(n_ions, kind, n);
                spectral::dense_spectrum(h, with_mean.then_some(exc.as_slice()))
            })
            .collect();
        SidebandSpectra {
            kind,
            n_ions,
            levels,
            gt_max: f64::INFINITY,
            symmetric: true,
        }
    }

    /// Dicke blocks for uniform modes, full blocks otherwise.
    pub fn for_mode(mode: &ModeSpec, kind: SidebandKind, n_max: usize, gt_max: f64, with_mean: bool) -> Result<Self> {
        if mode.is_uniform() {
            Ok(Self::dicke(mode.n_ions(), kind, n_max, with_mean))
        } else {
            Self::exact(&mode.eta, kind, n_max, gt_max, with_mean, Method::Auto)
        }
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    fn weights(&self, nbar: f64) -> Result<Vec<f64>> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(Error::InvalidInput(format!("nbar must be non-negative, got {nbar}")));
        }
        let need = thermal::cutoff(nbar, THERMAL_TAIL);
        if need > self.n_max() {
            return Err(Error::InvalidInput(format!(
                "nbar = {nbar} needs Fock levels up to {need}, only {} prepared",
                self.n_max()
            )));
        }
        Ok(thermal::distribution(nbar, need))
    }

    fn check_time(&self, gt: f64) -> Result<()> {
        if gt > 1.05 * self.gt_max {
            return Err(Error::InvalidInput(format!(
                "gt = {gt} beyond the prepared horizon {}",
                self.gt_max
            )));
        }
        Ok(())
    }

    /// Global excitation probability 1 − Σₙ pₙ |⟨0,n|U|0,n⟩|².
    pub fn global(&self, nbar: f64, gt: f64) -> Result<f64> {
        self.check_time(gt)?;
        let p = self.weights(nbar)?;
        Ok(p.iter().zip(&self.levels).map(|(pn, s)| pn * s.leakage(gt)).sum())
    }

    /// ∂P_global/∂n̄ from the derivative of the thermal weights.
    pub fn global_derivative(&self, nbar: f64, gt: f64) -> Result<f64> {
        self.check_time(gt)?;
        let need = self.weights(nbar)?.len() - 1;
        let dp = thermal::distribution_derivative(nbar, need);
        Ok(dp.iter().zip(&self.levels).map(|(d, s)| d * s.leakage(gt)).sum())
    }

    /// Mean excitation per ion, when the spectra carry the observable.
    pub fn mean(&self, nbar: f64, gt: f64) -> Result<f64> {
        self.check_time(gt)?;
        let p = self.weights(nbar)?;
        let mut acc = 0.0;
        for (pn, s) in p.iter().zip(&self.levels) {
            let e = s
                .mean_excitation(gt)
                .ok_or_else(|| Error::InvalidInput("spectra prepared without excitation observable".into()))?;
            acc += pn * e;
        }
        Ok(acc / self.n_ions as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub gt_grid: Vec<f64>,
    pub p_global: Vec<f64>,
    pub p_mean: Vec<f64>,
    /// ⟨0,n|U(gt)|0,n⟩ indexed by Fock level, then time.
    #[serde(skip)]
    pub survival_amplitudes: Vec<Vec<Complex64>>,
}

fn assemble(spectra: &SidebandSpectra, nbar: f64, gt_grid: &[f64]) -> Result<PropagationResult> {
    let p_global = gt_grid.iter().map(|&t| spectra.global(nbar, t)).collect::<Result<Vec<_>>>()?;
    let p_mean = gt_grid.iter().map(|&t| spectra.mean(nbar, t)).collect::<Result<Vec<_>>>()?;
    let survival_amplitudes = spectra
        .levels
        .iter()
        .map(|s| gt_grid.iter().map(|&t| s.survival(t)).collect())
        .collect();
    Ok(PropagationResult {
        gt_grid: gt_grid.to_vec(),
        p_global,
        p_mean,
        survival_amplitudes,
    })
}

fn horizon(gt_grid: &[f64]) -> f64 {
    gt_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()))
}

/// Full spin-space propagation of a thermal state under one sideband.
pub fn exact_flop(mode: &ModeSpec, kind: SidebandKind, nbar: f64, gt_grid: &[f64]) -> Result<PropagationResult> {
    exact_flop_with(mode, kind, nbar, gt_grid, Method::Auto)
}

pub fn exact_flop_with(mode: &ModeSpec, kind: SidebandKind, nbar: f64, gt_grid: &[f64], method: Method) -> Result<PropagationResult> {
    let n_max = thermal::cutoff(nbar, THERMAL_TAIL);
    let spectra = SidebandSpectra::exact(&mode.eta, kind, n_max, horizon(gt_grid), true, method)?;
    assemble(&spectra, nbar, gt_grid)
}

/// Symmetric-subspace propagation for the COM mode of `n_ions` ions.
pub fn com_dicke_flop(n_ions: usize, kind: SidebandKind, nbar: f64, gt_grid: &[f64]) -> Result<PropagationResult> {
    if n_ions == 0 {
        return Err(Error::InvalidInput("need at least one ion".into()));
    }
    let n_max = thermal::cutoff(nbar, THERMAL_TAIL);
    let spectra = SidebandSpectra::dicke(n_ions, kind, n_max, true);
    assemble(&spectra, nbar, gt_grid)
}

/// Single-ion excitation under a bichromatic drive,
/// ½(1 − exp(−2(gtηᵢ)²(2n̄+1))).
pub fn bichromatic_excitation(eta_i: f64, nbar: f64, gt: f64) -> f64 {
    0.5 * (1.0 - (-2.0 * (gt * eta_i).powi(2) * (2.0 * nbar + 1.0)).exp())
}

/// Source of sideband excitation probabilities (P_r, P_b) as functions of
/// n̄ and gt.
pub trait ExcitationModel: Send + Sync {
    fn n_ions(&self) -> usize;

    fn probabilities(&self, nbar: f64, gt: f64) -> Result<(f64, f64)>;

    /// (∂P_r/∂n̄, ∂P_b/∂n̄) by central difference with step 1e-4.
    fn derivatives(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        let h = 1e-4;
        let lo = (nbar - h).max(0.0);
        let hi = lo + 2.0 * h;
        let (r0, b0) = self.probabilities(lo, gt)?;
        let (r1, b1) = self.probabilities(hi, gt)?;
        Ok(((r1 - r0) / (hi - lo), (b1 - b0) / (hi - lo)))
    }

    /// Largest n̄ the model can evaluate.
    fn nbar_limit(&self) -> f64 {
        f64::INFINITY
    }
}

/// Closed-form single-ion flops.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleIonModel;

impl ExcitationModel for SingleIonModel {
    fn n_ions(&self) -> usize {
        1
    }

    fn probabilities(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        Ok(ratio::single_ion_flops_auto(nbar, gt))
    }

    fn derivatives(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        Ok(ratio::single_ion_flop_derivatives(
            nbar,
            gt,
            thermal::cutoff(nbar, THERMAL_TAIL) + 1,
        ))
    }
}

/// Global excitation probabilities of a crystal mode from precomputed block
/// spectra, valid for n̄ up to `nbar_max` and gt up to `gt_max`.
#[derive(Debug, Clone)]
pub struct CrystalModel {
    pub mode: ModeSpec,
    pub red: SidebandSpectra,
    pub blue: SidebandSpectra,
    nbar_max: f64,
}

impl CrystalModel {
    pub fn new(mode: &ModeSpec, nbar_max: f64, gt_max: f64) -> Result<Self> {
        Self::build(mode, nbar_max, gt_max, false)
    }

    /// As [`CrystalModel::new`], also tracking the mean excitation per ion.
    pub fn with_mean(mode: &ModeSpec, nbar_max: f64, gt_max: f64) -> Result<Self> {
        Self::build(mode, nbar_max, gt_max, true)
    }

    fn build(mode: &ModeSpec, nbar_max: f64, gt_max: f64, with_mean: bool) -> Result<Self> {
        // One spare level so derivative stencils just above nbar_max still fit.
        let n_max = thermal::cutoff(nbar_max * 1.01 + 1e-3, THERMAL_TAIL);
        let red = SidebandSpectra::for_mode(mode, SidebandKind::Red, n_max, gt_max, with_mean)?;
        let blue = SidebandSpectra::for_mode(mode, SidebandKind::Blue, n_max, gt_max, with_mean)?;
        Ok(CrystalModel {
            mode: mode.clone(),
            red,
            blue,
            nbar_max,
        })
    }

    /// Mean excitation per ion on each sideband.
    pub fn mean_probabilities(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        Ok((self.red.mean(nbar, gt)?, self.blue.mean(nbar, gt)?))
    }

    pub fn analytic_derivatives(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        Ok((
            self.red.global_derivative(nbar, gt)?,
            self.blue.global_derivative(nbar, gt)?,
        ))
    }
}

impl ExcitationModel for CrystalModel {
    fn n_ions(&self) -> usize {
        self.mode.n_ions()
    }

    fn probabilities(&self, nbar: f64, gt: f64) -> Result<(f64, f64)> {
        Ok((self.red.global(nbar, gt)?, self.blue.global(nbar, gt)?))
    }

    fn nbar_limit(&self) -> f64 {
        self.nbar_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{com, make_mode_spec};

    #[test]
    fn single_ion_matches_closed_form() {
        let mode = com(1, 1.0);
        let grid: Vec<f64> = (0..=100).map(|k| 2.0 * std::f64::consts::PI * k as f64 / 100.0).collect();
        for nbar in [0.0, 0.3, 2.0] {
            let r = exact_flop(&mode, SidebandKind::Red, nbar, &grid).unwrap();
            let b = exact_flop(&mode, SidebandKind::Blue, nbar, &grid).unwrap();
            for (k, &t) in grid.iter().enumerate() {
                let (pr, pb) = ratio::single_ion_flops_auto(nbar, t);
                assert!((r.p_global[k] - pr).abs() < 1e-9);
                assert!((b.p_global[k] - pb).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn red_ground_state_is_dark() {
        let mode = make_mode_spec(&[0.2, 0.5, -0.7], 1.0, "m").unwrap();
        let r = exact_flop(&mode, SidebandKind::Red, 0.0, &[0.0, 0.5, 3.0]).unwrap();
        assert!(r.p_global.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn dicke_matches_full_space() {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
        for n in 2..=5 {
            for kind in [SidebandKind::Red, SidebandKind::Blue] {
                let full = exact_flop(&com(n, 1.0), kind, 0.3, &grid).unwrap();
                let sym = com_dicke_flop(n, kind, 0.3, &grid).unwrap();
                for k in 0..grid.len() {
                    assert!((full.p_global[k] - sym.p_global[k]).abs() < 1e-12);
                    assert!((full.p_mean[k] - sym.p_mean[k]).abs() < 1e-12);
                    assert!(sym.p_mean[k] <= sym.p_global[k] + 1e-14);
                }
            }
        }
    }

    #[test]
    fn bichromatic_limits() {
        assert_eq!(bichromatic_excitation(0.5, 1.0, 0.0), 0.0);
        assert!((bichromatic_excitation(0.5, 1.0, 1e3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crystal_model_derivative() {
        let mode = make_mode_spec(&[-0.5, 0.5, 0.5, -0.4], 1.0, "m").unwrap();
        let m = CrystalModel::new(&mode, 1.0, 2.0).unwrap();
        let (ar, ab) = m.analytic_derivatives(0.3, 1.2).unwrap();
        let (fr, fb) = m.derivatives(0.3, 1.2).unwrap();
        assert!((ar - fr).abs() < 1e-7 && (ab - fb).abs() < 1e-7);
    }
}
