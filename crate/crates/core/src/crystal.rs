//! Normal modes of ion crystals.
//!
//! Lengths are in units of the axial characteristic length and frequencies in
//! units of the axial trap frequency.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One normal mode: per-ion couplings and the average sideband Rabi rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub eta: Vec<f64>,
    #[serde(rename = "g_rad_per_s")]
    pub g: f64,
    #[serde(rename = "frequency_rad_per_s", default)]
    pub frequency: Option<f64>,
}

impl ModeSpec {
    pub fn n_ions(&self) -> usize {
        self.eta.len()
    }

    /// Dimensionless pulse area for an interrogation time in seconds.
    pub fn gt(&self, t_s: f64) -> f64 {
        self.g * t_s
    }

    /// Checks the invariants and renormalizes small deviations of Ση² from 1.
    pub fn validated(mut self) -> Result<Self> {
        if self.eta.is_empty() {
            return invalid("mode has no ions");
        }
        if self.eta.iter().any(|e| !e.is_finite()) {
            return invalid("mode couplings must be finite");
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return invalid(format!("g must be positive, got {}", self.g));
        }
        let s2: f64 = self.eta.iter().map(|e| e * e).sum();
        if (s2 - 1.0).abs() > 1e-3 {
            return Err(Error::Normalization(s2));
        }
        let norm = s2.sqrt();
        self.eta.iter_mut().for_each(|e| *e /= norm);
        Ok(self)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: ModeSpec = serde_json::from_str(s)?;
        m.validated()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// True when every |ηᵢ| is the same, so the dynamics reduce to the
    /// symmetric subspace up to local sign flips.
    pub fn is_uniform(&self) -> bool {
        let n = self.eta.len() as f64;
        let target = 1.0 / n.sqrt();
        self.eta.iter().all(|e| (e.abs() - target).abs() < 1e-12)
    }
}

/// Normalizes `eta_unit` to Ση² = 1 and attaches `g` and `label`.
pub fn make_mode_spec(eta_unit: &[f64], g: f64, label: &str) -> Result<ModeSpec> {
    if eta_unit.is_empty() {
        return invalid("empty coupling vector");
    }
    if eta_unit.iter().any(|e| !e.is_finite()) {
        return invalid("coupling vector has non-finite entries");
    }
    let norm = eta_unit.iter().map(|e| e * e).sum::<f64>().sqrt();
    if norm == 0.0 {
        return invalid("coupling vector is zero");
    }
    if !(g.is_finite() && g > 0.0) {
        return invalid(format!("g must be positive, got {g}"));
    }
    Ok(ModeSpec {
        label: label.to_string(),
        eta: eta_unit.iter().map(|e| e / norm).collect(),
        g,
        frequency: None,
    })
}

/// Center-of-mass mode of `n` ions.
pub fn com(n: usize, g: f64) -> ModeSpec {
    make_mode_spec(&vec![1.0; n.max(1)], g, &format!("com{n}")).expect("valid COM mode")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Axial,
    Transverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_ions: usize,
    /// Transverse over axial trap frequency.
    pub anisotropy: f64,
    pub axis: Axis,
}

/// A chain normal mode with frequency in units of the axial trap frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMode {
    pub frequency: f64,
    pub eta_unit: Vec<f64>,
}

const NEWTON_CAP: usize = 200;
const NEWTON_TOL: f64 = 1e-12;

fn force_residual(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let mut f = u[i];
            for j in 0..n {
                if j != i {
                    let d = u[i] - u[j];
                    f -= d.signum() / (d * d);
                }
            }
            f
        })
        .collect()
}

fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..n {
            if j != i {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                k[(i, i)] += c;
                k[(i, j)] = -c;
            }
        }
    }
    k
}

fn transverse_hessian(u: &[f64], beta: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = beta * beta;
        for j in 0..n {
            if j != i {
                let c = 1.0 / (u[i] - u[j]).abs().powi(3);
                k[(i, i)] -= c;
                k[(i, j)] = c;
            }
        }
    }
    k
}

/// Equilibrium positions of a linear Coulomb chain, sorted ascending.
pub fn equilibrium_positions(n_ions: usize) -> Result<Vec<f64>> {
    if n_ions == 0 {
        return invalid("chain needs at least one ion");
    }
    let n = n_ions;
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mut u: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing)
        .collect();
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = force_residual(&u);
    let mut iterations = 0;
    while norm(&res) > NEWTON_TOL {
        if iterations == NEWTON_CAP {
            return Err(Error::NoConvergence {
                iterations,
                residual: norm(&res),
            });
        }
        iterations += 1;
        // The Jacobian of the force balance is the axial Hessian.
        let jac = axial_hessian(&u);
        let step = jac
            .lu()
            .solve(&DVector::from_vec(res.clone()))
            .ok_or_else(|| Error::NoConvergence {
                iterations,
                residual: norm(&res),
            })?;
        let r0 = norm(&res);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, s)| x - lambda * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let r = force_residual(&trial);
                if norm(&r) < r0 || lambda < 1e-6 {
                    u = trial;
                    res = r;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-9 {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: r0,
                });
            }
        }
    }
    // Enforce exact parity symmetry.
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    Ok(sym)
}

/// Normal modes for the chosen axis, sorted by ascending frequency.
pub fn chain_modes(config: &ChainConfig) -> Result<Vec<ChainMode>> {
    if !(config.anisotropy.is_finite() && config.anisotropy > 0.0) {
        return invalid("anisotropy must be positive");
    }
    let u = equilibrium_positions(config.n_ions)?;
    let k = match config.axis {
        Axis::Axial => axial_hessian(&u),
        Axis::Transverse => transverse_hessian(&u, config.anisotropy),
    };
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..config.n_ions).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut modes = Vec::with_capacity(config.n_ions);
    for idx in order {
        let lam = eig.eigenvalues[idx];
        if lam <= 0.0 {
            return Err(Error::Unstable(lam));
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let sum: f64 = v.iter().sum();
        let flip = if sum.abs() > 1e-9 {
            sum < 0.0
        } else {
            v.iter().find(|x| x.abs() > 1e-9).is_some_and(|x| *x < 0.0)
        };
        if flip {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        modes.push(ChainMode {
            frequency: lam.sqrt(),
            eta_unit: v,
        });
    }
    Ok(modes)
}

/// Hessian used by [`chain_modes`], exposed for checks.
pub fn chain_hessian(config: &ChainConfig) -> Result<DMatrix<f64>> {
    let u = equilibrium_positions(config.n_ions)?;
    Ok(match config.axis {
        Axis::Axial => axial_hessian(&u),
        Axis::Transverse => transverse_hessian(&u, config.anisotropy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_positions() {
        assert_eq!(equilibrium_positions(1).unwrap(), vec![0.0]);
        let u2 = equilibrium_positions(2).unwrap();
        let a = 0.25f64.cbrt();
        assert!((u2[0] + a).abs() < 1e-12 && (u2[1] - a).abs() < 1e-12);
        let u3 = equilibrium_positions(3).unwrap();
        let b = 1.25f64.cbrt();
        assert!((u3[0] + b).abs() < 1e-12 && u3[1].abs() < 1e-12 && (u3[2] - b).abs() < 1e-12);
    }

    #[test]
    fn force_balance_holds_for_long_chains() {
        for n in [5, 12, 30, 50] {
            let u = equilibrium_positions(n).unwrap();
            let r = force_residual(&u);
            assert!(r.iter().all(|x| x.abs() < 1e-10), "n={n}");
            for i in 0..n {
                assert!((u[i] + u[n - 1 - i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_ion_axial_frequencies() {
        let m = chain_modes(&ChainConfig {
            n_ions: 2,
            anisotropy: 1.0,
            axis: Axis::Axial,
        })
        .unwrap();
        assert!((m[0].frequency - 1.0).abs() < 1e-10);
        assert!((m[1].frequency - 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn transverse_com_is_highest() {
        let m = chain_modes(&ChainConfig {
            n_ions: 4,
            anisotropy: 6.0,
            axis: Axis::Transverse,
        })
        .unwrap();
        let com = m.last().unwrap();
        assert!((com.frequency - 6.0).abs() < 1e-10);
        assert!(com.eta_unit.iter().all(|x| (x - 0.5).abs() < 1e-10));
    }

    #[test]
    fn zigzag_instability_reported() {
        let r = chain_modes(&ChainConfig {
            n_ions: 10,
            anisotropy: 1.5,
            axis: Axis::Transverse,
        });
        assert!(matches!(r, Err(Error::Unstable(_))));
    }

    #[test]
    fn mode_spec_normalization() {
        let m = make_mode_spec(&[2.0, 0.0, 0.0], 1.0, "x").unwrap();
        assert_eq!(m.eta, vec![1.0, 0.0, 0.0]);
        assert!(make_mode_spec(&[0.0, 0.0], 1.0, "x").is_err());
        assert!(make_mode_spec(&[f64::NAN], 1.0, "x").is_err());
        let c = com(19, 1.0);
        assert!(c.eta.iter().all(|e| (e - 0.2294157338705618).abs() < 1e-12));
    }

    #[test]
    fn mode_file_loader() {
        let ok = r#"{"label":"m","eta":[0.5,0.5,0.5,0.5001],"g_rad_per_s":1000.0,"frequency_rad_per_s":null}"#;
        let m = ModeSpec::from_json_str(ok).unwrap();
        assert!((m.eta.iter().map(|e| e * e).sum::<f64>() - 1.0).abs() < 1e-12);
        let bad = r#"{"label":"m","eta":[0.5,0.5],"g_rad_per_s":1000.0}"#;
        assert!(matches!(ModeSpec::from_json_str(bad), Err(Error::Normalization(_))));
    }
}
