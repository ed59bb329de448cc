//! Spectral representation of the evolution restricted to the cyclic
//! subspace of the initial state.
//!
//! Small blocks are diagonalized densely. Larger ones use Lanczos with full
//! reorthogonalization, stopped once the standard a-posteriori bound on the
//! Krylov approximation of exp(−iHt)v is below tolerance for every time up to
//! the requested horizon.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::block::SparseSym;
use crate::error::{Error, Result};

/// Blocks up to this dimension are always diagonalized densely.
pub const DENSE_LIMIT: usize = 64;
/// Krylov error bound accepted for the propagated state.
pub const KRYLOV_TOL: f64 = 1e-14;
const KRYLOV_CAP: usize = 600;
const CHECK_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense up to [`DENSE_LIMIT`], Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

/// ⟨v|exp(−iHt)|v⟩ = Σ_k c_k² exp(−iθ_k t), with an optional observable
/// expressed in the same eigenbasis.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub energies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Spin-excitation number operator in the eigenbasis.
    pub excitation: Option<DMatrix<f64>>,
}

impl BlockSpectrum {
    /// The trivial one-dimensional block of a dark state.
    pub fn dark() -> Self {
        BlockSpectrum {
            energies: vec![0.0],
            amplitudes: vec![1.0],
            excitation: Some(DMatrix::zeros(1, 1)),
        }
    }

    pub fn survival(&self, gt: f64) -> Complex64 {
        self.energies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&e, &c)| Complex64::from_polar(c * c, -e * gt))
            .sum()
    }

    /// 1 − |⟨v|exp(−iHt)|v⟩|².
    pub fn leakage(&self, gt: f64) -> f64 {
        (1.0 - self.survival(gt).norm_sqr()).max(0.0)
    }

    /// Expected number of spin excitations at time `gt`.
    pub fn mean_excitation(&self, gt: f64) -> Option<f64> {
        let m = self.excitation.as_ref()?;
        let a: Vec<Complex64> = self
            .energies
            .iter()
            .zip(&self.amplitudes)
            .map(|(&e, &c)| Complex64::from_polar(c, -e * gt))
            .collect();
        let mut acc = 0.0;
        for k in 0..a.len() {
            let mut row = Complex64::new(0.0, 0.0);
            for l in 0..a.len() {
                row += a[l] * m[(k, l)];
            }
            acc += (a[k].conj() * row).re;
        }
        Some(acc)
    }

    /// Σ c_k², which is 1 for an accurately represented state.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c * c).sum()
    }
}

fn from_eigen(eig: SymmetricEigen<f64, nalgebra::Dyn>, observable: Option<DMatrix<f64>>) -> BlockSpectrum {
    let w = eig.eigenvectors;
    let amplitudes = w.row(0).iter().copied().collect();
    let excitation = observable.map(|m| w.transpose() * m * &w);
    BlockSpectrum {
        energies: eig.eigenvalues.iter().copied().collect(),
        amplitudes,
        excitation,
    }
}

/// Spectrum of a dense symmetric matrix seen from basis state 0.
pub fn dense_spectrum(h: DMatrix<f64>, diag_observable: Option<&[f64]>) -> BlockSpectrum {
    let obs = diag_observable.map(|d| DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)));
    from_eigen(SymmetricEigen::new(h), obs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Largest |(exp(−iTt))_{m−1,0}| over the check grid.
fn tail_amplitude(eig: &SymmetricEigen<f64, nalgebra::Dyn>, t_max: f64) -> f64 {
    let m = eig.eigenvalues.len();
    let w = &eig.eigenvectors;
    let coef: Vec<f64> = (0..m).map(|k| w[(m - 1, k)] * w[(0, k)]).collect();
    (0..=CHECK_POINTS)
        .map(|i| {
            let t = t_max * i as f64 / CHECK_POINTS as f64;
            eig.eigenvalues
                .iter()
                .zip(&coef)
                .map(|(&e, &c)| Complex64::from_polar(c, -e * t))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Lanczos spectrum from basis state 0, accurate for times in [0, `t_max`].
pub fn lanczos_spectrum(
    h: &SparseSym,
    diag_observable: Option<&[f64]>,
    t_max: f64,
) -> Result<BlockSpectrum> {
    let dim = h.dim;
    let horizon = 1.05 * t_max.abs().max(1e-3);
    let scale = h.norm_bound().max(1e-300);
    let cap = dim.min(KRYLOV_CAP);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    loop {
        h.apply(&v, &mut w);
        let a = dot(&v, &w);
        alpha.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = alpha.len();
        if b <= 1e-13 * scale || m == dim {
            break;
        }
        if m >= 4 && (m % 4 == 0 || m == cap) {
            let eig = SymmetricEigen::new(tridiagonal(&alpha, &beta));
            if b * tail_amplitude(&eig, horizon) < KRYLOV_TOL {
                break;
            }
        }
        if m == cap {
            return Err(Error::Propagation(format!(
                "Krylov space reached {cap} vectors without meeting tolerance (block dim {dim}, horizon {horizon})"
            )));
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    let t = tridiagonal(&alpha, &beta);
    let obs = diag_observable.map(|d| {
        let m = basis.len();
        let mut o = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let s: f64 = basis[i]
                    .iter()
                    .zip(&basis[j])
                    .zip(d)
                    .map(|((x, y), z)| x * y * z)
                    .sum();
                o[(i, j)] = s;
                o[(j, i)] = s;
            }
        }
        o
    });
    Ok(from_eigen(SymmetricEigen::new(t), obs))
}

pub fn block_spectrum(
    h: &SparseSym,
    diag_observable: Option<&[f64]>,
    t_max: f64,
    method: Method,
) -> Result<BlockSpectrum> {
    let dense = match method {
        Method::Dense => true,
        Method::Lanczos => false,
        Method::Auto => h.dim <= DENSE_LIMIT,
    };
    let spec = if dense {
        dense_spectrum(h.to_dense(), diag_observable)
    } else {
        lanczos_spectrum(h, diag_observable, t_max)?
    };
    let norm = spec.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Propagation(format!("state norm drifted to {norm}")));
    }
    Ok(spec)
}
