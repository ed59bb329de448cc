//! Excitation-conserving blocks of the sideband Hamiltonians.
//!
//! The red sideband conserves a†a + J₀ and the blue sideband a†a − J₀, so
//! starting from |0, n⟩ the dynamics stay within the states |s, n ∓ |s|⟩ where
//! `s` is a spin bit mask and |s| its popcount.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SidebandKind {
    Red,
    Blue,
}

impl SidebandKind {
    pub fn label(self) -> &'static str {
        match self {
            SidebandKind::Red => "r",
            SidebandKind::Blue => "b",
        }
    }
}

impl std::str::FromStr for SidebandKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "r" | "red" => Ok(SidebandKind::Red),
            "b" | "blue" => Ok(SidebandKind::Blue),
            _ => Err(Error::InvalidInput(format!("unknown sideband {s:?}"))),
        }
    }
}

/// Largest crystal handled by full spin-space blocks.
pub const MAX_BLOCK_IONS: usize = 12;

/// One coupling: rows `lo` and `hi` (spin mask with one more excitation) are
/// connected by ηᵢ·√`phonon_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub lo: u32,
    pub hi: u32,
    pub ion: u16,
    pub phonon_factor: u32,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub kind: SidebandKind,
    pub fock: usize,
    /// Spin mask of each basis state; index 0 is the spin ground state.
    pub masks: Vec<u32>,
    pub couplings: Vec<Coupling>,
}

impl Block {
    pub fn build(n_ions: usize, kind: SidebandKind, fock: usize) -> Result<Block> {
        if n_ions > MAX_BLOCK_IONS {
            return Err(Error::DimensionCap {
                what: "ions for full-space propagation",
                requested: n_ions,
                cap: MAX_BLOCK_IONS,
            });
        }
        let max_exc = match kind {
            SidebandKind::Red => n_ions.min(fock),
            SidebandKind::Blue => n_ions,
        } as u32;
        let mut masks: Vec<u32> = (0..1u32 << n_ions)
            .filter(|s| s.count_ones() <= max_exc)
            .collect();
        masks.sort_by_key(|s| (s.count_ones(), *s));
        let mut index = vec![u32::MAX; 1 << n_ions];
        for (k, &s) in masks.iter().enumerate() {
            index[s as usize] = k as u32;
        }
        let mut couplings = Vec::new();
        for (k, &s) in masks.iter().enumerate() {
            let m = s.count_ones() as usize;
            if m as u32 >= max_exc {
                continue;
            }
            let phonon_factor = match kind {
                SidebandKind::Red => fock - m,
                SidebandKind::Blue => fock + m + 1,
            } as u32;
            for ion in 0..n_ions {
                let bit = 1u32 << ion;
                if s & bit == 0 {
                    couplings.push(Coupling {
                        lo: k as u32,
                        hi: index[(s | bit) as usize],
                        ion: ion as u16,
                        phonon_factor,
                    });
                }
            }
        }
        Ok(Block {
            kind,
            fock,
            masks,
            couplings,
        })
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    /// Number of spin excitations of each basis state.
    pub fn excitations(&self) -> Vec<f64> {
        self.masks.iter().map(|s| s.count_ones() as f64).collect()
    }

    /// Matrix elements for a coupling vector.
    pub fn values(&self, eta: &[f64]) -> Vec<f64> {
        self.couplings
            .iter()
            .map(|c| eta[c.ion as usize] * (c.phonon_factor as f64).sqrt())
            .collect()
    }

    pub fn sparse(&self, eta: &[f64]) -> SparseSym {
        SparseSym {
            dim: self.dim(),
            edges: self
                .couplings
                .iter()
                .zip(self.values(eta))
                .filter(|(_, v)| *v != 0.0)
                .map(|(c, v)| (c.lo as usize, c.hi as usize, v))
                .collect(),
        }
    }
}

/// Real symmetric matrix with zero diagonal stored as its upper edges.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub dim: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(i, j, v) in &self.edges {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.edges {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let mut row = vec![0.0; self.dim];
        for &(i, j, v) in &self.edges {
            row[i] += v.abs();
            row[j] += v.abs();
        }
        row.into_iter().fold(0.0, f64::max)
    }
}
