//! Short-time power series of the global excitation probability.
//!
//! The survival amplitude of |0, n⟩ is expanded in the moments
//! μ_k = ⟨0,n|H^k|0,n⟩, squared as a series, and averaged over the thermal
//! distribution coefficient by coefficient. The arithmetic is generic so that
//! the expansion can be run in extended precision, where it resolves
//! differences far below double-precision rounding at small gt.

use num_traits::Float;

use super::block::{Block, SidebandKind};
use crate::error::Result;
use crate::thermal;

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("representable")
}

/// a / b followed by one Newton correction. Some double-double types round
/// the quotient to double precision; the correction restores full accuracy
/// and is a no-op for f64.
pub fn div<T: Float>(a: T, b: T) -> T {
    let q = a / b;
    q + (a - q * b) / b
}

/// μ_0 ..= μ_order for the block containing |0, `fock`⟩.
pub fn survival_moments<T: Float>(eta: &[T], kind: SidebandKind, fock: usize, order: usize) -> Result<Vec<T>> {
    let block = Block::build(eta.len(), kind, fock)?;
    let edges: Vec<(usize, usize, T)> = block
        .couplings
        .iter()
        .map(|c| {
            let v = eta[c.ion as usize] * cast::<T>(c.phonon_factor as f64).sqrt();
            (c.lo as usize, c.hi as usize, v)
        })
        .collect();
    let dim = block.dim();
    let apply = |x: &[T]| {
        let mut y = vec![T::zero(); dim];
        for &(i, j, v) in &edges {
            y[i] = y[i] + v * x[j];
            y[j] = y[j] + v * x[i];
        }
        y
    };
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
    let mut mu = vec![T::zero(); order + 1];
    let mut w = vec![T::zero(); dim];
    w[0] = T::one();
    for j in 0..=order / 2 {
        mu[2 * j] = dot(&w, &w);
        let hw = apply(&w);
        if 2 * j + 1 <= order {
            mu[2 * j + 1] = dot(&w, &hw);
        }
        w = hw;
    }
    Ok(mu)
}

/// Coefficients of 1 − |Σ_k μ_k (−it)^k / k!|² in powers of t.
pub fn leakage_coefficients<T: Float>(mu: &[T]) -> Vec<T> {
    let order = mu.len() - 1;
    let mut re = vec![T::zero(); order + 1];
    let mut im = vec![T::zero(); order + 1];
    let mut fact = T::one();
    for k in 0..=order {
        if k > 0 {
            fact = fact * cast::<T>(k as f64);
        }
        let term = div(mu[k], fact);
        match k % 4 {
            0 => re[k] = term,
            1 => im[k] = -term,
            2 => re[k] = -term,
            _ => im[k] = term,
        }
    }
    let mut out = vec![T::zero(); order + 1];
    for j in 1..=order {
        let mut s = T::zero();
        for a in 0..=j {
            s = s + re[a] * re[j - a] + im[a] * im[j - a];
        }
        out[j] = -s;
    }
    out
}

/// Thermally averaged series coefficients of the global excitation
/// probability, truncated at `order` in gt and at Fock levels whose
/// remaining thermal weight is below `tail`. `eta` is used as given; callers
/// working beyond double precision should normalize it in `T`.
pub fn excitation_series<T: Float>(eta: &[T], kind: SidebandKind, nbar: f64, order: usize, tail: f64) -> Result<Vec<T>> {
    let n_max = thermal::cutoff(nbar, tail);
    let nb = cast::<T>(nbar);
    let q = div(nb, nb + T::one());
    let mut p = div(T::one(), nb + T::one());
    let mut acc = vec![T::zero(); order + 1];
    for n in 0..=n_max {
        let l = leakage_coefficients(&survival_moments::<T>(eta, kind, n, order)?);
        for (a, c) in acc.iter_mut().zip(l) {
            *a = *a + p * c;
        }
        p = p * q;
    }
    Ok(acc)
}

pub fn eval_series<T: Float>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}
