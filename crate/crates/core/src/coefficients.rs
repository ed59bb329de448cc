//! Mode-dependent expansion coefficients A, B, C and D.
//!
//! Each coefficient is a ground-state expectation value of a string of
//! collective operators J± = Σᵢ ηᵢσᵢ±. They are assembled from a small set of
//! distinct-index sums weighted by integer prefactor tables.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::crystal::ModeSpec;
use crate::error::{Error, Result};

/// Prefactors for C₁..C₅ over the classes
/// [Σηᵢ⁶, Σ_{i≠j}ηᵢ⁴ηⱼ², Σ_{i≠j≠k}ηᵢ²ηⱼ²ηₖ²].
pub const C_TABLE: [[i64; 3]; 5] = [[0, 4, 2], [1, 3, 1], [0, 4, 2], [0, 4, 4], [0, 0, 6]];

/// Prefactors for D₁..D₁₄ over the classes
/// [Σηᵢ⁸, Σηᵢ⁶ηⱼ², Σηᵢ⁴ηⱼ⁴, Σηᵢ⁴ηⱼ²ηₖ², Σηᵢ²ηⱼ²ηₖ²ηₗ²] (all indices distinct).
pub const D_TABLE: [[i64; 5]; 14] = [
    [0, 0, 0, 0, 24],
    [1, 4, 3, 6, 1],
    [0, 0, 0, 18, 18],
    [0, 0, 0, 24, 12],
    [0, 0, 0, 18, 6],
    [0, 0, 8, 16, 4],
    [0, 4, 4, 10, 2],
    [0, 0, 0, 24, 12],
    [0, 4, 4, 24, 8],
    [0, 4, 4, 16, 4],
    [0, 0, 0, 18, 6],
    [0, 4, 4, 16, 4],
    [0, 4, 4, 10, 2],
    [0, 4, 4, 10, 2],
];

/// Operator strings, leftmost operator applied last.
pub const A_PATTERN: &str = "-+";
pub const B1_PATTERN: &str = "-+-+";
pub const B2_PATTERN: &str = "--++";
pub const C_PATTERNS: [&str; 5] = ["--++-+", "-+-+-+", "-+--++", "--+-++", "---+++"];
pub const D_PATTERNS: [&str; 14] = [
    "----++++", "-+-+-+-+", "---+-+++", "--+--+++", "-+---+++", "--++--++", "-+-+--++",
    "---++-++", "--+-+-++", "-+--+-++", "---+++-+", "--+-++-+", "-+--++-+", "--++-+-+",
];

/// Power sums of η² and the distinct-index sums derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSums {
    pub s2: f64,
    pub s4: f64,
    pub s6: f64,
    pub s8: f64,
    /// Sums over distinct indices in the order of the columns of [`C_TABLE`].
    pub c_classes: [f64; 3],
    /// Sums over distinct indices in the order of the columns of [`D_TABLE`].
    pub d_classes: [f64; 5],
}

pub fn power_sums(eta: &[f64]) -> PowerSums {
    let mut p = [0.0f64; 4];
    for &e in eta {
        let x = e * e;
        let mut xk = x;
        for pk in p.iter_mut() {
            *pk += xk;
            xk *= x;
        }
    }
    let [p1, p2, p3, p4] = p;
    let c_classes = [p3, p2 * p1 - p3, p1 * p1 * p1 - 3.0 * p1 * p2 + 2.0 * p3];
    let d_classes = [
        p4,
        p3 * p1 - p4,
        p2 * p2 - p4,
        p2 * p1 * p1 - 2.0 * p1 * p3 + 2.0 * p4 - p2 * p2,
        p1.powi(4) - 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 - 6.0 * p4,
    ];
    PowerSums {
        s2: p1,
        s4: p2,
        s6: p3,
        s8: p4,
        c_classes,
        d_classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: [f64; 5],
    pub d: [f64; 14],
}

impl CoefficientSet {
    /// Coefficients from raw couplings, without normalization.
    pub fn from_eta(eta: &[f64]) -> Self {
        let ps = power_sums(eta);
        let mut c = [0.0; 5];
        for (ci, row) in c.iter_mut().zip(C_TABLE.iter()) {
            *ci = row.iter().zip(ps.c_classes).map(|(&k, s)| k as f64 * s).sum();
        }
        let mut d = [0.0; 14];
        for (di, row) in d.iter_mut().zip(D_TABLE.iter()) {
            *di = row.iter().zip(ps.d_classes).map(|(&k, s)| k as f64 * s).sum();
        }
        CoefficientSet {
            a: ps.s2,
            b1: ps.s2 * ps.s2,
            b2: 2.0 * (ps.s2 * ps.s2 - ps.s4),
            c,
            d,
        }
    }

    /// All 22 values in the order A, B₁, B₂, C₁..C₅, D₁..D₁₄.
    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = vec![self.a, self.b1, self.b2];
        v.extend_from_slice(&self.c);
        v.extend_from_slice(&self.d);
        v
    }
}

pub fn coefficient_set(mode: &ModeSpec) -> CoefficientSet {
    CoefficientSet::from_eta(&mode.eta)
}

/// Patterns for the 22 coefficients in [`CoefficientSet::as_vec`] order.
pub fn all_patterns() -> Vec<&'static str> {
    let mut v = vec![A_PATTERN, B1_PATTERN, B2_PATTERN];
    v.extend_from_slice(&C_PATTERNS);
    v.extend_from_slice(&D_PATTERNS);
    v
}

pub const STRING_ORACLE_MAX_IONS: usize = 12;

/// ⟨0|O|0⟩ for a product O of collective operators on the full 2^N spin space.
///
/// `pattern` is read as an operator product: the rightmost symbol acts first.
/// Accepts `+`, `-` and the Unicode minus sign.
pub fn string_expectation(eta: &[f64], pattern: &str) -> Result<f64> {
    let n = eta.len();
    if n > STRING_ORACLE_MAX_IONS {
        return Err(Error::DimensionCap {
            what: "ions for operator-string oracle",
            requested: n,
            cap: STRING_ORACLE_MAX_IONS,
        });
    }
    let dim = 1usize << n;
    let mut psi = vec![0.0f64; dim];
    psi[0] = 1.0;
    let mut next = vec![0.0f64; dim];
    for ch in pattern.chars().rev() {
        let raise = match ch {
            '+' => true,
            '-' | '−' => false,
            other => {
                return Err(Error::InvalidInput(format!(
                    "pattern symbol {other:?} is not + or -"
                )))
            }
        };
        next.iter_mut().for_each(|x| *x = 0.0);
        for (s, &amp) in psi.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            for (i, &e) in eta.iter().enumerate() {
                let bit = 1usize << i;
                let set = s & bit != 0;
                if raise && !set {
                    next[s | bit] += e * amp;
                } else if !raise && set {
                    next[s & !bit] += e * amp;
                }
            }
        }
        std::mem::swap(&mut psi, &mut next);
    }
    Ok(psi[0])
}

/// Oracle values for all 22 coefficients.
pub fn oracle_set(eta: &[f64]) -> Result<CoefficientSet> {
    let v = all_patterns()
        .iter()
        .map(|p| string_expectation(eta, p))
        .collect::<Result<Vec<f64>>>()?;
    let mut c = [0.0; 5];
    c.copy_from_slice(&v[3..8]);
    let mut d = [0.0; 14];
    d.copy_from_slice(&v[8..22]);
    Ok(CoefficientSet {
        a: v[0],
        b1: v[1],
        b2: v[2],
        c,
        d,
    })
}

/// Checks the embedded prefactor tables against the operator-string oracle
/// for a fixed three-ion coupling vector. Evaluated once per process.
pub fn verify_tables() -> Result<()> {
    static CHECK: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(|| {
            let raw = [0.3141, -0.7218, 0.5093];
            let norm = raw.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            let eta: Vec<f64> = raw.iter().map(|x| x / norm).collect();
            let formula = CoefficientSet::from_eta(&eta).as_vec();
            let oracle = oracle_set(&eta).map_err(|e| e.to_string())?.as_vec();
            for (k, (a, b)) in formula.iter().zip(&oracle).enumerate() {
                if (a - b).abs() > 1e-12 {
                    return Err(format!("coefficient #{k}: table {a} vs oracle {b}"));
                }
            }
            Ok(())
        })
        .clone()
        .map_err(Error::TableCheck)
}
