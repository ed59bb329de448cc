//! The sideband-ratio polynomial R_t(n̄) and its inversion, with the finite
//! sampling bias and variance of the resulting estimate.
//!
//! Time enters only through the pulse area gt, with the single-ion flops
//! P_r = Σ pₙ sin²(gt√n) and P_b = Σ pₙ sin²(gt√(n+1)).

use serde::{Deserialize, Serialize};

use crate::coefficients::{coefficient_set, CoefficientSet};
use crate::crystal::ModeSpec;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::thermal;

/// Smallest admissible separation of the sideband probabilities.
pub const MIN_SIDEBAND_GAP: f64 = 1e-12;
/// Relative window around the rough estimate within which two admissible
/// roots are reported as ambiguous.
pub const AMBIGUITY_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPolynomial {
    pub coeffs: CoefficientSet,
    p2: Poly,
    p3: Poly,
    p4: Poly,
}

fn poly(c: &[f64]) -> Poly {
    Poly(c.to_vec())
}

impl RatioPolynomial {
    pub fn new(coeffs: CoefficientSet) -> Self {
        let CoefficientSet { a, b1, b2, c, d } = coeffs;
        let [c1, c2, c3, c4, c5] = c;
        let [d1, _d2, d3, d4, d5, d6, d7, d8, d9, d10, d11, d12, d13, d14] = d;

        // m = n(1+n), s = (1+2n)² = 1 + 4m
        let m = poly(&[0.0, 1.0, 1.0]);
        let s = poly(&[1.0, 4.0, 4.0]);
        let one = Poly::constant(1.0);
        let cs = c1 + c3 + 2.0 * c4 + 3.0 * c5;

        let p2 = m.scale(b2 / (6.0 * a));

        let k3 = 2.0 * cs * a - 5.0 * b2 * (2.0 * b2 + b1) + 15.0 * b2 * a * a;
        let p3 = m
            .mul(&poly(&[1.0, 2.0]))
            .scale(k3 / (360.0 * a * a));

        let d_alpha = 12.0 * d1 + 2.0 * d10 + 3.0 * d11 + 2.0 * d12 + d13 + d14 + 9.0 * d3
            + 6.0 * d4
            + 3.0 * d5
            + 2.0 * d6
            + d7
            + 6.0 * d8
            + 4.0 * d9;
        let d_beta = 6.0 * d1 + 2.0 * d10 + 3.0 * d11 + 2.0 * d12 + d13 + d14 + 5.0 * d3
            + 4.0 * d4
            + 3.0 * d5
            + 2.0 * d6
            + d7
            + 4.0 * d8
            + 3.0 * d9;
        let s_coef = -315.0 * a.powi(4) * b2 + 35.0 * b2 * (b1 + 2.0 * b2).powi(2)
            - 210.0 * a * a * b2 * b2
            - 14.0 * a * b1 * cs;
        let c_const = c2 + 4.0 * (c3 + 2.0 * c4 + 3.0 * c5) + 4.0 * c1;
        let c_m = 6.0 * (c2 + 3.0 * c3 + 5.0 * c4 + 7.0 * c5) + 18.0 * c1;
        let q = s
            .scale(s_coef)
            .add(&one.add(&m.scale(8.0)).scale(42.0 * a.powi(3) * cs))
            .add(&one.scale(d_alpha).add(&m.scale(6.0 * d_beta)).scale(3.0 * a * a))
            .add(&one.scale(c_const).add(&m.scale(c_m)).scale(-14.0 * a * b2));
        let p4 = m.mul(&q).scale(1.0 / (30240.0 * a.powi(3)));

        RatioPolynomial { coeffs, p2, p3, p4 }
    }

    pub fn for_mode(mode: &ModeSpec) -> Self {
        Self::new(coefficient_set(mode))
    }

    pub fn p2_poly(&self) -> &Poly {
        &self.p2
    }
    pub fn p3_poly(&self) -> &Poly {
        &self.p3
    }
    pub fn p4_poly(&self) -> &Poly {
        &self.p4
    }

    pub fn p2(&self, nbar: f64) -> f64 {
        self.p2.eval(nbar)
    }
    pub fn p3(&self, nbar: f64) -> f64 {
        self.p3.eval(nbar)
    }
    pub fn p4(&self, nbar: f64) -> f64 {
        self.p4.eval(nbar)
    }

    /// R_t as a quartic in n̄ at fixed gt.
    pub fn at(&self, gt: f64) -> Poly {
        let x = gt * gt;
        Poly::x()
            .add(&self.p2.scale(x))
            .add(&self.p3.scale(-x * x))
            .add(&self.p4.scale(x * x * x))
    }

    pub fn value(&self, nbar: f64, gt: f64) -> f64 {
        self.at(gt).eval(nbar)
    }

    /// ∂R_t/∂n̄.
    pub fn derivative(&self, nbar: f64, gt: f64) -> f64 {
        self.at(gt).derivative().eval(nbar)
    }

    /// ∂²R_t/∂n̄².
    pub fn second_derivative(&self, nbar: f64, gt: f64) -> f64 {
        self.at(gt).derivative().derivative().eval(nbar)
    }

    /// Solves R_t(n̄) = r for the physical root.
    pub fn invert(&self, r: f64, gt: f64) -> Result<f64> {
        invert_ratio(self, r, gt)
    }

    /// True when R_t is strictly increasing on [0, n_max] (checked on a grid).
    pub fn is_monotone(&self, gt: f64, n_max: f64) -> bool {
        let d = self.at(gt).derivative();
        (0..=400).all(|k| d.eval(n_max * k as f64 / 400.0) > 0.0)
    }
}

pub fn ratio_value(poly: &RatioPolynomial, nbar: f64, gt: f64) -> f64 {
    poly.value(nbar, gt)
}

/// Admissible root of R_t(n̄) = r, chosen closest to the rough estimate r.
pub fn invert_ratio(poly: &RatioPolynomial, r: f64, gt: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::InvalidInput(format!("ratio must be non-negative, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let p = poly.at(gt).add(&Poly::constant(-r));
    let mut roots: Vec<f64> = p
        .roots()
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| p.polish(z.re))
        .filter(|&x| x.is_finite() && x >= 0.0)
        .collect();
    if roots.is_empty() {
        return Err(Error::NoAdmissibleRoot { ratio: r, gt });
    }
    roots.sort_by(|a, b| (a - r).abs().partial_cmp(&(b - r).abs()).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    let near: Vec<f64> = roots
        .iter()
        .copied()
        .filter(|x| (x - r).abs() <= AMBIGUITY_WINDOW * r)
        .collect();
    if near.len() >= 2 {
        return Err(Error::AmbiguousRoot { candidates: near });
    }
    Ok(roots[0])
}

fn check_probabilities(pr: f64, pb: f64) -> Result<()> {
    if !(pr.is_finite() && pb.is_finite()) || pr < 0.0 || pb > 1.0 {
        return Err(Error::DegenerateProbability(if pb > 1.0 { pb } else { pr }));
    }
    if pb - pr < MIN_SIDEBAND_GAP {
        return Err(Error::DegenerateSidebands(pb - pr));
    }
    Ok(())
}

fn bias_terms(pr: f64, pb: f64) -> (f64, f64) {
    let d = pb - pr;
    let first = 2.0 * pb * pr * (2.0 - pb - pr) / d.powi(3);
    let second = pb * pr * (pb + pr - 2.0 * pb * pr) / d.powi(4);
    (first, second)
}

fn variance_term(pr: f64, pb: f64) -> f64 {
    let d = pb - pr;
    2.0 * pb * pr * (pb + pr - 2.0 * pb * pr) / d.powi(4)
}

/// Asymptotic bias of the crystal estimate for `shots` measurements in total,
/// split equally between the sidebands.
pub fn crystal_bias(pr: f64, pb: f64, r1: f64, r2: f64, shots: f64) -> Result<f64> {
    check_probabilities(pr, pb)?;
    let (x, y) = bias_terms(pr, pb);
    Ok((x / r1 - y * r2 / r1.powi(3)) / shots)
}

/// Asymptotic variance of the crystal estimate, equal split of `shots`.
pub fn crystal_variance(pr: f64, pb: f64, r1: f64, shots: f64) -> Result<f64> {
    check_probabilities(pr, pb)?;
    Ok(variance_term(pr, pb) / r1.powi(2) / shots)
}

pub fn single_ion_bias(pr: f64, pb: f64, shots: f64) -> Result<f64> {
    check_probabilities(pr, pb)?;
    Ok(bias_terms(pr, pb).0 / shots)
}

pub fn single_ion_variance(pr: f64, pb: f64, shots: f64) -> Result<f64> {
    check_probabilities(pr, pb)?;
    Ok(variance_term(pr, pb) / shots)
}

/// Bias and variance for separate red and blue shot counts.
///
/// Equal counts go through [`crystal_bias`] and [`crystal_variance`].
pub fn crystal_moments(
    pr: f64,
    pb: f64,
    r1: f64,
    r2: f64,
    shots_red: u64,
    shots_blue: u64,
) -> Result<(f64, f64)> {
    if shots_red == shots_blue {
        let total = (shots_red + shots_blue) as f64;
        return Ok((
            crystal_bias(pr, pb, r1, r2, total)?,
            crystal_variance(pr, pb, r1, total)?,
        ));
    }
    check_probabilities(pr, pb)?;
    let d = pb - pr;
    let vr = pr * (1.0 - pr) / shots_red as f64;
    let vb = pb * (1.0 - pb) / shots_blue as f64;
    let bias_r = (pb * vr + pr * vb) / d.powi(3);
    let var_r = (pb * pb * vr + pr * pr * vb) / d.powi(4);
    Ok((bias_r / r1 - 0.5 * var_r * r2 / r1.powi(3), var_r / r1.powi(2)))
}

/// Thermally averaged single-ion flops truncated at `n_max`.
///
/// The red sum runs one level higher than the blue one so that
/// P_r/(P_b − P_r) = n̄ holds for every truncation.
pub fn single_ion_flops(nbar: f64, gt: f64, n_max: usize) -> (f64, f64) {
    let p = thermal::distribution(nbar, n_max + 1);
    let (mut pr, mut pb) = (0.0, 0.0);
    for n in 0..=n_max {
        let s = (gt * ((n + 1) as f64).sqrt()).sin().powi(2);
        pb += p[n] * s;
        pr += p[n + 1] * s;
    }
    (pr, pb)
}

/// Single-ion flops with the default thermal tail rule.
pub fn single_ion_flops_auto(nbar: f64, gt: f64) -> (f64, f64) {
    single_ion_flops(nbar, gt, thermal::cutoff(nbar, thermal::DEFAULT_TAIL))
}

/// `d P_r / d n̄` and `d P_b / d n̄` for a single ion.
pub fn single_ion_flop_derivatives(nbar: f64, gt: f64, n_max: usize) -> (f64, f64) {
    let dp = thermal::distribution_derivative(nbar, n_max + 1);
    let (mut dr, mut db) = (0.0, 0.0);
    for n in 0..=n_max {
        let s = (gt * ((n + 1) as f64).sqrt()).sin().powi(2);
        db += dp[n] * s;
        dr += dp[n + 1] * s;
    }
    (dr, db)
}

/// Rough estimate that ignores all time-dependent corrections.
pub fn naive_ratio(pr: f64, pb: f64) -> f64 {
    pr / (pb - pr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateAtTime {
    pub gt: f64,
    pub t_s: f64,
    pub f_red: f64,
    pub f_blue: f64,
    pub ratio: f64,
    pub nbar_raw: f64,
    pub nbar_hat: f64,
    pub bias: f64,
    pub variance: f64,
    pub shots_red: u64,
    pub shots_blue: u64,
    /// Set when the plug-in moments used regularized frequencies.
    pub regularized: bool,
}
