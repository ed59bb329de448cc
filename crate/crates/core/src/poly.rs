//! Dense real polynomials in ascending-power form.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `n`, the identity polynomial.
    pub fn x() -> Self {
        Poly(vec![0.0, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or(0.0) + other.0.get(k).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// All complex roots, from the eigenvalues of the companion matrix.
    ///
    /// Leading coefficients that are negligible against the largest one are
    /// dropped first; callers that need full accuracy should polish the
    /// roots they keep with [`Poly::polish`].
    pub fn roots(&self) -> Vec<Complex64> {
        let scale = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Vec::new();
        }
        let mut c = self.0.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= 1e-15 * scale {
            c.pop();
        }
        let deg = c.len() - 1;
        if deg == 0 {
            return Vec::new();
        }
        let lead = c[deg];
        if deg == 1 {
            return vec![Complex64::new(-c[0] / lead, 0.0)];
        }
        let mut m = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            m[(i, deg - 1)] = -c[i] / lead;
        }
        m.complex_eigenvalues().iter().copied().collect()
    }

    /// Newton refinement of a real root estimate.
    pub fn polish(&self, mut x: f64) -> f64 {
        let d = self.derivative();
        for _ in 0..8 {
            let f = self.eval(x);
            let df = d.eval(x);
            if df == 0.0 || !df.is_finite() {
                break;
            }
            let step = f / df;
            x -= step;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }
}
