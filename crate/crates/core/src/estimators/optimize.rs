//! Thin wrappers over the one-dimensional Brent solvers of `argmin`.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::{BrentOpt, BrentRoot};

use crate::error::{Error, Result};

struct Objective<F>(F);

impl<F: Fn(f64) -> Result<f64>> CostFunction for Objective<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        (self.0)(*x).map_err(argmin::core::Error::new)
    }
}

fn solver_error(e: argmin::core::Error) -> Error {
    match e.downcast::<Error>() {
        Ok(inner) => inner,
        Err(other) => Error::InvalidInput(other.to_string()),
    }
}

/// Local minimum of `f` on [lo, hi], located to within about `xtol`.
pub fn minimize<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)> {
    let solver = BrentOpt::new(lo, hi).set_tolerance(f64::EPSILON.sqrt(), xtol);
    let res = Executor::new(Objective(f), solver)
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(solver_error)?;
    let st = res.state();
    let x = *st.get_best_param().ok_or_else(|| Error::InvalidInput("minimizer returned no point".into()))?;
    Ok((x, st.get_best_cost()))
}

/// Minimum of `f` on [lo, hi]: coarse scan on `points` nodes, then Brent
/// refinement around the best node.
pub fn scan_minimize<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, points: usize, xtol: f64) -> Result<(f64, f64)> {
    let points = points.max(3);
    let h = (hi - lo) / (points - 1) as f64;
    let mut best = (lo, f64::INFINITY);
    let mut best_k = 0;
    for k in 0..points {
        let x = lo + h * k as f64;
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
            best_k = k;
        }
    }
    let a = lo + h * best_k.saturating_sub(1) as f64;
    let b = (lo + h * (best_k + 1) as f64).min(hi);
    let (x, v) = minimize(&f, a, b, xtol)?;
    Ok(if v <= best.1 { (x, v) } else { best })
}

/// Root of `f` in [lo, hi]; `f(lo)` and `f(hi)` must differ in sign.
pub fn find_root<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let solver = BrentRoot::new(lo, hi, tol);
    let res = Executor::new(Objective(f), solver)
        .configure(|s| s.max_iters(200))
        .run()
        .map_err(solver_error)?;
    res.state()
        .get_best_param()
        .copied()
        .ok_or_else(|| Error::InvalidInput("root finder returned no point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let (x, v) = minimize(|x| Ok((x - 0.3).powi(2) + 1.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-7 && (v - 1.0).abs() < 1e-14);
        let (x, _) = scan_minimize(|x| Ok((3.0 * x).cos()), 0.0, 3.0, 31, 1e-12).unwrap();
        assert!((x - std::f64::consts::PI / 3.0).abs() < 1e-7);
    }

    #[test]
    fn cosine_root() {
        let r = find_root(|x| Ok(x.cos()), 1.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn errors_pass_through() {
        let e = minimize(|_| Err(Error::Uninformative("x".into())), 0.0, 1.0, 1e-6).unwrap_err();
        assert!(matches!(e, Error::Uninformative(_)));
    }
}
