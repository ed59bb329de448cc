use icct_core::coefficients::CoefficientSet;
use icct_core::crystal::{chain_hessian, chain_modes, com, equilibrium_positions, make_mode_spec, Axis, ChainConfig};
use icct_core::estimators::fisher::fisher_binary;
use icct_core::ratio::{self, RatioPolynomial};
use icct_core::sampling::{cutoff_time, CutoffOptions};
use icct_core::thermal;
use proptest::prelude::*;

fn eta_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=6).prop_filter("non-zero mode", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / s).collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thermal_distribution_is_normalized(nbar in 0.0f64..20.0) {
        let n_max = thermal::cutoff(nbar, thermal::DEFAULT_TAIL);
        let p = thermal::distribution(nbar, n_max);
        let total: f64 = p.iter().sum::<f64>() + thermal::tail_weight(nbar, n_max);
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(thermal::tail_weight(nbar, n_max) < thermal::DEFAULT_TAIL);
    }

    #[test]
    fn coefficients_ignore_signs_and_order(eta in eta_vec(), flips in prop::collection::vec(any::<bool>(), 6), seed in any::<u64>()) {
        let eta = normalized(&eta);
        let mut other: Vec<f64> = eta.iter().zip(&flips).map(|(e, f)| if *f { -e } else { *e }).collect();
        let k = (seed as usize) % other.len();
        other.rotate_left(k);
        let a = CoefficientSet::from_eta(&eta).as_vec();
        let b = CoefficientSet::from_eta(&other).as_vec();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn coefficients_are_homogeneous(eta in eta_vec(), lambda in 0.3f64..3.0) {
        let a = CoefficientSet::from_eta(&eta).as_vec();
        let scaled: Vec<f64> = eta.iter().map(|e| lambda * e).collect();
        let b = CoefficientSet::from_eta(&scaled).as_vec();
        // Distinct-index sums cancel, so rounding scales with (Σ η²)^(degree/2).
        let s2 = eta.iter().map(|e| e * e).sum::<f64>();
        for (k, (x, y)) in a.iter().zip(&b).enumerate() {
            let degree = match k {
                0 => 2,
                1 | 2 => 4,
                3..=7 => 6,
                _ => 8,
            };
            let scale = (s2 * lambda * lambda).powi(degree / 2);
            prop_assert!((x * lambda.powi(degree) - y).abs() <= 1e-12 * scale, "entry {k}");
        }
    }

    #[test]
    fn invert_undoes_value(eta in eta_vec(), nbar in 0.0f64..2.0, gt in 0.05f64..1.0) {
        let mode = make_mode_spec(&eta, 1.0, "p").unwrap();
        let poly = RatioPolynomial::for_mode(&mode);
        prop_assume!(poly.is_monotone(gt, 4.0));
        let r = poly.value(nbar, gt);
        if let Ok(n) = poly.invert(r, gt) {
            prop_assert!((n - nbar).abs() < 1e-9, "{n} vs {nbar}");
        }
    }

    #[test]
    fn binary_fisher_is_symmetric(p in 0.01f64..0.99, dp in -3.0f64..3.0) {
        let a = fisher_binary(p, dp).unwrap();
        let b = fisher_binary(1.0 - p, -dp).unwrap();
        prop_assert!(close(a, b, 1e-14));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn doubling_shots_halves_moments(pr in 0.01f64..0.4, gap in 0.02f64..0.5, r1 in 0.5f64..2.0, r2 in -1.0f64..1.0, shots in 10.0f64..1e5) {
        let pb = (pr + gap).min(0.99);
        let b1 = ratio::crystal_bias(pr, pb, r1, r2, shots).unwrap();
        let b2 = ratio::crystal_bias(pr, pb, r1, r2, 2.0 * shots).unwrap();
        let v1 = ratio::crystal_variance(pr, pb, r1, shots).unwrap();
        let v2 = ratio::crystal_variance(pr, pb, r1, 2.0 * shots).unwrap();
        prop_assert!(close(b1, 2.0 * b2, 1e-12));
        prop_assert!(close(v1, 2.0 * v2, 1e-12));
    }

    #[test]
    fn chain_modes_are_eigenpairs(n in 2usize..=10, beta in 4.0f64..12.0, transverse in any::<bool>()) {
        let axis = if transverse { Axis::Transverse } else { Axis::Axial };
        let config = ChainConfig { n_ions: n, anisotropy: beta, axis };
        let u = equilibrium_positions(n).unwrap();
        for i in 0..n {
            prop_assert!((u[i] + u[n - 1 - i]).abs() < 1e-12);
        }
        let h = chain_hessian(&config).unwrap();
        let modes = chain_modes(&config).unwrap();
        for w in modes.windows(2) {
            prop_assert!(w[0].frequency <= w[1].frequency);
        }
        for m in &modes {
            let v = nalgebra::DVector::from_column_slice(&m.eta_unit);
            let residual = (&h * &v - &v * m.frequency.powi(2)).amax();
            prop_assert!(residual < 1e-9 * beta * beta);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cutoff_grows_with_tolerance(n in 2usize..=5, nbar in 0.05f64..0.5, eps in 1e-3f64..5e-3) {
        let mode = com(n, 1.0);
        let tight = cutoff_time(&mode, nbar, &CutoffOptions { epsilon: eps, ..Default::default() }).unwrap();
        let loose = cutoff_time(&mode, nbar, &CutoffOptions { epsilon: 2.0 * eps, ..Default::default() }).unwrap();
        prop_assert!(tight.gt_star <= loose.gt_star + 1e-4);
    }
}
