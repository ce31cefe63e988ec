//! Cross-module invariants: Monte Carlo vs quadrature cross-validation,
//! self-convergence of the distance computation, the covariance corollary,
//! and randomized identities.

use proptest::prelude::*;

use fbmrep::convergence::{distance_truncation_tail, l2_distance, representation_covariance};
use fbmrep::kernels::{delta_kernels, DeltaKernel, KernelSpec};
use fbmrep::simulate::{
    coupled_mean_square_difference, fbm_covariance, sample_fbm_exact, zhs_and_zh_paths, Grid,
    PathEnsemble,
};
use fbmrep::special::{gamma_fn, hyp2f1_def};

fn cross_validate(k: f64, h: f64, t: f64, s: f64, seed: u64) {
    let plain = KernelSpec::new(k, h, t).unwrap();
    let det = l2_distance(&plain, s, 8.0 * s, 1e-6).unwrap();
    let spec = KernelSpec::with_shift(k, h, t, s).unwrap();
    let trunc_l = 64.0;
    let grid = Grid::new(0.0, t, 64).unwrap();
    let (zhs, zh) = zhs_and_zh_paths(&spec, &grid, trunc_l, 10_000, seed).unwrap();
    let (mc, stderr) = coupled_mean_square_difference(&zhs, &zh, t).unwrap();
    let mc_total = mc + distance_truncation_tail(&plain, s, trunc_l, 1e-7).unwrap();
    let dev = (det - mc_total).abs() / stderr;
    assert!(
        dev <= 4.0,
        "K={k} H={h}: det {det} vs MC {mc_total} ({dev:.2} stderr)"
    );
}

#[test]
fn mc_cross_validation_k_half_h_low() {
    cross_validate(0.5, 0.3, 1.0, 16.0, 11);
}

#[test]
fn mc_cross_validation_k_half_h_high() {
    cross_validate(0.5, 0.7, 1.0, 16.0, 12);
}

#[test]
fn mc_cross_validation_k_above_half() {
    cross_validate(0.7, 0.4, 1.0, 16.0, 13);
}

#[test]
fn distance_self_convergence() {
    for &(k, h) in &[(0.5, 0.7), (0.7, 0.4)] {
        let spec = KernelSpec::new(k, h, 1.0).unwrap();
        let a = l2_distance(&spec, 16.0, 64.0, 1e-6).unwrap();
        let b = l2_distance(&spec, 16.0, 128.0, 5e-7).unwrap();
        assert!(
            (a - b).abs() <= 1e-4 * a,
            "K={k} H={h}: {a} vs refined {b}"
        );
    }
}

#[test]
fn corollary_covariance_polarization() {
    for &(k, h) in &[(0.5, 0.3), (0.5, 0.7), (0.7, 0.4)] {
        for &(t1, t2) in &[(0.5, 1.0), (1.0, 2.0)] {
            let cov = representation_covariance(k, h, t1, t2, 128.0, 1e-7).unwrap();
            let want = fbm_covariance(h, t1, t2);
            assert!(
                (cov - want).abs() <= 1e-3 * want.abs(),
                "K={k} H={h} ({t1},{t2}): {cov} vs {want}"
            );
        }
    }
}

#[test]
fn csv_round_trip_bytes() {
    let grid = Grid::new(0.0, 1.0, 37).unwrap();
    let ens = sample_fbm_exact(0.65, &grid, 5, 3141).unwrap();
    let text = ens.to_csv();
    let back = PathEnsemble::from_csv(&text, 0.65).unwrap();
    assert_eq!(text, back.to_csv());
    assert_eq!(ens.paths, back.paths);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(x in 0.05f64..20.0) {
        let a = gamma_fn(x + 1.0).unwrap();
        let b = x * gamma_fn(x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
    }

    #[test]
    fn hyp_reduction_property(b in 0.05f64..2.0, c in 0.1f64..3.0, z in -5.0f64..0.95) {
        prop_assert_eq!(hyp2f1_def(0.0, b, c, z).unwrap(), 1.0);
    }

    #[test]
    fn hyp_linear_transformation_property(
        a in 0.05f64..1.5,
        b in 0.05f64..1.5,
        dc in 0.1f64..1.5,
        z in -3.0f64..0.9,
    ) {
        let c = a + b + dc; // keeps every route well inside its domain
        let lhs = hyp2f1_def(a, b, c, z).unwrap();
        let rhs = (1.0 - z).powf(-a) * hyp2f1_def(a, c - b, c, z / (z - 1.0)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn fbm_covariance_properties(h in 0.05f64..0.95, s in 0.01f64..3.0, t in 0.01f64..3.0) {
        let cst = fbm_covariance(h, s, t);
        let cts = fbm_covariance(h, t, s);
        prop_assert!((cst - cts).abs() <= 1e-14);
        let var_s = fbm_covariance(h, s, s);
        prop_assert!((var_s - s.powf(2.0 * h)).abs() <= 1e-12 * var_s);
        // 2x2 covariance matrices are positive semidefinite
        let var_t = fbm_covariance(h, t, t);
        prop_assert!(var_s * var_t - cst * cst >= -1e-10);
    }

    #[test]
    fn delta_k_decomposition_property(
        k in 0.1f64..0.9,
        h in 0.1f64..0.9,
        v in -7.9f64..0.99,
    ) {
        let spec = KernelSpec::with_shift(k, h, 1.0, 8.0).unwrap();
        let g = delta_kernels(&spec, DeltaKernel::G, v).unwrap();
        let hh = delta_kernels(&spec, DeltaKernel::H, v).unwrap();
        let kk = delta_kernels(&spec, DeltaKernel::K, v).unwrap();
        let scale = g.abs().max(hh.abs()).max(1.0);
        prop_assert!((kk - (g - hh)).abs() <= 1e-10 * scale);
    }

    #[test]
    fn exact_sampler_is_deterministic(seed in any::<u64>()) {
        let grid = Grid::new(0.0, 1.0, 16).unwrap();
        let a = sample_fbm_exact(0.6, &grid, 3, seed).unwrap();
        let b = sample_fbm_exact(0.6, &grid, 3, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
