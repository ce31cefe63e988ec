//! Acceptance suite: one test per release criterion, each printing a
//! single pass/fail line (visible with `--nocapture`) and enforcing its
//! runtime budget.

use std::time::{Duration, Instant};

use fbmrep::convergence::{check_bound, distance_curve, fit_rate, variance_identity};
use fbmrep::kernels::{bound_constants, KernelSpec};
use fbmrep::quad::tanh_sinh;
use fbmrep::simulate::{
    coupled_mean_square_difference, empirical_covariance, fbm_covariance, mg_transform_path,
    sample_fbm_exact, zhs_and_zh_paths, Grid,
};
use fbmrep::special::{
    contiguity_residual, hyp2f1_at_one, hyp2f1_def, hyp2f1_dz, power_weighted_integral, HypParams,
    WeightGeometry,
};
use fbmrep::frac::{
    frac_integral_indicator, marchaud_derivative_extrapolated, rl_derivative, rl_integral,
    FracOrder, SampledFunction,
};

struct Criterion {
    n: u32,
    name: &'static str,
    start: Instant,
    budget: Duration,
    failures: Vec<String>,
}

impl Criterion {
    fn new(n: u32, name: &'static str, budget_secs: u64) -> Self {
        Criterion {
            n,
            name,
            start: Instant::now(),
            budget: Duration::from_secs(budget_secs),
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) {
        let elapsed = self.start.elapsed();
        let in_budget = elapsed <= self.budget;
        let ok = self.failures.is_empty() && in_budget;
        println!(
            "criterion {} ({}): {} [{:.2?} of {:.0?} budget]",
            self.n,
            self.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed,
            self.budget
        );
        for f in &self.failures {
            println!("  - {f}");
        }
        assert!(in_budget, "criterion {} exceeded budget: {elapsed:.2?}", self.n);
        assert!(self.failures.is_empty(), "criterion {} failed: {:?}", self.n, self.failures);
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_1_hypergeometric_suite() {
    let mut c = Criterion::new(1, "hypergeometric identities", 5);

    // reduction F(0,b,c,z) = 1, exactly
    for &(b, cc, z) in &[(0.7, 1.3, -0.5), (0.2, 0.9, 0.99), (1.5, 2.0, -100.0)] {
        let v = hyp2f1_def(0.0, b, cc, z).unwrap();
        c.check(v == 1.0, || format!("reduction F(0,{b},{cc},{z}) = {v}"));
    }

    // closed form F(a,b,b,z) = (1-z)^{-a}
    for &(a, b, z) in &[(0.4, 0.6, 0.5), (1.3, 0.2, -2.0), (-0.7, 1.1, 0.97)] {
        let v = hyp2f1_def(a, b, b, z).unwrap();
        let want = (1.0 - z).powf(-a);
        c.check(rel_err(v, want) < 1e-10, || {
            format!("F({a},{b},{b},{z}) = {v}, closed form {want}")
        });
    }

    // linear-transformation round trip F(a,b,c,z) = (1-z)^{-a} F(a,c-b,c,z/(z-1))
    for &(a, b, cc, z) in &[(0.3, 0.8, 1.4, 0.4), (0.9, 0.15, 2.2, 0.85), (0.25, 0.5, 1.1, 0.6)] {
        let lhs = hyp2f1_def(a, b, cc, z).unwrap();
        let rhs = (1.0 - z).powf(-a) * hyp2f1_def(a, cc - b, cc, z / (z - 1.0)).unwrap();
        c.check(rel_err(lhs, rhs) < 1e-10, || {
            format!("round trip at ({a},{b},{cc},{z}): {lhs} vs {rhs}")
        });
    }

    // Gauss value at z = 1 vs direct series summation
    {
        let (a, b, cc) = (0.2, 0.3, 3.0);
        let gauss = hyp2f1_at_one(a, b, cc).unwrap();
        let mut sum = 1.0;
        let mut term = 1.0f64;
        for k in 0..400_000 {
            let kf = k as f64;
            term *= (a + kf) * (b + kf) / ((cc + kf) * (kf + 1.0));
            sum += term;
        }
        c.check(rel_err(gauss, sum) < 1e-10, || {
            format!("Gauss value {gauss} vs series {sum}")
        });
    }

    // derivative formula vs central finite difference
    for &(a, b, cc, z) in &[(0.4, 0.7, 1.3, 0.3), (1.1, 0.2, 0.9, -0.7), (0.6, 0.6, 1.8, 0.75)] {
        let d = hyp2f1_dz(&HypParams::new(a, b, cc, z).unwrap()).unwrap();
        let h = 1e-6;
        let fd = (hyp2f1_def(a, b, cc, z + h).unwrap() - hyp2f1_def(a, b, cc, z - h).unwrap())
            / (2.0 * h);
        c.check(rel_err(d, fd) < 1e-6, || {
            format!("derivative at ({a},{b},{cc},{z}): {d} vs FD {fd}")
        });
    }

    // contiguity residual vanishes
    for &(a, b, cc, z) in &[(0.4, 0.7, 1.3, 0.3), (0.9, 0.25, 1.7, -1.5), (0.1, 1.2, 2.4, 0.8)] {
        let r = contiguity_residual(a, b, cc, z).unwrap();
        let scale = cc.abs() * hyp2f1_def(a, b, cc, z).unwrap().abs();
        c.check(r.abs() < 1e-10 * scale.max(1.0), || {
            format!("contiguity residual {r} at ({a},{b},{cc},{z})")
        });
    }

    c.finish();
}

#[test]
fn criterion_2_weighted_power_integrals() {
    let mut c = Criterion::new(2, "weighted-power integrals vs quadrature", 10);
    let (x, y) = (0.3, 1.7);
    let mut count = 0;
    for &a in &[-0.4, 0.3, 1.0] {
        for &b in &[-0.3, 0.5, 1.2] {
            for &cc in &[-0.6, 0.4, 1.5] {
                for &(w, geom) in &[
                    (-0.5, WeightGeometry::WBelow),
                    (2.5, WeightGeometry::WAbove),
                ] {
                    let closed = power_weighted_integral(a, b, cc, w, x, y, geom).unwrap();
                    let quad = tanh_sinh(
                        |u, dl, dr| {
                            let wt = match geom {
                                WeightGeometry::WBelow => (u - w).powf(cc),
                                WeightGeometry::WAbove => (w - u).powf(cc),
                            };
                            dr.powf(b) * wt * dl.powf(a)
                        },
                        x,
                        y,
                        1e-12,
                    );
                    count += 1;
                    c.check(rel_err(closed, quad.value) <= 1e-8, || {
                        format!(
                            "a={a} b={b} c={cc} w={w}: closed {closed} vs quadrature {}",
                            quad.value
                        )
                    });
                }
            }
        }
    }
    c.check(count >= 27, || format!("parameter grid too small: {count}"));
    c.finish();
}

#[test]
fn criterion_3_fractional_calculus_laws() {
    let mut c = Criterion::new(3, "fractional-calculus laws", 30);
    let bump = |n: usize| {
        SampledFunction::from_fn(-1.0, 1.5, n, 1.0, |t| {
            if t.abs() < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        })
        .unwrap()
    };
    let sup = |f: &SampledFunction, g: &SampledFunction| {
        f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };

    // semigroup I^a I^b = I^{a+b} with observed order >= 1 under refinement
    for &(al, be) in &[(0.3, 0.4), (0.5, 0.4)] {
        let mut errs = Vec::new();
        for &n in &[300usize, 600, 1200] {
            let f = bump(n);
            let two = rl_integral(&rl_integral(&f, FracOrder(be)).unwrap(), FracOrder(al)).unwrap();
            let one = rl_integral(&f, FracOrder(al + be)).unwrap();
            errs.push(sup(&two, &one));
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        c.check(order1 >= 1.0 && order2 >= 1.0, || {
            format!("semigroup ({al},{be}) refinement orders {order1:.2}, {order2:.2}, errs {errs:?}")
        });
    }

    // D^alpha I^alpha f = f
    {
        let f = bump(1200);
        let comp = rl_derivative(&rl_integral(&f, FracOrder(0.3)).unwrap(), FracOrder(0.3)).unwrap();
        let e = f
            .values
            .iter()
            .zip(&comp.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        c.check(e < 5e-3, || format!("D^a I^a identity error {e}"));
    }

    // composition D^{0.2} I^{0.5} f = I^{0.3} f (Marchaud route)
    {
        let f = bump(1200);
        let half = rl_integral(&f, FracOrder(0.5)).unwrap();
        let lhs = marchaud_derivative_extrapolated(&half, FracOrder(0.2), 4.0 * half.grid_step)
            .unwrap();
        let rhs = rl_integral(&f, FracOrder(0.3)).unwrap();
        let e = sup(&lhs, &rhs);
        c.check(e < 5e-3, || format!("composition error {e}"));
    }

    // indicator closed form vs discretized operator, H = 0.75
    {
        let h = 0.75;
        let n = 4000;
        let ind = SampledFunction::from_fn(-1.0, 2.0, n, 1.0, |t| {
            if t == 0.0 || t == 1.0 {
                0.5
            } else if (0.0..1.0).contains(&t) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let num = rl_integral(&ind, FracOrder(h - 0.5)).unwrap();
        for &s in &[-0.8, -0.3, 0.2, 0.6, 0.9] {
            let closed = frac_integral_indicator(h, 1.0, s).unwrap();
            let got = num.interp(s);
            c.check((closed - got).abs() < 2e-3, || {
                format!("indicator at s={s}: closed {closed} vs grid {got}")
            });
        }
    }

    c.finish();
}

#[test]
fn criterion_4_variance_identity() {
    let mut c = Criterion::new(4, "representation variance identity", 60);
    for &h in &[0.25, 0.5, 0.75] {
        for &t in &[1.0, 2.0] {
            let spec = KernelSpec::new(0.5, h, t).unwrap();
            let ratio = variance_identity(&spec, 128.0, 1e-7).unwrap();
            c.check((ratio - 1.0).abs() < 1e-3, || {
                format!("K=1/2 H={h} t={t}: ratio {ratio}")
            });
        }
    }
    let spec = KernelSpec::new(0.7, 0.4, 1.0).unwrap();
    let ratio = variance_identity(&spec, 128.0, 1e-6).unwrap();
    c.check((ratio - 1.0).abs() < 5e-3, || format!("K=0.7 H=0.4: ratio {ratio}"));
    c.finish();
}

#[test]
fn criterion_5_distributional_check() {
    let mut c = Criterion::new(5, "MG ensemble covariance (MC)", 120);
    let grid = Grid::new(0.0, 1.0, 512).unwrap();
    let probes = [0.25, 0.5, 0.75, 1.0];
    for &h in &[0.3, 0.7] {
        let spec = KernelSpec::new(0.5, h, 1.0).unwrap();
        let driver = sample_fbm_exact(0.5, &grid, 20_000, 20_240 + (h * 10.0) as u64).unwrap();
        let ens = mg_transform_path(&spec, &driver).unwrap();
        let est = empirical_covariance(&ens, &probes).unwrap();
        let mut pairs = 0;
        for i in 0..probes.len() {
            for j in (i + 1)..probes.len() {
                let theo = fbm_covariance(h, probes[i], probes[j]);
                let dev = (est.matrix[i][j] - theo).abs() / est.stderr[i][j];
                pairs += 1;
                c.check(dev <= 5.0, || {
                    format!("H={h} cov({},{}) deviates {dev:.2} stderr", probes[i], probes[j])
                });
            }
        }
        c.check(pairs == 6, || format!("probe pair count {pairs}"));
    }
    c.finish();
}

#[test]
fn criterion_6_theorem_rate() {
    let mut c = Criterion::new(6, "shift-convergence rate", 300);
    let shifts = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];

    for &h in &[0.3, 0.7] {
        let spec = KernelSpec::new(0.5, h, 1.0).unwrap();
        let curve = distance_curve(&spec, &shifts, 8.0, 1e-6).unwrap();
        let rate = fit_rate(&curve).unwrap();
        let target = 2.0 * h - 2.0;
        c.check((rate.slope - target).abs() <= 0.15, || {
            format!("K=1/2 H={h}: slope {} vs target {target}", rate.slope)
        });
    }

    let spec = KernelSpec::new(0.7, 0.4, 1.0).unwrap();
    let curve = distance_curve(&spec, &shifts, 8.0, 1e-6).unwrap();
    let rate = fit_rate(&curve).unwrap();
    c.check((rate.slope - (-1.2)).abs() <= 0.15, || {
        format!("K=0.7 H=0.4: slope {}", rate.slope)
    });

    let spec = KernelSpec::new(0.3, 0.6, 1.0).unwrap();
    let curve = distance_curve(&spec, &shifts, 8.0, 1e-6).unwrap();
    let rate = fit_rate(&curve).unwrap();
    // two-term bound: only an upper rate is asserted
    c.check(rate.slope <= -0.8 + 0.15, || {
        format!("K=0.3 H=0.6: slope {}", rate.slope)
    });

    c.finish();
}

#[test]
fn criterion_7_bound_constants() {
    let mut c = Criterion::new(7, "closed-form bound margins", 300);
    let shifts = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    for &(k, h) in &[(0.5, 0.3), (0.5, 0.7), (0.7, 0.4), (0.3, 0.6)] {
        let spec = KernelSpec::new(k, h, 1.0).unwrap();
        let curve = distance_curve(&spec, &shifts, 8.0, 1e-6).unwrap();
        let bc =
            bound_constants(&KernelSpec::with_shift(k, h, 1.0, shifts[0]).unwrap(), 1.0).unwrap();
        if k < 0.5 {
            c.check(bc.c3.is_some() && bc.c4.is_some(), || {
                format!("K={k}: expected the two-term constants, got {bc:?}")
            });
        }
        let report = check_bound(&curve, &bc).unwrap();
        for row in &report.rows {
            c.check(row.margin >= 1.0, || {
                format!("K={k} H={h} s={}: margin {}", row.s, row.margin)
            });
        }
    }
    c.finish();
}

#[test]
fn criterion_8_coupling_cross_check() {
    let mut c = Criterion::new(8, "deterministic vs coupled-MC distance", 300);
    let (k, h, t, s) = (0.5, 0.7, 1.0, 16.0);
    let spec = KernelSpec::with_shift(k, h, t, s).unwrap();
    let det = fbmrep::convergence::l2_distance(&KernelSpec::new(k, h, t).unwrap(), s, 8.0 * s, 1e-7)
        .unwrap();

    let trunc_l = 64.0;
    let grid = Grid::new(0.0, t, 64).unwrap();
    let (zhs, zh) = zhs_and_zh_paths(&spec, &grid, trunc_l, 10_000, 99).unwrap();
    let (mc, stderr) = coupled_mean_square_difference(&zhs, &zh, t).unwrap();

    // increments beyond the driver's truncation horizon are independent of
    // the simulated ones, so the truncated tail variance adds exactly
    let tail = fbmrep::convergence::distance_truncation_tail(
        &KernelSpec::new(k, h, t).unwrap(),
        s,
        trunc_l,
        1e-8,
    )
    .unwrap();
    let mc_total = mc + tail;

    let dev = (det - mc_total).abs() / stderr;
    c.check(dev <= 4.0, || {
        format!("det {det} vs MC {mc_total} (tail {tail}): {dev:.2} stderr")
    });
    c.finish();
}

#[test]
fn criterion_9_determinism() {
    let mut c = Criterion::new(9, "seeded determinism", 300);
    let grid = Grid::new(0.0, 1.0, 128).unwrap();

    let csv_once = || {
        let driver = sample_fbm_exact(0.5, &grid, 32, 424_242).unwrap();
        let spec = KernelSpec::new(0.5, 0.7, 1.0).unwrap();
        mg_transform_path(&spec, &driver).unwrap().to_csv()
    };
    let a = csv_once();
    let b = csv_once();
    c.check(a == b, || "repeated runs differ".to_string());

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(csv_once);
    c.check(a == single, || "1-thread vs n-thread outputs differ".to_string());

    let exact = sample_fbm_exact(0.75, &grid, 16, 7).unwrap().to_csv();
    let exact2 = sample_fbm_exact(0.75, &grid, 16, 7).unwrap().to_csv();
    c.check(exact == exact2, || "exact sampler runs differ".to_string());

    c.finish();
}
