//! Path simulation: exact Gaussian sampling of fBm through a Cholesky
//! factor of its covariance, transform-based simulation through the
//! compact-interval and half-line kernels, fractional Wiener integrals of
//! deterministic integrands, and empirical covariance estimation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac::{marchaud_derivative_extrapolated, rl_integral, FracOrder, SampledFunction};
use crate::kernels::{bound_constants, f_hat, KernelSpec};
use crate::special::{gamma_fn, norm_c, norm_ckh};

/// Uniform time grid on `[t_start, t_end]` with `n_steps` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl Grid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::domain(format!(
                "grid requires t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps < 2 {
            return Err(Error::domain("grid needs at least 2 steps"));
        }
        Ok(Grid { t_start, t_end, n_steps })
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.step()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of a grid point equal to `t` (within a half-step tolerance).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t_start) / self.step();
        let i = x.round();
        if (x - i).abs() > 1e-9 || i < 0.0 || i > self.n_steps as f64 {
            return Err(Error::domain(format!("time {t} is not a grid point")));
        }
        Ok(i as usize)
    }
}

/// Matrix of simulated paths (rows) on a grid, plus the master seed that
/// produced them and the Hurst index of the sampled process.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub grid: Grid,
    pub paths: Vec<Vec<f64>>,
    pub master_seed: u64,
    pub hurst: f64,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Per-path increments over grid cells.
    fn increments(&self) -> Vec<Vec<f64>> {
        self.paths
            .iter()
            .map(|p| p.windows(2).map(|w| w[1] - w[0]).collect())
            .collect()
    }

    /// Serialize as CSV: header `time,path_0,...,path_{n-1}`, one row per
    /// grid point, floats in shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for i in 0..self.n_paths() {
            out.push_str(&format!(",path_{i}"));
        }
        out.push('\n');
        for (row, t) in self.grid.times().iter().enumerate() {
            out.push_str(&format!("{t}"));
            for p in &self.paths {
                out.push_str(&format!(",{}", p[row]));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV form written by [`to_csv`]. The seed is not stored in
    /// the file and is set to 0; `hurst` must be supplied by the caller.
    pub fn from_csv(text: &str, hurst: f64) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::domain("empty CSV".to_string()))?;
        let n_paths = header.split(',').count().saturating_sub(1);
        if n_paths == 0 {
            return Err(Error::domain("CSV has no path columns".to_string()));
        }
        let mut times = Vec::new();
        let mut paths = vec![Vec::new(); n_paths];
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let t: f64 = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e| Error::domain(format!("bad time field: {e}")))?;
            times.push(t);
            for p in paths.iter_mut() {
                let v: f64 = fields
                    .next()
                    .ok_or_else(|| Error::domain("short CSV row".to_string()))?
                    .parse()
                    .map_err(|e| Error::domain(format!("bad value field: {e}")))?;
                p.push(v);
            }
        }
        if times.len() < 3 {
            return Err(Error::domain("CSV has fewer than 3 grid points".to_string()));
        }
        let grid = Grid::new(times[0], *times.last().unwrap(), times.len() - 1)?;
        Ok(PathEnsemble {
            grid,
            paths,
            master_seed: 0,
            hurst,
        })
    }
}

/// fBm covariance `(|s|^{2H} + |t|^{2H} - |t-s|^{2H}) / 2`.
pub fn fbm_covariance(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(2.0 * h) + t.abs().powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

fn normals(master_seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Sample `n_paths` fBm paths with the exact finite-dimensional law on the
/// grid, via a Cholesky factor of the covariance matrix. Per-path RNG
/// streams are derived from the master seed, so the result is identical
/// under any parallel schedule.
pub fn sample_fbm_exact(h: f64, grid: &Grid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    if !(0.0 < h && h < 1.0) {
        return Err(Error::domain(format!("Hurst index must lie in (0,1), got {h}")));
    }
    let times = grid.times();
    // The row/column of time 0 is identically zero, so factor only the
    // nonzero times and pin B_0 = 0.
    let active: Vec<usize> = (0..times.len()).filter(|&i| times[i] != 0.0).collect();
    let n = active.len();

    let chol = if h == 0.5 {
        // Brownian case: increments are independent, no factorization needed.
        None
    } else {
        let mut cov = nalgebra::DMatrix::<f64>::zeros(n, n);
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                cov[(r, c)] = fbm_covariance(h, times[i], times[j]);
            }
        }
        let fact = match cov.clone().cholesky() {
            Some(f) => f,
            None => {
                for d in 0..n {
                    cov[(d, d)] += 1e-12;
                }
                cov.cholesky().ok_or_else(|| {
                    Error::Numerical(
                        "covariance Cholesky failed even with 1e-12 jitter".to_string(),
                    )
                })?
            }
        };
        Some(fact.l())
    };

    let paths: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let z = normals(seed, p as u64, n);
            let mut path = vec![0.0; times.len()];
            match &chol {
                None => {
                    // cumulative sum of sqrt(dt)-scaled normals from time 0
                    // outward in both directions
                    let vals: Vec<f64> = {
                        let mut v = vec![0.0; n];
                        // Walk the active times in order; consecutive active
                        // times differ by one grid step except across t = 0.
                        let mut prev_t = 0.0;
                        let mut prev_v = 0.0;
                        // Left of zero must be built from the right end
                        // inward, so split at the sign change.
                        let split = active.partition_point(|&i| times[i] < 0.0);
                        for idx in (0..split).rev() {
                            let t = times[active[idx]];
                            let dt = (prev_t - t).abs();
                            let x = prev_v + dt.sqrt() * z[idx];
                            v[idx] = x;
                            prev_t = t;
                            prev_v = x;
                        }
                        prev_t = 0.0;
                        prev_v = 0.0;
                        for idx in split..n {
                            let t = times[active[idx]];
                            let dt = (t - prev_t).abs();
                            let x = prev_v + dt.sqrt() * z[idx];
                            v[idx] = x;
                            prev_t = t;
                            prev_v = x;
                        }
                        v
                    };
                    for (r, &i) in active.iter().enumerate() {
                        path[i] = vals[r];
                    }
                }
                Some(l) => {
                    for (r, &i) in active.iter().enumerate() {
                        let mut acc = 0.0;
                        for c in 0..=r {
                            acc += l[(r, c)] * z[c];
                        }
                        path[i] = acc;
                    }
                }
            }
            path
        })
        .collect();

    Ok(PathEnsemble {
        grid: *grid,
        paths,
        master_seed: seed,
        hurst: h,
    })
}

/// Transfer weights of the order-`alpha` fractional integral acting on a
/// piecewise-constant cell function, averaged back onto cells of the same
/// grid. Exact: the fractional integral of an indicator has a closed form,
/// and its cell averages are differences of the power antiderivative
/// `P(x) = x_+^{alpha+1} / (alpha+1)`.
///
/// `weights[m]` couples source cell `j` to target cell `i = j - m + 1`,
/// i.e. `m = j - i + 1` ranges over `0..n+1` with `m = 0` meaning the
/// target cell just above the source (which a right-sided operator cannot
/// reach, weight 0 except through the shared endpoint).
fn transfer_weights(alpha: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    let gk = gamma_fn(alpha + 1.0)?;
    let p = |m: i64| -> f64 {
        if m <= 0 {
            0.0
        } else {
            (m as f64 * h).powf(alpha + 1.0) / (alpha + 1.0)
        }
    };
    // weight for lag m = j - i: [P((m+1)h) - 2 P(mh) + P((m-1)h)] / (h G(alpha+1))
    Ok((0..=n as i64)
        .map(|m| (p(m + 1) - 2.0 * p(m) + p(m - 1)) / (h * gk))
        .collect())
}

/// Apply the fractional transfer to a cell-averaged integrand. At
/// `alpha = 0` this is the identity.
fn apply_transfer(cells: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = cells.len();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &c) in cells.iter().enumerate().skip(i) {
            if c != 0.0 {
                acc += c * weights[j - i];
            }
        }
        *slot = acc;
    }
    out
}

/// Fractional Wiener integral `int f dB^K` per driver path:
/// `C(K) sum_j (I^{K-1/2} f)(v_j) dW_j` over the Brownian driver's cells.
///
/// `f` must be sampled on a grid aligned with (same step as, and contained
/// in) the driver grid. For `K > 1/2` the transform uses the product-
/// integration fractional integral; for `K < 1/2` the Marchaud derivative
/// with Richardson extrapolation.
pub fn fractional_wiener_integral(
    f: &SampledFunction,
    k: f64,
    driver: &PathEnsemble,
) -> Result<Vec<f64>> {
    if driver.hurst != 0.5 {
        return Err(Error::domain(format!(
            "driver must be Brownian (Hurst 1/2), got {}",
            driver.hurst
        )));
    }
    if !(0.0 < k && k < 1.0) {
        return Err(Error::domain(format!("Hurst index must lie in (0,1), got {k}")));
    }
    let step = driver.grid.step();
    if (f.grid_step - step).abs() > 1e-9 * step {
        return Err(Error::domain("integrand grid step differs from driver".to_string()));
    }
    let offset = driver.grid.index_of(f.grid_start)?;
    if offset + f.values.len() > driver.grid.n_steps + 2 {
        return Err(Error::domain(
            "integrand support exceeds driver grid".to_string(),
        ));
    }
    // The transformed integrand extends left of supp(f) (a right-sided
    // operator looks forward in time), so pad f with zeros onto the whole
    // driver grid before transforming.
    let padded = {
        let mut values = vec![0.0; driver.grid.n_steps + 1];
        for (j, &v) in f.values.iter().enumerate() {
            if offset + j < values.len() {
                values[offset + j] = v;
            }
        }
        SampledFunction::new(driver.grid.t_start, step, values, f.support_end)?
    };
    let g = if k == 0.5 {
        padded
    } else if k > 0.5 {
        rl_integral(&padded, FracOrder(k - 0.5))?
    } else {
        marchaud_derivative_extrapolated(&padded, FracOrder(0.5 - k), 4.0 * step)?
    };
    let ck = norm_c(k)?;
    let inc = driver.increments();
    Ok(inc
        .par_iter()
        .map(|dw| {
            let mut acc = 0.0;
            // left-endpoint value against the increment of the cell
            // starting at the same node
            for (gv, d) in g.values.iter().zip(dw) {
                acc += gv * d;
            }
            ck * acc
        })
        .collect())
}

/// Exact cell average of `(c - v)^p` over `[a, b]` with `b <= c`.
fn power_cell_avg(p: f64, c: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    ((c - a).powf(p + 1.0) - (c - b).powf(p + 1.0)) / ((p + 1.0) * (b - a))
}

/// Cell-averaged compact-interval kernel row for output time `t` on the
/// driver grid: `C(K,H) Fhat(midpoint) x` exact power-moment average of
/// `(t-u)^{H-K}` per cell, zero outside `(0, t)`.
fn mg_kernel_cells(spec: &KernelSpec, t: f64, driver: &Grid) -> Result<Vec<f64>> {
    let (k, h) = (spec.k, spec.h);
    let c = norm_ckh(k, h)?;
    let p = h - k;
    let step = driver.step();
    let mut cells = vec![0.0; driver.n_steps];
    for (j, slot) in cells.iter_mut().enumerate() {
        let a = driver.time(j).max(0.0);
        let b = driver.time(j + 1).min(t);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let fh = if k == h { 1.0 } else { f_hat(spec, (mid - t) / mid)? };
        *slot = c * fh * power_cell_avg(p, t, a, b) * (b - a) / step;
    }
    Ok(cells)
}

/// Cell-averaged half-line kernel row for output time `t`, truncated at
/// the driver grid's left end.
fn mvn_kernel_cells(spec: &KernelSpec, t: f64, driver: &Grid) -> Result<Vec<f64>> {
    let (k, h) = (spec.k, spec.h);
    let c = norm_ckh(k, h)?;
    let p = h - k;
    let step = driver.step();
    let mut cells = vec![0.0; driver.n_steps];
    for (j, slot) in cells.iter_mut().enumerate() {
        let a = driver.time(j);
        let b = driver.time(j + 1);
        let mut val = 0.0;
        let b1 = b.min(t);
        if b1 > a {
            val += power_cell_avg(p, t, a, b1) * (b1 - a) / step;
        }
        let b2 = b.min(0.0);
        if b2 > a {
            val -= power_cell_avg(p, 0.0, a, b2) * (b2 - a) / step;
        }
        *slot = c * val;
    }
    Ok(cells)
}

/// Cell-averaged shifted-transform integrand row (`C(K,H) dg` on `(-s,t)`).
fn shifted_kernel_cells(spec: &KernelSpec, t: f64, driver: &Grid) -> Result<Vec<f64>> {
    let (k, h) = (spec.k, spec.h);
    let s = spec.shift()?;
    let c = norm_ckh(k, h)?;
    let p = h - k;
    let step = driver.step();
    let mut cells = vec![0.0; driver.n_steps];
    for (j, slot) in cells.iter_mut().enumerate() {
        let a = driver.time(j).max(-s);
        let b = driver.time(j + 1);
        let mut val = 0.0;
        let b1 = b.min(t);
        if b1 > a {
            let mid = 0.5 * (a + b1);
            let fh = if k == h { 1.0 } else { f_hat(spec, (mid - t) / (mid + s))? };
            val += fh * power_cell_avg(p, t, a, b1) * (b1 - a) / step;
        }
        let b2 = b.min(0.0);
        if b2 > a {
            let mid = 0.5 * (a + b2);
            let fh = if k == h { 1.0 } else { f_hat(spec, mid / (mid + s))? };
            val -= fh * power_cell_avg(p, 0.0, a, b2) * (b2 - a) / step;
        }
        *slot = c * val;
    }
    Ok(cells)
}

/// Evaluate an ensemble of Wiener integrals against precomputed kernel
/// rows: `out[path][row] = C(K) sum_i transfer(row)_i dW_i`.
fn integrate_rows(
    rows: &[Vec<f64>],
    k: f64,
    driver: &PathEnsemble,
) -> Result<Vec<Vec<f64>>> {
    let n_cells = driver.grid.n_steps;
    let transferred: Vec<Vec<f64>> = if k == 0.5 {
        rows.to_vec()
    } else {
        let weights = transfer_weights(k - 0.5, driver.grid.step(), n_cells)?;
        rows.par_iter()
            .map(|r| apply_transfer(r, &weights))
            .collect()
    };
    let ck = norm_c(k)?;
    let inc = driver.increments();
    Ok(inc
        .par_iter()
        .map(|dw| {
            transferred
                .iter()
                .map(|row| {
                    let mut acc = 0.0;
                    for (i, &r) in row.iter().enumerate() {
                        if r != 0.0 {
                            acc += r * dw[i];
                        }
                    }
                    ck * acc
                })
                .collect()
        })
        .collect())
}

/// Simulate the compact-interval transform on `[0, t_end]`.
///
/// When `K = H` the output equals the driver restricted to nonnegative
/// times, exactly. Otherwise the driver must be Brownian: the kernel rows
/// are transformed with the order-`(K-1/2)` fractional operator (exact for
/// the piecewise-constant cell representation) and integrated against the
/// Brownian increments.
pub fn mg_transform_path(spec: &KernelSpec, driver: &PathEnsemble) -> Result<PathEnsemble> {
    let start = driver.grid.index_of(0.0)?;
    let out_grid = Grid::new(0.0, driver.grid.t_end, driver.grid.n_steps - start)?;
    if spec.k == spec.h {
        if driver.hurst != spec.k {
            return Err(Error::domain(format!(
                "identity transform requires a driver of Hurst K = {}, got {}",
                spec.k, driver.hurst
            )));
        }
        let paths = driver
            .paths
            .iter()
            .map(|p| p[start..].iter().map(|v| v - p[start]).collect())
            .collect();
        return Ok(PathEnsemble {
            grid: out_grid,
            paths,
            master_seed: driver.master_seed,
            hurst: spec.h,
        });
    }
    if driver.hurst != 0.5 {
        return Err(Error::domain(
            "transform with K != H requires a Brownian driver".to_string(),
        ));
    }
    let times = out_grid.times();
    let rows: Vec<Vec<f64>> = times
        .iter()
        .skip(1)
        .map(|&t| mg_kernel_cells(spec, t, &driver.grid))
        .collect::<Result<_>>()?;
    let vals = integrate_rows(&rows, spec.k, driver)?;
    let paths = vals
        .into_iter()
        .map(|v| {
            let mut p = vec![0.0];
            p.extend(v);
            p
        })
        .collect();
    Ok(PathEnsemble {
        grid: out_grid,
        paths,
        master_seed: driver.master_seed,
        hurst: spec.h,
    })
}

/// Simulate the half-line transform, truncating the integral at the left
/// end of the driver grid (`-L`). Returns the ensemble and an analytic
/// bound on the variance contribution of the discarded tail, which decays
/// like `L^{2H-2}`.
pub fn mvn_transform_path(
    spec: &KernelSpec,
    driver: &PathEnsemble,
    left_truncation: f64,
) -> Result<(PathEnsemble, f64)> {
    if !(left_truncation > 0.0) {
        return Err(Error::domain("left truncation must be positive".to_string()));
    }
    if driver.grid.t_start > -left_truncation + 1e-9 {
        return Err(Error::domain(format!(
            "driver grid starts at {} but truncation requires coverage of -{left_truncation}",
            driver.grid.t_start
        )));
    }
    let start = driver.grid.index_of(0.0)?;
    let out_grid = Grid::new(0.0, driver.grid.t_end, driver.grid.n_steps - start)?;
    if spec.k == spec.h {
        if driver.hurst != spec.k {
            return Err(Error::domain(format!(
                "identity transform requires a driver of Hurst K = {}, got {}",
                spec.k, driver.hurst
            )));
        }
        let paths = driver
            .paths
            .iter()
            .map(|p| p[start..].iter().map(|v| v - p[start]).collect())
            .collect();
        return Ok((
            PathEnsemble {
                grid: out_grid,
                paths,
                master_seed: driver.master_seed,
                hurst: spec.h,
            },
            0.0,
        ));
    }
    if driver.hurst != 0.5 {
        return Err(Error::domain(
            "transform with K != H requires a Brownian driver".to_string(),
        ));
    }
    let times = out_grid.times();
    let rows: Vec<Vec<f64>> = times
        .iter()
        .skip(1)
        .map(|&t| mvn_kernel_cells(spec, t, &driver.grid))
        .collect::<Result<_>>()?;
    let vals = integrate_rows(&rows, spec.k, driver)?;
    let paths: Vec<Vec<f64>> = vals
        .into_iter()
        .map(|v| {
            let mut p = vec![0.0];
            p.extend(v);
            p
        })
        .collect();
    // The discarded tail is the difference-of-powers kernel below -L, which
    // is exactly the df difference with shift L; its transformed L2 norm is
    // bounded by c1 L^{2H-2}.
    let tail_spec = KernelSpec::with_shift(spec.k, spec.h, spec.t.max(out_grid.t_end), left_truncation)?;
    let c1 = bound_constants(&tail_spec, 1.0)?.c1;
    let ck = norm_c(spec.k)?;
    let tail_bound = norm_ckh(spec.k, spec.h)?.powi(2)
        * ck
        * ck
        * c1
        * left_truncation.powf(2.0 * spec.h - 2.0);
    Ok((
        PathEnsemble {
            grid: out_grid,
            paths,
            master_seed: driver.master_seed,
            hurst: spec.h,
        },
        tail_bound,
    ))
}

/// Simulate the time-shifted compact-interval process and the truncated
/// half-line process from the same Brownian driver (coupling), so the
/// squared difference of the two ensembles estimates the L2 distance.
///
/// The driver covers `[-max(s, L), t_end]`. Returns `(shifted, half_line)`.
pub fn zhs_and_zh_paths(
    spec: &KernelSpec,
    grid: &Grid,
    left_truncation: f64,
    n_paths: usize,
    seed: u64,
) -> Result<(PathEnsemble, PathEnsemble)> {
    let s = spec.shift()?;
    if grid.t_start != 0.0 {
        return Err(Error::domain("output grid must start at 0".to_string()));
    }
    let cover = s.max(left_truncation);
    let step = grid.step();
    let n_neg = (cover / step).ceil() as usize;
    let driver_grid = Grid::new(-(n_neg as f64) * step, grid.t_end, n_neg + grid.n_steps)?;
    let driver = sample_fbm_exact(0.5, &driver_grid, n_paths, seed)?;

    let times = grid.times();
    let shifted_rows: Vec<Vec<f64>> = times
        .iter()
        .skip(1)
        .map(|&t| shifted_kernel_cells(spec, t, &driver_grid))
        .collect::<Result<_>>()?;
    let half_rows: Vec<Vec<f64>> = times
        .iter()
        .skip(1)
        .map(|&t| mvn_kernel_cells(spec, t, &driver_grid))
        .collect::<Result<_>>()?;
    let to_ens = |vals: Vec<Vec<f64>>| -> PathEnsemble {
        let paths = vals
            .into_iter()
            .map(|v| {
                let mut p = vec![0.0];
                p.extend(v);
                p
            })
            .collect();
        PathEnsemble {
            grid: *grid,
            paths,
            master_seed: seed,
            hurst: spec.h,
        }
    };
    let zhs = to_ens(integrate_rows(&shifted_rows, spec.k, &driver)?);
    let zh = to_ens(integrate_rows(&half_rows, spec.k, &driver)?);
    Ok((zhs, zh))
}

/// Monte Carlo estimate of `E[X - Y]^2` at one grid time from two coupled
/// ensembles; returns `(estimate, stderr)`.
pub fn coupled_mean_square_difference(
    a: &PathEnsemble,
    b: &PathEnsemble,
    t: f64,
) -> Result<(f64, f64)> {
    if a.n_paths() != b.n_paths() || a.n_paths() < 2 {
        return Err(Error::domain("ensembles must pair up with at least 2 paths".to_string()));
    }
    let i = a.grid.index_of(t)?;
    let j = b.grid.index_of(t)?;
    let n = a.n_paths() as f64;
    let sq: Vec<f64> = a
        .paths
        .iter()
        .zip(&b.paths)
        .map(|(pa, pb)| (pa[i] - pb[j]).powi(2))
        .collect();
    let mean = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Sample covariance over paths at the requested times, with jackknife
/// standard errors.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub times: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_paths: usize,
}

/// Empirical covariance (uncentered: the processes are centered by
/// construction) with leave-one-out jackknife standard errors.
pub fn empirical_covariance(ens: &PathEnsemble, times: &[f64]) -> Result<CovarianceEstimate> {
    let n = ens.n_paths();
    if n < 2 {
        return Err(Error::domain("need at least 2 paths".to_string()));
    }
    let idx: Vec<usize> = times
        .iter()
        .map(|&t| ens.grid.index_of(t))
        .collect::<Result<_>>()?;
    let m = idx.len();
    let nf = n as f64;
    let mut matrix = vec![vec![0.0; m]; m];
    let mut stderr = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let prods: Vec<f64> = ens
                .paths
                .iter()
                .map(|p| p[idx[a]] * p[idx[b]])
                .collect();
            let total: f64 = prods.iter().sum();
            let full = total / nf;
            // jackknife over paths
            let mut mean_loo = 0.0;
            let mut loo = Vec::with_capacity(n);
            for &pr in &prods {
                let v = (total - pr) / (nf - 1.0);
                loo.push(v);
                mean_loo += v;
            }
            mean_loo /= nf;
            let ss: f64 = loo.iter().map(|v| (v - mean_loo).powi(2)).sum();
            let se = ((nf - 1.0) / nf * ss).sqrt();
            matrix[a][b] = full;
            matrix[b][a] = full;
            stderr[a][b] = se;
            stderr[b][a] = se;
        }
    }
    Ok(CovarianceEstimate {
        times: times.to_vec(),
        matrix,
        stderr,
        n_paths: n,
    })
}
