//! Gamma/beta functions, the Gauss hypergeometric function on `(-inf, 1]`,
//! weighted-power integral identities, and the fBm normalization constants.

use crate::error::{Error, Result};

/// Parameters `(a, b, c)` and real argument `z` of the Gauss hypergeometric
/// function `F(a, b, c, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl HypParams {
    /// Validates `c` against the admissible set (no non-positive integers)
    /// and `z <= 1`, with `c - a - b > 0` required at `z = 1`.
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Result<Self> {
        if is_nonpos_int(c) {
            return Err(Error::domain(format!("third parameter c = {c} is a non-positive integer")));
        }
        if z > 1.0 {
            return Err(Error::domain(format!("argument z = {z} > 1")));
        }
        if z == 1.0 && c - a - b <= 0.0 {
            return Err(Error::domain(format!(
                "z = 1 requires c - a - b > 0, got {}",
                c - a - b
            )));
        }
        Ok(HypParams { a, b, c, z })
    }
}

/// Series-evaluation controls.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            rel_tol: 1e-12,
            max_terms: 10_000,
        }
    }
}

pub(crate) fn is_nonpos_int(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

// Lanczos g = 7, n = 9 coefficients (GSL / Numerical Recipes set).
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

const FACTORIALS: [f64; 21] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
];

fn gamma_unchecked(x: f64) -> f64 {
    use std::f64::consts::PI;
    // Exact at small positive integers so identities like Gamma(1) = 1
    // hold bit-exactly.
    if x > 0.0 && x <= 21.0 && x == x.floor() {
        return FACTORIALS[x as usize - 1];
    }
    if x < 0.5 {
        // Reflection formula; sin(pi x) is nonzero away from integer x.
        PI / ((PI * x).sin() * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut t = LANCZOS[0];
        for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
            t += p / (x + i as f64);
        }
        let w = x + 7.5;
        (2.0 * PI).sqrt() * w.powf(x + 0.5) * (-w).exp() * t
    }
}

/// Gamma function, accurate to ~14-15 significant digits.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if is_nonpos_int(x) {
        return Err(Error::domain(format!("gamma pole at x = {x}")));
    }
    Ok(gamma_unchecked(x))
}

/// Reciprocal gamma; exactly zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpos_int(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// Beta function `B(x, y) = Gamma(x) Gamma(y) / Gamma(x+y)`.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    Ok(gamma_fn(x)? * gamma_fn(y)? / gamma_fn(x + y)?)
}

/// Power-series sum of `F(a, b, c, z)` for `|z| < 1` (or a terminating
/// polynomial case). Stops once three consecutive terms fall below
/// `rel_tol` times the partial sum, guarding alternating-term false stops.
fn series(a: f64, b: f64, c: f64, z: f64, rel_tol: f64, max_terms: usize) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0f64;
    let mut small_streak = 0u32;
    for k in 0..max_terms {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        if term == 0.0 {
            return Ok(sum); // terminating polynomial
        }
        sum += term;
        if term.abs() <= rel_tol * sum.abs() {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Convergence {
        what: format!("2F1 series at a={a}, b={b}, c={c}, z={z}"),
        achieved: (term / sum).abs(),
        requested: rel_tol,
    })
}

/// Above this argument the plain series is replaced by the `1 - z`
/// connection formula (or a boosted series when `c - a - b` is near an
/// integer and the connection coefficients would blow up).
const Z_NEAR_ONE: f64 = 0.98;
const INT_GAP: f64 = 0.05;

/// Evaluate on the canonical region `0 <= w < 1`.
fn eval_unit(a: f64, b: f64, c: f64, w: f64, opts: &EvalOptions) -> Result<f64> {
    debug_assert!((0.0..1.0).contains(&w));
    if w < Z_NEAR_ONE {
        return series(a, b, c, w, opts.rel_tol, opts.max_terms);
    }
    eval_near_one(a, b, c, 1.0 - w, opts)
}

/// Evaluate next to 1 given `u = 1 - w` directly, so callers that know `u`
/// to full precision (the linear-transformation path) avoid cancellation.
fn eval_near_one(a: f64, b: f64, c: f64, u: f64, opts: &EvalOptions) -> Result<f64> {
    let s = c - a - b;
    if (s - s.round()).abs() > INT_GAP {
        // F(a,b,c,w) = G(c)G(s)/(G(c-a)G(c-b)) F(a,b,1-s,1-w)
        //            + (1-w)^s G(c)G(-s)/(G(a)G(b)) F(c-a,c-b,1+s,1-w)
        let gc = gamma_unchecked(c);
        let t1 = gc * gamma_unchecked(s) * rgamma(c - a) * rgamma(c - b)
            * series(a, b, 1.0 - s, u, opts.rel_tol, opts.max_terms)?;
        let t2 = u.powf(s) * gc * gamma_unchecked(-s) * rgamma(a) * rgamma(b)
            * series(c - a, c - b, 1.0 + s, u, opts.rel_tol, opts.max_terms)?;
        Ok(t1 + t2)
    } else {
        // Near-integer exponent difference: the connection coefficients are
        // ill-conditioned, so fall back to the (slow but convergent) series
        // with a budget matched to the geometric tail.
        let w = 1.0 - u;
        if w >= 1.0 {
            return Err(Error::Convergence {
                what: format!("2F1 too close to z=1 with near-integer c-a-b at a={a}, b={b}, c={c}"),
                achieved: f64::INFINITY,
                requested: opts.rel_tol,
            });
        }
        let needed = (opts.rel_tol.ln() / w.ln()).ceil() as usize;
        let budget = opts.max_terms.max(needed.saturating_mul(2)).min(60_000_000);
        series(a, b, c, w, opts.rel_tol, budget)
    }
}

/// Gauss hypergeometric function `F(a, b, c, z)` for `z` in `(-inf, 1]`.
///
/// Strategy: canonicalize `a <= b`; sum the series on `[0, 1)` (switching
/// to the `1 - z` connection formula next to 1); map `z < 0` into `[0, 1)`
/// with the linear transformation `F(a,b,c,z) = (1-z)^{-a} F(a,c-b,c,z/(z-1))`;
/// use the gamma-ratio value at `z = 1`.
pub fn hyp2f1(p: &HypParams, opts: &EvalOptions) -> Result<f64> {
    let (a, b) = if p.a <= p.b { (p.a, p.b) } else { (p.b, p.a) };
    let (c, z) = (p.c, p.z);
    if is_nonpos_int(c) {
        return Err(Error::domain(format!("c = {c} is a non-positive integer")));
    }
    if !z.is_finite() {
        return Err(Error::domain(format!("z = {z} is not finite")));
    }
    if z > 1.0 {
        return Err(Error::domain(format!("z = {z} > 1")));
    }
    if a == 0.0 || b == 0.0 || z == 0.0 {
        return Ok(1.0);
    }
    if z == 1.0 {
        if c - a - b <= 0.0 {
            return Err(Error::domain(format!(
                "F(a,b,c,1) requires c - a - b > 0, got {}",
                c - a - b
            )));
        }
        return hyp2f1_at_one(a, b, c);
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        let scale = (1.0 - z).powf(-a);
        if w >= Z_NEAR_ONE {
            // compute 1 - w without cancellation for very negative z
            let u = 1.0 / (1.0 - z);
            return Ok(scale * eval_near_one(a, c - b, c, u, opts)?);
        }
        return Ok(scale * eval_unit(a, c - b, c, w, opts)?);
    }
    eval_unit(a, b, c, z, opts)
}

/// `hyp2f1` with default options; validates parameters first.
pub fn hyp2f1_def(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    hyp2f1(&HypParams::new(a, b, c, z)?, &EvalOptions::default())
}

/// Gauss summation `F(a, b, c, 1) = G(c)G(c-b-a) / (G(c-b)G(c-a))`.
pub fn hyp2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    Ok(gamma_fn(c)? * gamma_fn(c - b - a)? / (gamma_fn(c - b)? * gamma_fn(c - a)?))
}

/// `d/dz F(a,b,c,z) = (ab/c) F(a+1, b+1, c+1, z)`.
pub fn hyp2f1_dz(p: &HypParams) -> Result<f64> {
    if p.a == 0.0 || p.b == 0.0 {
        return Ok(0.0);
    }
    let shifted = HypParams::new(p.a + 1.0, p.b + 1.0, p.c + 1.0, p.z)?;
    Ok(p.a * p.b / p.c * hyp2f1(&shifted, &EvalOptions::default())?)
}

/// Position of the weight's reference point relative to `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightGeometry {
    /// `w < x < y`, weight `(u - w)^c`.
    WBelow,
    /// `x < y < w`, weight `(w - u)^c`.
    WAbove,
}

/// Closed form of `int_x^y (y-u)^b (u -/+ w)^c (u-x)^a du` for `a, b > -1`.
///
/// Both printed hypergeometric forms are evaluated; they must agree and
/// the one with argument in `[0, 1)` is returned.
pub fn power_weighted_integral(
    a: f64,
    b: f64,
    c: f64,
    w: f64,
    x: f64,
    y: f64,
    geometry: WeightGeometry,
) -> Result<f64> {
    if a <= -1.0 || b <= -1.0 {
        return Err(Error::domain(format!("exponents must exceed -1, got a={a}, b={b}")));
    }
    match geometry {
        WeightGeometry::WBelow if !(w < x && x < y) => {
            return Err(Error::domain(format!("w_below requires w < x < y, got w={w}, x={x}, y={y}")));
        }
        WeightGeometry::WAbove if !(x < y && y < w) => {
            return Err(Error::domain(format!("w_above requires x < y < w, got w={w}, x={x}, y={y}")));
        }
        _ => {}
    }
    let pref = gamma_fn(a + 1.0)? * gamma_fn(b + 1.0)? / gamma_fn(a + 2.0 + b)?
        * (y - x).powf(1.0 + a + b);
    // Argument (y-x)/(w-x): in (-inf,0) for w_below, in (0,1) for w_above.
    let fa = pref
        * (x - w).abs().powf(c)
        * hyp2f1_def(-c, a + 1.0, a + 2.0 + b, (y - x) / (w - x))?;
    // Argument (y-x)/(y-w): in (0,1) for w_below, in (-inf,0) for w_above.
    let fb = pref
        * (y - w).abs().powf(c)
        * hyp2f1_def(-c, b + 1.0, a + 2.0 + b, (y - x) / (y - w))?;
    let scale = fa.abs().max(fb.abs()).max(f64::MIN_POSITIVE);
    if (fa - fb).abs() > 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "weighted-power integral forms disagree: {fa} vs {fb}"
        )));
    }
    Ok(match geometry {
        WeightGeometry::WBelow => fb,
        WeightGeometry::WAbove => fa,
    })
}

/// Residual of the contiguity relation
/// `-c F(a,b-1,c,z) + (c-b+zb-za) F(a,b,c+1,z) + b(1-z) F(a,b+1,c+1,z)`;
/// should vanish for admissible parameters. Exposed as a self-test primitive.
pub fn contiguity_residual(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if z >= 1.0 {
        return Err(Error::domain(format!("contiguity residual requires z < 1, got {z}")));
    }
    let f1 = hyp2f1_def(a, b - 1.0, c, z)?;
    let f2 = hyp2f1_def(a, b, c + 1.0, z)?;
    let f3 = hyp2f1_def(a, b + 1.0, c + 1.0, z)?;
    Ok(-c * f1 + (c - b + z * b - z * a) * f2 + b * (1.0 - z) * f3)
}

/// fBm normalization `C(H) = (2H G(H+1/2) G(3/2-H) / G(2-2H))^{1/2}`.
pub fn norm_c(h: f64) -> Result<f64> {
    if !(0.0 < h && h < 1.0) {
        return Err(Error::domain(format!("Hurst index must lie in (0,1), got {h}")));
    }
    Ok((2.0 * h * gamma_fn(h + 0.5)? * gamma_fn(1.5 - h)? / gamma_fn(2.0 - 2.0 * h)?).sqrt())
}

/// `C(K, H) = C(H) C(K)^{-1} / G(H - K + 1)`.
pub fn norm_ckh(k: f64, h: f64) -> Result<f64> {
    Ok(norm_c(h)? / norm_c(k)? / gamma_fn(h - k + 1.0)?)
}
