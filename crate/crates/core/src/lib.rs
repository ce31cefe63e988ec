//! Integral representations of fractional Brownian motion: the
//! Molchan-Golosov transform on `[0, t]` and the Mandelbrot-Van Ness
//! transform on `(-inf, t]`, the special-function and fractional-calculus
//! machinery behind them, exact-sampling and transform-based simulation,
//! and deterministic verification that the time-shifted MG representation
//! converges in L2 to the MVN representation at rate `s^{2H-2}` (plus
//! `s^{2K-2}` when `K < 1/2`).

pub mod convergence;
pub mod error;
pub mod frac;
pub mod kernels;
pub mod quad;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
