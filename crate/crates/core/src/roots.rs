//! Bracketed root polishing for monotone scalar functions.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

/// Find a root of `f` in `[lo, hi]`, given `f(lo)` and `f(hi)` of opposite
/// sign. Secant (Illinois) steps, with a bisection whenever the bracket fails
/// to halve. Stops when the bracket is below `xtol` or `|f| <= ftol`.
pub fn polish<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::invalid(format!(
            "[{lo}, {hi}] does not bracket a sign change"
        )));
    }
    // which end was retained last: -1 lo, +1 hi
    let mut side = 0i8;
    let mut width = hi - lo;
    for _ in 0..MAX_ITERATIONS {
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx.signum() == f_lo.signum() {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        if hi - lo <= xtol {
            return Ok(if f_lo.abs() < f_hi.abs() { lo } else { hi });
        }
        if hi - lo > 0.5 * width {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.abs() <= ftol {
                return Ok(mid);
            }
            if fm.signum() == f_lo.signum() {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
            side = 0;
        }
        width = hi - lo;
    }
    Err(Error::RootNotConverged {
        lo,
        hi,
        iterations: MAX_ITERATIONS,
    })
}

/// `n` points from `lo` to `hi` (both > 0), evenly spaced in the logarithm.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo * (r * i as f64).exp()).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// `n` evenly spaced points including both ends.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
