//! Derivative-free scalar minimization used as an independent reference for
//! proximity operators. Not meant for hot paths.

use crate::error::{Error, Result};

const GRID_POINTS: usize = 96;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal `f` over `[lo, hi]` to absolute tolerance `tol` on the
/// argument.
///
/// A uniform grid scan brackets the minimum, then golden-section search
/// refines it. A minimum sitting on `lo` is returned as `lo` (the caller's
/// domain floor); a minimum on `hi` means the search ceiling was too low and
/// is reported as [`Error::NotBracketed`].
pub fn minimize_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::NotBracketed { lo, hi });
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid = |i: usize| {
        if i == GRID_POINTS - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let v = f(grid(i));
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::NotBracketed { lo, hi });
    }
    if best == GRID_POINTS - 1 {
        return Err(Error::NotBracketed { lo, hi });
    }
    let mut a = grid(best.saturating_sub(1));
    let mut b = grid(best + 1);

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    if best == 0 && f(lo) <= f(x) {
        return Ok(lo);
    }
    Ok(x)
}
