//! Bracketing inversion of strictly increasing scalar maps.

use crate::error::{Error, Result};

const EXPANSION_LIMIT: f64 = 1e300;
const MAX_ITER: usize = 2_000;

/// Solves `f(r) = y` for a strictly increasing `f` on `[lo, hi]`.
///
/// `hi` is doubled until `f(hi) >= y` (giving up past `1e300`). The bracket is
/// then shrunk by Illinois-modified false position, with a bisection step
/// forced whenever the bracket fails to halve. Iteration stops on an exact hit
/// or when the bracket spans only a few ulps of the root, so the result keeps
/// full relative precision even when `y` is tiny.
pub fn invert_monotone<F>(f: F, y: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !y.is_finite() || !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InversionRange {
            target: y,
            reason: "non-finite target or malformed bracket",
        });
    }
    let mut lo = lo;
    let mut f_lo = f(lo);
    if f_lo > y {
        return Err(Error::InversionRange {
            target: y,
            reason: "target lies below f(lo)",
        });
    }
    if f_lo == y {
        return Ok(lo);
    }

    let mut hi = if hi > lo { hi } else { lo + 1.0 };
    let mut f_hi = f(hi);
    while f_hi < y {
        lo = hi;
        f_lo = f_hi;
        hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
        if hi > EXPANSION_LIMIT {
            return Err(Error::InversionRange {
                target: y,
                reason: "target is not attained below 1e300",
            });
        }
        f_hi = f(hi);
    }
    if f_hi == y {
        return Ok(hi);
    }

    // Illinois weights on the residuals of a stale endpoint.
    let mut g_lo = f_lo - y;
    let mut g_hi = f_hi - y;
    let mut stale_side = 0i8;
    for _ in 0..MAX_ITER {
        let width = hi - lo;
        let mut c = lo - g_lo * width / (g_hi - g_lo);
        if !(c > lo && c < hi) {
            c = midpoint(lo, hi);
        }
        if c <= lo || c >= hi {
            break;
        }
        let fc = f(c);
        let gc = fc - y;
        if gc == 0.0 {
            return Ok(c);
        }
        if gc < 0.0 {
            lo = c;
            g_lo = gc;
            if stale_side == -1 {
                g_hi *= 0.5;
            }
            stale_side = -1;
        } else {
            hi = c;
            g_hi = gc;
            if stale_side == 1 {
                g_lo *= 0.5;
            }
            stale_side = 1;
        }
        if hi - lo > 0.5 * width {
            let m = midpoint(lo, hi);
            if m <= lo || m >= hi {
                break;
            }
            let gm = f(m) - y;
            if gm == 0.0 {
                return Ok(m);
            }
            if gm < 0.0 {
                lo = m;
                g_lo = gm;
            } else {
                hi = m;
                g_hi = gm;
            }
            stale_side = 0;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }

    if (f(lo) - y).abs() <= (f(hi) - y).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// Arithmetic midpoint, or the geometric one when the bracket spans decades.
fn midpoint(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 && hi / lo > 1e3 {
        (lo * hi).sqrt()
    } else {
        lo + 0.5 * (hi - lo)
    }
}
