//! Small quadrature helpers shared across the crate: adaptive Simpson
//! for real- and complex-valued integrands, and composite rules on
//! fixed grids.

use crate::error::{Error, Result};
use crate::ode::C64;

const MAX_DEPTH: usize = 48;

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    fa: C64,
    b: f64,
    fb: C64,
    m: f64,
    fm: C64,
    whole: C64,
    tol: f64,
    depth: usize,
    err_accum: &mut f64,
) -> Result<C64>
where
    F: Fn(f64) -> Result<C64> + ?Sized,
{
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "adaptive subdivision limit reached on [{a}, {b}] (residual {:.3e})",
            delta.norm()
        )));
    }
    if delta.norm() <= 15.0 * tol {
        *err_accum += delta.norm() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    let l = simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, err_accum)?;
    let r = simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, err_accum)?;
    Ok(l + r)
}

/// Adaptive Simpson for a complex integrand; `tol` is an absolute
/// tolerance on the panel. Returns the value and an error estimate.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64> + ?Sized,
{
    if a == b {
        return Ok((C64::default(), 0.0));
    }
    let m = 0.5 * (a + b);
    let fa = f(a)?;
    let fb = f(b)?;
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let v = simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 0, &mut err)?;
    Ok((v, err))
}

/// Adaptive Simpson for a real integrand with a relative tolerance.
pub fn adaptive_simpson_real<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    // two passes: a crude scale estimate, then the real run
    let wrap = |x: f64| f(x).map(|v| C64::new(v, 0.0));
    let (coarse, _) = adaptive_simpson(&wrap, a, b, 1e-6)?;
    let scale = coarse.norm().max(1e-8);
    let (v, _) = adaptive_simpson(&wrap, a, b, rel_tol * scale)?;
    Ok(v.re)
}

/// Composite Simpson of sampled values on a uniform grid (odd length).
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "need an odd number of samples");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Right-to-left cumulative integral of complex samples on a uniform
/// grid: `out[i] = integral from x_i to x_end`. Each cell is integrated
/// by the quadratic through three neighbouring samples, so the global
/// error is O(h^3).
pub fn cumulative_from_right(values: &[C64], h: f64) -> Vec<C64> {
    let n = values.len();
    let mut out = vec![C64::default(); n];
    if n < 3 {
        if n == 2 {
            out[0] = 0.5 * h * (values[0] + values[1]);
        }
        return out;
    }
    for i in (0..n - 1).rev() {
        // integral over [x_i, x_{i+1}] from the quadratic through
        // (i, i+1, i+2), or through (i-1, i, i+1) at the right edge
        let cell = if i + 2 < n {
            h / 12.0 * (5.0 * values[i] + 8.0 * values[i + 1] - values[i + 2])
        } else {
            h / 12.0 * (-values[i - 1] + 8.0 * values[i] + 5.0 * values[i + 1])
        };
        out[i] = out[i + 1] + cell;
    }
    out
}

/// Left-to-right cumulative integral of real samples on a uniform grid,
/// quadratic cell rule as in [`cumulative_from_right`].
pub fn cumulative_from_left(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            out[1] = 0.5 * h * (values[0] + values[1]);
        }
        return out;
    }
    for i in 1..n {
        let cell = if i >= 2 {
            h / 12.0 * (-values[i - 2] + 8.0 * values[i - 1] + 5.0 * values[i])
        } else {
            h / 12.0 * (5.0 * values[0] + 8.0 * values[1] - values[2])
        };
        out[i] = out[i - 1] + cell;
    }
    out
}
