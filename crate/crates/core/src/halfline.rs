//! Schrodinger operators on the half-line with short-range potentials:
//! Jost solutions, perturbation determinants, Weyl-Titchmarsh
//! m-functions, boundary-condition trace formulas, and relative
//! zeta-determinants.
//!
//! The Jost solution behaves like `e^{i sqrt(z) x}` at infinity
//! (`Im sqrt(z) >= 0` throughout). Production code integrates the
//! reduced function `g = f e^{-i sqrt(z) x}` backwards from the support
//! cutoff -- `g'' + 2 i sqrt(z) g' = q g`, `g = 1` beyond the cutoff --
//! which is stable and free of exponential overflow; the Volterra
//! integral form of the same equation is kept as a fixed-point oracle
//! for small `|z|`.

use crate::charfunc::CharLog;
use crate::error::{Error, Result};
use crate::expr::CoeffExpr;
use crate::ode::{integrate_adaptive, IntegratorConfig, C64};
use crate::quad::{cumulative_from_right, simpson_uniform};
use crate::zeta::{cut_zeta_prime0, CutSide, PairData, ZetaConfig, ZetaDiagnostics, ZetaResult};
use std::f64::consts::PI;

/// Declared decay of the potential beyond the numerical support cutoff.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TailModel {
    /// `q` vanishes (to working precision) beyond `x_max`.
    Compact,
    /// `|q(x)| <= amplitude * exp(-rate x)` beyond `x_max`.
    Exponential { amplitude: f64, rate: f64 },
}

impl TailModel {
    /// Bound on `int_x^inf (1+x)|q|` implied by the declaration.
    pub fn weighted_tail(&self, x: f64) -> f64 {
        match self {
            TailModel::Compact => 0.0,
            TailModel::Exponential { amplitude, rate } => {
                amplitude * (-rate * x).exp() * ((1.0 + x) / rate + 1.0 / (rate * rate))
            }
        }
    }

    /// Smallest cutoff with a declared weighted tail below 1e-10.
    pub fn default_x_max(&self) -> Option<f64> {
        match self {
            TailModel::Compact => None,
            TailModel::Exponential { .. } => {
                let mut x = 1.0;
                for _ in 0..400 {
                    if self.weighted_tail(x) < 1e-10 {
                        return Some(x);
                    }
                    x += 0.5;
                }
                None
            }
        }
    }
}

/// A half-line problem: potential, numerical support cutoff, and the
/// positive spectral shift used by all relative quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineProblem {
    pub q: CoeffExpr,
    pub x_max: f64,
    pub lambda1: f64,
    pub tail: TailModel,
}

impl HalfLineProblem {
    pub fn new(q: CoeffExpr, x_max: f64, lambda1: f64, tail: TailModel) -> Result<HalfLineProblem> {
        if !x_max.is_finite() || x_max <= 0.0 {
            return Err(Error::InvalidProblem(format!("x_max = {x_max} must be positive")));
        }
        if !lambda1.is_finite() || lambda1 <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "the spectral shift lambda1 = {lambda1} must be positive"
            )));
        }
        let prob = HalfLineProblem { q, x_max, lambda1, tail };
        // short-range check on [0, x_max]
        let n = 4001;
        let h = x_max / (n - 1) as f64;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64 * h;
            let qv = prob.q.eval(x)?;
            if !qv.is_finite() {
                return Err(Error::InvalidProblem(format!("q({x}) is not finite")));
            }
            vals.push((1.0 + x) * qv.abs());
        }
        let weighted = simpson_uniform(&vals, h);
        if !weighted.is_finite() || weighted > 1e8 {
            return Err(Error::TailBound(format!(
                "int (1+x)|q| = {weighted:.3e} on [0, x_max] fails the short-range check"
            )));
        }
        let tail_bound = prob.tail.weighted_tail(x_max);
        if tail_bound > 1e-10 {
            return Err(Error::TailBound(format!(
                "declared tail int_(x_max)^inf (1+x)|q| = {tail_bound:.3e} exceeds 1e-10; \
                 increase x_max"
            )));
        }
        Ok(prob)
    }

    pub fn parse(q: &str, x_max: f64, lambda1: f64, tail: TailModel) -> Result<HalfLineProblem> {
        HalfLineProblem::new(CoeffExpr::parse(q)?, x_max, lambda1, tail)
    }

    pub fn flat_reference(&self) -> HalfLineProblem {
        HalfLineProblem {
            q: CoeffExpr::constant(0.0),
            x_max: self.x_max,
            lambda1: self.lambda1,
            tail: TailModel::Compact,
        }
    }
}

/// Values of the Jost solution and its derivatives at the origin.
#[derive(Debug, Clone, Copy)]
pub struct JostData {
    pub z: C64,
    /// `f(z, 0)`
    pub f0: C64,
    /// `f'(z, 0)` (space derivative)
    pub f0p: C64,
    /// z-derivatives of the two
    pub dot_f0: C64,
    pub dot_f0p: C64,
    pub est_error: f64,
}

/// Square root with `Im >= 0` (the branch used throughout the half-line
/// quantities).
pub fn sqrt_up(z: C64) -> C64 {
    let w = z.sqrt();
    if w.im < 0.0 {
        -w
    } else {
        w
    }
}

/// Jost boundary data at `x = 0` by backward integration of the reduced
/// equation from the support cutoff.
pub fn jost(prob: &HalfLineProblem, z: C64, cfg: &IntegratorConfig) -> Result<JostData> {
    let w = sqrt_up(z);
    if w.norm() < 1e-12 {
        return Err(Error::InvalidProblem(
            "Jost data is evaluated away from the spectral threshold z = 0".into(),
        ));
    }
    // state: [g, g', gdot, gdot']
    let rhs = |x: f64, y: &[C64; 4]| -> Result<[C64; 4]> {
        let qv = prob.q.eval(x)?;
        let two_iw = 2.0 * C64::i() * w;
        Ok([
            y[1],
            qv * y[0] - two_iw * y[1],
            y[3],
            qv * y[2] - two_iw * y[3] - C64::i() / w * y[1],
        ])
    };
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();
    let y0 = [one, zero, zero, zero];
    let out = integrate_adaptive(&rhs, prob.x_max, 0.0, y0, cfg, false)?;
    let (g, gp, gd, gdp) = (out.y[0], out.y[1], out.y[2], out.y[3]);
    Ok(JostData {
        z,
        f0: g,
        f0p: gp + C64::i() * w * g,
        dot_f0: gd,
        dot_f0p: gdp + C64::i() / (2.0 * w) * g + C64::i() * w * gd,
        est_error: out.est_error,
    })
}

/// Jost solution values `(x, f, f')` on a uniform grid of `[0, x_max]`
/// (for residual and collocation tests).
pub fn jost_on_grid(
    prob: &HalfLineProblem,
    z: C64,
    cfg: &IntegratorConfig,
    n: usize,
) -> Result<Vec<(f64, C64, C64)>> {
    let w = sqrt_up(z);
    let rhs = |x: f64, y: &[C64; 2]| -> Result<[C64; 2]> {
        let qv = prob.q.eval(x)?;
        Ok([y[1], qv * y[0] - 2.0 * C64::i() * w * y[1]])
    };
    let one = C64::new(1.0, 0.0);
    let mut y = [one, C64::default()];
    let mut out = Vec::with_capacity(n + 1);
    let phase = |x: f64| (C64::i() * w * x).exp();
    out.push((
        prob.x_max,
        y[0] * phase(prob.x_max),
        (y[1] + C64::i() * w * y[0]) * phase(prob.x_max),
    ));
    for i in (0..n).rev() {
        let xr = prob.x_max * (i + 1) as f64 / n as f64;
        let xl = prob.x_max * i as f64 / n as f64;
        let seg = integrate_adaptive(&rhs, xr, xl, y, cfg, false)?;
        y = seg.y;
        out.push((xl, y[0] * phase(xl), (y[1] + C64::i() * w * y[0]) * phase(xl)));
    }
    out.reverse();
    Ok(out)
}

/// Fixed-point iteration of the Volterra form of the Jost equation on a
/// uniform grid; the reference oracle for [`jost`] at small `|z|`.
/// Returns `(f(z,0), f'(z,0))`.
pub fn volterra_jost(
    prob: &HalfLineProblem,
    z: C64,
    grid_points: usize,
    max_iter: usize,
) -> Result<(C64, C64)> {
    let w = sqrt_up(z);
    if w.norm() < 1e-12 {
        return Err(Error::InvalidProblem("Volterra oracle needs z != 0".into()));
    }
    let n = grid_points.max(64);
    let h = prob.x_max / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let qv: Result<Vec<f64>> = xs.iter().map(|&x| prob.q.eval(x)).collect();
    let qv = qv?;
    // reduced iteration: g(x) = 1 - (1/(2iw)) [ int_x^X q g
    //                    - e^{-2iwx} int_x^X e^{2iwx'} q g ]
    let mut g = vec![C64::new(1.0, 0.0); n];
    let two_iw = 2.0 * C64::i() * w;
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let plain: Vec<C64> = (0..n).map(|i| qv[i] * g[i]).collect();
        let phased: Vec<C64> = (0..n)
            .map(|i| (two_iw * xs[i]).exp() * qv[i] * g[i])
            .collect();
        let cum_plain = cumulative_from_right(&plain, h);
        let cum_phased = cumulative_from_right(&phased, h);
        let mut next = Vec::with_capacity(n);
        let mut step = 0.0f64;
        for i in 0..n {
            let v = C64::new(1.0, 0.0)
                - (cum_plain[i] - (-two_iw * xs[i]).exp() * cum_phased[i]) / two_iw;
            step = step.max((v - g[i]).norm());
            next.push(v);
        }
        g = next;
        delta = step;
        if delta < 1e-13 {
            break;
        }
    }
    if delta.is_nan() || delta >= 1e-9 {
        return Err(Error::Quadrature(format!(
            "Volterra iteration did not converge (last update {delta:.3e})"
        )));
    }
    // f(0) = g(0); differentiating the split integral representation at
    // x = 0 leaves g'(0) = -cum_phased(0), hence f'(0) = g'(0) + i w g(0)
    let phased: Vec<C64> = (0..n)
        .map(|i| (two_iw * xs[i]).exp() * qv[i] * g[i])
        .collect();
    let cum_phased = cumulative_from_right(&phased, h);
    let gp0 = -cum_phased[0];
    Ok((g[0], gp0 + C64::i() * w * g[0]))
}

/// The boundary combination `sin(a) f'(z,0) + cos(a) f(z,0)` whose zeros
/// on the negative axis are the eigenvalues of the half-line operator
/// with the Robin angle `a`.
pub fn boundary_combination(alpha: f64, j: &JostData) -> C64 {
    alpha.sin() * j.f0p + alpha.cos() * j.f0
}

fn boundary_combination_dot(alpha: f64, j: &JostData) -> C64 {
    alpha.sin() * j.dot_f0p + alpha.cos() * j.dot_f0
}

/// Ratio of shifted perturbation determinants for two potentials under
/// the same boundary angle:
/// `[sin(a) f2' + cos(a) f2] / [sin(a) f1' + cos(a) f1]` at `z - lambda1`.
pub fn perturbation_det(
    prob1: &HalfLineProblem,
    prob2: &HalfLineProblem,
    alpha: f64,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<C64> {
    if prob1.lambda1 != prob2.lambda1 {
        return Err(Error::InvalidProblem(
            "both half-line problems must share the spectral shift".into(),
        ));
    }
    let zz = z - prob1.lambda1;
    let j1 = jost(prob1, zz, cfg)?;
    let j2 = jost(prob2, zz, cfg)?;
    let denom = boundary_combination(alpha, &j1);
    if denom.norm() <= 1e-12 * (j1.f0.norm() + j1.f0p.norm()) {
        return Err(Error::NearSpectrum { z, fabs: denom.norm() });
    }
    Ok(boundary_combination(alpha, &j2) / denom)
}

/// Weyl-Titchmarsh m-function `m_a(z)`; the base case is
/// `m_0 = f'(z,0)/f(z,0)` and general angles follow by the linear
/// fractional map.
pub fn m_function(prob: &HalfLineProblem, alpha: f64, z: C64, cfg: &IntegratorConfig) -> Result<C64> {
    let j = jost(prob, z, cfg)?;
    if j.f0.norm() <= 1e-13 * (1.0 + j.f0p.norm()) {
        return Err(Error::NearSpectrum { z, fabs: j.f0.norm() });
    }
    let m0 = j.f0p / j.f0;
    if alpha == 0.0 {
        return Ok(m0);
    }
    let denom = alpha.cos() + alpha.sin() * m0;
    if denom.norm() <= 1e-13 * m0.norm().max(1.0) {
        return Err(Error::NearSpectrum { z, fabs: denom.norm() });
    }
    Ok((-alpha.sin() + alpha.cos() * m0) / denom)
}

/// Trace of the resolvent difference between two boundary angles at the
/// same potential, `-(d/dz) ln [N_{a2}/N_{a1}](z - lambda1)`, with the
/// z-derivative taken analytically.
pub fn bc_trace_diff(
    prob: &HalfLineProblem,
    alpha1: f64,
    alpha2: f64,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<C64> {
    if alpha1 == alpha2 {
        return Ok(C64::default());
    }
    let zz = z - prob.lambda1;
    let j = jost(prob, zz, cfg)?;
    let scale = j.f0.norm() + j.f0p.norm();
    let n1 = boundary_combination(alpha1, &j);
    let n2 = boundary_combination(alpha2, &j);
    if n1.norm() <= 1e-12 * scale || n2.norm() <= 1e-12 * scale {
        return Err(Error::NearSpectrum { z, fabs: n1.norm().min(n2.norm()) });
    }
    let d1 = boundary_combination_dot(alpha1, &j);
    let d2 = boundary_combination_dot(alpha2, &j);
    Ok(-(d2 / n2 - d1 / n1))
}

/// Eigenvalues of the (unshifted) half-line operator with boundary angle
/// `alpha`: simple zeros of the boundary combination on the negative
/// real axis.
pub fn bound_states(prob: &HalfLineProblem, alpha: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    // crude floor: min q minus the attractive Robin well
    let n = 1001;
    let mut qmin = 0.0f64;
    for i in 0..n {
        let x = prob.x_max * (i as f64 + 0.5) / n as f64;
        qmin = qmin.min(prob.q.eval(x)?);
    }
    let robin_well = if alpha.sin().abs() > 1e-12 {
        let cot = alpha.cos() / alpha.sin();
        if cot > 0.0 {
            cot * cot
        } else {
            0.0
        }
    } else {
        0.0
    };
    let floor = qmin - robin_well - 1.0;
    let eval = |zeta: f64| -> Result<f64> {
        let j = jost(prob, C64::new(zeta, 0.0), cfg)?;
        Ok(boundary_combination(alpha, &j).re)
    };
    let steps = 400usize;
    let top = -1e-9 * floor.abs().max(1.0);
    let mut roots = Vec::new();
    let mut prev_x = floor;
    let mut prev_f = eval(prev_x)?;
    for i in 1..=steps {
        let x = floor + (top - floor) * i as f64 / steps as f64;
        let f = eval(x)?;
        if prev_f == 0.0 {
            roots.push(prev_x);
        } else if prev_f * f < 0.0 {
            let (mut lo, mut flo, mut hi, mut fhi) = (prev_x, prev_f, x, f);
            for it in 0..200 {
                if (hi - lo).abs() <= 1e-12 * lo.abs().max(1.0) {
                    break;
                }
                let width = hi - lo;
                let mut mid = if it % 2 == 0 && fhi != flo {
                    (lo * fhi - hi * flo) / (fhi - flo)
                } else {
                    0.5 * (lo + hi)
                };
                if !mid.is_finite() || mid - lo < 0.005 * width || hi - mid < 0.005 * width {
                    mid = 0.5 * (lo + hi);
                }
                let fm = eval(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                    fhi = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = f;
    }
    Ok(roots)
}

/// Verify the large-|z| behaviour of the computed Jost function against
/// the leading Born-type integral; a gross mismatch signals a broken
/// support cutoff or a potential outside the short-range class.
fn check_decay_precondition(prob: &HalfLineProblem, cfg: &IntegratorConfig) -> Result<()> {
    let zz = C64::new(-1e4, 0.0);
    let j = jost(prob, zz, cfg)?;
    let w = sqrt_up(zz);
    let n = 4001;
    let h = prob.x_max / (n - 1) as f64;
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    let mut weight = 0.0f64;
    for i in 0..n {
        let x = i as f64 * h;
        let qv = prob.q.eval(x)?;
        let ker = ((2.0 * C64::i() * w * x).exp() - 1.0) * qv;
        re.push(ker.re);
        im.push(ker.im);
        weight += (1.0 + x) * qv.abs() * h;
    }
    let born = C64::new(simpson_uniform(&re, h), simpson_uniform(&im, h));
    let asym = C64::new(1.0, 0.0) - C64::i() / (2.0 * w) * born;
    let bound = 10.0 * (1.0 + weight * weight) / zz.norm();
    if (j.f0 - asym).norm() > bound {
        return Err(Error::TailBound(format!(
            "Jost function misses its large-|z| form by {:.3e} (allowed {:.3e}); \
             the potential looks outside the short-range class or x_max is too small",
            (j.f0 - asym).norm(),
            bound
        )));
    }
    Ok(())
}

fn build_halfline_side<'a>(
    prob: &'a HalfLineProblem,
    alpha: f64,
    icfg: &'a IntegratorConfig,
) -> Result<(CutSide<'a>, Vec<f64>)> {
    let lambda1 = prob.lambda1;
    let bound = bound_states(prob, alpha, icfg)?;
    // negatives of the shifted operator: bound states below -lambda1
    let negatives: Vec<f64> = bound.iter().map(|b| b + lambda1).filter(|v| *v < -1e-9).collect();
    // a bound state exactly at -lambda1 shows up as a zero mode
    let j_at = jost(prob, C64::new(-lambda1, 0.0), icfg)?;
    let scale = j_at.f0.norm() + j_at.f0p.norm();
    let m = if boundary_combination(alpha, &j_at).norm() <= 1e-8 * scale {
        1
    } else {
        0
    };
    let eval = move |z: C64| -> Result<CharLog> {
        let j = jost(prob, z - lambda1, icfg)?;
        let nv = boundary_combination(alpha, &j);
        let dv = boundary_combination_dot(alpha, &j);
        if nv.norm() == 0.0 {
            return Err(Error::NearSpectrum { z, fabs: 0.0 });
        }
        Ok(CharLog {
            ln_abs: nv.norm().ln(),
            unit: nv / nv.norm(),
            dlog: dv / nv,
        })
    };
    Ok((
        CutSide {
            eval: Box::new(eval),
            m,
            negatives,
        },
        bound,
    ))
}

fn flat_pair_closed_form(alpha2: f64, lambda1: f64) -> Result<(f64, f64)> {
    // zeta'(0) of the flat Dirichlet vs flat Robin pair after the shift;
    // the subleading large-|z| asymptotics of the two boundary conditions
    // differ, and the asymptotics-subtracted evaluation collapses to this
    let cot = alpha2.cos() / alpha2.sin();
    let arg = lambda1.sqrt() - cot;
    if arg.abs() <= 1e-12 {
        return Err(Error::UnsupportedCatalog(format!(
            "flat Dirichlet-Robin pair with cot(a) = sqrt(lambda1) = {} sits on a \
             zero mode of the shifted operator",
            lambda1.sqrt()
        )));
    }
    let re = -arg.abs().ln();
    // the flat Robin operator has one bound state at -cot^2(a) for an
    // attractive angle; shifted below zero it contributes i pi
    let n_robin = if cot > 0.0 && cot * cot > lambda1 { 1 } else { 0 };
    Ok((re, PI * n_robin as f64))
}

/// `zeta'(0)` for the shifted pair `(H_{a1,q1}, H_{a2,q2})` (both
/// shifted by the common `lambda1`).
///
/// When exactly one of the angles is Dirichlet the direct representation
/// fails to decay and the computation is split into three pairs: equal
/// angles with changing potential twice, plus the flat Dirichlet-Robin
/// pair in closed form.
pub fn halfline_relative_zeta_prime0(
    prob1: &HalfLineProblem,
    prob2: &HalfLineProblem,
    alpha1: f64,
    alpha2: f64,
    cfg: &ZetaConfig,
) -> Result<ZetaResult> {
    if prob1.lambda1 != prob2.lambda1 {
        return Err(Error::InvalidProblem(
            "both half-line problems must share the spectral shift".into(),
        ));
    }
    let icfg = &cfg.integrator;
    let norm_angle = |a: f64| {
        let mut v = a % PI;
        if v < 0.0 {
            v += PI;
        }
        v
    };
    let a1 = norm_angle(alpha1);
    let a2 = norm_angle(alpha2);
    if prob1 == prob2 && a1 == a2 {
        return Ok(zero_result());
    }
    check_decay_precondition(prob1, icfg)?;
    check_decay_precondition(prob2, icfg)?;

    let dirichlet1 = a1 == 0.0;
    let dirichlet2 = a2 == 0.0;
    if dirichlet1 != dirichlet2 {
        // orient as (Dirichlet, Robin)
        if dirichlet2 {
            let mut sw = halfline_relative_zeta_prime0(prob2, prob1, alpha2, alpha1, cfg)?;
            sw.re_part = -sw.re_part;
            sw.im_part = -sw.im_part;
            sw.value_re = sw.re_part;
            sw.value_im = sw.im_part;
            sw.zero_modes = (sw.zero_modes.1, sw.zero_modes.0);
            sw.negatives = (sw.negatives.1, sw.negatives.0);
            return Ok(sw);
        }
        let flat = prob1.flat_reference();
        // (flat Robin, q2 Robin) + (q1 Dirichlet, flat Dirichlet) + closed form
        let term_a = pair_same_angle(&flat, prob2, a2, cfg)?;
        let term_b = pair_same_angle(prob1, &flat, a1, cfg)?;
        let (re_c, im_c) = flat_pair_closed_form(a2, prob1.lambda1)?;
        let re = term_a.re_part + term_b.re_part + re_c;
        let im = term_a.im_part + term_b.im_part + im_c;
        let mut diagnostics = term_a.diagnostics;
        diagnostics.winding_crossings += term_b.diagnostics.winding_crossings;
        diagnostics.shift = prob1.lambda1;
        // report bookkeeping of the actual outer pair
        let (side1, _) = build_halfline_side(prob1, a1, icfg)?;
        let (side2, _) = build_halfline_side(prob2, a2, icfg)?;
        return Ok(ZetaResult {
            value_re: re,
            value_im: im,
            re_part: re,
            im_part: im,
            zero_modes: (side1.m, side2.m),
            negatives: (side1.negatives.len() as u32, side2.negatives.len() as u32),
            diagnostics,
        });
    }

    if a1 == a2 {
        let mut out = pair_same_angle(prob1, prob2, a1, cfg)?;
        out.diagnostics.shift = prob1.lambda1;
        return Ok(out);
    }
    // both angles interior (or both Dirichlet): the boundary-combination
    // ratio decays along the cut and the direct route applies
    let (side1, _) = build_halfline_side(prob1, a1, icfg)?;
    let (side2, _) = build_halfline_side(prob2, a2, icfg)?;
    let t_scale = halfline_t_scale(&side1, &side2, prob1.lambda1);
    let pair = PairData { side1, side2, t_scale };
    let mut out = cut_zeta_prime0(&pair, cfg.theta, false, false)?;
    out.diagnostics.shift = prob1.lambda1;
    Ok(out)
}

fn zero_result() -> ZetaResult {
    ZetaResult {
        value_re: 0.0,
        value_im: 0.0,
        re_part: 0.0,
        im_part: 0.0,
        zero_modes: (0, 0),
        negatives: (0, 0),
        diagnostics: ZetaDiagnostics::default(),
    }
}

fn halfline_t_scale(side1: &CutSide, side2: &CutSide, lambda1: f64) -> f64 {
    let mut scale = lambda1;
    for s in [side1, side2] {
        for neg in &s.negatives {
            if neg.abs() > 1e-9 {
                scale = scale.min(neg.abs());
            }
        }
    }
    scale
}

fn pair_same_angle(
    prob1: &HalfLineProblem,
    prob2: &HalfLineProblem,
    alpha: f64,
    cfg: &ZetaConfig,
) -> Result<ZetaResult> {
    let icfg = &cfg.integrator;
    if prob1 == prob2 {
        return Ok(zero_result());
    }
    let (side1, _) = build_halfline_side(prob1, alpha, icfg)?;
    let (side2, _) = build_halfline_side(prob2, alpha, icfg)?;
    let t_scale = halfline_t_scale(&side1, &side2, prob1.lambda1);
    let pair = PairData { side1, side2, t_scale };
    cut_zeta_prime0(&pair, cfg.theta, false, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn flat(x_max: f64, lambda1: f64) -> HalfLineProblem {
        HalfLineProblem::parse("0", x_max, lambda1, TailModel::Compact).unwrap()
    }

    fn bump(v0: f64) -> HalfLineProblem {
        // smooth, effectively compactly supported well centered at x = 1
        let q = format!("-{v0}*exp(-4*(x - 1)^2)");
        HalfLineProblem::parse(&q, 8.0, 1.0, TailModel::Compact).unwrap()
    }

    #[test]
    fn flat_jost_is_exponential() {
        let prob = flat(6.0, 1.0);
        for z in [C64::new(-1.0, 0.0), C64::new(2.0, 1.0), C64::new(-4.0, -3.0)] {
            let j = jost(&prob, z, &cfg()).unwrap();
            let w = sqrt_up(z);
            assert!((j.f0 - 1.0).norm() < 1e-9, "f0 = {}", j.f0);
            assert!((j.f0p - C64::i() * w).norm() < 1e-9);
            assert!(j.dot_f0.norm() < 1e-9);
            assert!((j.dot_f0p - C64::i() / (2.0 * w)).norm() < 1e-9);
        }
    }

    #[test]
    fn jost_matches_volterra_oracle() {
        let prob = bump(2.0);
        let mut rng = StdRng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 8 {
            let z = C64::new(rng.gen_range(-4.0..2.0), rng.gen_range(-2.0..2.0));
            if z.norm() < 0.3 {
                continue;
            }
            checked += 1;
            let j = jost(&prob, z, &cfg()).unwrap();
            let (f0, f0p) = volterra_jost(&prob, z, 4001, 200).unwrap();
            assert!((j.f0 - f0).norm() < 1e-7 * f0.norm().max(1.0), "z = {z}: {} vs {f0}", j.f0);
            assert!(
                (j.f0p - f0p).norm() < 1e-7 * f0p.norm().max(1.0),
                "z = {z}: {} vs {f0p}",
                j.f0p
            );
        }
    }

    #[test]
    fn jost_satisfies_equation_by_collocation() {
        // five-point second differences of f reproduce (q - z) f
        let prob = bump(1.5);
        let z = C64::new(-2.0, 1.0);
        let grid = jost_on_grid(&prob, z, &cfg(), 3200).unwrap();
        let h = prob.x_max / 3200.0;
        for i in (2..grid.len() - 2).step_by(257) {
            let f = |k: usize| grid[k].1;
            let x = grid[i].0;
            let second = (-f(i - 2) + 16.0 * f(i - 1) - 30.0 * f(i) + 16.0 * f(i + 1) - f(i + 2))
                / (12.0 * h * h);
            let qv = prob.q.eval(x).unwrap();
            let residual = second + (z - qv) * f(i);
            assert!(
                residual.norm() <= 1e-8 * f(i).norm().max(1.0) * (1.0 + z.norm_sqr()),
                "x = {x}: residual {residual}"
            );
        }
    }

    #[test]
    fn jost_derivative_matches_finite_differences() {
        let prob = bump(2.0);
        let z = C64::new(-3.0, 0.7);
        let j = jost(&prob, z, &cfg()).unwrap();
        let h = 1e-6;
        let jp = jost(&prob, z + h, &cfg()).unwrap();
        let jm = jost(&prob, z - h, &cfg()).unwrap();
        let fd0 = (jp.f0 - jm.f0) / (2.0 * h);
        let fdp = (jp.f0p - jm.f0p) / (2.0 * h);
        assert!((j.dot_f0 - fd0).norm() < 1e-6 * fd0.norm().max(1.0));
        assert!((j.dot_f0p - fdp).norm() < 1e-6 * fdp.norm().max(1.0));
    }

    #[test]
    fn jost_large_z_asymptotics() {
        // f ~ 1 - (i/(2w)) int (e^{2iwx} - 1) q + O(1/z);
        // dot f ~ (1/(2z)) int e^{2iwx} x q + O(z^{-3/2})
        let prob = bump(2.0);
        let zz = C64::new(-1e4, 0.0);
        let j = jost(&prob, zz, &cfg()).unwrap();
        let w = sqrt_up(zz);
        let n = 4001;
        let h = prob.x_max / (n - 1) as f64;
        let mut born = C64::default();
        let mut born_x = C64::default();
        for i in 0..n {
            let x = i as f64 * h;
            let weight = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let qv = prob.q.eval(x).unwrap();
            born += weight * ((2.0 * C64::i() * w * x).exp() - 1.0) * qv;
            born_x += weight * (2.0 * C64::i() * w * x).exp() * x * qv;
        }
        born *= h / 3.0;
        born_x *= h / 3.0;
        let asym_f = C64::new(1.0, 0.0) - C64::i() / (2.0 * w) * born;
        assert!(
            (j.f0 - asym_f).norm() <= 20.0 / zz.norm(),
            "f0 = {}, asym = {asym_f}",
            j.f0
        );
        let asym_dot = born_x / (2.0 * zz);
        assert!(
            (j.dot_f0 - asym_dot).norm() <= 20.0 * zz.norm().powf(-1.5),
            "dot f0 = {}, asym = {asym_dot}",
            j.dot_f0
        );
    }

    #[test]
    fn m_function_flat_and_herglotz() {
        let prob = flat(6.0, 1.0);
        let z = C64::new(2.0, 1.5);
        let m = m_function(&prob, 0.0, z, &cfg()).unwrap();
        assert!((m - C64::i() * sqrt_up(z)).norm() < 1e-9);
        // Herglotz: Im z > 0 implies Im m > 0, for several angles
        let well = bump(2.0);
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let z = C64::new(rng.gen_range(-6.0..6.0), rng.gen_range(0.05..4.0));
            let alpha = rng.gen_range(0.0..PI);
            let m = m_function(&well, alpha, z, &cfg()).unwrap();
            assert!(m.im > 0.0, "alpha = {alpha}, z = {z}: m = {m}");
        }
    }

    #[test]
    fn angle_combination_identity() {
        // cos(a2-a1) + sin(a2-a1) m_{a1} equals the ratio of boundary
        // combinations at the two angles
        let prob = bump(1.0);
        let z = C64::new(-2.5, 1.0);
        let j = jost(&prob, z, &cfg()).unwrap();
        for (a1, a2) in [(0.3, 1.2), (0.0, 0.9), (1.5, 0.2)] {
            let m1 = m_function(&prob, a1, z, &cfg()).unwrap();
            let lhs = (a2 - a1).cos() + (a2 - a1).sin() * m1;
            let rhs = boundary_combination(a2, &j) / boundary_combination(a1, &j);
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn trace_diff_flat_closed_form() {
        // q = 0, a1 = 0, a2 = pi/2: -(d/dz) ln(i (z - l1)^{1/2})
        //                          = -1/(2 (z - l1))
        let prob = flat(6.0, 1.0);
        for zr in [-1.0, -3.0, 0.2] {
            let z = C64::new(zr, 0.0);
            let t = bc_trace_diff(&prob, 0.0, PI / 2.0, z, &cfg()).unwrap();
            let expect = -0.5 / (z - prob.lambda1);
            assert!((t - expect).norm() < 1e-9 * expect.norm(), "z = {zr}: {t} vs {expect}");
        }
        // the trivial case
        let t0 = bc_trace_diff(&prob, 0.7, 0.7, C64::new(-1.0, 0.0), &cfg()).unwrap();
        assert_eq!(t0, C64::default());
    }

    #[test]
    fn trace_diff_matches_m_function_route() {
        // -(d/dz) ln [cot(a2 - a1) + m_{a1}(z - l1)]
        let prob = bump(1.5);
        let (a1, a2) = (0.4, 1.1);
        let z = C64::new(-1.7, 0.6);
        let zz = z - prob.lambda1;
        let t = bc_trace_diff(&prob, a1, a2, z, &cfg()).unwrap();
        let j = jost(&prob, zz, &cfg()).unwrap();
        let m0 = j.f0p / j.f0;
        let m0_dot = (j.dot_f0p * j.f0 - j.f0p * j.dot_f0) / (j.f0 * j.f0);
        let denom = a1.cos() + a1.sin() * m0;
        let m1 = (-a1.sin() + a1.cos() * m0) / denom;
        let m1_dot = m0_dot / (denom * denom);
        let expect = -m1_dot / ((a2 - a1).cos() / (a2 - a1).sin() + m1);
        assert!((t - expect).norm() < 1e-7 * expect.norm().max(1.0), "{t} vs {expect}");
    }

    #[test]
    fn bound_states_of_well_are_simple() {
        let prob = bump(4.0);
        let states = bound_states(&prob, 0.0, &cfg()).unwrap();
        assert!(!states.is_empty(), "a deep well must bind");
        for s in &states {
            assert!(*s < 0.0);
            let j = jost(&prob, C64::new(*s, 0.0), &cfg()).unwrap();
            assert!(boundary_combination(0.0, &j).norm() < 1e-8);
            // simplicity: the z-derivative of the combination is nonzero
            assert!(boundary_combination_dot(0.0, &j).norm() > 1e-3);
        }
    }

    #[test]
    fn threshold_is_not_an_eigenvalue() {
        let prob = bump(2.0);
        for alpha in [0.0, 0.8, 2.0] {
            let j = jost(&prob, C64::new(-prob.lambda1, 0.0), &cfg()).unwrap();
            let v = boundary_combination(alpha, &j);
            assert!(v.norm() > 1e-6, "alpha = {alpha}");
        }
    }

    #[test]
    fn perturbation_det_trivial_and_jost_pais() {
        let p0 = flat(8.0, 1.0);
        let pq = bump(1.0);
        let z = C64::new(-2.0, 0.5);
        let same = perturbation_det(&pq, &pq, 0.6, z, &cfg()).unwrap();
        assert!((same - 1.0).norm() < 1e-12);
        // alpha = 0 against the free problem: the classical Jost function
        let det = perturbation_det(&p0, &pq, 0.0, z, &cfg()).unwrap();
        let j = jost(&pq, z - 1.0, &cfg()).unwrap();
        assert!((det - j.f0).norm() < 1e-9 * j.f0.norm());
    }

    #[test]
    fn perturbation_det_flat_denominator() {
        // against the free problem the denominator is the closed flat
        // combination sin(a) i w + cos(a) at the shifted argument
        let p0 = flat(8.0, 1.0);
        let pq = bump(1.3);
        let alpha = 0.7f64;
        let z = C64::new(-1.8, 0.6);
        let det = perturbation_det(&p0, &pq, alpha, z, &cfg()).unwrap();
        let w = sqrt_up(z - 1.0);
        let j2 = jost(&pq, z - 1.0, &cfg()).unwrap();
        let expect =
            boundary_combination(alpha, &j2) / (alpha.sin() * C64::i() * w + alpha.cos());
        assert!((det - expect).norm() < 1e-9 * expect.norm(), "{det} vs {expect}");
    }

    #[test]
    fn perturbation_det_log_derivative_is_trace() {
        // the analytic -(d/dz) log of the determinant agrees with finite
        // differences of the ratio itself
        let p1 = flat(8.0, 1.0);
        let p2 = bump(1.2);
        let alpha = 0.9;
        let z = C64::new(-1.3, 0.4);
        let h = 1e-6;
        let dp = perturbation_det(&p1, &p2, alpha, z + h, &cfg()).unwrap();
        let dm = perturbation_det(&p1, &p2, alpha, z - h, &cfg()).unwrap();
        let d0 = perturbation_det(&p1, &p2, alpha, z, &cfg()).unwrap();
        let numeric = -(dp - dm) / (2.0 * h) / d0;
        let zz = z - 1.0;
        let j1 = jost(&p1, zz, &cfg()).unwrap();
        let j2 = jost(&p2, zz, &cfg()).unwrap();
        let analytic = -(boundary_combination_dot(alpha, &j2) / boundary_combination(alpha, &j2)
            - boundary_combination_dot(alpha, &j1) / boundary_combination(alpha, &j1));
        assert!((numeric - analytic).norm() < 1e-5 * analytic.norm().max(1.0));
    }

    #[test]
    fn perturbation_det_matches_green_function_diagonal() {
        // -(d/dz) log det equals the integral of the difference of the
        // Green's function diagonals phi(x) f(x) / W, with the regular
        // solution integrated forward from the origin
        let alpha = 0.9f64;
        let p1 = flat(8.0, 1.0);
        let p2 = bump(1.2);
        let zeta_pt = C64::new(-2.3, 0.0);
        let icfg = cfg();

        let n = 4000usize;
        let diagonal = |prob: &HalfLineProblem| -> Vec<f64> {
            let jgrid = jost_on_grid(prob, zeta_pt, &icfg, n).unwrap();
            // regular solution forward from (phi, phi') = (-sin a, cos a)
            let rhs = |x: f64, y: &[C64; 2]| -> crate::error::Result<[C64; 2]> {
                let qv = prob.q.eval(x)?;
                Ok([y[1], (qv - zeta_pt) * y[0]])
            };
            let mut y = [C64::new(-alpha.sin(), 0.0), C64::new(alpha.cos(), 0.0)];
            let mut phi = vec![y[0]];
            for i in 0..n {
                let xl = prob.x_max * i as f64 / n as f64;
                let xr = prob.x_max * (i + 1) as f64 / n as f64;
                let seg = integrate_adaptive(&rhs, xl, xr, y, &icfg, false).unwrap();
                y = seg.y;
                phi.push(y[0]);
            }
            let j0 = jost(prob, zeta_pt, &icfg).unwrap();
            let w = boundary_combination(alpha, &j0);
            (0..=n).map(|i| (phi[i] * jgrid[i].1 / w).re).collect()
        };
        let g2 = diagonal(&p2);
        let g1 = diagonal(&p1);
        let h = p1.x_max / n as f64;
        let diff: Vec<f64> = g2.iter().zip(&g1).map(|(a, b)| a - b).collect();
        let quadrature = crate::quad::simpson_uniform(&diff, h);

        let j1 = jost(&p1, zeta_pt, &icfg).unwrap();
        let j2 = jost(&p2, zeta_pt, &icfg).unwrap();
        let analytic = -(boundary_combination_dot(alpha, &j2) / boundary_combination(alpha, &j2)
            - boundary_combination_dot(alpha, &j1) / boundary_combination(alpha, &j1));
        assert!(
            (quadrature - analytic.re).abs() <= 1e-5 * analytic.norm().max(1.0),
            "{quadrature} vs {analytic}"
        );
        assert!(analytic.im.abs() < 1e-9);
    }

    #[test]
    fn flat_dirichlet_robin_pair_closed_form() {
        // q1 = q2 = 0, a1 = 0, a2 = 2 pi / 5, lambda1 = 1:
        // re zeta'(0) = -ln |1 - cot(2 pi/5)|
        let p = flat(6.0, 1.0);
        let r =
            halfline_relative_zeta_prime0(&p, &p.clone(), 0.0, 2.0 * PI / 5.0, &ZetaConfig::default())
                .unwrap();
        let expect = 0.39292362664196074;
        assert!((r.re_part - expect).abs() < 1e-6, "{} vs {expect}", r.re_part);
        assert_eq!(r.im_part, 0.0);
    }

    #[test]
    fn flat_robin_bound_state_at_threshold_is_a_zero_mode() {
        // cot(pi/4) = 1 puts the flat Robin bound state at -1 = -lambda1:
        // the shifted pair carries a zero mode on the first side
        let p1 = flat(8.0, 1.0);
        let p2 = bump(1.0);
        let r = halfline_relative_zeta_prime0(&p1, &p2, PI / 4.0, PI / 4.0, &ZetaConfig::default())
            .unwrap();
        assert_eq!(r.zero_modes.0, 1);
        assert!(r.re_part.is_finite());
    }

    #[test]
    fn same_angle_pair_matches_boundary_ratio() {
        // no zero modes, no shifted negatives: the relative determinant
        // reduces to the boundary-combination ratio at the origin
        let p1 = flat(8.0, 1.0);
        let p2 = bump(1.0);
        let alpha = PI / 3.0;
        let r = halfline_relative_zeta_prime0(&p1, &p2, alpha, alpha, &ZetaConfig::default()).unwrap();
        let j1 = jost(&p1, C64::new(-1.0, 0.0), &cfg()).unwrap();
        let j2 = jost(&p2, C64::new(-1.0, 0.0), &cfg()).unwrap();
        let expect = (boundary_combination(alpha, &j1).norm()
            / boundary_combination(alpha, &j2).norm())
        .ln();
        assert!((r.re_part - expect).abs() < 1e-7, "{} vs {expect}", r.re_part);
        assert_eq!(r.negatives, (0, 0));
    }

    #[test]
    fn well_pair_counts_shifted_bound_states() {
        // a deep well has bound states below -lambda1; the pair against
        // the free operator picks each up as i pi
        let p1 = flat(8.0, 1.0);
        let p2 = bump(8.0);
        let states = bound_states(&p2, PI / 4.0, &cfg()).unwrap();
        let deep: Vec<&f64> = states.iter().filter(|s| **s < -1.0).collect();
        assert!(!deep.is_empty(), "well too shallow for the test: {states:?}");
        let r = halfline_relative_zeta_prime0(&p1, &p2, PI / 4.0, PI / 4.0, &ZetaConfig::default())
            .unwrap();
        assert_eq!(r.negatives.0, 0);
        assert_eq!(r.negatives.1 as usize, deep.len());
        assert!((r.im_part - PI * deep.len() as f64).abs() < 1e-12);
        assert!(r.re_part.is_finite());
    }

    #[test]
    fn dirichlet_robin_with_potential_consistency() {
        // the three-term split equals the sum of its parts computed
        // separately
        let p1 = bump(0.8);
        let p2 = bump(1.4);
        let a2 = 2.0 * PI / 5.0;
        let whole = halfline_relative_zeta_prime0(&p1, &p2, 0.0, a2, &ZetaConfig::default()).unwrap();
        let flat = p1.flat_reference();
        let t1 = halfline_relative_zeta_prime0(&p1, &flat, 0.0, 0.0, &ZetaConfig::default()).unwrap();
        let t2 = halfline_relative_zeta_prime0(&flat, &flat.clone(), 0.0, a2, &ZetaConfig::default())
            .unwrap();
        let t3 = halfline_relative_zeta_prime0(&flat, &p2, a2, a2, &ZetaConfig::default()).unwrap();
        let sum = t1.re_part + t2.re_part + t3.re_part;
        assert!((whole.re_part - sum).abs() < 1e-6, "{} vs {sum}", whole.re_part);
    }

    #[test]
    fn tail_bound_is_enforced() {
        // an exponential declaration whose tail at x_max is far above
        // the tolerance must be rejected
        let err = HalfLineProblem::parse(
            "exp(-x/10)",
            4.0,
            1.0,
            TailModel::Exponential { amplitude: 1.0, rate: 0.1 },
        );
        assert!(matches!(err, Err(Error::TailBound(_))));
        // and the default cutoff honors the declaration
        let tail = TailModel::Exponential { amplitude: 1.0, rate: 2.0 };
        let x = tail.default_x_max().unwrap();
        assert!(tail.weighted_tail(x) < 1e-10);
        assert!(HalfLineProblem::parse("exp(-2*x)", x, 1.0, tail).is_ok());
    }
}
