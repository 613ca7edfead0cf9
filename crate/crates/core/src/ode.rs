//! Adaptive complex ODE integration of the canonical fundamental system
//! and its derivatives with respect to the spectral parameter.
//!
//! The first-order form of `-(p y')' + q y = z r y` used throughout is
//!
//! ```text
//! y'     = y1 / p          (y1 = p y', the quasi-derivative)
//! y1'    = (q - z r) y
//! ```
//!
//! and the derivative with respect to `z` satisfies the same equation
//! with forcing `-r * y`. One Dormand-Prince 5(4) pass integrates the
//! base pair (theta, phi) or, when derivatives are requested, the
//! augmented 8-component system.

use crate::error::{Error, Result};
use crate::problem::SLProblem;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Tolerances and the step budget for adaptive integration.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidProblem(
                "integrator tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// z-derivatives of the fundamental system at `x = b`.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalDots {
    pub dot_theta: C64,
    pub dot_theta_q: C64,
    pub dot_phi: C64,
    pub dot_phi_q: C64,
}

/// Values of the fundamental system `theta`, `phi` (normalized at `x = a`
/// by `theta = phi^[1] = 1`, `theta^[1] = phi = 0`) and their
/// quasi-derivatives at `x = b`, for a spectral parameter `z`.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalData {
    pub z: C64,
    pub theta: C64,
    pub theta_q: C64,
    pub phi: C64,
    pub phi_q: C64,
    pub dots: Option<FundamentalDots>,
    /// Accumulated local-error estimate of the integration.
    pub est_error: f64,
}

impl FundamentalData {
    /// `theta*phi^[1] - theta^[1]*phi` is identically 1; returns the
    /// numerical residual `|W - 1|`.
    pub fn wronskian_error(&self) -> f64 {
        (self.theta * self.phi_q - self.theta_q * self.phi - C64::new(1.0, 0.0)).norm()
    }
}

/// Like [`FundamentalData`] but with an explicit scale factor split off:
/// the true solution components are `exp(log_scale)` times the stored
/// ones. Large `Im(sqrt(z)) * (b - a)` makes the raw components overflow
/// `f64`; all internal consumers that only need logarithmic derivatives
/// or `log |F|` work with this form.
#[derive(Debug, Clone, Copy)]
pub struct ScaledFundamental {
    pub data: FundamentalData,
    pub log_scale: f64,
}

impl ScaledFundamental {
    pub fn into_plain(self) -> Result<FundamentalData> {
        if self.log_scale == 0.0 {
            return Ok(self.data);
        }
        let s = self.log_scale.exp();
        if !s.is_finite() {
            return Err(Error::Integration(format!(
                "solution dynamic range exp({:.1}) exceeds f64",
                self.log_scale
            )));
        }
        let mut d = self.data;
        d.theta *= s;
        d.theta_q *= s;
        d.phi *= s;
        d.phi_q *= s;
        if let Some(dots) = &mut d.dots {
            dots.dot_theta *= s;
            dots.dot_theta_q *= s;
            dots.dot_phi *= s;
            dots.dot_phi_q *= s;
        }
        d.est_error *= s;
        Ok(d)
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b5 - b4: coefficients of the embedded error estimate
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

pub(crate) struct Integration<const N: usize> {
    pub y: [C64; N],
    pub est_error: f64,
    pub log_scale: f64,
}

/// Adaptive DP5(4) from `x0` to `x1` (either direction). With
/// `rescale`, the state is renormalized whenever it grows past 1e50 and
/// the factor is accumulated in `log_scale`; valid for linear systems.
pub(crate) fn integrate_adaptive<const N: usize, F>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: [C64; N],
    cfg: &IntegratorConfig,
    rescale: bool,
) -> Result<Integration<N>>
where
    F: Fn(f64, &[C64; N]) -> Result<[C64; N]>,
{
    cfg.validate()?;
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(Integration {
            y: y0,
            est_error: 0.0,
            log_scale: 0.0,
        });
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut log_scale = 0.0f64;
    let mut est_error = 0.0f64;

    let mut k1 = f(x, &y)?;
    // initial step from the derivative scale
    let norm0 = vec_norm(&y).max(1e-12);
    let dnorm = vec_norm(&k1).max(1e-12);
    let mut h = dir * (0.01 * norm0 / dnorm).min(span.abs() / 10.0).max(span.abs() * 1e-9);

    let mut steps = 0usize;
    let mut rejected_in_a_row = 0usize;
    while (x1 - x) * dir > 0.0 {
        if steps >= cfg.max_steps {
            return Err(Error::StepBudget { steps, x });
        }
        steps += 1;
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        if h == 0.0 || !h.is_finite() {
            return Err(Error::Integration(format!("step size underflow at x = {x}")));
        }

        let mut y2 = [C64::default(); N];
        for i in 0..N {
            y2[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = f(x + C2 * h, &y2)?;
        let mut y3 = [C64::default(); N];
        for i in 0..N {
            y3[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = f(x + C3 * h, &y3)?;
        let mut y4 = [C64::default(); N];
        for i in 0..N {
            y4[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = f(x + C4 * h, &y4)?;
        let mut y5 = [C64::default(); N];
        for i in 0..N {
            y5[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = f(x + C5 * h, &y5)?;
        let mut y6 = [C64::default(); N];
        for i in 0..N {
            y6[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = f(x + h, &y6)?;
        let mut ynew = [C64::default(); N];
        for i in 0..N {
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = f(x + h, &ynew)?;

        let mut err_sq = 0.0;
        let mut max_sc = 0.0f64;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(ynew[i].norm());
            err_sq += (e.norm() / sc).powi(2);
            max_sc = max_sc.max(sc);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration(format!(
                "non-finite state or derivative at x = {x}"
            )));
        }

        if err <= 1.0 {
            x += h;
            y = ynew;
            k1 = k7; // FSAL
            est_error += err * max_sc;
            rejected_in_a_row = 0;
            if rescale {
                let m = vec_norm(&y);
                if m > 1e50 {
                    let kappa = m.ln();
                    let inv = (-kappa).exp();
                    for yi in &mut y {
                        *yi *= inv;
                    }
                    for ki in &mut k1 {
                        *ki *= inv;
                    }
                    est_error *= inv;
                    log_scale += kappa;
                }
            }
        } else {
            rejected_in_a_row += 1;
            if rejected_in_a_row > 60 {
                return Err(Error::Integration(format!(
                    "step control failed to find an acceptable step at x = {x}"
                )));
            }
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
        h *= fac;
    }

    Ok(Integration {
        y,
        est_error,
        log_scale,
    })
}

fn vec_norm<const N: usize>(y: &[C64; N]) -> f64 {
    y.iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

/// Right-hand side of the 4-component base system (theta, theta^[1],
/// phi, phi^[1]).
fn base_rhs(prob: &SLProblem, z: C64, x: f64, y: &[C64; 4]) -> Result<[C64; 4]> {
    let p = prob.p.eval(x)?;
    let q = prob.q.eval(x)?;
    let r = prob.r.eval(x)?;
    if p == 0.0 {
        return Err(Error::Domain { func: "1/p", arg: 0.0 });
    }
    let w = q - z * r;
    Ok([y[1] / p, w * y[0], y[3] / p, w * y[2]])
}

/// Right-hand side of the augmented 8-component system; the last four
/// components are the z-derivatives, forced by `-r` times the base pair.
fn variational_rhs(prob: &SLProblem, z: C64, x: f64, y: &[C64; 8]) -> Result<[C64; 8]> {
    let p = prob.p.eval(x)?;
    let q = prob.q.eval(x)?;
    let r = prob.r.eval(x)?;
    if p == 0.0 {
        return Err(Error::Domain { func: "1/p", arg: 0.0 });
    }
    let w = q - z * r;
    Ok([
        y[1] / p,
        w * y[0],
        y[3] / p,
        w * y[2],
        y[5] / p,
        w * y[4] - r * y[0],
        y[7] / p,
        w * y[6] - r * y[2],
    ])
}

/// Integrate the fundamental system across `[a, b]` for spectral
/// parameter `z`.
pub fn integrate_fundamental(prob: &SLProblem, z: C64, cfg: &IntegratorConfig) -> Result<FundamentalData> {
    integrate_fundamental_scaled(prob, z, cfg)?.into_plain()
}

/// Scaled variant of [`integrate_fundamental`]; never overflows.
pub fn integrate_fundamental_scaled(
    prob: &SLProblem,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<ScaledFundamental> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let y0 = [one, zero, zero, one];
    let out = integrate_adaptive(&|x, y| base_rhs(prob, z, x, y), prob.a, prob.b, y0, cfg, true)?;
    Ok(ScaledFundamental {
        data: FundamentalData {
            z,
            theta: out.y[0],
            theta_q: out.y[1],
            phi: out.y[2],
            phi_q: out.y[3],
            dots: None,
            est_error: out.est_error,
        },
        log_scale: out.log_scale,
    })
}

/// Integrate the fundamental system together with its z-derivatives.
pub fn integrate_variational(prob: &SLProblem, z: C64, cfg: &IntegratorConfig) -> Result<FundamentalData> {
    integrate_variational_scaled(prob, z, cfg)?.into_plain()
}

/// Scaled variant of [`integrate_variational`]; never overflows.
pub fn integrate_variational_scaled(
    prob: &SLProblem,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<ScaledFundamental> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let y0 = [one, zero, zero, one, zero, zero, zero, zero];
    let out = integrate_adaptive(
        &|x, y| variational_rhs(prob, z, x, y),
        prob.a,
        prob.b,
        y0,
        cfg,
        true,
    )?;
    Ok(ScaledFundamental {
        data: FundamentalData {
            z,
            theta: out.y[0],
            theta_q: out.y[1],
            phi: out.y[2],
            phi_q: out.y[3],
            dots: Some(FundamentalDots {
                dot_theta: out.y[4],
                dot_theta_q: out.y[5],
                dot_phi: out.y[6],
                dot_phi_q: out.y[7],
            }),
            est_error: out.est_error,
        },
        log_scale: out.log_scale,
    })
}

/// Integrate the fundamental system recording values on a grid of `n+1`
/// equally spaced points of `[a, b]` (used by quadrature oracles).
pub fn integrate_fundamental_grid(
    prob: &SLProblem,
    z: C64,
    cfg: &IntegratorConfig,
    n: usize,
) -> Result<Vec<(f64, [C64; 4])>> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut y = [one, zero, zero, one];
    let mut out = Vec::with_capacity(n + 1);
    out.push((prob.a, y));
    for i in 1..=n {
        let xl = prob.a + (prob.b - prob.a) * (i - 1) as f64 / n as f64;
        let xr = prob.a + (prob.b - prob.a) * i as f64 / n as f64;
        let seg = integrate_adaptive(&|x, s| base_rhs(prob, z, x, s), xl, xr, y, cfg, false)?;
        y = seg.y;
        out.push((xr, y));
    }
    Ok(out)
}
