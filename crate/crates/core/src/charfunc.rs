//! Characteristic functions whose zeros (with multiplicity) are the
//! eigenvalues, for every self-adjoint boundary condition.
//!
//! For separated conditions with angles `(alpha, beta)`,
//!
//! ```text
//! F(z) = cos(a) U2(phi) - sin(a) U2(theta),
//! U2(g) = -sin(b) g^[1](b) + cos(b) g(b),
//! ```
//!
//! and for coupled conditions `(phase, R)` the 2x2 determinant of the
//! functionals `V_i(g) = (g(b), g^[1](b))_i - e^{i phase} (R (g(a), g^[1](a))^T)_i`
//! applied to `theta` and `phi`. The Floquet discriminant and the soft
//! (Krein-type) extension are the two distinguished coupled cases.

use crate::error::{Error, Result};
use crate::ode::{
    integrate_fundamental, integrate_fundamental_grid, integrate_variational,
    integrate_variational_scaled, FundamentalData, IntegratorConfig, C64,
};
use crate::problem::{BoundaryCondition, SLProblem};
use crate::quad::{cumulative_from_left, simpson_uniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CharKind {
    Separated,
    Coupled,
    Floquet,
    Krein,
}

/// A characteristic-function value, optionally with its z-derivative.
#[derive(Debug, Clone, Copy)]
pub struct CharValue {
    pub z: C64,
    pub f: C64,
    pub df: Option<C64>,
    pub kind: CharKind,
    /// accumulated local-error estimate of the underlying integration
    pub est_error: f64,
}

fn u2(beta: f64, g_b: C64, gq_b: C64) -> C64 {
    -beta.sin() * gq_b + beta.cos() * g_b
}

fn separated_from_data(alpha: f64, beta: f64, d: &FundamentalData) -> (C64, Option<C64>) {
    let f = alpha.cos() * u2(beta, d.phi, d.phi_q) - alpha.sin() * u2(beta, d.theta, d.theta_q);
    let df = d.dots.as_ref().map(|dots| {
        alpha.cos() * u2(beta, dots.dot_phi, dots.dot_phi_q)
            - alpha.sin() * u2(beta, dots.dot_theta, dots.dot_theta_q)
    });
    (f, df)
}

fn coupled_from_data(phase: f64, r: &[[f64; 2]; 2], d: &FundamentalData) -> (C64, Option<C64>) {
    let e = C64::from_polar(1.0, phase);
    // V_i applied to theta (boundary data (1,0) at a) and phi ((0,1) at a)
    let v1t = d.theta - e * r[0][0];
    let v2t = d.theta_q - e * r[1][0];
    let v1p = d.phi - e * r[0][1];
    let v2p = d.phi_q - e * r[1][1];
    let f = v1t * v2p - v1p * v2t;
    let df = d.dots.as_ref().map(|dots| {
        dots.dot_theta * v2p + v1t * dots.dot_phi_q
            - dots.dot_phi * v2t
            - v1p * dots.dot_theta_q
    });
    (f, df)
}

/// Characteristic function for separated boundary conditions.
pub fn char_separated(
    prob: &SLProblem,
    alpha: f64,
    beta: f64,
    z: C64,
    cfg: &IntegratorConfig,
    with_derivative: bool,
) -> Result<CharValue> {
    let d = if with_derivative {
        integrate_variational(prob, z, cfg)?
    } else {
        integrate_fundamental(prob, z, cfg)?
    };
    let (f, df) = separated_from_data(alpha, beta, &d);
    Ok(CharValue {
        z,
        f,
        df,
        kind: CharKind::Separated,
        est_error: d.est_error,
    })
}

/// Characteristic function for coupled boundary conditions.
pub fn char_coupled(
    prob: &SLProblem,
    phase: f64,
    r: [[f64; 2]; 2],
    z: C64,
    cfg: &IntegratorConfig,
    with_derivative: bool,
) -> Result<CharValue> {
    let d = if with_derivative {
        integrate_variational(prob, z, cfg)?
    } else {
        integrate_fundamental(prob, z, cfg)?
    };
    let (f, df) = coupled_from_data(phase, &r, &d);
    Ok(CharValue {
        z,
        f,
        df,
        kind: CharKind::Coupled,
        est_error: d.est_error,
    })
}

/// Characteristic function for any boundary condition.
pub fn char_value(
    prob: &SLProblem,
    bc: &BoundaryCondition,
    z: C64,
    cfg: &IntegratorConfig,
    with_derivative: bool,
) -> Result<CharValue> {
    match bc {
        BoundaryCondition::Separated { alpha, beta } => {
            char_separated(prob, *alpha, *beta, z, cfg, with_derivative)
        }
        BoundaryCondition::Coupled { phase, r } => {
            char_coupled(prob, *phase, *r, z, cfg, with_derivative)
        }
    }
}

/// Half the trace of the monodromy, `[theta(z,b,a) + phi^[1](z,b,a)]/2`.
pub fn floquet_discriminant(prob: &SLProblem, z: C64, cfg: &IntegratorConfig) -> Result<C64> {
    let d = integrate_fundamental(prob, z, cfg)?;
    Ok(0.5 * (d.theta + d.phi_q))
}

/// The normalized characteristic combination of the soft extension:
/// `F_krein(z) = -2 [D(z) - 1]` with `D(0) = 1`.
pub fn krein_d(prob: &SLProblem, z: C64, cfg: &IntegratorConfig) -> Result<C64> {
    let d0 = integrate_fundamental(prob, C64::new(0.0, 0.0), cfg)?;
    let dz = integrate_fundamental(prob, z, cfg)?;
    Ok(0.5
        * (d0.phi_q * dz.theta + d0.theta * dz.phi_q - d0.phi * dz.theta_q - d0.theta_q * dz.phi))
}

/// The quadratic coefficient `c` of `D(z) - 1 = z^2 [c + O(z)]` at
/// `z = 0`: `c = (1/2) W(dot phi, dot theta)(b)` from the variational
/// system, cross-checked against an independent quadrature route to
/// 1e-6 relative.
pub fn krein_c(prob: &SLProblem, cfg: &IntegratorConfig) -> Result<f64> {
    let d = integrate_variational(prob, C64::new(0.0, 0.0), cfg)?;
    let dots = d.dots.unwrap();
    let w = dots.dot_phi * dots.dot_theta_q - dots.dot_phi_q * dots.dot_theta;
    if w.im.abs() > 1e-9 * w.re.abs().max(1.0) {
        return Err(Error::Integration(
            "Wronskian of the z-derivatives is not real at z = 0".into(),
        ));
    }
    let c = 0.5 * w.re;
    let oracle = krein_c_quadrature(prob, cfg)?;
    if (c - oracle).abs() > 1e-6 * c.abs().max(oracle.abs()).max(1e-12) {
        return Err(Error::Integration(format!(
            "quadrature cross-check of c failed: {c} vs {oracle}"
        )));
    }
    Ok(c)
}

/// Independent quadrature route to the constant `c`. For a vanishing
/// potential it uses the closed nested-integral form built from `1/p`
/// and `r` alone; otherwise the Cauchy-Schwarz form
/// `c = ([I r phi theta]^2 - [I r theta^2][I r phi^2]) / 2`
/// with the z = 0 solutions sampled on a dense grid.
fn krein_c_quadrature(prob: &SLProblem, cfg: &IntegratorConfig) -> Result<f64> {
    let n = 4000usize; // 4001 samples
    let h = (prob.b - prob.a) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| prob.a + i as f64 * h).collect();
    if prob.q.is_zero_on(prob.a, prob.b, 1e-14) {
        let inv_p: Result<Vec<f64>> = xs.iter().map(|&x| prob.p.eval(x).map(|v| 1.0 / v)).collect();
        let r: Result<Vec<f64>> = xs.iter().map(|&x| prob.r.eval(x)).collect();
        let (inv_p, r) = (inv_p?, r?);
        let phi = cumulative_from_left(&inv_p, h); // int 1/p
        let cum_r = cumulative_from_left(&r, h); // int r
        let r_phi: Vec<f64> = r.iter().zip(&phi).map(|(a, b)| a * b).collect();
        let cum_r_phi = cumulative_from_left(&r_phi, h);
        let d_integrand: Vec<f64> = inv_p.iter().zip(&cum_r_phi).map(|(a, b)| a * b).collect();
        let e_integrand: Vec<f64> = inv_p.iter().zip(&cum_r).map(|(a, b)| a * b).collect();
        let a_tot = *cum_r.last().unwrap();
        let b_tot = *cum_r_phi.last().unwrap();
        let d_tot = *cumulative_from_left(&d_integrand, h).last().unwrap();
        let e_tot = *cumulative_from_left(&e_integrand, h).last().unwrap();
        Ok(0.5 * (a_tot * d_tot - e_tot * b_tot))
    } else {
        let grid = integrate_fundamental_grid(prob, C64::new(0.0, 0.0), cfg, n)?;
        let mut tt = Vec::with_capacity(n + 1);
        let mut pt = Vec::with_capacity(n + 1);
        let mut pp = Vec::with_capacity(n + 1);
        for (x, y) in &grid {
            let r = prob.r.eval(*x)?;
            tt.push(r * (y[0] * y[0]).re);
            pt.push(r * (y[2] * y[0]).re);
            pp.push(r * (y[2] * y[2]).re);
        }
        let i_tt = simpson_uniform(&tt, h);
        let i_pt = simpson_uniform(&pt, h);
        let i_pp = simpson_uniform(&pp, h);
        Ok(0.5 * (i_pt * i_pt - i_tt * i_pp))
    }
}

/// Trace of the resolvent through the two-sided-solution representation
/// (built from the solutions satisfying one boundary condition each,
/// with unit normalizations). Cross-validates `-F'(z)/F(z)`.
pub fn weyl_trace_check(
    prob: &SLProblem,
    alpha: f64,
    beta: f64,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<C64> {
    let d = integrate_variational(prob, z, cfg)?;
    let dots = d.dots.unwrap();

    let u2_theta = u2(beta, d.theta, d.theta_q);
    let u2_phi = u2(beta, d.phi, d.phi_q);
    let u2_theta_dot = u2(beta, dots.dot_theta, dots.dot_theta_q);
    let u2_phi_dot = u2(beta, dots.dot_phi, dots.dot_phi_q);

    // psi_plus = U2(theta) phi - U2(phi) theta satisfies the condition at b
    let psi_p_a = -u2_phi;
    let psi_p_a_dot = -u2_phi_dot;
    let psi_p_b = u2_theta * d.phi - u2_phi * d.theta;
    let psi_p_b_dot =
        u2_theta_dot * d.phi + u2_theta * dots.dot_phi - u2_phi_dot * d.theta - u2_phi * dots.dot_theta;
    let psi_p_q_b = u2_theta * d.phi_q - u2_phi * d.theta_q;
    let psi_p_q_b_dot = u2_theta_dot * d.phi_q + u2_theta * dots.dot_phi_q
        - u2_phi_dot * d.theta_q
        - u2_phi * dots.dot_theta_q;

    // psi_minus = cos(a) phi - sin(a) theta satisfies the condition at a
    let psi_m_b = alpha.cos() * d.phi - alpha.sin() * d.theta;
    let psi_m_b_dot = alpha.cos() * dots.dot_phi - alpha.sin() * dots.dot_theta;
    let psi_m_q_b = alpha.cos() * d.phi_q - alpha.sin() * d.theta_q;
    let psi_m_q_b_dot = alpha.cos() * dots.dot_phi_q - alpha.sin() * dots.dot_theta_q;

    let near = |v: C64| v.norm() < 1e-140;
    let log_deriv = |num: C64, num_dot: C64| -> Result<C64> {
        if near(num) {
            return Err(Error::NearSpectrum { z, fabs: num.norm() });
        }
        Ok(num_dot / num)
    };

    let zero_a = alpha == 0.0;
    let zero_b = beta == 0.0;
    let value = if zero_a && zero_b {
        // -(d/dz) ln(psi_plus(a) / psi_plus^[1](b))
        -(log_deriv(psi_p_a, psi_p_a_dot)? - log_deriv(psi_p_q_b, psi_p_q_b_dot)?)
    } else if zero_a {
        -(log_deriv(psi_p_a, psi_p_a_dot)? - log_deriv(psi_p_b, psi_p_b_dot)?)
    } else if zero_b {
        // psi_minus(a) = -sin(a) is z-independent
        -log_deriv(psi_m_b, psi_m_b_dot)?
    } else {
        let w = psi_p_b * psi_m_q_b - psi_p_q_b * psi_m_b;
        let w_dot = psi_p_b_dot * psi_m_q_b + psi_p_b * psi_m_q_b_dot
            - psi_p_q_b_dot * psi_m_b
            - psi_p_q_b * psi_m_b_dot;
        -(log_deriv(w, w_dot)? - log_deriv(psi_p_b, psi_p_b_dot)?)
    };
    Ok(value)
}

/// Logarithmic data of a characteristic function, valid at any `z`
/// (overflow-free): `log |F|`, the unit phase `F/|F|`, and the
/// logarithmic derivative `F'/F`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CharLog {
    pub ln_abs: f64,
    pub unit: C64,
    pub dlog: C64,
}

pub(crate) fn char_log(
    prob: &SLProblem,
    bc: &BoundaryCondition,
    z: C64,
    cfg: &IntegratorConfig,
) -> Result<CharLog> {
    let scaled = integrate_variational_scaled(prob, z, cfg)?;
    let d = &scaled.data;
    let kappa = scaled.log_scale;
    let dots = d.dots.as_ref().unwrap();
    match bc {
        BoundaryCondition::Separated { alpha, beta } => {
            let (fc, dfc) = separated_from_data(*alpha, *beta, d);
            let dfc = dfc.unwrap();
            if fc.norm() == 0.0 {
                return Err(Error::NearSpectrum { z, fabs: 0.0 });
            }
            Ok(CharLog {
                ln_abs: kappa + fc.norm().ln(),
                unit: fc / fc.norm(),
                dlog: dfc / fc,
            })
        }
        BoundaryCondition::Coupled { phase, r } => {
            // F = e^{i phase} (2 cos(phase) - B(z)) with B linear in the
            // x = b data; the additive constant is rescaled by e^{-kappa}
            let b_comp = r[1][1] * d.theta + r[0][0] * d.phi_q
                - r[1][0] * d.phi
                - r[0][1] * d.theta_q;
            let b_dot = r[1][1] * dots.dot_theta + r[0][0] * dots.dot_phi_q
                - r[1][0] * dots.dot_phi
                - r[0][1] * dots.dot_theta_q;
            let const_term = 2.0 * phase.cos() * (-kappa).exp();
            let gc = const_term - b_comp;
            if gc.norm() == 0.0 {
                return Err(Error::NearSpectrum { z, fabs: 0.0 });
            }
            let e = C64::from_polar(1.0, *phase);
            let unit = e * gc / gc.norm();
            Ok(CharLog {
                ln_abs: kappa + gc.norm().ln(),
                unit,
                dlog: -b_dot / gc,
            })
        }
    }
}

/// Real-valued scan function used for locating eigenvalues on the real
/// axis: `F` itself for separated conditions, `e^{-i phase} F`
/// (identically real there) for coupled ones. Returns the value and,
/// when requested, its derivative in `lambda`.
pub(crate) fn char_scan(
    prob: &SLProblem,
    bc: &BoundaryCondition,
    lambda: f64,
    cfg: &IntegratorConfig,
    with_derivative: bool,
) -> Result<(f64, Option<f64>)> {
    let z = C64::new(lambda, 0.0);
    let d = if with_derivative {
        integrate_variational(prob, z, cfg)?
    } else {
        integrate_fundamental(prob, z, cfg)?
    };
    match bc {
        BoundaryCondition::Separated { alpha, beta } => {
            let (f, df) = separated_from_data(*alpha, *beta, &d);
            Ok((f.re, df.map(|v| v.re)))
        }
        BoundaryCondition::Coupled { phase, r } => {
            let b_val = r[1][1] * d.theta + r[0][0] * d.phi_q - r[1][0] * d.phi - r[0][1] * d.theta_q;
            let f = 2.0 * phase.cos() - b_val.re;
            let df = d.dots.as_ref().map(|dots| {
                -(r[1][1] * dots.dot_theta + r[0][0] * dots.dot_phi_q
                    - r[1][0] * dots.dot_phi
                    - r[0][1] * dots.dot_theta_q)
                    .re
            });
            Ok((f, df))
        }
    }
}
