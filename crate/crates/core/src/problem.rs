//! Problems and the complete parametrization of self-adjoint boundary
//! conditions.
//!
//! Every self-adjoint realization of `-(1/r)(p y')' + q y` on `[a, b]`
//! is fixed either by a pair of angles (separated conditions) or by a
//! phase and a real unimodular 2x2 matrix (coupled conditions). The raw
//! matrix description `A (y(a), y^[1](a))^T = B (y(b), y^[1](b))^T` with
//! `rank(A B) = 2` and `A J A* = B J B*` is supported through
//! [`ABPair`], with [`canonicalize`] reducing a valid pair to the unique
//! canonical form.

use crate::error::{Error, Result};
use crate::expr::{check_hypothesis, CoeffExpr, HypothesisReport};
use crate::ode::{integrate_fundamental, IntegratorConfig, C64};
use std::f64::consts::PI;

/// A regular Sturm-Liouville problem on a compact interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SLProblem {
    pub a: f64,
    pub b: f64,
    pub p: CoeffExpr,
    pub q: CoeffExpr,
    pub r: CoeffExpr,
}

impl SLProblem {
    pub fn new(a: f64, b: f64, p: CoeffExpr, q: CoeffExpr, r: CoeffExpr) -> Result<SLProblem> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidProblem(format!(
                "interval endpoints must be finite with a < b (got a = {a}, b = {b})"
            )));
        }
        Ok(SLProblem { a, b, p, q, r })
    }

    /// Convenience constructor from coefficient source strings.
    pub fn parse(a: f64, b: f64, p: &str, q: &str, r: &str) -> Result<SLProblem> {
        SLProblem::new(
            a,
            b,
            CoeffExpr::parse(p)?,
            CoeffExpr::parse(q)?,
            CoeffExpr::parse(r)?,
        )
    }

    /// The flat comparison problem on the same interval: `p = r = 1`,
    /// `q = 0`.
    pub fn flat_reference(&self) -> SLProblem {
        SLProblem {
            a: self.a,
            b: self.b,
            p: CoeffExpr::constant(1.0),
            q: CoeffExpr::constant(0.0),
            r: CoeffExpr::constant(1.0),
        }
    }

    /// True if `p` and `r` are identically 1 on the interval.
    pub fn has_unit_p_r(&self) -> bool {
        let near_one = |e: &CoeffExpr| {
            let n = 257;
            (0..n).all(|i| {
                let x = self.a + (self.b - self.a) * (i as f64 + 0.5) / n as f64;
                matches!(e.eval(x), Ok(v) if (v - 1.0).abs() <= 1e-14)
            })
        };
        near_one(&self.p) && near_one(&self.r)
    }

    /// Advisory report of the standing assumptions (default grid of
    /// 10^4 sample points).
    pub fn hypothesis_report(&self) -> HypothesisReport {
        check_hypothesis(&self.p, &self.q, &self.r, self.a, self.b, 10_000)
    }

    /// `int_a^b sqrt(r/p)`, the natural length entering Weyl asymptotics.
    pub fn weyl_length(&self) -> Result<f64> {
        crate::quad::adaptive_simpson_real(
            &|x| {
                let p = self.p.eval(x)?;
                let r = self.r.eval(x)?;
                if p <= 0.0 || r < 0.0 {
                    return Err(Error::InvalidProblem(format!(
                        "sqrt(r/p) undefined at x = {x} (p = {p}, r = {r})"
                    )));
                }
                Ok((r / p).sqrt())
            },
            self.a,
            self.b,
            1e-10,
        )
    }
}

/// A self-adjoint boundary condition in canonical parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// `sin(alpha) y^[1](a) + cos(alpha) y(a) = 0`,
    /// `-sin(beta) y^[1](b) + cos(beta) y(b) = 0`, angles in `[0, pi)`.
    Separated { alpha: f64, beta: f64 },
    /// `(y(b), y^[1](b))^T = e^{i phase} R (y(a), y^[1](a))^T` with
    /// `R` real, `det R = 1`, `phase` in `[0, 2 pi)`.
    Coupled { phase: f64, r: [[f64; 2]; 2] },
}

fn norm_angle_half_open(v: f64, period: f64) -> f64 {
    let mut w = v % period;
    if w < 0.0 {
        w += period;
    }
    // values within rounding of the period wrap to 0
    if (w - period).abs() < 1e-15 * period.max(1.0) {
        w = 0.0;
    }
    w
}

impl BoundaryCondition {
    pub fn separated(alpha: f64, beta: f64) -> BoundaryCondition {
        BoundaryCondition::Separated {
            alpha: norm_angle_half_open(alpha, PI),
            beta: norm_angle_half_open(beta, PI),
        }
    }

    pub fn coupled(phase: f64, r: [[f64; 2]; 2]) -> Result<BoundaryCondition> {
        let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProblem(format!(
                "coupled boundary matrix must have det R = 1 (got {det})"
            )));
        }
        Ok(BoundaryCondition::Coupled {
            phase: norm_angle_half_open(phase, 2.0 * PI),
            r,
        })
    }

    pub fn dirichlet() -> BoundaryCondition {
        BoundaryCondition::separated(0.0, 0.0)
    }

    pub fn neumann() -> BoundaryCondition {
        BoundaryCondition::separated(PI / 2.0, PI / 2.0)
    }

    pub fn floquet(phase: f64) -> BoundaryCondition {
        BoundaryCondition::Coupled {
            phase: norm_angle_half_open(phase, 2.0 * PI),
            r: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// The matrices of the condition: `(3x values) A, B` with
    /// `A v_a = B v_b`.
    pub fn matrices(&self) -> ABPair {
        let z = C64::new(0.0, 0.0);
        match self {
            BoundaryCondition::Separated { alpha, beta } => ABPair {
                a: [
                    [C64::new(alpha.cos(), 0.0), C64::new(alpha.sin(), 0.0)],
                    [z, z],
                ],
                b: [
                    [z, z],
                    [C64::new(-beta.cos(), 0.0), C64::new(beta.sin(), 0.0)],
                ],
            },
            BoundaryCondition::Coupled { phase, r } => {
                let e = C64::from_polar(1.0, *phase);
                ABPair {
                    a: [
                        [e * r[0][0], e * r[0][1]],
                        [e * r[1][0], e * r[1][1]],
                    ],
                    b: [
                        [C64::new(1.0, 0.0), z],
                        [z, C64::new(1.0, 0.0)],
                    ],
                }
            }
        }
    }

    /// The representative with coupled phase folded into `[0, pi)`
    /// (`(phase, R)` and `(phase + pi, -R)` describe the same operator).
    pub fn canonical(&self) -> BoundaryCondition {
        match self {
            BoundaryCondition::Coupled { phase, r } if *phase >= PI => BoundaryCondition::Coupled {
                phase: norm_angle_half_open(phase - PI, 2.0 * PI),
                r: [[-r[0][0], -r[0][1]], [-r[1][0], -r[1][1]]],
            },
            other => other.clone(),
        }
    }
}

/// A raw pair of complex 2x2 matrices describing a boundary condition.
#[derive(Debug, Clone, Copy)]
pub struct ABPair {
    pub a: [[C64; 2]; 2],
    pub b: [[C64; 2]; 2],
}

fn mat_scale(m: &[[C64; 2]; 2]) -> f64 {
    m.iter()
        .flatten()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn det2(m: &[[C64; 2]; 2]) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `M J M*` with `J = [[0, -1], [1, 0]]`.
fn mjm_star(m: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    // (M J M*)_{ik} = sum_{jl} M_{ij} J_{jl} conj(M_{kl})
    //              = M_{i1} conj(M_{k0}) - M_{i0} conj(M_{k1})
    let mut out = [[C64::default(); 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            out[i][k] = m[i][1] * m[k][0].conj() - m[i][0] * m[k][1].conj();
        }
    }
    out
}

impl ABPair {
    /// Largest 2x2 minor (in modulus) of the 2x4 block `(A B)`; zero
    /// means rank below 2.
    fn max_minor(&self) -> f64 {
        let cols: Vec<[C64; 2]> = (0..4)
            .map(|j| {
                if j < 2 {
                    [self.a[0][j], self.a[1][j]]
                } else {
                    [self.b[0][j - 2], self.b[1][j - 2]]
                }
            })
            .collect();
        let mut best = 0.0f64;
        for i in 0..4 {
            for j in i + 1..4 {
                let d = cols[i][0] * cols[j][1] - cols[i][1] * cols[j][0];
                best = best.max(d.norm());
            }
        }
        best
    }

    fn symplectic_residual(&self) -> f64 {
        let la = mjm_star(&self.a);
        let lb = mjm_star(&self.b);
        let mut s = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                s += (la[i][k] - lb[i][k]).norm_sqr();
            }
        }
        s.sqrt()
    }
}

/// True iff the pair has full joint rank and satisfies `A J A* = B J B*`
/// within tolerance.
pub fn validate_ab(pair: &ABPair) -> bool {
    let scale = (mat_scale(&pair.a).powi(2) + mat_scale(&pair.b).powi(2)).max(1.0);
    pair.max_minor() > 1e-10 * scale && pair.symplectic_residual() <= 1e-10 * scale
}

fn rank1(m: &[[C64; 2]; 2], scale: f64) -> bool {
    det2(m).norm() <= 1e-10 * scale.powi(2) && mat_scale(m) > 1e-12 * scale
}

/// Extract, from a rank-one matrix, the direction of its row space as a
/// real unit vector (up to overall sign). Fails if the row space is not
/// real up to a common complex factor.
fn rank1_row_direction(m: &[[C64; 2]; 2]) -> Result<(f64, f64)> {
    let r0n = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let r1n = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let row = if r0n >= r1n { m[0] } else { m[1] };
    let lead = if row[0].norm() >= row[1].norm() { row[0] } else { row[1] };
    if lead.norm() == 0.0 {
        return Err(Error::NotSelfAdjoint("zero row in rank-one factor".into()));
    }
    let u = [row[0] / lead, row[1] / lead];
    let imag = u[0].im.abs().max(u[1].im.abs());
    if imag > 1e-9 {
        return Err(Error::NotSelfAdjoint(
            "rank-one boundary row is not proportional to a real vector".into(),
        ));
    }
    let n = (u[0].re.powi(2) + u[1].re.powi(2)).sqrt();
    Ok((u[0].re / n, u[1].re / n))
}

/// Reduce a valid matrix pair to its canonical boundary condition:
/// separated angles when both matrices have rank one, otherwise the
/// coupled form `A = e^{i phase} R`, `B = I`. Coupled phases are
/// reported in `[0, pi)` (the `(phase, R) ~ (phase + pi, -R)`
/// ambiguity is resolved towards the smaller phase).
pub fn canonicalize(pair: &ABPair) -> Result<BoundaryCondition> {
    if !validate_ab(pair) {
        return Err(Error::NotSelfAdjoint(
            "pair fails the rank or symplectic condition".into(),
        ));
    }
    let scale = mat_scale(&pair.a).max(mat_scale(&pair.b)).max(1e-300);
    let a_rank1 = rank1(&pair.a, scale);
    let b_rank1 = rank1(&pair.b, scale);
    if a_rank1 != b_rank1 {
        return Err(Error::NotSelfAdjoint(
            "mixed-rank pair cannot satisfy the symplectic condition".into(),
        ));
    }
    if a_rank1 {
        // separated: row direction of A gives (cos alpha, sin alpha),
        // row direction of B gives (-cos beta, sin beta)
        let (ca, sa) = rank1_row_direction(&pair.a)?;
        let (mut alpha, _) = (sa.atan2(ca), 0);
        alpha = norm_angle_half_open(alpha, PI);
        let (nb0, nb1) = rank1_row_direction(&pair.b)?;
        let beta = norm_angle_half_open(nb1.atan2(-nb0), PI);
        Ok(BoundaryCondition::separated(alpha, beta))
    } else {
        // coupled: M = B^{-1} A = e^{i phase} R
        let db = det2(&pair.b);
        if db.norm() <= 1e-12 * scale.powi(2) {
            return Err(Error::NotSelfAdjoint("B is singular in a coupled pair".into()));
        }
        let binv = [
            [pair.b[1][1] / db, -pair.b[0][1] / db],
            [-pair.b[1][0] / db, pair.b[0][0] / db],
        ];
        let mut m = [[C64::default(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = binv[i][0] * pair.a[0][k] + binv[i][1] * pair.a[1][k];
            }
        }
        let dm = det2(&m);
        if (dm.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::NotSelfAdjoint(format!(
                "|det(B^-1 A)| = {} differs from 1",
                dm.norm()
            )));
        }
        let mut phase = 0.5 * dm.arg(); // in (-pi/2, pi/2]
        let mut rot = C64::from_polar(1.0, -phase);
        if phase < 0.0 {
            phase += PI;
            rot = -rot;
        }
        let mut r = [[0.0f64; 2]; 2];
        let mut imag_residual = 0.0f64;
        for i in 0..2 {
            for k in 0..2 {
                let v = rot * m[i][k];
                imag_residual = imag_residual.max(v.im.abs());
                r[i][k] = v.re;
            }
        }
        if imag_residual > 1e-8 * mat_scale(&m).max(1.0) {
            return Err(Error::NotSelfAdjoint(format!(
                "e^{{-i phase}} B^-1 A has imaginary residual {imag_residual:.3e}"
            )));
        }
        // clean the determinant of rounding drift
        let det = r[0][0] * r[1][1] - r[0][1] * r[1][0];
        if (det - 1.0).abs() > 1e-8 {
            return Err(Error::NotSelfAdjoint(format!(
                "extracted R has det {det}, expected 1"
            )));
        }
        let fix = det.abs().sqrt();
        for row in &mut r {
            for v in row.iter_mut() {
                *v /= fix;
            }
        }
        BoundaryCondition::coupled(phase, r)
    }
}

/// Monodromy matrix of the fundamental system at `z = 0`; coupling with
/// this matrix (phase 0) realizes the soft extension whose kernel is
/// two-dimensional.
pub fn krein_matrix(prob: &SLProblem, cfg: &IntegratorConfig) -> Result<[[f64; 2]; 2]> {
    let d = integrate_fundamental(prob, C64::new(0.0, 0.0), cfg)?;
    let mut m = [[d.theta.re, d.phi.re], [d.theta_q.re, d.phi_q.re]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det - 1.0).abs() > 1e-10 {
        return Err(Error::Integration(format!(
            "monodromy determinant {det} deviates from 1 beyond tolerance"
        )));
    }
    // strip the residual integration drift off the determinant
    let fix = det.sqrt();
    for row in &mut m {
        for v in row.iter_mut() {
            *v /= fix;
        }
    }
    let imag = d
        .theta
        .im
        .abs()
        .max(d.phi.im.abs())
        .max(d.theta_q.im.abs())
        .max(d.phi_q.im.abs());
    if imag > 1e-9 {
        return Err(Error::Integration(
            "monodromy at z = 0 has a non-real component".into(),
        ));
    }
    Ok(m)
}

/// A boundary-condition rule. `Separated`, `Coupled`, and `Floquet` are
/// problem-independent; `Krein` resolves to the coupled condition built
/// from the problem's own z = 0 monodromy.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BcSpec {
    Separated { alpha: f64, beta: f64 },
    Coupled { phase: f64, r: [[f64; 2]; 2] },
    Floquet { phase: f64 },
    Krein,
}

impl BcSpec {
    pub fn resolve(&self, prob: &SLProblem, cfg: &IntegratorConfig) -> Result<BoundaryCondition> {
        Ok(match self {
            BcSpec::Separated { alpha, beta } => BoundaryCondition::separated(*alpha, *beta),
            BcSpec::Coupled { phase, r } => BoundaryCondition::coupled(*phase, *r)?,
            BcSpec::Floquet { phase } => BoundaryCondition::floquet(*phase),
            BcSpec::Krein => BoundaryCondition::coupled(0.0, krein_matrix(prob, cfg)?)?,
        })
    }

    pub fn dirichlet() -> BcSpec {
        BcSpec::Separated { alpha: 0.0, beta: 0.0 }
    }
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn separated_round_trip(alpha in 0.0..PI, beta in 0.0..PI) {
            let bc = BoundaryCondition::separated(alpha, beta);
            prop_assert!(validate_ab(&bc.matrices()));
            let got = canonicalize(&bc.matrices()).unwrap();
            match (got, bc) {
                (
                    BoundaryCondition::Separated { alpha: a2, beta: b2 },
                    BoundaryCondition::Separated { alpha: a1, beta: b1 },
                ) => {
                    prop_assert!((a2 - a1).abs() < 1e-11);
                    prop_assert!((b2 - b1).abs() < 1e-11);
                }
                _ => prop_assert!(false, "kind changed"),
            }
        }

        #[test]
        fn coupled_round_trip(
            phase in 0.0..(2.0 * PI),
            rot in 0.0..(2.0 * PI),
            scale in -1.5..1.5f64,
            shear in -3.0..3.0f64,
        ) {
            // Iwasawa-style sample of a real unimodular matrix:
            // rotation * diag(e^s, e^-s) * upper shear
            let (c, s) = (rot.cos(), rot.sin());
            let e = scale.exp();
            let r = [
                [c * e, c * e * shear - s / e],
                [s * e, s * e * shear + c / e],
            ];
            let bc = BoundaryCondition::coupled(phase, r);
            prop_assume!(bc.is_ok());
            let bc = bc.unwrap();
            prop_assert!(validate_ab(&bc.matrices()));
            let got = canonicalize(&bc.matrices()).unwrap();
            let expect = bc.canonical();
            match (got, expect) {
                (
                    BoundaryCondition::Coupled { phase: p2, r: r2 },
                    BoundaryCondition::Coupled { phase: p1, r: r1 },
                ) => {
                    prop_assert!((p2 - p1).abs() < 1e-9, "{} vs {}", p2, p1);
                    for i in 0..2 {
                        for j in 0..2 {
                            prop_assert!((r2[i][j] - r1[i][j]).abs() < 1e-8);
                        }
                    }
                }
                _ => prop_assert!(false, "kind changed"),
            }
        }
    }
}
