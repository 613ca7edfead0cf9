//! Spectral quantities of second-order self-adjoint ODE operators.
//!
//! The crate computes, for regular Sturm-Liouville operators
//! `-(1/r) d/dx (p d/dx) + q` on a compact interval with arbitrary
//! self-adjoint boundary conditions (separated or coupled), and for
//! half-line Schrodinger operators `-d^2/dx^2 + q` with short-range
//! potentials:
//!
//! * eigenvalues with multiplicities ([`spectra`]),
//! * traces of resolvents and Fredholm determinant ratios built from
//!   characteristic functions ([`charfunc`], [`spectra`]),
//! * relative spectral zeta functions and zeta-regularized determinants
//!   via a branch-cut integral representation ([`zeta`]),
//! * Jost functions, Weyl-Titchmarsh m-functions, and boundary-condition
//!   trace formulas on the half-line ([`halfline`]).
//!
//! Coefficient functions are given in a small arithmetic expression
//! language ([`expr`]); problems can be loaded from structured text
//! files ([`files`]).

pub mod charfunc;
pub mod error;
pub mod expr;
pub mod files;
pub mod halfline;
pub mod ode;
pub mod problem;
pub(crate) mod quad;
pub mod selfcheck;
pub mod spectra;
pub mod zeta;

pub use error::{Error, Result};
pub use expr::CoeffExpr;
pub use ode::{FundamentalData, IntegratorConfig, C64};
pub use problem::{ABPair, BcSpec, BoundaryCondition, SLProblem};
pub use spectra::Spectrum;
pub use zeta::{ZetaConfig, ZetaResult};

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
