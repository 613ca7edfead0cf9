//! Eigenvalue location and the spectral quantities built on top of the
//! characteristic function: resolvent traces, Fredholm determinant
//! ratios, and the eigenvalue-product oracle with a tail model.

use crate::charfunc::{char_scan, char_value};
use crate::error::{Error, Result};
use crate::ode::{IntegratorConfig, C64};
use crate::problem::{BcSpec, BoundaryCondition, SLProblem};

/// One eigenvalue with its multiplicity (1 or 2).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EigenPair {
    pub lambda: f64,
    pub multiplicity: u8,
}

/// An ordered list of eigenvalues found in a window, with zero-mode and
/// negative counts (both counted with multiplicity).
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<EigenPair>,
    pub zero_modes: u32,
    pub negatives: u32,
    pub search_window: (f64, f64),
}

impl Spectrum {
    pub fn count_with_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity as usize).sum()
    }

    /// The `j`-th eigenvalue counted with multiplicity, 1-indexed from
    /// the bottom of the window.
    pub fn nth(&self, j: usize) -> Option<f64> {
        let mut seen = 0usize;
        for e in &self.eigenvalues {
            seen += e.multiplicity as usize;
            if seen >= j {
                return Some(e.lambda);
            }
        }
        None
    }

    /// All eigenvalues repeated according to multiplicity.
    pub fn repeated(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.count_with_multiplicity());
        for e in &self.eigenvalues {
            for _ in 0..e.multiplicity {
                out.push(e.lambda);
            }
        }
        out
    }
}

/// Scan controls; the defaults suit the regular problems in scope.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Hard cap on characteristic-function samples.
    pub max_samples: usize,
    /// Consecutive descending samples with growing |F| required before
    /// the downward scan concludes the spectrum is exhausted below.
    pub settle_below: usize,
    /// Samples evaluated per parallel block.
    pub block: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            max_samples: 200_000,
            settle_below: 12,
            block: 8192,
        }
    }
}

fn zero_mode_tolerance(gap: f64) -> f64 {
    1e-7 * gap.max(1.0)
}

/// Lowest sampled value of `q/r`, a crude floor for where eigenvalues
/// can sit before boundary terms are accounted for.
fn min_q_over_r(prob: &SLProblem) -> Result<f64> {
    let n = 1001;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let x = prob.a + (prob.b - prob.a) * (i as f64 + 0.5) / n as f64;
        let q = prob.q.eval(x)?;
        let r = prob.r.eval(x)?;
        if r <= 0.0 {
            return Err(Error::InvalidProblem(format!("r({x}) = {r} is not positive")));
        }
        lo = lo.min(q / r);
    }
    Ok(lo)
}

struct Scanner<'a> {
    prob: &'a SLProblem,
    bc: &'a BoundaryCondition,
    cfg: &'a IntegratorConfig,
    samples_used: std::cell::Cell<usize>,
    max_samples: usize,
}

impl<'a> Scanner<'a> {
    fn value(&self, lambda: f64) -> Result<f64> {
        self.charge(1)?;
        Ok(char_scan(self.prob, self.bc, lambda, self.cfg, false)?.0)
    }

    fn value_and_slope(&self, lambda: f64) -> Result<(f64, f64)> {
        self.charge(1)?;
        let (f, df) = char_scan(self.prob, self.bc, lambda, self.cfg, true)?;
        Ok((f, df.unwrap()))
    }

    fn charge(&self, n: usize) -> Result<()> {
        let used = self.samples_used.get() + n;
        self.samples_used.set(used);
        if used > self.max_samples {
            return Err(Error::ScanBudget(format!(
                "more than {} characteristic-function samples",
                self.max_samples
            )));
        }
        Ok(())
    }

    fn batch_values(&self, lambdas: &[f64]) -> Result<Vec<f64>> {
        self.charge(lambdas.len())?;
        let results = crate::par_map(lambdas.to_vec(), |l| {
            char_scan(self.prob, self.bc, l, self.cfg, false).map(|v| v.0)
        });
        results.into_iter().collect()
    }
}

/// Bisection-secant refinement of a sign-change bracket (`lo < hi`).
fn refine_root(scan: &Scanner, mut lo: f64, mut flo: f64, mut hi: f64, mut fhi: f64) -> Result<f64> {
    debug_assert!(flo * fhi <= 0.0);
    for iter in 0..240 {
        let tol = 1e-11 * lo.abs().max(hi.abs()).max(1.0);
        let width = hi - lo;
        if width <= tol {
            break;
        }
        let mut mid = if iter % 2 == 0 && fhi != flo {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        if !mid.is_finite() || mid - lo < 0.005 * width || hi - mid < 0.005 * width {
            mid = 0.5 * (lo + hi);
        }
        let fm = scan.value(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refine a suspected double zero: the slope of the scan function
/// changes sign across an extremum touching zero.
fn refine_extremum(scan: &Scanner, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (_, mut dlo) = scan.value_and_slope(lo)?;
    let (_, dhi0) = scan.value_and_slope(hi)?;
    let mut dhi = dhi0;
    if dlo * dhi > 0.0 {
        return Ok(0.5 * (lo + hi));
    }
    for iter in 0..200 {
        let tol = 1e-11 * lo.abs().max(hi.abs()).max(1.0);
        let width = hi - lo;
        if width <= tol {
            break;
        }
        let mut mid = if iter % 2 == 0 && dhi != dlo {
            (lo * dhi - hi * dlo) / (dhi - dlo)
        } else {
            0.5 * (lo + hi)
        };
        if !mid.is_finite() || mid - lo < 0.005 * width || hi - mid < 0.005 * width {
            mid = 0.5 * (lo + hi);
        }
        let (_, dm) = scan.value_and_slope(mid)?;
        if dm == 0.0 {
            return Ok(mid);
        }
        if (dm < 0.0) == (dlo < 0.0) {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
            dhi = dm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locate eigenvalues of `(prob, bc)` as zeros of the characteristic
/// function. Either an explicit `window` or a `count_target` (or both)
/// must be given; with only a count the scan starts below the bottom of
/// the spectrum and walks up until the count is reached. The sampling
/// step is half the local Weyl spacing. Double zeros (coupled
/// conditions) are detected as near-zero extrema with small slope;
/// an extremum with |F| small but not small enough to classify is
/// reported as an unresolved near-degenerate pair rather than merged.
pub fn find_eigenvalues(
    prob: &SLProblem,
    bc: &BcSpec,
    window: Option<(f64, f64)>,
    count_target: Option<usize>,
    cfg: &IntegratorConfig,
) -> Result<Spectrum> {
    find_eigenvalues_opts(prob, bc, window, count_target, cfg, &ScanOptions::default())
}

pub fn find_eigenvalues_opts(
    prob: &SLProblem,
    bc: &BcSpec,
    window: Option<(f64, f64)>,
    count_target: Option<usize>,
    cfg: &IntegratorConfig,
    opts: &ScanOptions,
) -> Result<Spectrum> {
    if window.is_none() && count_target.is_none() {
        return Err(Error::InvalidProblem(
            "eigenvalue search needs a window or a count target".into(),
        ));
    }
    let bc = bc.resolve(prob, cfg)?;
    let c = prob.weyl_length()?;
    let a_weyl = (std::f64::consts::PI / c).powi(2); // lambda_k ~ a k^2
    let gap = a_weyl;
    let scan = Scanner {
        prob,
        bc: &bc,
        cfg,
        samples_used: std::cell::Cell::new(0),
        max_samples: opts.max_samples,
    };

    let (start, mut hi, hard_window) = match window {
        Some((lo, hi)) => {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidProblem("empty eigenvalue window".into()));
            }
            (lo, hi, true)
        }
        None => {
            let floor = min_q_over_r(prob)?;
            let count = count_target.unwrap();
            let hi = a_weyl * ((count + 3) as f64).powi(2);
            (floor - 2.0 * gap, hi.max(floor + 4.0 * gap), false)
        }
    };

    // confirm the spectrum is exhausted below the start unless the
    // caller pinned the window explicitly
    let mut lo = start;
    if !hard_window {
        let step = 0.5 * gap.max(1e-3);
        let mut streak = 0usize;
        let mut prev = scan.value(lo)?;
        let mut x = lo;
        while streak < opts.settle_below {
            let xn = x - step;
            let v = scan.value(xn)?;
            if v * prev < 0.0 || v.abs() < prev.abs() {
                streak = 0;
            } else {
                streak += 1;
            }
            prev = v;
            x = xn;
        }
        lo = x;
    }

    let step_at = |lambda: f64| -> f64 { (a_weyl * lambda.max(gap)).sqrt() };

    let target = count_target.unwrap_or(usize::MAX);
    let mut found: Vec<EigenPair> = Vec::new();
    let mut block_lo = lo;
    loop {
        let mut positions = vec![block_lo];
        let mut x = block_lo;
        while x < hi && positions.len() < opts.block.max(8) {
            x += step_at(x);
            positions.push(x.min(hi));
        }
        let values = scan.batch_values(&positions)?;

        let local_scale = |i: usize| -> f64 {
            let lo_i = i.saturating_sub(8);
            let hi_i = (i + 8).min(values.len() - 1);
            values[lo_i..=hi_i]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1e-300)
        };

        for i in 0..positions.len() - 1 {
            let count_now: usize = found.iter().map(|e| e.multiplicity as usize).sum();
            if count_now >= target && !hard_window {
                break;
            }
            let (x0, x1) = (positions[i], positions[i + 1]);
            let (f0, f1) = (values[i], values[i + 1]);
            if f0 == 0.0 {
                let (_, d) = scan.value_and_slope(x0)?;
                let m = if d.abs() * gap <= 1e-6 * local_scale(i) { 2 } else { 1 };
                found.push(EigenPair { lambda: x0, multiplicity: m });
                continue;
            }
            if f0 * f1 < 0.0 {
                let root = refine_root(&scan, x0, f0, x1, f1)?;
                found.push(EigenPair { lambda: root, multiplicity: 1 });
                continue;
            }
            if i > 0 && values[i].abs() < values[i - 1].abs() && values[i].abs() <= values[i + 1].abs()
                && values[i - 1] * values[i] > 0.0
                && values[i] * values[i + 1] > 0.0
            {
                let scale = local_scale(i);
                // only dips that plausibly touch zero are worth refining;
                // a parabolic touch sampled at half the Weyl spacing sits
                // well below half the local scale
                if values[i].abs() <= 0.5 * scale {
                    let lambda = refine_extremum(&scan, positions[i - 1], positions[i + 1])?;
                    let (fv, dv) = scan.value_and_slope(lambda)?;
                    // slope scale: |F| changes by O(scale) over a gap
                    let dscale = scale / gap.max(1e-12);
                    if fv.abs() <= 1e-8 * scale && dv.abs() <= 1e-6 * dscale {
                        found.push(EigenPair { lambda, multiplicity: 2 });
                    } else if fv.abs() <= 1e-5 * scale {
                        return Err(Error::NearDegenerate(lambda));
                    }
                }
            }
        }

        let have: usize = found.iter().map(|e| e.multiplicity as usize).sum();
        if !hard_window && have >= target {
            break;
        }
        let block_end = *positions.last().unwrap();
        if block_end < hi {
            // the window needed more samples than one block holds;
            // continue it with a one-sample overlap so boundary dips
            // keep a left neighbour
            block_lo = positions[positions.len() - 2];
            continue;
        }
        if hard_window {
            break;
        }
        block_lo = hi;
        let k_next = (target + 3) as f64;
        hi = (a_weyl * k_next * k_next).max(hi * 1.5);
    }

    found.sort_by(|p, q| p.lambda.partial_cmp(&q.lambda).unwrap());
    let mut merged: Vec<EigenPair> = Vec::new();
    for e in found {
        if let Some(last) = merged.last_mut() {
            if (e.lambda - last.lambda).abs() <= 1e-9 * last.lambda.abs().max(1.0) {
                last.multiplicity = (last.multiplicity + e.multiplicity).min(2);
                last.lambda = 0.5 * (last.lambda + e.lambda);
                continue;
            }
        }
        merged.push(e);
    }
    if let Some(cnt) = count_target {
        let mut kept = Vec::new();
        let mut seen = 0usize;
        for e in merged {
            if seen >= cnt {
                break;
            }
            seen += e.multiplicity as usize;
            kept.push(e);
        }
        merged = kept;
    }

    let ztol = zero_mode_tolerance(gap);
    let zero_modes = merged
        .iter()
        .filter(|e| e.lambda.abs() <= ztol)
        .map(|e| e.multiplicity as u32)
        .sum();
    let negatives = merged
        .iter()
        .filter(|e| e.lambda < -ztol)
        .map(|e| e.multiplicity as u32)
        .sum();
    Ok(Spectrum {
        eigenvalues: merged,
        zero_modes,
        negatives,
        search_window: (lo, hi),
    })
}

/// Ratio of the largest found eigenvalue to its Weyl prediction
/// `j^2 pi^2 / (int sqrt(r/p))^2`; approaches 1 for a spectrum anchored
/// at the bottom of the window.
pub fn weyl_ratio(spec: &Spectrum, prob: &SLProblem) -> Result<f64> {
    let j = spec.count_with_multiplicity();
    if j < 30 {
        return Err(Error::TooFewEigenvalues { need: 30, have: j });
    }
    let lambda_j = spec.nth(j).unwrap();
    let c = prob.weyl_length()?;
    let a_weyl = (std::f64::consts::PI / c).powi(2);
    Ok(lambda_j / (j as f64).powi(2) / a_weyl)
}

fn char_scale_probe(
    prob: &SLProblem,
    bc: &BoundaryCondition,
    z: C64,
    gap: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let probe = z + C64::new(0.0, gap.max(1.0));
    Ok(char_value(prob, bc, probe, cfg, false)?.f.norm())
}

/// `F(z)/F(z0)`, the determinant of `I - (z - z0)(H - z0)^{-1}`.
pub fn fredholm_det_ratio(
    prob: &SLProblem,
    bc: &BcSpec,
    z: C64,
    z0: C64,
    cfg: &IntegratorConfig,
) -> Result<C64> {
    let bc = bc.resolve(prob, cfg)?;
    let c = prob.weyl_length()?;
    let gap = (std::f64::consts::PI / c).powi(2);
    let cv0 = char_value(prob, &bc, z0, cfg, false)?;
    let scale = char_scale_probe(prob, &bc, z0, gap, cfg)?.max(cv0.f.norm());
    if cv0.f.norm() <= (1e-12 * scale).max(20.0 * cv0.est_error) {
        return Err(Error::NearSpectrum { z: z0, fabs: cv0.f.norm() });
    }
    let f = char_value(prob, &bc, z, cfg, false)?.f;
    Ok(f / cv0.f)
}

/// `-F'(z)/F(z)`, the trace of the resolvent at `z` (analytic
/// derivative from the variational system).
pub fn trace_resolvent(prob: &SLProblem, bc: &BcSpec, z: C64, cfg: &IntegratorConfig) -> Result<C64> {
    let bc = bc.resolve(prob, cfg)?;
    let c = prob.weyl_length()?;
    let gap = (std::f64::consts::PI / c).powi(2);
    let cv = char_value(prob, &bc, z, cfg, true)?;
    let scale = char_scale_probe(prob, &bc, z, gap, cfg)?.max(cv.f.norm());
    if cv.f.norm() <= (1e-12 * scale).max(20.0 * cv.est_error) {
        return Err(Error::NearSpectrum { z, fabs: cv.f.norm() });
    }
    Ok(-cv.df.unwrap() / cv.f)
}

/// Asymptotic index model `sqrt(lambda_j) ~ s j + t` fitted on the top
/// of a found spectrum; drives the tail estimates below.
#[derive(Debug, Clone, Copy)]
struct TailModel {
    s: f64,
    t: f64,
    /// worst deviation of sqrt(lambda_j) from the fit over the window
    dev_sqrt: f64,
    k_last: usize,
}

fn fit_tail_model(spec: &Spectrum, prob: &SLProblem) -> Result<TailModel> {
    let all = spec.repeated();
    let n = all.len();
    if n < 6 {
        return Err(Error::TooFewEigenvalues { need: 6, have: n });
    }
    let c = prob.weyl_length()?;
    let s = std::f64::consts::PI / c;
    let fit_lo = n.saturating_sub(10).max(n / 2);
    let mut t_sum = 0.0;
    let mut cnt = 0.0;
    for (idx, lam) in all.iter().enumerate().skip(fit_lo) {
        if *lam <= 0.0 {
            continue;
        }
        let j = (idx + 1) as f64;
        t_sum += lam.sqrt() - s * j;
        cnt += 1.0;
    }
    if cnt == 0.0 {
        return Err(Error::TooFewEigenvalues { need: 6, have: 0 });
    }
    let t = t_sum / cnt;
    let mut dev: f64 = 0.0;
    for (idx, lam) in all.iter().enumerate().skip(fit_lo) {
        if *lam <= 0.0 {
            continue;
        }
        let j = (idx + 1) as f64;
        dev = dev.max((lam.sqrt() - s * j - t).abs());
    }
    Ok(TailModel {
        s,
        t,
        dev_sqrt: dev + 1e-9,
        k_last: n,
    })
}

/// Result of the eigenvalue-product route to the determinant ratio.
#[derive(Debug, Clone, Copy)]
pub struct ProductValue {
    /// product over found eigenvalues times the modeled tail factor
    pub value: C64,
    /// bound on the error of the modeled tail factor
    pub tail_bound: f64,
    /// log of the modeled tail factor itself
    pub tail_log: C64,
}

/// Evaluate `prod_k ((lambda_k - z)/(lambda_k - z0))^{m_k}` over the
/// found spectrum and model the remainder by the fitted Weyl tail
/// (log-tail `~ (z0 - z) sum 1/lambda` summed explicitly on the model
/// plus an integral remainder). The reported bound covers the model
/// error, not the explicit part.
pub fn product_oracle(spec: &Spectrum, prob: &SLProblem, z: C64, z0: C64) -> Result<ProductValue> {
    if spec.eigenvalues.is_empty() {
        return Err(Error::TooFewEigenvalues { need: 1, have: 0 });
    }
    if z == z0 {
        return Ok(ProductValue {
            value: C64::new(1.0, 0.0),
            tail_bound: 0.0,
            tail_log: C64::default(),
        });
    }
    for e in &spec.eigenvalues {
        let d = (C64::new(e.lambda, 0.0) - z0).norm();
        if d <= 1e-12 * e.lambda.abs().max(1.0) {
            return Err(Error::NearSpectrum { z: z0, fabs: d });
        }
    }
    let mut log_prod = C64::default();
    for e in &spec.eigenvalues {
        let l = C64::new(e.lambda, 0.0);
        log_prod += (e.multiplicity as f64) * ((l - z) / (l - z0)).ln();
    }

    let model = fit_tail_model(spec, prob)?;
    let mut tail_log = C64::default();
    let mut bound = 0.0f64;
    let explicit_terms = 100_000usize;
    for j in model.k_last + 1..=model.k_last + explicit_terms {
        let u = model.s * j as f64 + model.t;
        let lam = u * u;
        let l = C64::new(lam, 0.0);
        tail_log += ((l - z) / (l - z0)).ln();
        // d(term)/d(lambda) = 1/(lambda - z0) - 1/(lambda - z)
        let sens = (1.0 / (l - z0) - 1.0 / (l - z)).norm();
        bound += sens * 2.0 * u.abs() * model.dev_sqrt;
    }
    let u_stop = model.s * (model.k_last + explicit_terms) as f64 + model.t + 0.5 * model.s;
    let rem = (z0 - z) / (model.s * u_stop);
    tail_log += rem;
    bound += rem.norm();
    bound *= 2.0;

    let value = (log_prod + tail_log).exp();
    Ok(ProductValue {
        value,
        tail_bound: bound * value.norm(),
        tail_log,
    })
}

/// Truncated eigenvalue sum for the trace of the resolvent with a
/// modeled tail; an oracle for [`trace_resolvent`]. Returns the value
/// and a bound on the tail-model error.
pub fn trace_sum_oracle(spec: &Spectrum, prob: &SLProblem, z: C64) -> Result<(C64, f64)> {
    let mut sum = C64::default();
    for e in &spec.eigenvalues {
        let l = C64::new(e.lambda, 0.0);
        let d = l - z;
        if d.norm() <= 1e-12 * e.lambda.abs().max(1.0) {
            return Err(Error::NearSpectrum { z, fabs: d.norm() });
        }
        sum += (e.multiplicity as f64) / d;
    }
    let model = fit_tail_model(spec, prob)?;
    let mut bound = 0.0f64;
    let explicit_terms = 100_000usize;
    for j in model.k_last + 1..=model.k_last + explicit_terms {
        let u = model.s * j as f64 + model.t;
        let l = C64::new(u * u, 0.0);
        sum += 1.0 / (l - z);
        bound += 2.0 * u.abs() * model.dev_sqrt / (l - z).norm_sqr();
    }
    // remainder: int dj / ((s j + t)^2 - z); substitute u = s j + t
    let u_stop = model.s * (model.k_last + explicit_terms) as f64 + model.t + 0.5 * model.s;
    let w = {
        let w = z.sqrt();
        if w.re < 0.0 {
            -w
        } else {
            w
        }
    };
    let u_c = C64::new(u_stop, 0.0);
    let rem = -((u_c - w) / (u_c + w)).ln() / (2.0 * w) / model.s;
    sum += rem;
    bound += rem.norm() * 0.05 + 1e-12;
    Ok((sum, 2.0 * bound))
}
