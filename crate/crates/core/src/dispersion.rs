//! Laplace transforms, the dispersion function, the Penrose stability scan
//! and the resolvent kernel of the density equation.
//!
//! Conventions: for a mode `k != 0` let `c_k = k^2 / (beta + k^2)` and
//! `kappa_k(t) = t mu_hat(-k t)`. The dispersion function is
//! `D(k, tau) = 1 + c_k L[t mu_hat(k t)](tau)`; the resolvent symbol is
//! `K~(tau) = -c_k L[kappa_k] / (1 + c_k L[kappa_k])` and its inverse
//! transform `K^(t)` solves `K^ + c_k kappa_k * K^ = -c_k kappa_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{envelope_log_fit, LinearFit};
use crate::grid::TimeGrid;
use crate::model::{Equilibrium, ModelConfig};
use crate::quad;

/// Default absolute tolerance of the inner Laplace quadratures.
pub const LAPLACE_TOL: f64 = 1e-13;
/// Default floor on `|1 + c L|` below which the resolvent is refused.
pub const KAPPA_FLOOR: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `int_0^inf e^{-tau t} phi(t) dt` for `phi` decaying at least like
/// `e^{-rate t}`.
pub fn laplace_one_sided<F>(phi: F, rate: f64, tau: Complex64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(tau.re > -rate) {
        return Err(Error::Domain { re: tau.re, im: tau.im, bound: -rate });
    }
    let eff = rate + tau.re;
    let q = quad::integrate_half_line(|t| (-tau * t).exp() * phi(t), eff, tol)?;
    Ok(q.value)
}

/// `int_R e^{-tau t} phi(t) dt` for `phi` decaying like `e^{-rate |t|}`.
pub fn laplace_two_sided<F>(phi: F, rate: f64, tau: Complex64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(tau.re.abs() < rate) {
        return Err(Error::Domain { re: tau.re, im: tau.im, bound: rate });
    }
    let right = laplace_one_sided(&phi, rate, tau, 0.5 * tol)?;
    let left = laplace_one_sided(|t| phi(-t), rate, -tau, 0.5 * tol)?;
    Ok(right + left)
}

/// Two-sided transform of `Psi(t) = int_t^inf psi(s) phi(s - t) ds` by
/// nested quadrature (inner integral evaluated pointwise).
///
/// This is the slow reference route for the product rule
/// `B[Psi](tau) = B[psi](tau) L[phi](-tau)`.
pub fn tail_convolution_transform<P, Q>(psi: P, phi: Q, rate: f64, tau: Complex64, tol: f64) -> Result<Complex64>
where
    P: Fn(f64) -> Complex64 + Sync,
    Q: Fn(f64) -> Complex64 + Sync,
{
    let inner = |t: f64| -> Complex64 {
        // split at s = 0 where psi may have a kink
        let mut acc = ZERO;
        if t < 0.0 {
            acc += quad::integrate(|s| psi(s) * phi(s - t), t, 0.0, 1e-3 * tol).map(|q| q.value).unwrap_or(acc);
        }
        let start = t.max(0.0);
        let tail = quad::integrate_half_line(|u| psi(start + u) * phi(start + u - t), rate, 1e-3 * tol)
            .map(|q| q.value)
            .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        acc + tail
    };
    // inner decays like e^{-rate |t|} up to polynomial factors
    laplace_two_sided(inner, rate, tau, tol)
}

/// `int_0^inf t^power mu_hat(sign k t) e^{-tau t} dt` without domain check;
/// the caller guarantees convergence.
pub fn transform_moment(eq: &Equilibrium, k: i64, power: i32, sign: f64, tau: Complex64, tol: f64) -> Result<Complex64> {
    let kf = k as f64;
    let rate = eq.lambda_analytic() * kf.abs() + tau.re;
    let q = quad::integrate_half_line(|t| t.powi(power) * eq.mu_hat(sign * kf * t) * (-tau * t).exp(), rate.max(0.05), tol)?;
    Ok(q.value)
}

fn check_margin(eq: &Equilibrium, k: i64, tau: Complex64) -> Result<()> {
    let bound = -eq.lambda_safe() * (k.abs() as f64);
    if tau.re < bound {
        return Err(Error::Domain { re: tau.re, im: tau.im, bound });
    }
    Ok(())
}

/// `D(k, tau) = 1 + c_k L[t mu_hat(k t)](tau)`.
pub fn dispersion_d(model: &ModelConfig, eq: &Equilibrium, k: i64, tau: Complex64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::Config("dispersion function is defined for k != 0".into()));
    }
    check_margin(eq, k, tau)?;
    let c = model.coupling(k);
    if c == 0.0 || eq.scale == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(Complex64::new(1.0, 0.0) + transform_moment(eq, k, 1, 1.0, tau, LAPLACE_TOL)? * c)
}

/// `D` continued to `Re tau` below the analyticity margin (valid whenever
/// the integral converges, which is everywhere for Gaussian profiles).
pub fn dispersion_continued(model: &ModelConfig, eq: &Equilibrium, k: i64, tau: Complex64) -> Result<Complex64> {
    let c = model.coupling(k);
    Ok(Complex64::new(1.0, 0.0) + transform_moment(eq, k, 1, 1.0, tau, LAPLACE_TOL)? * c)
}

/// `K~_k(tau) = -c L[kappa] / (1 + c L[kappa])`.
pub fn resolvent_ktilde(model: &ModelConfig, eq: &Equilibrium, k: i64, tau: Complex64, kappa_floor: f64) -> Result<Complex64> {
    check_margin(eq, k, tau)?;
    let cl = transform_moment(eq, k, 1, -1.0, tau, LAPLACE_TOL)? * model.coupling(k);
    let den = Complex64::new(1.0, 0.0) + cl;
    if den.norm() < kappa_floor {
        return Err(Error::NearSingular { k, value: den.norm(), floor: kappa_floor });
    }
    Ok(-cl / den)
}

/// Net change of `arg f(s)` over `[s0, s1]` divided by `2 pi`, tracked by
/// adaptive subdivision so that consecutive samples differ by less than
/// `pi/8` in phase.
pub fn winding_along<F>(f: F, s0: f64, s1: f64, initial: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    fn refine<F: Fn(f64) -> Result<Complex64>>(
        f: &F,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
        depth: usize,
    ) -> Result<f64> {
        let d = (fb / fa).arg();
        if d.abs() < PI / 8.0 || depth > 40 {
            return Ok(d);
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        Ok(refine(f, a, fa, m, fm, depth + 1)? + refine(f, m, fm, b, fb, depth + 1)?)
    }
    let n = initial.max(2);
    let mut total = 0.0;
    let mut prev_s = s0;
    let mut prev = f(s0)?;
    for i in 1..=n {
        let s = s0 + (s1 - s0) * i as f64 / n as f64;
        let cur = f(s)?;
        total += refine(&f, prev_s, prev, s, cur, 0)?;
        prev_s = s;
        prev = cur;
    }
    Ok(total / (2.0 * PI))
}

/// Winding number of `D(k, .)` around 0 along the boundary of the right
/// half-disk of radius `omega_max` (arc, then the imaginary axis downward).
/// Returns the raw (near-integer) value.
pub fn penrose_winding(model: &ModelConfig, eq: &Equilibrium, k: i64, omega_max: f64) -> Result<f64> {
    let arc = winding_along(
        |th| dispersion_d(model, eq, k, Complex64::from_polar(omega_max, th)),
        -0.5 * PI,
        0.5 * PI,
        64,
    )?;
    let axis = winding_along(|w| dispersion_d(model, eq, k, Complex64::new(0.0, w)), omega_max, -omega_max, 400)?;
    Ok(arc + axis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenroseRow {
    pub k: i64,
    pub omega_argmin: f64,
    pub abs_d_min: f64,
    pub winding: i64,
    /// distance of the accumulated phase from the nearest integer, in turns
    pub winding_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenroseReport {
    pub kappa0: f64,
    pub argmin: (i64, Complex64),
    pub rows: Vec<PenroseRow>,
    pub stable: bool,
    pub k_scan_max: i64,
    pub tail_bound: f64,
    pub omega_max: f64,
    pub n_samples: usize,
}

impl PenroseReport {
    pub fn winding(&self, k: i64) -> Option<i64> {
        self.rows.iter().find(|r| r.k == k.abs()).map(|r| r.winding)
    }
}

/// Minimum of `|D(k, i w)|` over `[-omega_max, omega_max]`: the best of
/// `n_samples` equispaced samples, polished by golden-section search.
fn axis_minimum(model: &ModelConfig, eq: &Equilibrium, k: i64, omega_max: f64, n_samples: usize) -> Result<(f64, f64)> {
    let n = n_samples.max(3);
    let h = 2.0 * omega_max / (n - 1) as f64;
    let vals: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let w = -omega_max + i as f64 * h;
            dispersion_d(model, eq, k, Complex64::new(0.0, w)).map(|d| (w, d.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut best_w, mut best) = vals[0];
    for &(w, v) in &vals {
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let f = |w: f64| dispersion_d(model, eq, k, Complex64::new(0.0, w)).map(|d| d.norm());
    let (mut lo, mut hi) = ((best_w - h).max(-omega_max), (best_w + h).min(omega_max));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    for _ in 0..60 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b)?;
        }
    }
    let (w, v) = if fa < fb { (a, fa) } else { (b, fb) };
    if v < best {
        Ok((w, v))
    } else {
        Ok((best_w, best))
    }
}

/// Penrose scan over `1 <= |k| <= k_scan_max` (negative modes follow by
/// conjugation for real profiles).
pub fn penrose_scan(
    model: &ModelConfig,
    eq: &Equilibrium,
    k_scan_max: i64,
    omega_max: f64,
    n_samples: usize,
) -> Result<PenroseReport> {
    if k_scan_max < 1 {
        return Err(Error::Config("k_scan_max must be at least 1".into()));
    }
    if !(omega_max > 0.0) {
        return Err(Error::Config("omega_max must be positive".into()));
    }
    let mut rows = Vec::new();
    for k in 1..=k_scan_max {
        let (w, v) = axis_minimum(model, eq, k, omega_max, n_samples)?;
        let raw = penrose_winding(model, eq, k, omega_max)?;
        let winding = raw.round() as i64;
        rows.push(PenroseRow { k, omega_argmin: w, abs_d_min: v, winding, winding_residual: (raw - raw.round()).abs() });
    }
    let mut kappa0 = f64::INFINITY;
    let mut argmin = (1, ZERO);
    for r in &rows {
        if r.abs_d_min < kappa0 {
            kappa0 = r.abs_d_min;
            argmin = (r.k, Complex64::new(0.0, r.omega_argmin));
        }
    }
    let moment = eq.first_abs_moment()? * eq.scale.abs();
    let kk = (k_scan_max + 1) as f64;
    let tail_bound = moment / (model.beta + kk * kk);
    let stable = kappa0 > 0.0 && rows.iter().all(|r| r.winding == 0);
    if tail_bound >= kappa0 {
        return Err(Error::Inconclusive { tail: tail_bound, min: kappa0 });
    }
    Ok(PenroseReport { kappa0, argmin, rows, stable, k_scan_max, tail_bound, omega_max, n_samples })
}

/// Scans two-stream equilibria, beam widths `1, 0.5, 0.25` and for each
/// the separations `v0 = 0.5, 0.75, ..., 4`, and returns the first
/// `(v0, width)` whose `k = 1` dispersion function has a zero in the right
/// half-plane. Unit-width beams are stable at `k = 1` for every `v0`.
pub fn find_unstable_two_stream(model: &ModelConfig, omega_max: f64) -> Result<Option<(f64, f64)>> {
    for width in [1.0, 0.5, 0.25] {
        for i in 0..=14 {
            let v0 = 0.5 + 0.25 * i as f64;
            let eq = Equilibrium::two_stream_with_width(v0, width);
            let w = penrose_winding(model, &eq, 1, omega_max)?;
            if w.round() >= 1.0 {
                return Ok(Some((v0, width)));
            }
        }
    }
    Ok(None)
}

/// Zeros of `D(k, .)` with `Im tau >= 0` in the box
/// `[-re_span, 0.5] x [0, im_span]`, located by grid search and complex
/// Newton with `D' = -c L[t^2 mu_hat(k t)]`; sorted by decreasing real part.
pub fn dispersion_roots(model: &ModelConfig, eq: &Equilibrium, k: i64, re_span: f64, im_span: f64) -> Result<Vec<Complex64>> {
    let c = model.coupling(k);
    let d = |tau: Complex64| dispersion_continued(model, eq, k, tau);
    let dp = |tau: Complex64| transform_moment(eq, k, 2, 1.0, tau, LAPLACE_TOL).map(|v| -v * c);
    let step = 0.1;
    let nr = (((re_span + 0.5) / step).round() as usize).max(2);
    let ni = ((im_span / step).round() as usize).max(2);
    let grid: Vec<Vec<f64>> = (0..=nr)
        .into_par_iter()
        .map(|i| {
            let re = -re_span + i as f64 * step;
            (0..=ni)
                .map(|j| d(Complex64::new(re, j as f64 * step)).map(|v| v.norm()).unwrap_or(f64::INFINITY))
                .collect()
        })
        .collect();
    let mut seeds = Vec::new();
    for i in 1..nr {
        for j in 0..ni {
            let v = grid[i][j];
            let mut is_min = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let jj = j as i64 + dj;
                    if (di, dj) == (0, 0) || jj < 0 {
                        continue;
                    }
                    if grid[(i as i64 + di) as usize][jj as usize] < v {
                        is_min = false;
                    }
                }
            }
            if is_min && v < 0.5 {
                seeds.push(Complex64::new(-re_span + i as f64 * step, j as f64 * step));
            }
        }
    }
    let mut roots: Vec<Complex64> = Vec::new();
    for seed in seeds {
        let mut tau = seed;
        let mut converged = false;
        for _ in 0..60 {
            let f = d(tau)?;
            let fp = dp(tau)?;
            if fp.norm() == 0.0 {
                break;
            }
            let delta = f / fp;
            tau -= delta;
            if delta.norm() < 1e-13 * tau.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if converged && d(tau)?.norm() < 1e-9 && !roots.iter().any(|r| (r - tau).norm() < 1e-6) {
            roots.push(tau);
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(roots)
}

/// Options for the inverse transform of the resolvent symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Real part of the inversion line; `None` selects `-lambda_safe |k| / 2`.
    pub contour_re: Option<f64>,
    /// Lower bound on the truncation of the line; the effective value is at
    /// least `40 |k|`.
    pub omega_max: f64,
    pub kappa_floor: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { contour_re: None, omega_max: 40.0, kappa_floor: KAPPA_FLOOR }
    }
}

/// Sampled resolvent kernel `K^_k(t_j)` with its fitted exponential envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventTable {
    pub k: i64,
    pub times: TimeGrid,
    pub values: Vec<Complex64>,
    pub fit_c: f64,
    pub fit_lambda1: f64,
    pub fit_r2: f64,
    pub contour_re: f64,
    pub omega_max: f64,
    /// Bound on the error from truncating the inversion line.
    pub truncation_bound: f64,
    /// `max |K~(i w)| (1 + k^2 + w^2)` on the sampled imaginary axis.
    pub decay_constant: f64,
    pub warnings: Vec<String>,
}

impl ResolventTable {
    /// Table of the mode `-k`, obtained by conjugation (real profiles).
    pub fn conjugate(&self) -> ResolventTable {
        ResolventTable { k: -self.k, values: self.values.iter().map(|z| z.conj()).collect(), ..self.clone() }
    }

    pub fn zero(k: i64, times: TimeGrid) -> ResolventTable {
        ResolventTable {
            k,
            times,
            values: vec![ZERO; times.len()],
            fit_c: 0.0,
            fit_lambda1: f64::INFINITY,
            fit_r2: 1.0,
            contour_re: 0.0,
            omega_max: 0.0,
            truncation_bound: 0.0,
            decay_constant: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// `(kappa * kappa)(t) = int_0^t kappa(t - u) kappa(u) du`.
fn kappa_self_convolution(eq: &Equilibrium, k: i64, t: f64) -> Result<Complex64> {
    let kf = k as f64;
    let kappa = |u: f64| eq.mu_hat(-kf * u) * u;
    Ok(quad::integrate(|u| kappa(t - u) * kappa(u), 0.0, t, 1e-14)?.value)
}

/// Inverts the resolvent symbol along the line `Re tau = gamma0`.
///
/// The first two terms of the Neumann series, `-c kappa + c^2 kappa*kappa`,
/// are added in the time domain; the remainder symbol
/// `R = -c^3 L^3 / (1 + c L) = O(|tau|^{-6})` is integrated by the
/// trapezoid rule with step `2 pi / (T + 60)` (the aliasing period exceeds
/// the horizon by a margin over which the kernel has decayed).
pub fn inverse_laplace_khat(
    model: &ModelConfig,
    eq: &Equilibrium,
    k: i64,
    times: TimeGrid,
    opts: KernelOptions,
) -> Result<ResolventTable> {
    if k == 0 {
        return Err(Error::Config("resolvent kernel is defined for k != 0".into()));
    }
    let c = model.coupling(k);
    if c == 0.0 || eq.scale == 0.0 {
        return Ok(ResolventTable::zero(k, times));
    }
    let kabs = k.abs() as f64;
    let omega_max = opts.omega_max.max(40.0 * kabs);
    let period = times.horizon() + 60.0 / kabs.sqrt();
    let h = 2.0 * PI / period;
    let n_half = (omega_max / h).ceil() as i64;
    let omegas: Vec<f64> = (-n_half..=n_half).map(|n| n as f64 * h).collect();
    let mut warnings = Vec::new();

    let eval_line = |gamma0: f64| -> Result<(Vec<Complex64>, f64)> {
        let vals: Vec<(Complex64, f64)> = omegas
            .par_iter()
            .map(|&w| {
                let tau = Complex64::new(gamma0, w);
                let cl = transform_moment(eq, k, 1, -1.0, tau, LAPLACE_TOL)? * c;
                let den = Complex64::new(1.0, 0.0) + cl;
                Ok((-cl * cl * cl / den, den.norm()))
            })
            .collect::<Result<Vec<_>>>()?;
        let min_den = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        Ok((vals.into_iter().map(|v| v.0).collect(), min_den))
    };
    // zeros of 1 + c L to the right of the line, counted by the phase
    // change of 1 + c L along it (the large arc contributes nothing)
    let zeros_right = |gamma0: f64| -> Result<i64> {
        let w = winding_along(
            |w| {
                transform_moment(eq, k, 1, -1.0, Complex64::new(gamma0, w), LAPLACE_TOL)
                    .map(|l| Complex64::new(1.0, 0.0) + l * c)
            },
            omega_max,
            -omega_max,
            200,
        )?;
        Ok(w.round() as i64)
    };

    let preferred = opts.contour_re.unwrap_or(-0.5 * eq.lambda_safe() * kabs);
    let mut gamma0 = preferred;
    let mut line = None;
    if zeros_right(gamma0)? == 0 {
        let (r, m) = eval_line(gamma0)?;
        if m >= opts.kappa_floor {
            line = Some(r);
        } else {
            warnings.push(format!("k={k}: |1 + cL| = {m:.3e} on Re tau = {gamma0}; contour shifted to 0.01"));
        }
    } else {
        warnings.push(format!("k={k}: resolvent pole right of Re tau = {gamma0}; contour shifted to 0.01"));
    }
    if line.is_none() {
        gamma0 = 0.01;
        let (r, m) = eval_line(gamma0)?;
        if m < opts.kappa_floor || zeros_right(gamma0)? != 0 {
            return Err(Error::NearSingular { k, value: m, floor: opts.kappa_floor });
        }
        line = Some(r);
    }
    let rvals = line.expect("line evaluated");

    // truncation: |R| <= C6 |tau|^{-6} beyond the last node
    let edge = omegas.len() / 20 + 1;
    let c6 = rvals[..edge]
        .iter()
        .zip(&omegas[..edge])
        .chain(rvals[rvals.len() - edge..].iter().zip(&omegas[omegas.len() - edge..]))
        .map(|(r, &w)| r.norm() * Complex64::new(gamma0, w).norm().powi(6))
        .fold(0.0, f64::max);
    let truncation_bound = gamma0.exp().max(1.0) * c6 / (5.0 * PI * omega_max.powi(5));

    let values: Vec<Complex64> = (0..times.len())
        .into_par_iter()
        .map(|j| {
            let t = times.t(j);
            let mut sum = ZERO;
            for (r, &w) in rvals.iter().zip(&omegas) {
                sum += r * Complex64::new(0.0, w * t).exp();
            }
            let remainder = sum * (h / (2.0 * PI) * (gamma0 * t).exp());
            let kappa = eq.mu_hat(-(k as f64) * t) * t;
            Ok(remainder - kappa * c + kappa_self_convolution(eq, k, t)? * (c * c))
        })
        .collect::<Result<Vec<_>>>()?;

    // decay constant of the symbol on the imaginary axis
    let decay_constant = (0..=400)
        .map(|i| {
            let w = -omega_max + 2.0 * omega_max * i as f64 / 400.0;
            resolvent_ktilde(model, eq, k, Complex64::new(0.0, w), 0.0)
                .map(|kt| kt.norm() * (1.0 + kabs * kabs + w * w))
                .unwrap_or(f64::NAN)
        })
        .fold(0.0, f64::max);

    let fit = fit_kernel_decay(times, &values, k);
    let (fit_c, fit_lambda1, fit_r2) = match fit {
        Some(f) => (f.intercept.exp(), -f.slope / kabs, f.r2),
        None => (0.0, f64::NAN, 0.0),
    };
    Ok(ResolventTable {
        k,
        times,
        values,
        fit_c,
        fit_lambda1,
        fit_r2,
        contour_re: gamma0,
        omega_max,
        truncation_bound,
        decay_constant,
        warnings,
    })
}

/// Envelope fit of `log|K^|` from the global maximum of `|K^|` to the last
/// sample above `1e-12`.
pub fn fit_kernel_decay(times: TimeGrid, values: &[Complex64], _k: i64) -> Option<LinearFit> {
    let abs: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let ts = times.times();
    let (imax, _) = abs.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let last = abs.iter().rposition(|&v| v > 1e-12)?;
    envelope_log_fit(&ts, &abs, ts[imax], ts[last], 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_preset;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_sided_examples() {
        let e = |t: f64| c((-t).exp(), 0.0);
        assert!((laplace_one_sided(e, 1.0, c(0.0, 0.0), 1e-12).unwrap() - 1.0).norm() < 1e-12);
        assert!((laplace_one_sided(e, 1.0, c(1.0, 0.0), 1e-12).unwrap() - 0.5).norm() < 1e-12);
        let g = |t: f64| c(t * (-0.5 * t * t).exp(), 0.0);
        assert!((laplace_one_sided(g, f64::INFINITY, c(0.0, 0.0), 1e-13).unwrap() - 1.0).norm() < 1e-12);
        assert!(matches!(laplace_one_sided(e, 1.0, c(-1.5, 0.0), 1e-12), Err(Error::Domain { .. })));
    }

    #[test]
    fn one_sided_is_stable_under_tolerance_refinement() {
        let g = |t: f64| c(t * (-0.5 * t * t).exp(), 0.0);
        for tau in [c(0.0, 3.0), c(0.3, -7.0), c(2.0, 0.5)] {
            let a = laplace_one_sided(g, f64::INFINITY, tau, 1e-10).unwrap();
            let b = laplace_one_sided(g, f64::INFINITY, tau, 1e-13).unwrap();
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn two_sided_examples() {
        let e = |t: f64| c((-t.abs()).exp(), 0.0);
        assert!((laplace_two_sided(e, 1.0, c(0.0, 0.0), 1e-12).unwrap() - 2.0).norm() < 1e-11);
        assert!((laplace_two_sided(e, 1.0, c(0.5, 0.0), 1e-12).unwrap() - 8.0 / 3.0).norm() < 1e-11);
    }

    #[test]
    fn product_rule_for_tail_convolution() {
        let psi = |t: f64| c((-t.abs()).exp(), 0.0);
        let phi = |t: f64| c((-t).exp(), 0.0);
        let tau = c(0.0, 0.3);
        let lhs = tail_convolution_transform(psi, phi, 1.0, tau, 1e-11).unwrap();
        let b = laplace_two_sided(psi, 1.0, tau, 1e-12).unwrap();
        let l = laplace_one_sided(phi, 1.0, -tau, 1e-12).unwrap();
        assert!((lhs - b * l).norm() < 1e-8, "{}", (lhs - b * l).norm());
    }

    #[test]
    fn dispersion_examples() {
        let vp = make_preset("vp").unwrap();
        let m = Equilibrium::maxwellian();
        assert!((dispersion_d(&vp, &m, 1, c(0.0, 0.0)).unwrap() - 2.0).norm() < 1e-12);
        // D - 1 = tau^{-2} - 3 tau^{-4} + O(tau^{-6}) for large real tau
        let far = dispersion_d(&vp, &m, 1, c(40.0, 0.0)).unwrap() - 1.0;
        assert!((far.re - (1.0 / 1600.0 - 3.0 / 2_560_000.0)).abs() < 1e-8, "{far}");
        let big = crate::model::ModelConfig::new(1e8, crate::model::HSeries::zero(), 1, "big").unwrap();
        assert!((dispersion_d(&big, &m, 1, c(0.0, 1.0)).unwrap() - 1.0).norm() < 1.01e-8);
        let kt = resolvent_ktilde(&vp, &m, 1, c(0.0, 0.0), KAPPA_FLOOR).unwrap();
        assert!((kt + 0.5).norm() < 1e-12);
        assert!(resolvent_ktilde(&vp, &m, 1, c(200.0, 0.0), KAPPA_FLOOR).unwrap().norm() < 1e-4);
    }

    #[test]
    fn conjugate_symmetry_of_dispersion() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let vp = make_preset("vp").unwrap();
        let m = Equilibrium::maxwellian();
        for _ in 0..1000 {
            let tau = c(rng.gen_range(-0.4..3.0), rng.gen_range(-20.0..20.0));
            let k = rng.gen_range(1..5);
            let a = dispersion_d(&vp, &m, k, tau.conj()).unwrap();
            let b = dispersion_d(&vp, &m, k, tau).unwrap().conj();
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn landau_root_for_maxwellian() {
        let vp = make_preset("vp").unwrap();
        let roots = dispersion_roots(&vp, &Equilibrium::maxwellian(), 1, 3.0, 5.0).unwrap();
        let r = roots[0];
        assert!((r.re + 0.8513).abs() < 1e-3, "{r}");
        assert!((r.im - 2.0459).abs() < 1e-3, "{r}");
    }

    #[test]
    fn cauchy_dispersion_is_closed_form() {
        // L[t e^{-lambda0 |k| t}](tau) = (tau + lambda0 |k|)^{-2}
        let sc = make_preset("screened").unwrap();
        let eq = Equilibrium::cauchy(0.5);
        for (k, tau) in [(1, c(0.1, 2.0)), (2, c(-0.3, -1.0)), (3, c(1.0, 0.0))] {
            let cc = sc.coupling(k);
            let exact = c(1.0, 0.0) + cc / ((tau + 0.5 * k as f64) * (tau + 0.5 * k as f64));
            assert!((dispersion_d(&sc, &eq, k, tau).unwrap() - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn winding_of_known_function() {
        // z -> z - 0.3 winds once around the unit circle
        let w = winding_along(|th| Ok(Complex64::from_polar(1.0, th) - 0.3), 0.0, 2.0 * PI, 8).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
    }
}
