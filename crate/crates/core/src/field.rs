//! Elliptic coupling `rho = q - h((beta - Laplacian)^{-1} rho)` on the truncated
//! lattice, and recovery of the potential `U` and field `E = -ik U`.
//!
//! Spatial Fourier coefficients are normalized (`u(x) = sum_k u_k e^{ikx}`), so
//! products are plain discrete convolutions.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::gevrey::{GevreyWeight, LogSum};
use crate::grid::Lattice;
use crate::model::ModelConfig;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Product of two lattice arrays, truncated back to the lattice, by the
/// direct double sum.
pub fn convolve_direct(lattice: Lattice, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![ZERO; lattice.len()];
    for k in lattice.modes() {
        let mut acc = ZERO;
        for l in lattice.modes() {
            if lattice.contains(k - l) {
                acc += a[lattice.index(k - l)] * b[lattice.index(l)];
            }
        }
        out[lattice.index(k)] = acc;
    }
    out
}

/// Zero-padded transform convolution on a fixed lattice.
#[derive(Clone)]
pub struct Convolver {
    lattice: Lattice,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver").field("lattice", &self.lattice).field("n", &self.n).finish()
    }
}

impl Convolver {
    /// Padding to at least twice the lattice length keeps the linear
    /// convolution of two lattice arrays free of wrap-around.
    pub fn new(lattice: Lattice) -> Self {
        let n = (2 * lattice.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        Convolver { lattice, n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn load(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.n];
        for k in self.lattice.modes() {
            buf[k.rem_euclid(self.n as i64) as usize] = a[self.lattice.index(k)];
        }
        self.forward.process(&mut buf);
        buf
    }

    pub fn convolve(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let fa = self.load(a);
        let fb = self.load(b);
        self.finish(fa.iter().zip(&fb).map(|(x, y)| x * y).collect())
    }

    fn finish(&self, mut prod: Vec<Complex64>) -> Vec<Complex64> {
        self.inverse.process(&mut prod);
        let scale = 1.0 / self.n as f64;
        self.lattice.modes().map(|k| prod[k.rem_euclid(self.n as i64) as usize] * scale).collect()
    }
}

/// `(beta - Laplacian)^{-1}` on the lattice. With `beta = 0` the mean mode is
/// set to zero.
pub fn screen_inverse(model: &ModelConfig, lattice: Lattice, rho: &[Complex64]) -> Vec<Complex64> {
    lattice
        .modes()
        .map(|k| {
            let s = model.screen(k);
            if s == 0.0 {
                ZERO
            } else {
                rho[lattice.index(k)] / s
            }
        })
        .collect()
}

/// `E_k = -i k U_k`.
pub fn electric_of_potential(lattice: Lattice, u: &[Complex64]) -> Vec<Complex64> {
    lattice.modes().map(|k| Complex64::new(0.0, -(k as f64)) * u[lattice.index(k)]).collect()
}

/// `h(u) = sum_{n=2}^{N} a_n u^n` with each power truncated to the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct HEvaluation {
    pub values: Vec<Complex64>,
    /// Bound on the discarded part of the series at the Wiener norm of `u`.
    pub remainder: f64,
    /// `sum_k |u_k|`, which bounds `sup_x |u(x)|`.
    pub wiener_norm: f64,
}

/// Fraction of the radius of convergence the Wiener norm may reach.
pub const RADIUS_MARGIN: f64 = 0.5;

pub fn h_of_field(model: &ModelConfig, conv: &Convolver, u: &[Complex64]) -> Result<HEvaluation> {
    let lattice = conv.lattice();
    let wiener: f64 = u.iter().map(|z| z.norm()).sum();
    if model.h.is_zero() {
        return Ok(HEvaluation { values: vec![ZERO; lattice.len()], remainder: 0.0, wiener_norm: wiener });
    }
    let radius = model.h.radius();
    if wiener >= RADIUS_MARGIN * radius {
        return Err(Error::Divergence { norm: wiener, radius: RADIUS_MARGIN * radius });
    }
    let coeffs = model.h.coeffs();
    let mut acc = vec![ZERO; lattice.len()];
    let mut power = u.to_vec();
    for &a in coeffs.iter().skip(2) {
        power = conv.convolve(&power, u);
        if a != 0.0 {
            for (s, p) in acc.iter_mut().zip(&power) {
                *s += p * a;
            }
        }
    }
    Ok(HEvaluation { values: acc, remainder: model.h.remainder_bound(wiener), wiener_norm: wiener })
}

/// `( sum_k A_t(k, kt)^2 |v_k|^2 )^{1/2}`, the density weight of `N_2` at one
/// time without the `<t>^b` factor.
pub fn weighted_slice_norm(w: &GevreyWeight, t: f64, lattice: Lattice, v: &[Complex64]) -> Result<f64> {
    let mut s = LogSum::default();
    for (i, z) in v.iter().enumerate() {
        let a2 = z.norm_sqr();
        if a2 > 0.0 {
            let k = lattice.mode(i) as f64;
            s.add(2.0 * w.log_a1(t, k, k * t) + a2.ln());
        }
    }
    s.sqrt()
}

/// Potential, field and modified density at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub t: f64,
    pub lattice: Lattice,
    pub u_hat: Vec<Complex64>,
    pub e_hat: Vec<Complex64>,
    pub rho_hat: Vec<Complex64>,
    /// Weighted distance of the last two Picard iterates.
    pub residual: f64,
    pub iters: usize,
    /// Successive distance ratios of the Picard iteration.
    pub ratios: Vec<f64>,
    pub h_remainder: f64,
}

impl FieldSnapshot {
    pub fn zero(t: f64, lattice: Lattice) -> Self {
        let z = vec![ZERO; lattice.len()];
        FieldSnapshot {
            t,
            lattice,
            u_hat: z.clone(),
            e_hat: z.clone(),
            rho_hat: z,
            residual: 0.0,
            iters: 0,
            ratios: Vec::new(),
            h_remainder: 0.0,
        }
    }
}

/// Field of a modified density: `U = rho / (beta + k^2)`, `E = -ik U`.
pub fn electric_from_density(model: &ModelConfig, t: f64, lattice: Lattice, rho: &[Complex64]) -> Result<FieldSnapshot> {
    if model.beta == 0.0 {
        let mean = rho[lattice.index(0)].norm();
        let scale = rho.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if mean > 1e-12 * scale {
            return Err(Error::Config(format!("ill-posed mean: beta = 0 requires a mean-zero density, got |rho(0)| = {mean:.3e}")));
        }
    }
    let mut rho = rho.to_vec();
    if model.beta == 0.0 {
        rho[lattice.index(0)] = ZERO;
    }
    let u = screen_inverse(model, lattice, &rho);
    let e = electric_of_potential(lattice, &u);
    Ok(FieldSnapshot { t, lattice, u_hat: u, e_hat: e, rho_hat: rho, residual: 0.0, iters: 0, ratios: Vec::new(), h_remainder: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonOptions {
    /// Stop when the weighted Picard step is below `tol * ||A q||`.
    pub tol: f64,
    pub max_iters: usize,
    /// Largest admissible `||A q||`.
    pub ball_threshold: f64,
}

impl PoissonOptions {
    /// Smallness threshold `0.05 R` from the radius `R` of `h`.
    pub fn for_model(model: &ModelConfig) -> Self {
        PoissonOptions { tol: 1e-13, max_iters: 50, ball_threshold: 0.05 * model.h.radius() }
    }
}

/// Picard iteration `rho <- q - h((beta - Laplacian)^{-1} rho)` from `rho = q`.
///
/// Iterates are kept inside the ball of radius `2 ||A q||`; leaving it, or
/// running out of iterations, is a no-contraction error.
pub fn poisson_fixed_point(
    model: &ModelConfig,
    conv: &Convolver,
    q: &[Complex64],
    w: &GevreyWeight,
    t: f64,
    opts: PoissonOptions,
) -> Result<FieldSnapshot> {
    let lattice = conv.lattice();
    let finish = |rho: Vec<Complex64>, residual: f64, iters: usize, ratios: Vec<f64>, rem: f64| -> Result<FieldSnapshot> {
        let mut snap = electric_from_density(model, t, lattice, &rho)?;
        snap.residual = residual;
        snap.iters = iters;
        snap.ratios = ratios;
        snap.h_remainder = rem;
        Ok(snap)
    };
    if model.h.is_zero() {
        return finish(q.to_vec(), 0.0, 1, Vec::new(), 0.0);
    }
    let eps = weighted_slice_norm(w, t, lattice, q)?;
    if eps == 0.0 {
        return finish(q.to_vec(), 0.0, 1, Vec::new(), 0.0);
    }
    if eps > opts.ball_threshold {
        return Err(Error::NoContraction(format!("||A q|| = {eps:.3e} exceeds the smallness threshold {:.3e}", opts.ball_threshold)));
    }
    let ball = 2.0 * eps;
    let mut rho = q.to_vec();
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    for iter in 1..=opts.max_iters {
        let u = screen_inverse(model, lattice, &rho);
        let h = h_of_field(model, conv, &u)?;
        let next: Vec<Complex64> = q.iter().zip(&h.values).map(|(a, b)| a - b).collect();
        let diff: Vec<Complex64> = next.iter().zip(&rho).map(|(a, b)| a - b).collect();
        let dist = weighted_slice_norm(w, t, lattice, &diff)?;
        if weighted_slice_norm(w, t, lattice, &next)? > ball {
            return Err(Error::NoContraction(format!("Picard iterate left the ball of radius {ball:.3e} at iteration {iter}")));
        }
        if let Some(p) = prev {
            if p > 0.0 {
                ratios.push(dist / p);
            }
        }
        rho = next;
        if dist <= opts.tol * eps {
            return finish(rho, dist, iter, ratios, h.remainder);
        }
        prev = Some(dist);
    }
    Err(Error::NoContraction(format!("no convergence in {} Picard iterations", opts.max_iters)))
}
