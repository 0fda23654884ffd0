//! Plasma models (screening parameter and Poisson nonlinearity) and
//! homogeneous equilibria described through their velocity Fourier transform.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::bracket;
use crate::quad;

/// Default truncation order of the nonlinearity series.
pub const DEFAULT_H_ORDER: usize = 12;

/// How the discarded tail of a truncated series is bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// The stored coefficients are the whole series.
    Exact,
    /// Coefficients dominated by `1/n!`: tail `<= |x|^{N+1} e^{|x|} / (N+1)!`.
    Factorial,
}

/// Truncated power series `h(x) = sum_{n=2}^{N} a_n x^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSeries {
    /// `coeffs[n] = a_n`; entries 0 and 1 are always zero.
    coeffs: Vec<f64>,
    radius: f64,
    tail: TailModel,
}

impl HSeries {
    pub fn zero() -> Self {
        HSeries { coeffs: vec![0.0; 2], radius: f64::INFINITY, tail: TailModel::Exact }
    }

    /// `e^x - 1 - x` truncated at order `order`.
    pub fn exponential(order: usize) -> Self {
        let order = order.max(2);
        let mut coeffs = vec![0.0; order + 1];
        let mut fact = 1.0;
        for (n, c) in coeffs.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            if n >= 2 {
                *c = 1.0 / fact;
            }
        }
        HSeries { coeffs, radius: f64::INFINITY, tail: TailModel::Factorial }
    }

    /// A polynomial nonlinearity from `a_2, a_3, ...`.
    pub fn polynomial(from_quadratic: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Config(format!("nonlinearity radius must be positive, got {radius}")));
        }
        if from_quadratic.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("nonlinearity coefficients must be finite".into()));
        }
        let mut coeffs = vec![0.0, 0.0];
        coeffs.extend_from_slice(from_quadratic);
        Ok(HSeries { coeffs, radius, tail: TailModel::Exact })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest stored power.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// Majorant series `sum |a_n| x^n` at `x >= 0`.
    pub fn majorant(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a.abs())
    }

    /// Bound on the discarded tail at `|x|`.
    pub fn remainder_bound(&self, x: f64) -> f64 {
        match self.tail {
            TailModel::Exact => 0.0,
            TailModel::Factorial => {
                let n = self.order() + 1;
                let ax = x.abs();
                let mut term = ax.exp();
                for m in 1..=n {
                    term *= ax / m as f64;
                }
                term
            }
        }
    }
}

/// Screening parameter, nonlinearity and space dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub beta: f64,
    pub h: HSeries,
    pub dimension: usize,
    pub label: String,
}

impl ModelConfig {
    pub fn new(beta: f64, h: HSeries, dimension: usize, label: &str) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta must be a finite nonnegative number, got {beta}")));
        }
        if dimension == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(ModelConfig { beta, h, dimension, label: label.to_string() })
    }

    /// Kernel prefactor `|k|^2 / (beta + |k|^2)`, zero at `k = 0`.
    #[inline]
    pub fn coupling(&self, k: i64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let k2 = (k * k) as f64;
        k2 / (self.beta + k2)
    }

    /// Symbol of `(beta - Laplacian)`; zero at `k = 0` when `beta = 0`.
    #[inline]
    pub fn screen(&self, k: i64) -> f64 {
        self.beta + (k * k) as f64
    }
}

/// Builds one of the named presets: `vp`, `screened`, `vpme`.
pub fn make_preset(name: &str) -> Result<ModelConfig> {
    make_preset_with_order(name, DEFAULT_H_ORDER)
}

pub fn make_preset_with_order(name: &str, order: usize) -> Result<ModelConfig> {
    match name {
        "vp" => ModelConfig::new(0.0, HSeries::zero(), 1, "vp"),
        "screened" => ModelConfig::new(1.0, HSeries::zero(), 1, "screened"),
        "vpme" => ModelConfig::new(1.0, HSeries::exponential(order), 1, "vpme"),
        other => Err(Error::Config(format!("unknown model preset '{other}' (expected vp, screened or vpme)"))),
    }
}

/// Velocity profile of a homogeneous equilibrium, given by its transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// `mu_hat(eta) = exp(-eta^2 / 2)`.
    Maxwellian,
    /// Two Gaussians of thermal width `width` centred at `+-v0`:
    /// `exp(-(width eta)^2/2) cos(v0 eta)`.
    TwoStream { v0: f64, width: f64 },
    /// Bulk Maxwellian plus a drifting Gaussian of weight `fraction`,
    /// velocity `drift` and thermal width `width`.
    BumpOnTail { fraction: f64, drift: f64, width: f64 },
    /// Lorentzian `lambda0 / (pi (v^2 + lambda0^2))`: `exp(-lambda0 |eta|)`.
    Cauchy { lambda0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub profile: Profile,
    /// Multiplies the transform; 1 for physical equilibria. Other values
    /// exist for tests (kernel switched off, wrong mass).
    pub scale: f64,
    pub m_check: usize,
    pub label: String,
}

impl fmt::Display for Equilibrium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

impl Equilibrium {
    fn from_profile(profile: Profile, label: String) -> Self {
        Equilibrium { profile, scale: 1.0, m_check: 2, label }
    }

    pub fn maxwellian() -> Self {
        Self::from_profile(Profile::Maxwellian, "maxwellian".into())
    }

    /// Two unit-width beams at `+-v0`.
    pub fn two_stream(v0: f64) -> Self {
        Self::two_stream_with_width(v0, 1.0)
    }

    pub fn two_stream_with_width(v0: f64, width: f64) -> Self {
        Self::from_profile(Profile::TwoStream { v0, width }, format!("two-stream(v0={v0},w={width})"))
    }

    pub fn bump_on_tail(fraction: f64, drift: f64, width: f64) -> Self {
        Self::from_profile(
            Profile::BumpOnTail { fraction, drift, width },
            format!("bump-on-tail(n={fraction},v={drift},w={width})"),
        )
    }

    pub fn cauchy(lambda0: f64) -> Self {
        Self::from_profile(Profile::Cauchy { lambda0 }, format!("cauchy(lambda={lambda0})"))
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.profile {
            Profile::Maxwellian => true,
            Profile::TwoStream { v0, width } => v0.is_finite() && width > 0.0 && width.is_finite(),
            Profile::BumpOnTail { fraction, drift, width } => {
                (0.0..=1.0).contains(&fraction) && drift.is_finite() && width > 0.0
            }
            Profile::Cauchy { lambda0 } => lambda0 > 0.0 && lambda0.is_finite(),
        };
        if ok && self.scale.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid equilibrium parameters: {:?}", self.profile)))
        }
    }

    /// Whether `mu_hat` is real and even (`mu` even in `v`).
    pub fn is_even(&self) -> bool {
        match self.profile {
            Profile::BumpOnTail { fraction, drift, .. } => fraction == 0.0 || drift == 0.0,
            _ => true,
        }
    }

    /// Exponential decay rate of `mu_hat`; infinite for Gaussian profiles.
    pub fn lambda_analytic(&self) -> f64 {
        match self.profile {
            Profile::Cauchy { lambda0 } => lambda0,
            _ => f64::INFINITY,
        }
    }

    /// Decay rate usable for contour shifts and quadrature panel widths.
    pub fn lambda_safe(&self) -> f64 {
        (0.45 * self.lambda_analytic()).min(1.0)
    }

    #[inline]
    pub fn mu_hat(&self, eta: f64) -> Complex64 {
        let g = (-0.5 * eta * eta).exp();
        let v = match self.profile {
            Profile::Maxwellian => Complex64::new(g, 0.0),
            Profile::TwoStream { v0, width } => Complex64::new((-0.5 * width * width * eta * eta).exp() * (v0 * eta).cos(), 0.0),
            Profile::BumpOnTail { fraction, drift, width } => {
                let bump = (-0.5 * width * width * eta * eta).exp();
                let phase = Complex64::new(0.0, -drift * eta).exp();
                Complex64::new((1.0 - fraction) * g, 0.0) + phase * (fraction * bump)
            }
            Profile::Cauchy { lambda0 } => Complex64::new((-lambda0 * eta.abs()).exp(), 0.0),
        };
        v * self.scale
    }

    /// `j`-th derivative of `mu_hat`: Hermite recursion for the Maxwellian,
    /// nested centered differences with step `1e-4 <eta>` otherwise.
    pub fn mu_hat_derivative(&self, j: usize, eta: f64) -> Complex64 {
        if j == 0 {
            return self.mu_hat(eta);
        }
        if let Profile::Maxwellian = self.profile {
            // d^j/deta^j e^{-eta^2/2} = (-1)^j He_j(eta) e^{-eta^2/2}
            let (mut he_prev, mut he) = (1.0, eta);
            for n in 1..j {
                let next = eta * he - n as f64 * he_prev;
                he_prev = he;
                he = next;
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            return Complex64::new(sign * he * (-0.5 * eta * eta).exp() * self.scale, 0.0);
        }
        let h = 1e-4 * bracket(eta);
        self.centered(j, eta, h)
    }

    fn centered(&self, j: usize, eta: f64, h: f64) -> Complex64 {
        if j == 0 {
            return self.mu_hat(eta);
        }
        (self.centered(j - 1, eta + h, h) - self.centered(j - 1, eta - h, h)) / (2.0 * h)
    }

    /// Sampled (H1) norm: `max_{|eta| <= eta_max, j <= m} e^{lambda <eta>} |d^j mu_hat(eta)|`.
    ///
    /// The grid maximum is polished by golden-section search around the best
    /// sample so that smooth interior maxima are resolved to near machine
    /// precision.
    pub fn check_h1(&self, lambda: f64, m: usize, eta_max: f64) -> Result<f64> {
        if !(eta_max > 0.0) {
            return Err(Error::Config("eta_max must be positive".into()));
        }
        let n = ((eta_max / 1e-3).ceil() as usize).clamp(1000, 400_000);
        let h = 2.0 * eta_max / n as f64;
        let value = |j: usize, eta: f64| (lambda * bracket(eta)).exp() * self.mu_hat_derivative(j, eta).norm();
        let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
        for j in 0..=m {
            for i in 0..=n {
                let eta = -eta_max + i as f64 * h;
                let v = value(j, eta);
                if !v.is_finite() {
                    return Err(Error::Equilibrium { eta });
                }
                if v > best.0 {
                    best = (v, j, eta);
                }
            }
        }
        let (mut lo, mut hi) = ((best.2 - h).max(-eta_max), (best.2 + h).min(eta_max));
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let a = hi - ratio * (hi - lo);
            let b = lo + ratio * (hi - lo);
            if value(best.1, a) < value(best.1, b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let polished = value(best.1, 0.5 * (lo + hi));
        Ok(best.0.max(polished))
    }

    /// Unit mass: `|mu_hat(0) - 1| <= 1e-12`.
    pub fn check_h3(&self) -> bool {
        (self.mu_hat(0.0) - Complex64::new(1.0, 0.0)).norm() <= 1e-12
    }

    /// `int_0^inf u |mu_hat(u)| du`, the constant in the large-|k| bound on
    /// the dispersion function.
    pub fn first_abs_moment(&self) -> Result<f64> {
        let rate = self.lambda_analytic().min(1.0);
        let q = quad::integrate_half_line(|u| Complex64::new(u * self.mu_hat(u).norm(), 0.0), rate, 1e-12)?;
        Ok(q.value.re)
    }
}
