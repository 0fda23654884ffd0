//! Gevrey weights, the time-dependent radius `lambda(t)` and the weighted
//! norms used to monitor iterates.
//!
//! Everything is evaluated in log domain. Weighted sums are accumulated with
//! a running max shift so that `exp(lambda <k,eta>^gamma)` never has to be
//! formed on its own.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{bracket, EtaGrid, Lattice, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevreyWeight {
    pub gamma: f64,
    pub sigma: f64,
    pub lambda_inf: f64,
    pub c_decay: f64,
    pub delta: f64,
    pub b: f64,
    pub m: usize,
    pub dimension: usize,
}

impl Default for GevreyWeight {
    fn default() -> Self {
        GevreyWeight { gamma: 0.5, sigma: 12.0, lambda_inf: 0.2, c_decay: 0.05, delta: 0.05, b: 11.0, m: 2, dimension: 1 }
    }
}

impl GevreyWeight {
    /// Checks the parameter constraints; every violation is listed.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension as f64;
        let mut bad = Vec::new();
        if !(self.gamma > 1.0 / 3.0 && self.gamma < 1.0) {
            bad.push(format!("gamma = {} violates γ ∈ (1/3, 1)", self.gamma));
        }
        if !(self.sigma > 10.0 + d) {
            bad.push(format!("sigma = {} violates σ > 10 + d (d = {})", self.sigma, self.dimension));
        }
        if !(self.b > 10.0) {
            bad.push(format!("b = {} violates b > 10", self.b));
        }
        if !(self.m as f64 > d / 2.0) {
            bad.push(format!("M = {} violates M > d/2 (d = {})", self.m, self.dimension));
        }
        if !(self.lambda_inf > 0.0 && self.lambda_inf.is_finite()) {
            bad.push(format!("lambda_inf = {} must be positive", self.lambda_inf));
        }
        if !(self.c_decay > 0.0) {
            bad.push(format!("C = {} must be positive", self.c_decay));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bad.push(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if !(self.lambda_inf - self.c_decay > 0.0) {
            bad.push(format!(
                "lambda(0) = lambda_inf - C = {} must be positive",
                self.lambda_inf - self.c_decay
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    pub fn new(gamma: f64, sigma: f64, lambda_inf: f64, c_decay: f64, delta: f64, b: f64, m: usize) -> Result<Self> {
        let w = GevreyWeight { gamma, sigma, lambda_inf, c_decay, delta, b, m, dimension: 1 };
        w.validate()?;
        Ok(w)
    }

    /// Same weight with the whole radius function multiplied by `factor`.
    pub fn with_radius_factor(&self, factor: f64) -> Self {
        GevreyWeight { lambda_inf: self.lambda_inf * factor, c_decay: self.c_decay * factor, ..*self }
    }

    /// `lambda(t) = lambda_inf - C <t>^{-delta}`.
    #[inline]
    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda_inf - self.c_decay * bracket(t).powf(-self.delta)
    }

    /// `log A_t(k, eta) = lambda(t) <k,eta>^gamma + sigma log <k,eta>`.
    pub fn log_a(&self, t: f64, k: &[f64], eta: &[f64]) -> f64 {
        let s = 1.0 + k.iter().map(|x| x * x).sum::<f64>() + eta.iter().map(|x| x * x).sum::<f64>();
        log_weight(self.lambda(t), self.gamma, self.sigma, s)
    }

    /// `log B_t = log A_t + log <k,eta>`.
    pub fn log_b(&self, t: f64, k: &[f64], eta: &[f64]) -> f64 {
        let s = 1.0 + k.iter().map(|x| x * x).sum::<f64>() + eta.iter().map(|x| x * x).sum::<f64>();
        self.log_a(t, k, eta) + 0.5 * s.ln()
    }

    #[inline]
    pub fn log_a1(&self, t: f64, k: f64, eta: f64) -> f64 {
        log_weight(self.lambda(t), self.gamma, self.sigma, 1.0 + k * k + eta * eta)
    }
}

/// `lambda <.>^gamma + sigma log <.>` given the squared bracket `s`.
#[inline]
pub fn log_weight(lambda: f64, gamma: f64, sigma: f64, s: f64) -> f64 {
    let l = 0.5 * s.ln();
    lambda * (gamma * l).exp() + sigma * l
}

/// Streaming sum of `exp(x_i)` stored as `scale * exp(shift)`.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    shift: f64,
    acc: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { shift: f64::NEG_INFINITY, acc: 0.0 }
    }
}

impl LogSum {
    #[inline]
    pub fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.shift {
            self.acc = self.acc * (self.shift - log_term).exp() + 1.0;
            self.shift = log_term;
        } else {
            self.acc += (log_term - self.shift).exp();
        }
    }

    pub fn merge(&mut self, other: LogSum) {
        if other.shift == f64::NEG_INFINITY {
            return;
        }
        if other.shift > self.shift {
            self.acc = self.acc * (self.shift - other.shift).exp() + other.acc;
            self.shift = other.shift;
        } else {
            self.acc += other.acc * (other.shift - self.shift).exp();
        }
    }

    pub fn ln(&self) -> f64 {
        if self.acc == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.shift + self.acc.ln()
        }
    }

    /// `sqrt` of the sum, or `Overflow` if it is not representable.
    pub fn sqrt(&self) -> Result<f64> {
        if self.acc == 0.0 {
            return Ok(0.0);
        }
        let v = (0.5 * self.ln()).exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow)
        }
    }
}

/// Fourth-order centered `j`-th derivative along a sampled line with zero
/// extension outside the grid. Orders above two compose first derivatives.
pub fn eta_derivative(values: &[Complex64], h: f64, j: usize) -> Vec<Complex64> {
    let n = values.len();
    let at = |v: &[Complex64], i: isize| -> Complex64 {
        if i < 0 || i >= n as isize {
            Complex64::new(0.0, 0.0)
        } else {
            v[i as usize]
        }
    };
    match j {
        0 => values.to_vec(),
        1 => (0..n as isize)
            .map(|i| (at(values, i - 2) - at(values, i + 2) + (at(values, i + 1) - at(values, i - 1)) * 8.0) / (12.0 * h))
            .collect(),
        2 => (0..n as isize)
            .map(|i| {
                (-(at(values, i + 2) + at(values, i - 2)) + (at(values, i + 1) + at(values, i - 1)) * 16.0
                    - at(values, i) * 30.0)
                    / (12.0 * h * h)
            })
            .collect(),
        _ => {
            let first = eta_derivative(values, h, 1);
            eta_derivative(&first, h, j - 1)
        }
    }
}

/// Squared weighted norm of one time slice in log-sum form:
/// `sum_{j<=M} sum_k int e^{2 lambda(t) <k,eta>^gamma} <k,eta>^{2 sigma + 2} |d^j g|^2 deta`
/// with trapezoidal weights (end nodes halved).
pub fn slice_n1_logsum(w: &GevreyWeight, t: f64, lattice: Lattice, grid: EtaGrid, values: &[Complex64]) -> LogSum {
    let n_eta = grid.len();
    debug_assert_eq!(values.len(), lattice.len() * n_eta);
    let lam = w.lambda(t);
    let mut total = LogSum::default();
    for ki in 0..lattice.len() {
        let k = lattice.mode(ki) as f64;
        let row = &values[ki * n_eta..(ki + 1) * n_eta];
        if row.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        for j in 0..=w.m {
            let d = eta_derivative(row, grid.deta, j);
            for (i, z) in d.iter().enumerate() {
                let a2 = z.norm_sqr();
                if a2 == 0.0 {
                    continue;
                }
                let eta = grid.eta(i);
                let s = 1.0 + k * k + eta * eta;
                let quad = if i == 0 || i == n_eta - 1 { 0.5 * grid.deta } else { grid.deta };
                let lw = log_weight(lam, w.gamma, w.sigma + 1.0, s);
                total.add(2.0 * lw + a2.ln() + quad.ln());
            }
        }
    }
    total
}

/// `N_1` of a single slice.
pub fn slice_n1(w: &GevreyWeight, t: f64, lattice: Lattice, grid: EtaGrid, values: &[Complex64]) -> Result<f64> {
    slice_n1_logsum(w, t, lattice, grid, values).sqrt()
}

/// `N_1 = sup_t` of the slice norms; also returns the per-time samples.
pub fn norm_n1<'a, I>(w: &GevreyWeight, lattice: Lattice, grid: EtaGrid, slices: I) -> Result<(f64, Vec<(f64, f64)>)>
where
    I: IntoIterator<Item = (f64, &'a [Complex64])>,
{
    let mut sup: f64 = 0.0;
    let mut series = Vec::new();
    for (t, v) in slices {
        let n = slice_n1(w, t, lattice, grid, v)?;
        sup = sup.max(n);
        series.push((t, n));
    }
    Ok((sup, series))
}

/// Log-sum contribution of one density slice to `N_2^2`:
/// `dt sum_k <t>^{2b} A_t(k, kt)^2 |rho(k)|^2`.
pub fn slice_n2_logsum(w: &GevreyWeight, t: f64, dt: f64, lattice: Lattice, rho: &[Complex64]) -> LogSum {
    let mut total = LogSum::default();
    let tb = w.b * bracket(t).ln();
    for (ki, z) in rho.iter().enumerate() {
        let a2 = z.norm_sqr();
        if a2 == 0.0 {
            continue;
        }
        let k = lattice.mode(ki) as f64;
        total.add(2.0 * (tb + w.log_a1(t, k, k * t)) + a2.ln() + dt.ln());
    }
    total
}

/// `N_2 = ( sum_j dt sum_k <t_j>^{2b} A_{t_j}^2(k, k t_j) |rho_{t_j}(k)|^2 )^{1/2}`;
/// `rho[j]` is the slice at `t_j`.
pub fn norm_n2(w: &GevreyWeight, times: TimeGrid, lattice: Lattice, rho: &[Vec<Complex64>]) -> Result<f64> {
    let mut total = LogSum::default();
    for (j, slice) in rho.iter().enumerate() {
        total.merge(slice_n2_logsum(w, times.t(j), times.dt, lattice, slice));
    }
    total.sqrt()
}

/// `N = N_1 + N_2` with the per-time `N_1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNormReport {
    pub n1: f64,
    pub n2: f64,
    pub n_total: f64,
    pub per_time: Vec<(f64, f64)>,
}

impl WeightedNormReport {
    pub fn new(n1: f64, n2: f64, per_time: Vec<(f64, f64)>) -> Self {
        WeightedNormReport { n1, n2, n_total: n1 + n2, per_time }
    }
}

/// Worst margins of the fractional-bracket inequalities over random samples.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub gamma: f64,
    pub samples: usize,
    /// min of `<x>^g + <y>^g - <x+y>^g`.
    pub subadditivity_margin: f64,
    pub subadditivity_violations: usize,
    /// smallest `C` with `|<x>^g - <y>^g| <= C <x-y> / (<x>^{1-g} + <y>^{1-g})`.
    pub difference_constant: f64,
    /// min of `g/(K-1)^{1-g} <x-y>^g - |<x>^g - <y>^g|` over `|x - y| <= x/K`.
    pub near_diagonal_margin: f64,
    pub near_diagonal_violations: usize,
    pub near_diagonal_k: f64,
    /// smallest `c` with `<x+y>^g <= c (<x>^g + <y>^g)` for `1/2 <= x/y <= 2`.
    pub comparable_constant: f64,
}

/// Samples the four bracket inequalities with `samples` random pairs each.
pub fn gevrey_inequality_suite(gamma: f64, samples: usize, seed: u64) -> Result<InequalityReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!("gamma = {gamma} must lie in (0, 1); the strict bound c < 1 needs gamma < 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = 1e-3f64.ln();
    let hi = 1e6f64.ln();
    let loguni = |rng: &mut ChaCha8Rng| -> f64 {
        // a small share of exact zeros keeps the lower end of [0, 1e6] in the sample
        if rng.gen_bool(0.01) {
            0.0
        } else {
            rng.gen_range(lo..hi).exp()
        }
    };
    let p = |x: f64| bracket(x).powf(gamma);
    let mut sub_margin = f64::INFINITY;
    let mut sub_viol = 0;
    let mut diff_c: f64 = 0.0;
    for _ in 0..samples {
        let x = loguni(&mut rng);
        let y = loguni(&mut rng);
        let m = p(x) + p(y) - p(x + y);
        sub_margin = sub_margin.min(m);
        if m < 0.0 {
            sub_viol += 1;
        }
        let lhs = (p(x) - p(y)).abs();
        let rhs = bracket(x - y) / (bracket(x).powf(1.0 - gamma) + bracket(y).powf(1.0 - gamma));
        diff_c = diff_c.max(lhs / rhs);
    }
    let kk = 2.0;
    let coeff = gamma / (kk - 1.0f64).powf(1.0 - gamma);
    let mut near_margin = f64::INFINITY;
    let mut near_viol = 0;
    for _ in 0..samples {
        let x = loguni(&mut rng);
        let y = x + rng.gen_range(-1.0..=1.0) * x / kk;
        let lhs = (p(x) - p(y)).abs();
        let rhs = coeff * bracket(x - y).powf(gamma);
        let m = rhs - lhs;
        near_margin = near_margin.min(m);
        if m < 0.0 {
            near_viol += 1;
        }
    }
    let mut comp_c: f64 = 0.0;
    for _ in 0..samples {
        let y = loguni(&mut rng);
        let x = y * 2f64.powf(rng.gen_range(-1.0..=1.0));
        comp_c = comp_c.max(p(x + y) / (p(x) + p(y)));
    }
    Ok(InequalityReport {
        gamma,
        samples,
        subadditivity_margin: sub_margin,
        subadditivity_violations: sub_viol,
        difference_constant: diff_c,
        near_diagonal_margin: near_margin,
        near_diagonal_violations: near_viol,
        near_diagonal_k: kk,
        comparable_constant: comp_c,
    })
}
