//! Backward Volterra equation for the modified density:
//!
//! `rho_t(k) + c_k int_t^T rho_s(k) (s - t) mu_hat(-k (s - t)) ds = S_t(k)`,
//!
//! solved per mode by a triangular sweep from `t = T` and, independently,
//! by applying the resolvent kernel `rho = S + int K^(s - t) S_s ds`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::ResolventTable;
use crate::error::{Error, Result};
use crate::gevrey::{norm_n2, GevreyWeight};
use crate::grid::{Lattice, TimeGrid};
use crate::model::{Equilibrium, ModelConfig};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Per-mode complex samples on a uniform time grid; `values[j][ki]` is the
/// value at `t_j` for mode `lattice.mode(ki)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeHistory {
    pub times: TimeGrid,
    pub lattice: Lattice,
    pub values: Vec<Vec<Complex64>>,
}

pub type DensityHistory = ModeHistory;
pub type SourceHistory = ModeHistory;

impl ModeHistory {
    pub fn zeros(times: TimeGrid, lattice: Lattice) -> Self {
        ModeHistory { times, lattice, values: vec![vec![ZERO; lattice.len()]; times.len()] }
    }

    /// Builds a history from `f(t, k)`.
    pub fn from_fn<F: Fn(f64, i64) -> Complex64>(times: TimeGrid, lattice: Lattice, f: F) -> Self {
        let values =
            (0..times.len()).map(|j| lattice.modes().map(|k| f(times.t(j), k)).collect()).collect();
        ModeHistory { times, lattice, values }
    }

    pub fn at(&self, j: usize, k: i64) -> Complex64 {
        self.values[j][self.lattice.index(k)]
    }

    pub fn mode_series(&self, k: i64) -> Vec<Complex64> {
        let ki = self.lattice.index(k);
        self.values.iter().map(|s| s[ki]).collect()
    }

    pub fn set_mode_series(&mut self, k: i64, series: &[Complex64]) {
        let ki = self.lattice.index(k);
        for (slice, v) in self.values.iter_mut().zip(series) {
            slice[ki] = *v;
        }
    }

    /// `max_{t,k} |h(t,-k) - conj h(t,k)|`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for slice in &self.values {
            for k in self.lattice.modes() {
                let a = slice[self.lattice.index(k)];
                let b = slice[self.lattice.index(-k)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Discrete `L^2_t l^2_k` norm (plain Riemann sum in time).
    pub fn l2(&self) -> f64 {
        let s: f64 = self.values.iter().flat_map(|s| s.iter()).map(|z| z.norm_sqr()).sum();
        (s * self.times.dt).sqrt()
    }

    pub fn distance(&self, other: &ModeHistory) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()))
            .sum();
        (s * self.times.dt).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flat_map(|s| s.iter()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_grid(&self, other: &ModeHistory) -> Result<()> {
        if self.times != other.times || self.lattice != other.lattice {
            return Err(Error::Config("history grids do not match".into()));
        }
        Ok(())
    }
}

const GREGORY6: [f64; 5] = [95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0, 793.0 / 720.0, 157.0 / 160.0];
const GREGORY8: [f64; 7] = [
    5257.0 / 17280.0,
    22081.0 / 15120.0,
    54851.0 / 120960.0,
    103.0 / 70.0,
    89437.0 / 120960.0,
    16367.0 / 15120.0,
    23917.0 / 24192.0,
];

/// Closed Newton–Cotes weights on `n + 1` nodes, `n = 1..=7`.
const NEWTON_COTES: [&[f64]; 7] = [
    &[1.0 / 2.0, 1.0 / 2.0],
    &[1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
    &[3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
    &[14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0],
    &[95.0 / 288.0, 375.0 / 288.0, 250.0 / 288.0, 250.0 / 288.0, 375.0 / 288.0, 95.0 / 288.0],
    &[41.0 / 140.0, 216.0 / 140.0, 27.0 / 140.0, 272.0 / 140.0, 27.0 / 140.0, 216.0 / 140.0, 41.0 / 140.0],
    &[
        5257.0 / 17280.0,
        25039.0 / 17280.0,
        9261.0 / 17280.0,
        20923.0 / 17280.0,
        20923.0 / 17280.0,
        9261.0 / 17280.0,
        25039.0 / 17280.0,
        5257.0 / 17280.0,
    ],
];

/// Weights (without the factor `dt`) of the composite rule on `n + 1`
/// equispaced nodes: Gregory end corrections of order six for `n >= 9`,
/// two Boole panels for `n = 8`, closed Newton–Cotes below.
pub fn two_sided_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![0.0];
    }
    if n <= 7 {
        return NEWTON_COTES[n - 1].to_vec();
    }
    if n == 8 {
        let b = NEWTON_COTES[3];
        let mut w = vec![0.0; 9];
        for i in 0..5 {
            w[i] += b[i];
            w[i + 4] += b[i];
        }
        return w;
    }
    let mut w = vec![1.0; n + 1];
    for (i, &a) in GREGORY6.iter().enumerate() {
        w[i] = a;
        w[n - i] = a;
    }
    w
}

/// Weights of the rule used by the density solvers on `[t_i, T]` with
/// `n = N - i` intervals: eighth-order Gregory correction at the lower end,
/// unit weights inside, and half of the lower-rule weight on the final node.
///
/// Only the lower end is corrected because the solvers integrate against
/// histories that have decayed at the horizon. The rule has the product
/// structure `w^{(n)}_m = g_m` (`m < n`), `w^{(n)}_n = g_n / 2`, which makes the
/// discrete composition of two such operators a consistent quadrature of the
/// continuous convolution: `(I + L)(I + K) = I` then holds up to quadrature
/// error instead of up to an O(dt) mismatch near the horizon.
pub fn solver_weights(n: usize) -> Vec<f64> {
    let g = |m: usize| if m < GREGORY8.len() { GREGORY8[m] } else { 1.0 };
    let mut w: Vec<f64> = (0..=n).map(g).collect();
    w[n] = 0.5 * g(n);
    w
}

/// Table of `solver_weights(n)` for `n = 0..=steps`.
pub struct WeightTable {
    rows: Vec<Vec<f64>>,
}

impl WeightTable {
    pub fn new(steps: usize) -> Self {
        WeightTable { rows: (0..=steps).map(solver_weights).collect() }
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.rows[n][m]
    }
}

/// Samples `kappa_k(n dt) = n dt mu_hat(-k n dt)`, `n = 0..=steps`.
pub fn kernel_samples(eq: &Equilibrium, k: i64, times: TimeGrid) -> Vec<Complex64> {
    (0..times.len()).map(|n| {
        let u = times.t(n);
        eq.mu_hat(-(k as f64) * u) * u
    }).collect()
}

/// Result of a density solve.
#[derive(Debug, Clone)]
pub struct VolterraSolution {
    pub density: DensityHistory,
    /// `max_k |S_T(k)| (1 + int_0^T |kernel|)`: size of the neglected
    /// contribution of sources beyond the horizon.
    pub tail_estimate: f64,
}

fn mean_mode(model: &ModelConfig, s: Complex64) -> Complex64 {
    if model.beta > 0.0 {
        s
    } else {
        ZERO
    }
}

fn solve_mode_direct(c: f64, kappa: &[Complex64], src: &[Complex64], wt: &WeightTable, dt: f64) -> Result<Vec<Complex64>> {
    let n = src.len() - 1;
    let mut rho = vec![ZERO; n + 1];
    for i in (0..=n).rev() {
        let len = n - i;
        let diag = 1.0 + c * wt.get(len, 0) * dt * kappa[0].re;
        if diag.abs() < 1e-8 {
            return Err(Error::StepSize { value: diag });
        }
        let mut acc = ZERO;
        for m in 1..=len {
            acc += kappa[m] * rho[i + m] * wt.get(len, m);
        }
        rho[i] = (src[i] - acc * (c * dt)) / diag;
    }
    Ok(rho)
}

/// Triangular sweep from `t = T` for every mode of the lattice.
pub fn solve_direct_backward(model: &ModelConfig, eq: &Equilibrium, source: &SourceHistory) -> Result<VolterraSolution> {
    let times = source.times;
    let lattice = source.lattice;
    let wt = WeightTable::new(times.steps);
    let modes: Vec<i64> = lattice.modes().collect();
    let per_mode: Vec<(i64, Vec<Complex64>, f64)> = modes
        .par_iter()
        .map(|&k| {
            let src = source.mode_series(k);
            if k == 0 {
                let rho: Vec<Complex64> = src.iter().map(|&s| mean_mode(model, s)).collect();
                return Ok((k, rho, 0.0));
            }
            let c = model.coupling(k);
            let kappa = kernel_samples(eq, k, times);
            let rho = solve_mode_direct(c, &kappa, &src, &wt, times.dt)?;
            let kint: f64 = kappa.iter().map(|z| z.norm()).sum::<f64>() * times.dt * c;
            Ok((k, rho, src[times.steps].norm() * (1.0 + kint)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut density = ModeHistory::zeros(times, lattice);
    let mut tail: f64 = 0.0;
    for (k, rho, t) in per_mode {
        density.set_mode_series(k, &rho);
        tail = tail.max(t);
    }
    Ok(VolterraSolution { density, tail_estimate: tail })
}

/// `rho_t = S_t + int_t^T K^(s - t) S_s ds` with the same quadrature rule
/// as the direct solver.
pub fn solve_resolvent(model: &ModelConfig, source: &SourceHistory, tables: &[ResolventTable]) -> Result<VolterraSolution> {
    let times = source.times;
    let lattice = source.lattice;
    let wt = WeightTable::new(times.steps);
    let modes: Vec<i64> = lattice.modes().collect();
    let per_mode: Vec<(i64, Vec<Complex64>, f64)> = modes
        .par_iter()
        .map(|&k| {
            let src = source.mode_series(k);
            if k == 0 {
                return Ok((k, src.iter().map(|&s| mean_mode(model, s)).collect(), 0.0));
            }
            if model.coupling(k) == 0.0 {
                return Ok((k, src, 0.0));
            }
            let table = tables
                .iter()
                .find(|t| t.k == k)
                .ok_or_else(|| Error::Config(format!("no resolvent table for mode k = {k}")))?;
            if table.times.dt != times.dt || table.times.steps < times.steps {
                return Err(Error::Config(format!("resolvent table for k = {k} does not cover the time grid")));
            }
            let n = times.steps;
            let kh = &table.values;
            let rho: Vec<Complex64> = (0..=n)
                .map(|i| {
                    let len = n - i;
                    let mut acc = ZERO;
                    for m in 0..=len {
                        acc += kh[m] * src[i + m] * wt.get(len, m);
                    }
                    src[i] + acc * times.dt
                })
                .collect();
            let kint: f64 = kh.iter().take(n + 1).map(|z| z.norm()).sum::<f64>() * times.dt;
            Ok((k, rho, src[n].norm() * (1.0 + kint)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut density = ModeHistory::zeros(times, lattice);
    let mut tail: f64 = 0.0;
    for (k, rho, t) in per_mode {
        density.set_mode_series(k, &rho);
        tail = tail.max(t);
    }
    Ok(VolterraSolution { density, tail_estimate: tail })
}

/// `max_{t,k} |rho_t + c int_t^T kappa rho - S_t|` for a computed density,
/// with the same discrete integral as the solver.
pub fn residual(model: &ModelConfig, eq: &Equilibrium, source: &SourceHistory, density: &DensityHistory) -> Result<f64> {
    source.check_grid(density)?;
    let times = source.times;
    let wt = WeightTable::new(times.steps);
    let n = times.steps;
    let mut worst: f64 = 0.0;
    for k in source.lattice.modes() {
        if k == 0 {
            continue;
        }
        let c = model.coupling(k);
        let kappa = kernel_samples(eq, k, times);
        let rho = density.mode_series(k);
        let src = source.mode_series(k);
        for i in 0..=n {
            let len = n - i;
            let mut acc = ZERO;
            for m in 0..=len {
                acc += kappa[m] * rho[i + m] * wt.get(len, m);
            }
            worst = worst.max((rho[i] + acc * (c * times.dt) - src[i]).norm());
        }
    }
    Ok(worst)
}

/// Resolvent kernel from its own Volterra equation
/// `K^(t) + c int_0^t kappa(t - u) K^(u) du = -c kappa(t)`, marched forward.
/// Used as an independent check of the contour inversion.
///
/// The first five steps are solved as one block with the integrals taken
/// against the degree-5 interpolant of `K^` (product integration); later
/// steps use the two-sided composite rules, which are explicit because
/// `kappa(0) = 0`.
pub fn resolvent_kernel_time_domain(model: &ModelConfig, eq: &Equilibrium, k: i64, times: TimeGrid) -> Result<Vec<Complex64>> {
    let c = model.coupling(k);
    let kappa = kernel_samples(eq, k, times);
    let kf = k as f64;
    let kap = |u: f64| eq.mu_hat(-kf * u) * u;
    let dt = times.dt;
    let mut kh = vec![ZERO; times.len()];
    let block = 5.min(times.steps);
    if block > 0 {
        let nodes: Vec<f64> = (0..=block).map(|m| m as f64 * dt).collect();
        let basis = |m: usize, u: f64| -> f64 {
            let mut p = 1.0;
            for (q, &x) in nodes.iter().enumerate() {
                if q != m {
                    p *= (u - x) / (nodes[m] - x);
                }
            }
            p
        };
        // a[n-1][m-1] K_m = b[n-1], n, m = 1..=block
        let mut a = vec![vec![ZERO; block]; block];
        let mut b = vec![ZERO; block];
        for n in 1..=block {
            let tn = nodes[n];
            for m in 1..=block {
                let q = crate::quad::integrate(|u| kap(tn - u) * basis(m, u), 0.0, tn, 1e-17)?.value;
                a[n - 1][m - 1] = q * c;
            }
            a[n - 1][n - 1] += 1.0;
            b[n - 1] = -kappa[n] * c;
        }
        let sol = solve_dense(a, b)?;
        kh[1..=block].copy_from_slice(&sol);
    }
    for n in block + 1..times.len() {
        let w = two_sided_weights(n);
        let mut acc = ZERO;
        // the m = n term carries kappa(0) = 0
        for m in 0..n {
            acc += kappa[n - m] * kh[m] * w[m];
        }
        kh[n] = -kappa[n] * c - acc * (c * dt);
    }
    Ok(kh)
}

/// Gaussian elimination with partial pivoting for a small dense system.
fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap_or(col);
        if a[piv][col].norm() == 0.0 {
            return Err(Error::StepSize { value: 0.0 });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                let v = a[col][j];
                a[row][j] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Dense matrices of the discretized operators for one mode:
/// `L_{im} = c w kappa(t_m - t_i)` and `K_{im} = w K^(t_m - t_i)`, `m >= i`.
pub fn operator_matrices(c: f64, kappa: &[Complex64], khat: &[Complex64], dt: f64) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let n = kappa.len() - 1;
    let wt = WeightTable::new(n);
    let mut l = vec![vec![ZERO; n + 1]; n + 1];
    let mut kk = vec![vec![ZERO; n + 1]; n + 1];
    for i in 0..=n {
        let len = n - i;
        for m in i..=n {
            let w = wt.get(len, m - i) * dt;
            l[i][m] = kappa[m - i] * (c * w);
            kk[i][m] = khat[m - i] * w;
        }
    }
    (l, kk)
}

/// Infinity-norm of `(I + L)(I + K) - I`.
pub fn resolvent_identity_defect(l: &[Vec<Complex64>], k: &[Vec<Complex64>]) -> f64 {
    let n = l.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let mut v = l[i][j] + k[i][j];
            for m in i..=j {
                v += l[i][m] * k[m][j];
            }
            row += v.norm();
        }
        worst = worst.max(row);
    }
    worst
}

/// `(N_2[rho], N_2[S], ratio)`; the ratio is 1 when both vanish.
pub fn estimate_density_norm_transfer(source: &SourceHistory, density: &DensityHistory, w: &GevreyWeight) -> Result<(f64, f64, f64)> {
    source.check_grid(density)?;
    let nr = norm_n2(w, density.times, density.lattice, &density.values)?;
    let ns = norm_n2(w, source.times, source.lattice, &source.values)?;
    let ratio = if ns == 0.0 && nr == 0.0 { 1.0 } else { nr / ns };
    Ok((nr, ns, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_preset;

    #[test]
    fn solver_rule_is_high_order_for_functions_vanishing_at_the_horizon() {
        // f(u) = u^2 (1 - u)^8 e^u: flat at u = 1
        let f = |u: f64| u * u * (1.0 - u).powi(8) * u.exp();
        let exact = crate::quad::integrate(|u| Complex64::new(f(u), 0.0), 0.0, 1.0, 1e-16).unwrap().value.re;
        let errs: Vec<f64> = [20usize, 40]
            .iter()
            .map(|&n| {
                let w = solver_weights(n);
                let h = 1.0 / n as f64;
                ((0..=n).map(|i| w[i] * f(i as f64 * h)).sum::<f64>() * h - exact).abs()
            })
            .collect();
        assert!(errs[0] / errs[1] > 150.0, "{errs:?}");
    }

    #[test]
    fn weights_integrate_polynomials() {
        for n in [3usize, 7, 12, 40] {
            let w = two_sided_weights(n);
            let h = 1.0 / n as f64;
            let deg = if n >= 8 { 5 } else { n | 1 };
            for p in 0..=deg {
                let s: f64 = (0..=n).map(|i| w[i] * (i as f64 * h).powi(p as i32)).sum::<f64>() * h;
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n} p={p} s={s}");
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_density() {
        let vp = make_preset("vp").unwrap();
        let src = ModeHistory::zeros(TimeGrid::new(32, 0.25), Lattice::new(2));
        let sol = solve_direct_backward(&vp, &Equilibrium::maxwellian(), &src).unwrap();
        assert_eq!(sol.density.max_abs(), 0.0);
    }

    #[test]
    fn kernel_off_is_identity() {
        let vp = make_preset("vp").unwrap();
        let times = TimeGrid::new(40, 0.1);
        let lattice = Lattice::new(2);
        let src = ModeHistory::from_fn(times, lattice, |t, k| {
            if k == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new((-t).exp(), 0.1 * k as f64) }
        });
        let eq = Equilibrium::maxwellian().with_scale(0.0);
        let sol = solve_direct_backward(&vp, &eq, &src).unwrap();
        assert_eq!(sol.density, src);
    }

    #[test]
    fn backward_causality() {
        let vp = make_preset("vp").unwrap();
        let eq = Equilibrium::maxwellian();
        let times = TimeGrid::new(64, 0.125);
        let lattice = Lattice::new(1);
        let f = |t: f64, k: i64| if k == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new((-0.5 * t * t).exp(), 0.0) };
        let a = solve_direct_backward(&vp, &eq, &ModeHistory::from_fn(times, lattice, f)).unwrap();
        let b = solve_direct_backward(
            &vp,
            &eq,
            &ModeHistory::from_fn(times, lattice, |t, k| f(t, k) + if t < 3.0 { Complex64::new(1.0, 1.0) } else { Complex64::new(0.0, 0.0) }),
        )
        .unwrap();
        for j in times.len() / 2..times.len() {
            for k in lattice.modes() {
                assert_eq!(a.density.at(j, k), b.density.at(j, k));
            }
        }
    }

    #[test]
    fn time_domain_kernel_satisfies_its_equation_on_coarse_and_fine_grids() {
        // halving dt changes the sampled kernel at common nodes by O(dt^6)
        let vp = make_preset("vp").unwrap();
        let eq = Equilibrium::maxwellian();
        let a = resolvent_kernel_time_domain(&vp, &eq, 1, TimeGrid::new(400, 0.025)).unwrap();
        let b = resolvent_kernel_time_domain(&vp, &eq, 1, TimeGrid::new(800, 0.0125)).unwrap();
        let diff = (0..=400).map(|i| (a[i] - b[2 * i]).norm()).fold(0.0, f64::max);
        assert!(diff < 3e-9, "{diff}");
    }
}
