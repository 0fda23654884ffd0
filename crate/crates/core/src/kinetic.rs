//! Kinetic profile `g(t, k, eta)` in the free-transport frame: storage,
//! off-grid evaluation in `eta`, density trace, Volterra source and the
//! transport right-hand side with its Runge–Kutta integrator.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{h_of_field, poisson_fixed_point, Convolver, PoissonOptions};
use crate::gevrey::GevreyWeight;
use crate::grid::{EtaGrid, Lattice, TimeGrid};
use crate::model::{Equilibrium, ModelConfig};
use crate::volterra::{solver_weights, ModeHistory, SourceHistory};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples `g(k, eta_m)` on a lattice times a symmetric `eta` grid, stored row
/// by row (`values[index(k) * n_eta + m]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub t: f64,
    pub lattice: Lattice,
    pub grid: EtaGrid,
    pub values: Vec<Complex64>,
}

impl SpectralState {
    pub fn zeros(t: f64, lattice: Lattice, grid: EtaGrid) -> Self {
        SpectralState { t, lattice, grid, values: vec![ZERO; lattice.len() * grid.len()] }
    }

    pub fn from_fn<F: Fn(i64, f64) -> Complex64>(t: f64, lattice: Lattice, grid: EtaGrid, f: F) -> Self {
        let mut s = SpectralState::zeros(t, lattice, grid);
        for k in lattice.modes() {
            let ki = lattice.index(k);
            for m in 0..grid.len() {
                s.values[ki * grid.len() + m] = f(k, grid.eta(m));
            }
        }
        s
    }

    pub fn row(&self, k: i64) -> &[Complex64] {
        let n = self.grid.len();
        let i = self.lattice.index(k);
        &self.values[i * n..(i + 1) * n]
    }

    pub fn row_mut(&mut self, k: i64) -> &mut [Complex64] {
        let n = self.grid.len();
        let i = self.lattice.index(k);
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, k: i64, m: usize) -> Complex64 {
        self.values[self.lattice.index(k) * self.grid.len() + m]
    }

    /// `g(0, 0)`.
    pub fn mass(&self) -> Complex64 {
        self.at(0, self.grid.half)
    }

    /// `max |g(-k, -eta) - conj g(k, eta)|`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.lattice.kmax {
            for m in 0..self.grid.len() {
                let d = self.at(-k, self.grid.mirror(m)) - self.at(k, m).conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Projects onto reality-symmetric arrays; returns the defect before.
    pub fn symmetrize(&mut self) -> f64 {
        let before = self.reality_defect();
        let n = self.grid.len();
        for k in 0..=self.lattice.kmax {
            for m in 0..n {
                let mm = self.grid.mirror(m);
                if k == 0 && mm < m {
                    continue;
                }
                let a = self.lattice.index(k) * n + m;
                let b = self.lattice.index(-k) * n + mm;
                let avg = (self.values[a] + self.values[b].conj()) * 0.5;
                self.values[a] = avg;
                self.values[b] = avg.conj();
            }
        }
        before
    }

    pub fn sup_distance(&self, other: &SpectralState) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude on the two boundary columns `eta = +-H_max`.
    pub fn boundary_max(&self) -> f64 {
        let last = self.grid.len() - 1;
        self.lattice.modes().map(|k| self.at(k, 0).norm().max(self.at(k, last).norm())).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Prescribed large-time profile `g_inf(+-k, eta) = eps c_{+-k} exp(-w^2 eta^2 / 2)`
/// with `c_{-k} = conj c_k`; `w` is the velocity width of the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticDatum {
    pub amplitude: f64,
    /// Positive modes with their relative coefficients.
    pub modes: Vec<(i64, Complex64)>,
    pub velocity_width: f64,
}

impl AsymptoticDatum {
    pub fn gaussian(amplitude: f64, modes: &[(i64, Complex64)], velocity_width: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::Config("datum amplitude must be finite".into()));
        }
        if !(velocity_width > 0.0) {
            return Err(Error::Config(format!("datum width must be positive, got {velocity_width}")));
        }
        for &(k, c) in modes {
            if k == 0 {
                return Err(Error::Config("datum must have mean zero: mode k = 0 is not allowed".into()));
            }
            if k < 0 {
                return Err(Error::Config(format!("list datum modes with k > 0 only (got {k}); k < 0 follows by symmetry")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Config("datum coefficients must be finite".into()));
            }
        }
        Ok(AsymptoticDatum { amplitude, modes: modes.to_vec(), velocity_width })
    }

    /// `eps exp(-eta^2/2)` on the modes `+-1`.
    pub fn single_mode(amplitude: f64) -> Self {
        AsymptoticDatum { amplitude, modes: vec![(1, Complex64::new(1.0, 0.0))], velocity_width: 1.0 }
    }

    pub fn zero() -> Self {
        AsymptoticDatum { amplitude: 0.0, modes: Vec::new(), velocity_width: 1.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        AsymptoticDatum { amplitude: self.amplitude * s, ..self.clone() }
    }

    pub fn is_mean_zero(&self) -> bool {
        self.modes.iter().all(|&(k, _)| k != 0)
    }

    /// Standard deviation of the `eta` profile.
    pub fn eta_std(&self) -> f64 {
        1.0 / self.velocity_width
    }

    pub fn max_mode(&self) -> i64 {
        self.modes.iter().map(|&(k, _)| k).max().unwrap_or(0)
    }

    pub fn eval(&self, k: i64, eta: f64) -> Complex64 {
        let profile = self.amplitude * (-0.5 * (self.velocity_width * eta).powi(2)).exp();
        let mut c = ZERO;
        for &(m, a) in &self.modes {
            if m == k {
                c += a;
            } else if m == -k {
                c += a.conj();
            }
        }
        c * profile
    }

    pub fn state(&self, t: f64, lattice: Lattice, grid: EtaGrid) -> SpectralState {
        SpectralState::from_fn(t, lattice, grid, |k, eta| self.eval(k, eta))
    }
}

/// Six-point local interpolation weights: value `= sum_i w[i] y[base - 2 + i]`.
///
/// Cubic Hermite on the enclosing cell with fourth-order centered slopes, so
/// nodes and cubics are reproduced exactly and the error is `O(deta^4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub base: i64,
    pub w: [f64; 6],
}

impl Stencil {
    /// Stencil for fractional offset `theta` in `[0, 1)` from node `base`.
    pub fn hermite(base: i64, theta: f64) -> Self {
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d = 1.0 / 12.0;
        Stencil {
            base,
            w: [
                h10 * d,
                -8.0 * h10 * d + h11 * d,
                h00 - 8.0 * h11 * d,
                8.0 * h10 * d + h01,
                -h10 * d + 8.0 * h11 * d,
                -h11 * d,
            ],
        }
    }

    /// Stencil for `eta`, or `None` outside `[-H_max, H_max]`.
    pub fn locate(grid: EtaGrid, eta: f64) -> Option<Self> {
        let hmax = grid.hmax();
        if eta.abs() > hmax * (1.0 + 1e-12) {
            return None;
        }
        let x = (eta + hmax) / grid.deta;
        let base = x.floor();
        let theta = x - base;
        Some(Stencil::hermite(base as i64, theta))
    }

    /// Applies the stencil to a row with zero extension.
    #[inline]
    pub fn apply(&self, row: &[Complex64]) -> Complex64 {
        let n = row.len() as i64;
        let start = self.base - 2;
        if start >= 0 && start + 5 < n {
            let s = start as usize;
            let mut acc = ZERO;
            for i in 0..6 {
                acc += row[s + i] * self.w[i];
            }
            return acc;
        }
        let mut acc = ZERO;
        for i in 0..6 {
            let j = start + i as i64;
            if j >= 0 && j < n {
                acc += row[j as usize] * self.w[i];
            }
        }
        acc
    }
}

/// Evaluates row `k` of the state at `eta`; zero (and `false`) beyond `H_max`.
pub fn eta_interpolate(state: &SpectralState, k: i64, eta: f64) -> (Complex64, bool) {
    if !state.lattice.contains(k) {
        return (ZERO, true);
    }
    match Stencil::locate(state.grid, eta) {
        Some(s) => (s.apply(state.row(k)), true),
        None => (ZERO, false),
    }
}

/// `out[m] = row(eta_m + shift)`, zero where `|eta_m + shift| > H_max`.
pub fn shifted_row(row: &[Complex64], grid: EtaGrid, shift: f64, out: &mut [Complex64]) {
    let x = shift / grid.deta;
    let q = x.floor();
    let st = Stencil::hermite(0, x - q);
    let q = q as i64;
    let n = row.len() as i64;
    let hmax = grid.hmax() * (1.0 + 1e-12);
    for (m, o) in out.iter_mut().enumerate() {
        let eta = grid.eta(m) + shift;
        if eta.abs() > hmax {
            *o = ZERO;
            continue;
        }
        let start = m as i64 + q - 2;
        *o = if start >= 0 && start + 5 < n {
            let s = start as usize;
            let mut acc = ZERO;
            for i in 0..6 {
                acc += row[s + i] * st.w[i];
            }
            acc
        } else {
            Stencil { base: m as i64 + q, w: st.w }.apply(row)
        };
    }
}

/// `q(k) = g(k, k t)` for every lattice mode, with the number of modes whose
/// trace point lies beyond `H_max`.
pub fn density_trace(state: &SpectralState) -> (Vec<Complex64>, usize) {
    let mut truncated = 0;
    let q = state
        .lattice
        .modes()
        .map(|k| {
            let (v, ok) = eta_interpolate(state, k, k as f64 * state.t);
            if !ok {
                truncated += 1;
            }
            v
        })
        .collect();
    (q, truncated)
}

/// `-(eta - kt) k U_lin(k) mu(eta - kt) - sum_{l != 0} (eta - kt) l U_nl(l) g(k - l, eta - l t)`.
pub fn transport_rhs(state: &SpectralState, u_lin: &[Complex64], u_nl: &[Complex64], eq: &Equilibrium) -> Vec<Complex64> {
    let lattice = state.lattice;
    let grid = state.grid;
    let n = grid.len();
    let t = state.t;
    let mut out = vec![ZERO; state.values.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(ki, row)| {
        let k = lattice.mode(ki);
        let kf = k as f64;
        let ul = u_lin[ki];
        if ul != ZERO && k != 0 {
            for (m, o) in row.iter_mut().enumerate() {
                let x = grid.eta(m) - kf * t;
                *o = -(ul * eq.mu_hat(x)) * (x * kf);
            }
        }
        let mut shifted = vec![ZERO; n];
        for l in lattice.modes() {
            let un = u_nl[lattice.index(l)];
            if l == 0 || un == ZERO || !lattice.contains(k - l) {
                continue;
            }
            let lf = l as f64;
            shifted_row(state.row(k - l), grid, -lf * t, &mut shifted);
            let c = un * lf;
            for (m, o) in row.iter_mut().enumerate() {
                let x = grid.eta(m) - kf * t;
                *o -= c * shifted[m] * x;
            }
        }
    });
    out
}

/// Where the potentials of the two transport terms come from.
#[derive(Clone, Copy)]
pub enum FieldDriver<'a> {
    /// Both potentials vanish.
    Zero,
    /// Potentials tabulated on the time grid: `lin` in the term against the
    /// equilibrium, `nl` in the convolution term.
    Given { lin: &'a ModeHistory, nl: &'a ModeHistory },
    /// Potential of the current state: trace, nonlinear Poisson, `U`; used in
    /// both terms.
    SelfConsistent { model: &'a ModelConfig, conv: &'a Convolver, weight: &'a GevreyWeight, opts: PoissonOptions },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

/// States on every node of the time grid together with the potentials used.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: TimeGrid,
    pub states: Vec<SpectralState>,
    /// Potential of the equilibrium term at each node.
    pub potential: ModeHistory,
    /// Largest reality defect produced by a single step.
    pub max_symmetry_drift: f64,
    /// Trace evaluations that fell beyond `H_max` (self-consistent driver).
    pub truncated_traces: usize,
    pub trace_evaluations: usize,
}

/// Four-point Lagrange interpolation of a tabulated mode history at `t`.
pub fn interpolate_history(h: &ModeHistory, t: f64) -> Vec<Complex64> {
    let times = h.times;
    let n = times.steps;
    if n == 0 {
        return h.values[0].clone();
    }
    let x = (t / times.dt).clamp(0.0, n as f64);
    let j = (x.floor() as usize).min(n - 1);
    if (x - j as f64).abs() < 1e-14 {
        return h.values[j].clone();
    }
    if n < 3 {
        let th = x - j as f64;
        return h.values[j].iter().zip(&h.values[j + 1]).map(|(a, b)| a * (1.0 - th) + b * th).collect();
    }
    let start = j.saturating_sub(1).min(n - 3);
    let nodes: Vec<usize> = (start..start + 4).collect();
    let mut w = [0.0; 4];
    for (a, &na) in nodes.iter().enumerate() {
        let mut p = 1.0;
        for &nb in nodes.iter() {
            if nb != na {
                p *= (x - nb as f64) / (na as f64 - nb as f64);
            }
        }
        w[a] = p;
    }
    (0..h.lattice.len()).map(|i| nodes.iter().zip(&w).map(|(&nd, &wt)| h.values[nd][i] * wt).sum()).collect()
}

fn potentials(driver: &FieldDriver, state: &SpectralState, counts: &mut (usize, usize)) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let lattice = state.lattice;
    match driver {
        FieldDriver::Zero => Ok((vec![ZERO; lattice.len()], vec![ZERO; lattice.len()])),
        FieldDriver::Given { lin, nl } => Ok((interpolate_history(lin, state.t), interpolate_history(nl, state.t))),
        FieldDriver::SelfConsistent { model, conv, weight, opts } => {
            let (q, truncated) = density_trace(state);
            counts.0 += truncated;
            counts.1 += q.len();
            let mut q = q;
            if model.beta == 0.0 {
                q[lattice.index(0)] = ZERO;
            }
            let snap = poisson_fixed_point(model, conv, &q, weight, state.t, *opts)?;
            Ok((snap.u_hat.clone(), snap.u_hat))
        }
    }
}

fn axpy(base: &SpectralState, k: &[Complex64], h: f64, t: f64) -> SpectralState {
    SpectralState { t, lattice: base.lattice, grid: base.grid, values: base.values.iter().zip(k).map(|(a, b)| a + b * h).collect() }
}

/// Classical four-stage Runge–Kutta over the whole time grid, starting from
/// `start` at `t = T` (backward) or `t = 0` (forward). Field values at stage
/// times come from four-point interpolation of tabulated potentials, or from
/// the stage state itself for the self-consistent driver. The state is
/// re-symmetrized after every step.
pub fn integrate(start: &SpectralState, eq: &Equilibrium, times: TimeGrid, driver: FieldDriver, direction: Direction) -> Result<Trajectory> {
    let n = times.steps;
    let lattice = start.lattice;
    let mut states: Vec<Option<SpectralState>> = vec![None; n + 1];
    let mut potential = ModeHistory::zeros(times, lattice);
    let mut counts = (0usize, 0usize);
    let mut drift: f64 = 0.0;
    let (mut j, sign) = match direction {
        Direction::Backward => (n, -1.0),
        Direction::Forward => (0, 1.0),
    };
    let mut y = start.clone();
    y.t = times.t(j);
    drift = drift.max(y.symmetrize());
    let h = sign * times.dt;
    loop {
        let (ul, un) = potentials(&driver, &y, &mut counts)?;
        potential.values[j] = ul.clone();
        let done = match direction {
            Direction::Backward => j == 0,
            Direction::Forward => j == n,
        };
        if done {
            states[j] = Some(y);
            break;
        }
        let t0 = y.t;
        let k1 = transport_rhs(&y, &ul, &un, eq);
        let y2 = axpy(&y, &k1, 0.5 * h, t0 + 0.5 * h);
        let (ul2, un2) = potentials(&driver, &y2, &mut counts)?;
        let k2 = transport_rhs(&y2, &ul2, &un2, eq);
        let y3 = axpy(&y, &k2, 0.5 * h, t0 + 0.5 * h);
        let (ul3, un3) = potentials(&driver, &y3, &mut counts)?;
        let k3 = transport_rhs(&y3, &ul3, &un3, eq);
        let next_j = if sign > 0.0 { j + 1 } else { j - 1 };
        let t1 = times.t(next_j);
        let y4 = axpy(&y, &k3, h, t1);
        let (ul4, un4) = potentials(&driver, &y4, &mut counts)?;
        let k4 = transport_rhs(&y4, &ul4, &un4, eq);
        let mut next = y.clone();
        next.t = t1;
        for (i, v) in next.values.iter_mut().enumerate() {
            *v += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        if !next.is_finite() {
            return Err(Error::BlowUp { t: t1 });
        }
        drift = drift.max(next.symmetrize());
        states[j] = Some(std::mem::replace(&mut y, next));
        j = next_j;
    }
    Ok(Trajectory {
        times,
        states: states.into_iter().map(|s| s.expect("every node visited")).collect(),
        potential,
        max_symmetry_drift: drift,
        truncated_traces: counts.0,
        trace_evaluations: counts.1,
    })
}

/// Which parts of the Volterra source are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceTerms {
    pub nonlinear: bool,
}

/// `S_t(k) = g_inf(k, kt) - h(U_t)(k) - sum_{l != 0} int_t^T (s - t) (k l)/(beta + l^2)
/// rho_s(l) g_s(k - l, kt - l s) ds` at node `j`, with the same quadrature
/// rule as the density solvers.
#[allow(clippy::too_many_arguments)]
pub fn assemble_source_at(
    model: &ModelConfig,
    conv: &Convolver,
    history: &[SpectralState],
    density: &ModeHistory,
    potential: &ModeHistory,
    datum: &AsymptoticDatum,
    terms: SourceTerms,
    j: usize,
) -> Result<Vec<Complex64>> {
    let times = density.times;
    let lattice = density.lattice;
    if history.len() != times.len() || potential.times != times || potential.lattice != lattice {
        return Err(Error::Config("source assembly: histories are not on the same grids".into()));
    }
    let n = times.steps;
    let t = times.t(j);
    let h = h_of_field(model, conv, &potential.values[j])?;
    let w = solver_weights(n - j);
    let mut out = Vec::with_capacity(lattice.len());
    for k in lattice.modes() {
        let mut s = datum.eval(k, k as f64 * t) - h.values[lattice.index(k)];
        if terms.nonlinear && k != 0 {
            let mut acc = ZERO;
            for l in lattice.modes() {
                if l == 0 || !lattice.contains(k - l) {
                    continue;
                }
                let pref = (k * l) as f64 / model.screen(l);
                for m in j + 1..=n {
                    let rho = density.values[m][lattice.index(l)];
                    if rho == ZERO {
                        continue;
                    }
                    let sm = times.t(m);
                    let (g, _) = eta_interpolate(&history[m], k - l, k as f64 * t - l as f64 * sm);
                    acc += rho * g * (w[m - j] * (sm - t) * pref);
                }
            }
            s -= acc * times.dt;
        }
        out.push(s);
    }
    Ok(out)
}

/// Source on every node of the time grid.
#[allow(clippy::too_many_arguments)]
pub fn assemble_source(
    model: &ModelConfig,
    conv: &Convolver,
    history: &[SpectralState],
    density: &ModeHistory,
    potential: &ModeHistory,
    datum: &AsymptoticDatum,
    terms: SourceTerms,
) -> Result<SourceHistory> {
    let times = density.times;
    let values = (0..times.len())
        .into_par_iter()
        .map(|j| assemble_source_at(model, conv, history, density, potential, datum, terms, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModeHistory { times, lattice: density.lattice, values })
}
