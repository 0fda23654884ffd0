//! Fixed-point construction of the solution with a prescribed large-time
//! profile, the forward round trip from the reconstructed initial state, and
//! the small-amplitude damping experiment.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dispersion::{dispersion_roots, inverse_laplace_khat, KernelOptions, ResolventTable};
use crate::error::{Error, Result};
use crate::field::{electric_of_potential, poisson_fixed_point, screen_inverse, Convolver, PoissonOptions};
use crate::fit::{envelope_log_fit, linear_fit, LinearFit};
use crate::gevrey::{log_weight, norm_n1, norm_n2, slice_n1, GevreyWeight, LogSum, WeightedNormReport};
use crate::grid::{bracket, EtaGrid, Lattice, TimeGrid};
use crate::kinetic::{assemble_source, density_trace, integrate, AsymptoticDatum, Direction, FieldDriver, SourceTerms, SpectralState, Trajectory};
use crate::model::{Equilibrium, ModelConfig};
use crate::volterra::{solve_resolvent, ModeHistory};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Resolution of the round-trip monotonicity check, relative to the
/// step-doubling difference.
pub const MONOTONE_SLACK: f64 = 1e-2;

/// Discretization of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grids {
    pub lattice: Lattice,
    pub eta: EtaGrid,
    pub times: TimeGrid,
}

impl Grids {
    /// `H_max` is raised to `K_max T + margin` when needed.
    pub fn new(kmax: i64, deta: f64, hmax: f64, dt: f64, horizon: f64, margin: f64) -> Result<Self> {
        if kmax < 1 || !(deta > 0.0) || !(dt > 0.0) || !(horizon > 0.0) {
            return Err(Error::Config(format!("invalid grid: kmax = {kmax}, deta = {deta}, dt = {dt}, T = {horizon}")));
        }
        let need = kmax as f64 * horizon + margin;
        Ok(Grids { lattice: Lattice::new(kmax), eta: EtaGrid::covering(hmax.max(need), deta), times: TimeGrid::with_horizon(horizon, dt) })
    }

    /// Checks that every density trace `|k| t <= K_max T` stays on the grid.
    pub fn validate(&self, margin: f64) -> Result<()> {
        let need = self.lattice.kmax as f64 * self.times.horizon() + margin;
        if self.eta.hmax() + 1e-9 < need {
            return Err(Error::Config(format!(
                "H_max = {} is below K_max T + margin = {need}; the density trace would leave the eta grid",
                self.eta.hmax()
            )));
        }
        Ok(())
    }
}

/// Initial iterate of the fixed-point drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// Constant profile equal to the datum.
    FreeExtension,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterOptions {
    /// Stop when `N[phi_{n+1} - phi_n] <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Radius factor of the norm in which contraction is measured.
    pub contraction_factor: f64,
    /// Iterates must satisfy `N_1 <= ball_factor * N[free extension]`.
    pub ball_factor: f64,
    /// Largest admissible `N` of the free extension of the datum.
    pub smallness: f64,
    /// Keep the quadratic terms (source convolution and `E_phi` transport).
    pub nonlinear: bool,
    pub start: Start,
    /// Reporting radius of the field norm; `None` selects `0.9 lambda(0)`.
    pub lambda_bar: Option<f64>,
    pub poisson: PoissonOptions,
    pub kernel: KernelOptions,
}

impl ScatterOptions {
    pub fn for_model(model: &ModelConfig) -> Self {
        ScatterOptions {
            tol: 1e-9,
            max_iters: 25,
            contraction_factor: 0.9,
            ball_factor: 10.0,
            smallness: f64::INFINITY,
            nonlinear: true,
            start: Start::FreeExtension,
            lambda_bar: None,
            poisson: PoissonOptions::for_model(model),
            kernel: KernelOptions::default(),
        }
    }
}

/// Everything the map needs that does not change between iterations.
pub struct Scatterer {
    pub model: ModelConfig,
    pub eq: Equilibrium,
    pub weight: GevreyWeight,
    pub grids: Grids,
    pub datum: AsymptoticDatum,
    pub options: ScatterOptions,
    pub conv: Convolver,
    pub tables: Vec<ResolventTable>,
}

/// One element of the iteration: profile history, its modified density and
/// potential, and its weighted norms.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub states: Vec<SpectralState>,
    pub density: ModeHistory,
    pub potential: ModeHistory,
    /// Density produced by the Volterra solve (the trace density for the
    /// starting iterate).
    pub volterra_density: ModeHistory,
    pub norms: WeightedNormReport,
}

impl Scatterer {
    pub fn new(model: ModelConfig, eq: Equilibrium, weight: GevreyWeight, grids: Grids, datum: AsymptoticDatum, options: ScatterOptions) -> Result<Self> {
        weight.validate()?;
        eq.validate()?;
        if !datum.is_mean_zero() {
            return Err(Error::Config("datum must have mean zero".into()));
        }
        if datum.max_mode() > grids.lattice.kmax {
            return Err(Error::Config(format!("datum mode {} lies outside the lattice K_max = {}", datum.max_mode(), grids.lattice.kmax)));
        }
        grids.validate(0.0)?;
        let times = grids.times;
        let positive: Vec<i64> = (1..=grids.lattice.kmax).collect();
        let tabs = positive
            .par_iter()
            .map(|&k| {
                if model.coupling(k) == 0.0 {
                    Ok(ResolventTable::zero(k, times))
                } else {
                    inverse_laplace_khat(&model, &eq, k, times, options.kernel)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tables = Vec::with_capacity(2 * tabs.len());
        for t in tabs {
            tables.push(t.conjugate());
            tables.push(t);
        }
        let conv = Convolver::new(grids.lattice);
        Ok(Scatterer { model, eq, weight, grids, datum, options, conv, tables })
    }

    fn datum_state(&self, t: f64) -> SpectralState {
        self.datum.state(t, self.grids.lattice, self.grids.eta)
    }

    /// Modified density and potential of a profile history: trace, then the
    /// nonlinear Poisson problem on every slice.
    pub fn density_of(&self, states: &[SpectralState]) -> Result<(ModeHistory, ModeHistory)> {
        let times = self.grids.times;
        let lattice = self.grids.lattice;
        let snaps = states
            .par_iter()
            .map(|s| {
                let (mut q, _) = density_trace(s);
                if self.model.beta == 0.0 {
                    q[lattice.index(0)] = ZERO;
                }
                poisson_fixed_point(&self.model, &self.conv, &q, &self.weight, s.t, self.options.poisson)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rho = ModeHistory::zeros(times, lattice);
        let mut u = ModeHistory::zeros(times, lattice);
        for (j, s) in snaps.into_iter().enumerate() {
            rho.values[j] = s.rho_hat;
            u.values[j] = s.u_hat;
        }
        Ok((rho, u))
    }

    fn norms(&self, w: &GevreyWeight, states: &[SpectralState], density: &ModeHistory) -> Result<WeightedNormReport> {
        let g = self.grids;
        let (n1, per_time) = norm_n1(w, g.lattice, g.eta, states.iter().map(|s| (s.t, &s.values[..])))?;
        let n2 = norm_n2(w, g.times, g.lattice, &density.values)?;
        Ok(WeightedNormReport::new(n1, n2, per_time))
    }

    /// `N_1[a - b] + N_2[rho_a - rho_b]` in the weight `w`.
    pub fn distance(&self, w: &GevreyWeight, a: &Iterate, b: &Iterate) -> Result<f64> {
        let g = self.grids;
        let n1 = a
            .states
            .par_iter()
            .zip(&b.states)
            .map(|(x, y)| {
                let d: Vec<Complex64> = x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect();
                slice_n1(w, x.t, g.lattice, g.eta, &d)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let diff: Vec<Vec<Complex64>> =
            a.density.values.iter().zip(&b.density.values).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect();
        Ok(n1 + norm_n2(w, g.times, g.lattice, &diff)?)
    }

    /// Starting element of the iteration.
    pub fn initial_iterate(&self) -> Result<Iterate> {
        let times = self.grids.times;
        let states: Vec<SpectralState> = match self.options.start {
            Start::FreeExtension => (0..times.len()).map(|j| self.datum_state(times.t(j))).collect(),
            Start::Zero => (0..times.len()).map(|j| SpectralState::zeros(times.t(j), self.grids.lattice, self.grids.eta)).collect(),
        };
        let (density, potential) = self.density_of(&states)?;
        let norms = self.norms(&self.weight, &states, &density)?;
        Ok(Iterate { states, volterra_density: density.clone(), density, potential, norms })
    }

    /// One application of the map: field of `phi`, Volterra source, density
    /// of the new iterate by the resolvent formula, and backward transport
    /// from the datum with the new field in the equilibrium term and the
    /// field of `phi` in the convolution term.
    pub fn apply_map(&self, phi: &Iterate) -> Result<(Iterate, Trajectory)> {
        let g = self.grids;
        let (rho_phi, u_phi) = (&phi.density, &phi.potential);
        let terms = SourceTerms { nonlinear: self.options.nonlinear };
        let source = assemble_source(&self.model, &self.conv, &phi.states, rho_phi, u_phi, &self.datum, terms)?;
        let rho = solve_resolvent(&self.model, &source, &self.tables)?.density;
        let mut u_psi = ModeHistory::zeros(g.times, g.lattice);
        for j in 0..g.times.len() {
            u_psi.values[j] = screen_inverse(&self.model, g.lattice, &rho.values[j]);
        }
        let zero = ModeHistory::zeros(g.times, g.lattice);
        let nl = if self.options.nonlinear { u_phi } else { &zero };
        let end = self.datum_state(g.times.horizon());
        let traj = integrate(&end, &self.eq, g.times, FieldDriver::Given { lin: &u_psi, nl }, Direction::Backward)?;
        let norms = self.norms(&self.weight, &traj.states, &rho)?;
        let (density, potential) = if self.options.nonlinear { self.density_of(&traj.states)? } else { (rho.clone(), u_psi) };
        Ok((Iterate { states: traj.states.clone(), density, potential, volterra_density: rho, norms }, traj))
    }

    /// Reporting radius of the field norm.
    pub fn lambda_bar(&self) -> f64 {
        self.options.lambda_bar.unwrap_or(0.9 * self.weight.lambda(0.0))
    }

    /// `( sum_k A_{lambda_bar}(k, kt)^2 |E(k)|^2 )^{1/2}`.
    pub fn efield_norm(&self, t: f64, e: &[Complex64]) -> Result<f64> {
        let lat = self.grids.lattice;
        let lb = self.lambda_bar();
        let mut s = LogSum::default();
        for (i, z) in e.iter().enumerate() {
            let a2 = z.norm_sqr();
            if a2 > 0.0 {
                let k = lat.mode(i) as f64;
                s.add(2.0 * log_weight(lb, self.weight.gamma, self.weight.sigma, 1.0 + k * k + k * k * t * t) + a2.ln());
            }
        }
        s.sqrt()
    }

    /// Fixed-point iteration with contraction diagnostics.
    pub fn fixed_point_drive(&self) -> Result<ScatteringRun> {
        let opts = self.options;
        let reduced = self.weight.with_radius_factor(opts.contraction_factor);
        let mut phi = self.initial_iterate()?;
        let initial_n = phi.norms.n_total;
        if initial_n > opts.smallness {
            return Err(Error::BallExit(format!(
                "datum too large: N of the free extension is {initial_n:.3e} > smallness threshold {:.3e}; reduce the amplitude",
                opts.smallness
            )));
        }
        let n1_bound = opts.ball_factor * initial_n.max(f64::MIN_POSITIVE);
        let mut summaries = vec![IterateSummary { iter: 0, n1: phi.norms.n1, n2: phi.norms.n2, distance: f64::NAN, ratio: f64::NAN }];
        let mut ratios = Vec::new();
        let mut prev: Option<f64> = None;
        let mut bad = 0;
        for iter in 1..=opts.max_iters {
            let (psi, _) = self.apply_map(&phi)?;
            if psi.norms.n1 > n1_bound && initial_n > 0.0 {
                return Err(Error::BallExit(format!(
                    "iterate {iter} has N_1 = {:.3e} > {:.1} x N of the free extension ({:.3e}); reduce the amplitude",
                    psi.norms.n1, opts.ball_factor, n1_bound / opts.ball_factor
                )));
            }
            let dist = self.distance(&reduced, &psi, &phi)?;
            let ratio = match prev {
                Some(p) if p > 0.0 => dist / p,
                _ => f64::NAN,
            };
            if ratio.is_finite() {
                ratios.push(ratio);
                bad = if ratio >= 1.0 { bad + 1 } else { 0 };
                if bad >= 3 {
                    return Err(Error::NoContraction(format!(
                        "contraction ratio {ratio:.3} >= 1 for three consecutive iterations at amplitude {:.3e}; reduce the amplitude",
                        self.datum.amplitude
                    )));
                }
            }
            summaries.push(IterateSummary { iter, n1: psi.norms.n1, n2: psi.norms.n2, distance: dist, ratio });
            phi = psi;
            if dist <= opts.tol {
                return self.finish(phi, summaries, ratios, true);
            }
            prev = Some(dist);
        }
        self.finish(phi, summaries, ratios, false)
    }

    fn finish(&self, solution: Iterate, iterates: Vec<IterateSummary>, ratios: Vec<f64>, converged: bool) -> Result<ScatteringRun> {
        let g = self.grids;
        let mut efield = Vec::with_capacity(g.times.len());
        for j in 0..g.times.len() {
            let t = g.times.t(j);
            let e = electric_of_potential(g.lattice, &solution.potential.values[j]);
            efield.push(EfieldSample { t, weighted_norm: self.efield_norm(t, &e)?, modes: e.iter().map(|z| z.norm()).collect() });
        }
        let decay_fit = fit_field_decay(&efield, self.weight.gamma, 0.25 * g.times.horizon(), 0.75 * g.times.horizon());
        let trace_defect = self.trace_defect(&solution)?;
        Ok(ScatteringRun {
            iterates,
            contraction_ratios: ratios,
            g0: solution.states[0].clone(),
            efield,
            converged,
            decay_fit,
            trace_defect,
            solution,
        })
    }

    /// `max_t,k |rho_trace - rho_volterra|`, where `rho_trace` solves
    /// `rho + h(U) = g_t(k, kt)` on every slice.
    pub fn trace_defect(&self, it: &Iterate) -> Result<f64> {
        let (rho, _) = self.density_of(&it.states)?;
        let mut worst: f64 = 0.0;
        for (a, b) in rho.values.iter().zip(&it.volterra_density.values) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).norm());
            }
        }
        Ok(worst)
    }

    /// Forward self-consistent evolution from `g0` over the same time grid.
    pub fn forward(&self, g0: &SpectralState, times: TimeGrid) -> Result<Trajectory> {
        let driver = FieldDriver::SelfConsistent { model: &self.model, conv: &self.conv, weight: &self.weight, opts: self.options.poisson };
        integrate(g0, &self.eq, times, driver, Direction::Forward)
    }

    /// Forward solve from the reconstructed initial state and its distance to
    /// the datum.
    pub fn roundtrip_check(&self, run: &ScatteringRun) -> Result<RoundTrip> {
        let g = self.grids;
        let fwd = self.forward(&run.g0, g.times)?;
        let distance: Vec<(f64, f64)> = fwd.states.iter().map(|s| (s.t, s.sup_distance(&self.datum_state(s.t)))).collect();
        let end = fwd.states.last().expect("nonempty trajectory");
        let spectral_error = end.sup_distance(&self.datum_state(end.t));
        let mut diff = end.clone();
        for (d, z) in diff.values.iter_mut().zip(&self.datum_state(end.t).values) {
            *d -= z;
        }
        let sup_error = physical_sup(&diff);
        // the same solve with twice the step: Richardson-type size of the time
        // discretization error of the forward problem
        let coarse = if g.times.steps % 2 == 0 {
            let ct = TimeGrid::new(g.times.steps / 2, 2.0 * g.times.dt);
            let c = self.forward(&run.g0, ct)?;
            c.states.last().expect("nonempty").sup_distance(end)
        } else {
            f64::NAN
        };
        let q = 3 * distance.len() / 4;
        let tail = &distance[q..];
        // once the field has decayed the distance sits on the discretization
        // floor, so increments are only resolved above a fraction of it
        let slack = MONOTONE_SLACK * coarse.max(0.0);
        let nonincreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9) + slack);
        Ok(RoundTrip {
            sup_error,
            spectral_error,
            distance,
            final_quarter_nonincreasing: nonincreasing,
            step_doubling_difference: coarse,
            mass_drift: fwd.states.iter().map(|s| (s.mass() - run.g0.mass()).norm()).fold(0.0, f64::max),
            max_symmetry_drift: fwd.max_symmetry_drift,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateSummary {
    pub iter: usize,
    pub n1: f64,
    pub n2: f64,
    /// Distance to the previous iterate in the reduced-radius norm.
    pub distance: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfieldSample {
    pub t: f64,
    pub weighted_norm: f64,
    /// `|E(t, k)|` in lattice order.
    pub modes: Vec<f64>,
}

/// Fit of `log ||A E(t)|| = log C - c <t>^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub log_c: f64,
    /// Positive for decay.
    pub c: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn fit_field_decay(samples: &[EfieldSample], gamma: f64, t0: f64, t1: f64) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.t >= t0 && s.t <= t1 && s.weighted_norm > 0.0 && s.weighted_norm.is_finite())
        .map(|s| (bracket(s.t).powf(gamma), s.weighted_norm.ln()))
        .collect();
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    linear_fit(&x, &y).map(|f: LinearFit| DecayFit { log_c: f.intercept, c: -f.slope, r2: f.r2, points: f.points })
}

/// Result of the fixed-point drive.
#[derive(Debug, Clone)]
pub struct ScatteringRun {
    pub iterates: Vec<IterateSummary>,
    pub contraction_ratios: Vec<f64>,
    /// Profile at `t = 0`: the image of the datum under the wave operator.
    pub g0: SpectralState,
    pub efield: Vec<EfieldSample>,
    pub converged: bool,
    pub decay_fit: Option<DecayFit>,
    pub trace_defect: f64,
    pub solution: Iterate,
}

impl ScatteringRun {
    /// Distance between the last two iterates.
    pub fn final_distance(&self) -> f64 {
        self.iterates.last().map(|s| s.distance).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    /// `sup_{x,v} |g(T) - g_inf|` on the physical grid.
    pub sup_error: f64,
    /// `sup_{k,eta} |g(T) - g_inf|`.
    pub spectral_error: f64,
    /// `(t, sup_{k,eta} |g(t) - g_inf|)` along the forward solve.
    pub distance: Vec<(f64, f64)>,
    pub final_quarter_nonincreasing: bool,
    /// Spectral distance at `T` between forward solves with `dt` and `2 dt`.
    pub step_doubling_difference: f64,
    pub mass_drift: f64,
    pub max_symmetry_drift: f64,
}

/// `sup |g(x, v)|` of a spectral state on the physical grid
/// `x_p = 2 pi p / P`, `v_n = 2 pi n / (N deta)`, with
/// `g(x, v) = sum_k e^{ikx} (1/2pi) int g(k, eta) e^{i eta v} d eta`.
pub fn physical_sup(state: &SpectralState) -> f64 {
    let lat = state.lattice;
    let grid = state.grid;
    let n = grid.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    // d_k(v_n) for every mode
    let rows: Vec<Vec<Complex64>> = lat
        .modes()
        .map(|k| {
            let mut buf: Vec<Complex64> = vec![ZERO; n];
            // place eta_m at index (m - half) mod n so that the transform
            // evaluates sum_m g(eta_m) e^{i eta_m v_n}
            for m in 0..n {
                let idx = (m as i64 - grid.half as i64).rem_euclid(n as i64) as usize;
                buf[idx] = state.at(k, m);
            }
            fft.process(&mut buf);
            buf.iter().map(|z| z * (grid.deta / (2.0 * std::f64::consts::PI))).collect()
        })
        .collect();
    let p = (4 * lat.kmax + 4) as usize;
    let mut sup: f64 = 0.0;
    for ip in 0..p {
        let x = 2.0 * std::f64::consts::PI * ip as f64 / p as f64;
        let phases: Vec<Complex64> = lat.modes().map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect();
        for iv in 0..n {
            let mut acc = ZERO;
            for (ki, ph) in phases.iter().enumerate() {
                acc += rows[ki][iv] * ph;
            }
            sup = sup.max(acc.re.abs());
        }
    }
    sup
}

/// Small-amplitude forward evolution from `g0(+-1, eta) = eps exp(-eta^2/2)`
/// and the measured exponential decay rate of `|E(t, 1)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingReport {
    pub times: Vec<f64>,
    pub e1: Vec<f64>,
    /// `-slope` of the envelope fit of `log |E(t, 1)|` on the window.
    pub measured_rate: f64,
    pub fit_r2: f64,
    /// Least-damped root of `D(1, tau) = 0`.
    pub root: Complex64,
    pub relative_error: f64,
    pub window: (f64, f64),
}

#[allow(clippy::too_many_arguments)]
pub fn linear_damping(
    model: &ModelConfig,
    eq: &Equilibrium,
    weight: &GevreyWeight,
    amplitude: f64,
    grids: Grids,
    window: (f64, f64),
    poisson: PoissonOptions,
) -> Result<DampingReport> {
    let datum = AsymptoticDatum::single_mode(amplitude);
    let g0 = datum.state(0.0, grids.lattice, grids.eta);
    let conv = Convolver::new(grids.lattice);
    let driver = FieldDriver::SelfConsistent { model, conv: &conv, weight, opts: poisson };
    let traj = integrate(&g0, eq, grids.times, driver, Direction::Forward)?;
    let lat = grids.lattice;
    let times = grids.times.times();
    let e1: Vec<f64> = traj.potential.values.iter().map(|u| u[lat.index(1)].norm()).collect();
    let fit = envelope_log_fit(&times, &e1, window.0, window.1, 0.0)
        .ok_or_else(|| Error::Integration("too few field samples in the damping window".into()))?;
    let roots = dispersion_roots(model, eq, 1, 3.0, 4.0)?;
    let root = *roots.first().ok_or_else(|| Error::Integration("no root of D(1, tau) found in the search box".into()))?;
    let rate = -fit.slope;
    Ok(DampingReport {
        times,
        e1,
        measured_rate: rate,
        fit_r2: fit.r2,
        root,
        relative_error: (rate - (-root.re)).abs() / root.re.abs(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_preset;

    fn small_setup(datum: AsymptoticDatum) -> Scatterer {
        let model = make_preset("vp").unwrap();
        let grids = Grids::new(2, 0.25, 0.0, 0.1, 4.0, 6.0).unwrap();
        let opts = ScatterOptions::for_model(&model);
        Scatterer::new(model, Equilibrium::maxwellian(), GevreyWeight::default(), grids, datum, opts).unwrap()
    }

    #[test]
    fn zero_datum_is_a_fixed_point() {
        let s = small_setup(AsymptoticDatum::zero());
        let run = s.fixed_point_drive().unwrap();
        assert!(run.converged);
        assert_eq!(run.iterates.len(), 2);
        assert!(run.g0.values.iter().all(|z| *z == ZERO));
        let rt = s.roundtrip_check(&run).unwrap();
        assert_eq!(rt.sup_error, 0.0);
    }

    #[test]
    fn physical_sup_of_gaussian_mode() {
        // g(+-1, eta) = exp(-eta^2/2) is 2 cos x exp(-v^2/2) / sqrt(2 pi)
        let lat = Lattice::new(1);
        let grid = EtaGrid::new(160, 0.0625);
        let s = AsymptoticDatum::single_mode(1.0).state(0.0, lat, grid);
        let expect = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((physical_sup(&s) - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        let g = Grids { lattice: Lattice::new(4), eta: EtaGrid::covering(48.0, 0.125), times: TimeGrid::with_horizon(40.0, 0.05) };
        assert!(g.validate(6.0).is_err());
        assert!(Grids::new(4, 0.125, 48.0, 0.05, 40.0, 6.0).unwrap().validate(6.0).is_ok());
    }
}
