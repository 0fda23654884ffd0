//! Command pipelines.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use landau_core::dispersion::{find_unstable_two_stream, inverse_laplace_khat, penrose_scan, KernelOptions, PenroseReport};
use landau_core::field::{poisson_fixed_point, screen_inverse, Convolver, PoissonOptions};
use landau_core::gevrey::gevrey_inequality_suite;
use landau_core::grid::{Lattice, TimeGrid};
use landau_core::kinetic::{integrate, AsymptoticDatum, Direction, FieldDriver};
use landau_core::model::{make_preset, Equilibrium, ModelConfig};
use landau_core::scattering::{linear_damping, Grids, ScatterOptions, Scatterer, ScatteringRun};
use landau_core::Error;
use num_complex::Complex64;

use crate::config::{EquilibriumChoice, RunConfig};
use crate::output::{csv, num, snapshot, write};

pub const EXIT_OK: i32 = 0;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Penrose,
    Kernel,
    Damp,
    Scatter,
    Roundtrip,
    Poisson,
    Selftest,
}

impl Command {
    pub const ALL: [Command; 7] =
        [Command::Penrose, Command::Kernel, Command::Damp, Command::Scatter, Command::Roundtrip, Command::Poisson, Command::Selftest];

    pub fn name(self) -> &'static str {
        match self {
            Command::Penrose => "penrose",
            Command::Kernel => "kernel",
            Command::Damp => "damp",
            Command::Scatter => "scatter",
            Command::Roundtrip => "roundtrip",
            Command::Poisson => "poisson",
            Command::Selftest => "selftest",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Exit code and human-readable summary of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Core(Error),
    Io(std::io::Error),
    /// Model hypothesis not met; the run itself completed.
    Hypothesis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Exit code of a solver error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Inconclusive { .. } | Error::NearSingular { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_NUMERICAL,
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    summary: Vec<String>,
}

impl Ctx<'_> {
    fn note(&mut self, line: String) {
        if self.cfg.verbose {
            eprintln!("{line}");
        }
        self.summary.push(line);
    }

    fn write(&self, name: &str, content: &str) -> std::io::Result<()> {
        write(&self.cfg.out, name, content)
    }
}

/// Executes `cmd` and writes its outputs and a manifest into `cfg.out`.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Outcome {
    let mut ctx = Ctx { cfg, summary: Vec::new() };
    let result = match cmd {
        Command::Penrose => penrose(&mut ctx),
        Command::Kernel => kernel(&mut ctx),
        Command::Damp => damp(&mut ctx),
        Command::Scatter => scatter(&mut ctx, false),
        Command::Roundtrip => scatter(&mut ctx, true),
        Command::Poisson => poisson(&mut ctx),
        Command::Selftest => selftest(&mut ctx),
    };
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(Failure::Core(e)) => {
            ctx.summary.push(format!("error: {e}"));
            exit_code(e)
        }
        Err(Failure::Hypothesis(m)) => {
            ctx.summary.push(format!("hypothesis failure: {m}"));
            EXIT_HYPOTHESIS
        }
        Err(Failure::Io(e)) => {
            ctx.summary.push(format!("i/o error: {e}"));
            EXIT_NUMERICAL
        }
    };
    let manifest = manifest(cmd, cfg, code, &ctx.summary);
    if let Err(e) = ctx.write("manifest.txt", &manifest) {
        ctx.summary.push(format!("i/o error writing manifest: {e}"));
        return Outcome { code: if code == EXIT_OK { EXIT_NUMERICAL } else { code }, summary: ctx.summary };
    }
    Outcome { code, summary: ctx.summary }
}

/// Resolved configuration (a valid config file) preceded by commented run
/// metadata and followed by the commented summary.
fn manifest(cmd: Command, cfg: &RunConfig, code: i32, summary: &[String]) -> String {
    let mut s = format!(
        "# landau-cli {} (landau-core {})\n# command = {cmd}\n# exit = {code}\n",
        env!("CARGO_PKG_VERSION"),
        landau_core::VERSION
    );
    s.push_str(&cfg.raw.render());
    for line in summary {
        s.push_str(&format!("# {line}\n"));
    }
    s
}

fn poisson_options(cfg: &RunConfig) -> PoissonOptions {
    let mut o = PoissonOptions::for_model(&cfg.model);
    o.tol = cfg.poisson.tol;
    o.max_iters = cfg.poisson.max_iters;
    if let Some(b) = cfg.poisson.ball_threshold {
        o.ball_threshold = b;
    }
    o
}

fn equilibrium(ctx: &mut Ctx) -> Result<Equilibrium, Failure> {
    match &ctx.cfg.equilibrium {
        EquilibriumChoice::Fixed(eq) => Ok(eq.clone()),
        EquilibriumChoice::TwoStreamScan => {
            let (v0, width) = find_unstable_two_stream(&ctx.cfg.model, ctx.cfg.penrose.omega_max)?
                .ok_or_else(|| Failure::Hypothesis("the two-stream scan found no unstable separation".into()))?;
            ctx.note(format!("two-stream scan selected v0 = {v0}, beam width = {width}"));
            Ok(Equilibrium::two_stream_with_width(v0, width))
        }
    }
}

fn scan(ctx: &mut Ctx, eq: &Equilibrium) -> Result<PenroseReport, Failure> {
    let p = &ctx.cfg.penrose;
    let rep = penrose_scan(&ctx.cfg.model, eq, p.kmax, p.omega_max, p.samples)?;
    ctx.note(format!("penrose: equilibrium {eq}, kappa0 = {}, stable = {}", num(rep.kappa0), rep.stable));
    Ok(rep)
}

fn require_stable(ctx: &mut Ctx, rep: &PenroseReport) -> Result<(), Failure> {
    if !rep.stable && ctx.cfg.penrose.require_stable {
        let bad: Vec<String> = rep.rows.iter().filter(|r| r.winding != 0).map(|r| format!("k = {} winding {}", r.k, r.winding)).collect();
        return Err(Failure::Hypothesis(format!("Penrose stability fails ({})", bad.join(", "))));
    }
    Ok(())
}

fn penrose(ctx: &mut Ctx) -> Result<(), Failure> {
    let eq = equilibrium(ctx)?;
    let rep = scan(ctx, &eq)?;
    let header: Vec<String> = ["k", "omega_argmin", "abs_D_min", "winding", "tail_bound", "stable"].iter().map(|s| s.to_string()).collect();
    let mut rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            let ok = r.winding == 0 && r.abs_d_min > 0.0;
            vec![r.k.to_string(), num(r.omega_argmin), num(r.abs_d_min), r.winding.to_string(), num(rep.tail_bound), ok.to_string()]
        })
        .collect();
    rows.push(vec![
        "all".into(),
        num(rep.argmin.1.im),
        num(rep.kappa0),
        rep.rows.iter().map(|r| r.winding).sum::<i64>().to_string(),
        num(rep.tail_bound),
        rep.stable.to_string(),
    ]);
    ctx.write("penrose.csv", &csv(&header, &rows))?;
    require_stable(ctx, &rep)
}

fn kernel(ctx: &mut Ctx) -> Result<(), Failure> {
    let eq = equilibrium(ctx)?;
    let times = ctx.cfg.grids.times;
    for &k in &ctx.cfg.kernel_modes.clone() {
        let tab = inverse_laplace_khat(&ctx.cfg.model, &eq, k, times, KernelOptions::default())?;
        let header: Vec<String> = ["t", "re_K", "im_K", "abs_K"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> =
            tab.values.iter().enumerate().map(|(j, z)| vec![num(times.t(j)), num(z.re), num(z.im), num(z.norm())]).collect();
        ctx.write(&format!("kernel_k{k}.csv"), &csv(&header, &rows))?;
        ctx.note(format!(
            "kernel k = {k}: fitted lambda1 = {}, R^2 = {}, truncation bound = {}",
            num(tab.fit_lambda1),
            num(tab.fit_r2),
            num(tab.truncation_bound)
        ));
        for w in &tab.warnings {
            ctx.note(format!("kernel k = {k}: warning: {w}"));
        }
    }
    Ok(())
}

fn damp(ctx: &mut Ctx) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let eq = equilibrium(ctx)?;
    let d = &cfg.damp;
    let grids = Grids::new(d.kmax, cfg.grids.eta.deta, 0.0, cfg.grids.times.dt, d.horizon, cfg.margin)?;
    let rep = linear_damping(&cfg.model, &eq, &cfg.weight, d.amplitude, grids, d.window, poisson_options(cfg))?;
    let header: Vec<String> = ["t", "abs_E1"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = rep.times.iter().zip(&rep.e1).map(|(t, e)| vec![num(*t), num(*e)]).collect();
    ctx.write("damp.csv", &csv(&header, &rows))?;
    ctx.note(format!(
        "damp: measured rate = {}, R^2 = {}, root = {}{:+e}i, relative error = {}",
        num(rep.measured_rate),
        num(rep.fit_r2),
        num(rep.root.re),
        rep.root.im,
        num(rep.relative_error)
    ));
    Ok(())
}

fn scatterer(ctx: &mut Ctx) -> Result<Scatterer, Failure> {
    let cfg = ctx.cfg;
    let eq = equilibrium(ctx)?;
    let rep = scan(ctx, &eq)?;
    require_stable(ctx, &rep)?;
    let s = &cfg.scatter;
    let mut opts = ScatterOptions::for_model(&cfg.model);
    opts.tol = s.tol;
    opts.max_iters = s.max_iters;
    opts.contraction_factor = s.contraction_factor;
    opts.ball_factor = s.ball_factor;
    opts.smallness = s.smallness;
    opts.nonlinear = s.nonlinear;
    opts.start = s.start;
    opts.lambda_bar = s.lambda_bar;
    opts.poisson = poisson_options(cfg);
    Ok(Scatterer::new(cfg.model.clone(), eq, cfg.weight, cfg.grids, cfg.datum.clone(), opts)?)
}

fn write_run(ctx: &mut Ctx, s: &Scatterer, run: &ScatteringRun) -> Result<(), Failure> {
    let header: Vec<String> = ["iter", "N1", "N2", "distance", "ratio"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> =
        run.iterates.iter().map(|it| vec![it.iter.to_string(), num(it.n1), num(it.n2), num(it.distance), num(it.ratio)]).collect();
    ctx.write("iterates.csv", &csv(&header, &rows))?;
    let lat = s.grids.lattice;
    let mut header: Vec<String> = vec!["t".into(), "weighted_norm".into()];
    header.extend((1..=lat.kmax).map(|k| format!("abs_E_k{k}")));
    let rows: Vec<Vec<String>> = run
        .efield
        .iter()
        .map(|e| {
            let mut r = vec![num(e.t), num(e.weighted_norm)];
            r.extend((1..=lat.kmax).map(|k| num(e.modes[lat.index(k)])));
            r
        })
        .collect();
    ctx.write("efield.csv", &csv(&header, &rows))?;
    ctx.write("g0_state.csv", &snapshot(&run.g0))?;
    ctx.note(format!(
        "scatter: converged = {}, iterations = {}, final distance = {}, trace defect = {}",
        run.converged,
        run.iterates.len() - 1,
        num(run.final_distance()),
        num(run.trace_defect)
    ));
    let ratios: Vec<String> = run.contraction_ratios.iter().map(|r| num(*r)).collect();
    ctx.note(format!("contraction ratios: {}", ratios.join(" ")));
    match run.decay_fit {
        Some(f) => ctx.note(format!("field decay fit: c = {}, log C = {}, R^2 = {}, points = {}", num(f.c), num(f.log_c), num(f.r2), f.points)),
        None => ctx.note("field decay fit: not enough nonzero samples".into()),
    }
    Ok(())
}

fn scatter(ctx: &mut Ctx, roundtrip: bool) -> Result<(), Failure> {
    let s = scatterer(ctx)?;
    let run = match s.fixed_point_drive() {
        Ok(r) => r,
        Err(e) => {
            let report = format!("divergence report\namplitude = {}\n{e}\n", num(s.datum.amplitude));
            ctx.write("divergence.txt", &report)?;
            return Err(e.into());
        }
    };
    write_run(ctx, &s, &run)?;
    if !run.converged {
        return Err(Error::NoContraction(format!("fixed point not reached in {} iterations", s.options.max_iters)).into());
    }
    if roundtrip {
        let rt = s.roundtrip_check(&run)?;
        let header: Vec<String> = ["t", "profile_distance"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = rt.distance.iter().map(|(t, d)| vec![num(*t), num(*d)]).collect();
        ctx.write("roundtrip.csv", &csv(&header, &rows))?;
        ctx.note(format!(
            "roundtrip: spectral error = {}, sup error = {}, step-doubling estimate = {}, final quarter nonincreasing = {}, mass drift = {}",
            num(rt.spectral_error),
            num(rt.sup_error),
            num(rt.step_doubling_difference),
            rt.final_quarter_nonincreasing,
            num(rt.mass_drift)
        ));
    }
    Ok(())
}

/// Normalized Fourier coefficients of `f` sampled on `n` points of the torus.
fn sampled_coefficients<F: Fn(f64) -> f64>(f: F, lattice: Lattice, n: usize) -> Vec<Complex64> {
    lattice
        .modes()
        .map(|k| {
            (0..n)
                .map(|p| {
                    let x = 2.0 * PI * p as f64 / n as f64;
                    Complex64::from_polar(f(x), -(k as f64) * x)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// Manufactured Poisson problem: `U = a cos x`, density `(beta + 1) a cos x`
/// and datum `q = rho + h(U)` with `h` evaluated pointwise.
fn manufactured(model: &ModelConfig, lattice: Lattice, a: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rho = vec![Complex64::new(0.0, 0.0); lattice.len()];
    let c = Complex64::new(0.5 * a * model.screen(1), 0.0);
    rho[lattice.index(1)] = c;
    rho[lattice.index(-1)] = c;
    let coeffs = model.h.coeffs().to_vec();
    let h = |x: f64| -> f64 {
        let u = a * x.cos();
        coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    };
    let hq = sampled_coefficients(h, lattice, 4 * lattice.len().max(16) * coeffs.len().max(1));
    let q = rho.iter().zip(&hq).map(|(r, h)| r + h).collect();
    (rho, q)
}

fn poisson(ctx: &mut Ctx) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let lat = cfg.grids.lattice;
    let a = cfg.poisson.amplitude;
    let (rho, q) = manufactured(&cfg.model, lat, a);
    let snap = poisson_fixed_point(&cfg.model, &Convolver::new(lat), &q, &cfg.weight, 0.0, poisson_options(cfg))?;
    let norm = rho.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let err = snap.rho_hat.iter().zip(&rho).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt() / norm;
    let header: Vec<String> =
        ["k", "re_rho", "im_rho", "re_U", "im_U", "re_E", "im_E"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = lat
        .modes()
        .map(|k| {
            let i = lat.index(k);
            let (r, u, e) = (snap.rho_hat[i], snap.u_hat[i], snap.e_hat[i]);
            vec![k.to_string(), num(r.re), num(r.im), num(u.re), num(u.im), num(e.re), num(e.im)]
        })
        .collect();
    ctx.write("poisson.csv", &csv(&header, &rows))?;
    let ratios: Vec<String> = snap.ratios.iter().map(|r| num(*r)).collect();
    ctx.note(format!(
        "poisson: amplitude = {}, iterations = {}, relative error = {}, residual = {}, ratios: {}",
        num(a),
        snap.iters,
        num(err),
        num(snap.residual),
        ratios.join(" ")
    ));
    Ok(())
}

/// Quick checks of closed-form cases across the modules.
pub fn selftest_checks() -> Vec<(String, bool)> {
    let mut out: Vec<(String, bool)> = Vec::new();
    let vp = make_preset("vp").expect("preset");
    let vpme = make_preset("vpme").expect("preset");
    let eq = Equilibrium::maxwellian();
    let suite = gevrey_inequality_suite(0.5, 2000, 1);
    out.push((
        "bracket inequalities hold on 2000 samples".into(),
        suite.map(|r| r.subadditivity_violations == 0 && r.near_diagonal_violations == 0).unwrap_or(false),
    ));
    let pen = penrose_scan(&vp, &eq, 4, 40.0, 2000);
    out.push(("maxwellian is Penrose stable".into(), pen.map(|r| r.stable && r.kappa0 > 0.0).unwrap_or(false)));
    let lat = Lattice::new(3);
    let q: Vec<Complex64> = lat.modes().map(|k| Complex64::new(0.0, 0.1 * k as f64)).collect();
    let snap = poisson_fixed_point(&vp, &Convolver::new(lat), &q, &Default::default(), 0.0, PoissonOptions::for_model(&vp));
    out.push(("h = 0 Poisson returns the datum".into(), snap.map(|s| s.rho_hat == q && s.iters == 1).unwrap_or(false)));
    let u = screen_inverse(&vpme, lat, &q);
    out.push(("screened inverse of k^2 + 1".into(), (u[lat.index(2)] - q[lat.index(2)] / 5.0).norm() == 0.0));
    let (rho, q) = manufactured(&vpme, lat, 1e-3);
    let snap = poisson_fixed_point(&vpme, &Convolver::new(lat), &q, &Default::default(), 0.0, PoissonOptions::for_model(&vpme));
    out.push((
        "manufactured vpme density recovered".into(),
        snap.map(|s| s.rho_hat.iter().zip(&rho).all(|(x, y)| (x - y).norm() < 1e-14)).unwrap_or(false),
    ));
    let grids = Grids::new(2, 0.25, 0.0, 0.1, 4.0, 6.0).expect("grid");
    let d = AsymptoticDatum::single_mode(1e-2).state(0.0, grids.lattice, grids.eta);
    let traj = integrate(&d, &eq, TimeGrid::new(100, 0.1), FieldDriver::Zero, Direction::Forward);
    out.push(("free transport keeps the profile".into(), traj.map(|t| t.states.iter().all(|s| s.values == d.values)).unwrap_or(false)));
    let zero = Scatterer::new(vp.clone(), eq.clone(), Default::default(), grids, AsymptoticDatum::zero(), ScatterOptions::for_model(&vp))
        .and_then(|s| s.fixed_point_drive());
    out.push(("zero datum is a fixed point".into(), zero.map(|r| r.converged && r.g0.max_abs() == 0.0).unwrap_or(false)));
    let tab = inverse_laplace_khat(&vp, &eq.clone().with_scale(0.0), 1, TimeGrid::new(8, 0.5), KernelOptions::default());
    out.push(("resolvent vanishes without coupling".into(), tab.map(|t| t.values.iter().all(|z| z.norm() == 0.0)).unwrap_or(false)));
    out
}

fn selftest(ctx: &mut Ctx) -> Result<(), Failure> {
    let checks = selftest_checks();
    let mut failed = 0;
    for (name, ok) in &checks {
        ctx.note(format!("{} {name}", if *ok { "PASS" } else { "FAIL" }));
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Error::Integration(format!("{failed} self-test checks failed")).into());
    }
    Ok(())
}
