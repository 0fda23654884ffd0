//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use landau_core::gevrey::GevreyWeight;
use landau_core::kinetic::AsymptoticDatum;
use landau_core::model::{make_preset_with_order, Equilibrium, ModelConfig};
use landau_core::scattering::{Grids, Start};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for {key}: {message}")]
    Value { key: String, message: String },
    #[error("hypotheses violated:\n  {}", .0.join("\n  "))]
    Hypotheses(Vec<String>),
}

/// Every accepted key with its default and a one-line description.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("model.preset", "vp", "vp | screened | vpme"),
    ("model.beta", "auto", "screening parameter; auto takes the preset value"),
    ("model.h_order", "12", "truncation order of the vpme nonlinearity e^U - 1 - U"),
    ("equilibrium.profile", "maxwellian", "maxwellian | two_stream | two_stream_scan | bump_on_tail | cauchy"),
    ("equilibrium.v0", "2", "two-stream half separation"),
    ("equilibrium.beam_width", "1", "two-stream beam thermal width"),
    ("equilibrium.fraction", "0.1", "bump-on-tail beam fraction"),
    ("equilibrium.drift", "4", "bump-on-tail beam velocity"),
    ("equilibrium.width", "0.5", "bump-on-tail beam thermal width"),
    ("equilibrium.lambda0", "1", "Cauchy profile width"),
    ("grid.kmax", "4", "largest Fourier mode K_max"),
    ("grid.deta", "0.125", "eta spacing"),
    ("grid.hmax", "auto", "eta half-width; auto (or any smaller value) becomes K_max T + margin"),
    ("grid.margin", "6", "eta margin beyond K_max T"),
    ("grid.dt", "0.05", "time step"),
    ("grid.horizon", "20", "final time T"),
    ("gevrey.gamma", "0.5", "Gevrey index, in (1/3, 1)"),
    ("gevrey.sigma", "12", "Sobolev correction, > 10 + d"),
    ("gevrey.lambda_inf", "0.2", "asymptotic radius"),
    ("gevrey.c_decay", "0.05", "C in lambda(t) = lambda_inf - C <t>^-delta"),
    ("gevrey.delta", "0.05", "delta in (0, 1)"),
    ("gevrey.b", "11", "time weight exponent, > 10"),
    ("gevrey.m", "2", "velocity moment order, > d/2"),
    ("datum.amplitude", "1e-3", "amplitude eps of the asymptotic profile"),
    ("datum.modes", "1:1", "comma list of k:re[:im] for k > 0; -k is the conjugate"),
    ("datum.width", "1", "velocity width: profile exp(-(width eta)^2 / 2)"),
    ("scatter.tol", "1e-9", "stop when the iterate distance is below tol"),
    ("scatter.max_iters", "25", "iteration cap"),
    ("scatter.contraction_factor", "0.9", "radius factor of the contraction norm"),
    ("scatter.ball_factor", "10", "iterates must keep N_1 <= ball_factor N[free extension]"),
    ("scatter.smallness", "inf", "largest admissible N of the free extension"),
    ("scatter.nonlinear", "true", "keep the quadratic terms"),
    ("scatter.start", "free", "free | zero"),
    ("scatter.lambda_bar", "auto", "reporting radius of the field norm; auto = 0.9 lambda(0)"),
    ("poisson.tol", "1e-13", "Picard tolerance relative to ||A q||"),
    ("poisson.max_iters", "50", "Picard iteration cap"),
    ("poisson.ball_threshold", "auto", "largest admissible ||A q||; auto = 0.05 x radius of h"),
    ("poisson.amplitude", "1e-2", "amplitude a of the manufactured potential a cos x"),
    ("penrose.kmax", "8", "modes scanned explicitly"),
    ("penrose.omega_max", "40", "imaginary-axis truncation"),
    ("penrose.samples", "4000", "imaginary-axis samples"),
    ("penrose.require_stable", "true", "fail with exit 2 when the scan reports instability"),
    ("kernel.modes", "1,2,3", "modes k whose resolvent kernel is tabulated"),
    ("damp.amplitude", "1e-4", "amplitude of the initial mode"),
    ("damp.kmax", "1", "K_max of the damping run"),
    ("damp.horizon", "30", "final time of the damping run"),
    ("damp.window_start", "5", "start of the fit window"),
    ("damp.window_end", "25", "end of the fit window"),
    ("run.out", ".", "output directory"),
    ("run.threads", "0", "worker threads; 0 uses all cores"),
    ("run.verbose", "false", "progress messages on stderr"),
];

/// Raw resolved key/value table.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

impl RawConfig {
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line: line_no, message: format!("expected `key = value`, found `{content}`") })?;
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(ConfigError::Parse { line: line_no, message: format!("missing value for `{key}`") });
            }
            raw.set(key, value).map_err(|message| ConfigError::Parse { line: line_no, message })?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.to_string();
                Ok(())
            }
            None => Err(format!("unknown key `{key}`")),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} not in the table"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let v = self.get(key);
        v.parse::<T>().map_err(|e| ConfigError::Value { key: key.into(), message: format!("`{v}`: {e}") })
    }

    fn auto_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        if self.get(key) == "auto" {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    /// Resolved configuration as config-file text.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, _, _) in KEYS {
            s.push_str(&format!("{k} = {}\n", self.get(k)));
        }
        s
    }
}

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut s = String::from("Config keys (file format: `key = value`, `#` starts a comment):\n");
    for (k, v, d) in KEYS {
        s.push_str(&format!("  {k:<28} [default: {v}]  {d}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumChoice {
    Fixed(Equilibrium),
    /// Two-stream profile selected by the built-in instability scan.
    TwoStreamScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenroseConfig {
    pub kmax: i64,
    pub omega_max: f64,
    pub samples: usize,
    pub require_stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub contraction_factor: f64,
    pub ball_factor: f64,
    pub smallness: f64,
    pub nonlinear: bool,
    pub start: Start,
    pub lambda_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub ball_threshold: Option<f64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampConfig {
    pub amplitude: f64,
    pub kmax: i64,
    pub horizon: f64,
    pub window: (f64, f64),
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub model: ModelConfig,
    pub equilibrium: EquilibriumChoice,
    pub grids: Grids,
    pub margin: f64,
    pub weight: GevreyWeight,
    pub datum: AsymptoticDatum,
    pub scatter: ScatterConfig,
    pub poisson: PoissonConfig,
    pub penrose: PenroseConfig,
    pub kernel_modes: Vec<i64>,
    pub damp: DampConfig,
    pub out: PathBuf,
    pub threads: usize,
    pub verbose: bool,
}

fn parse_modes(s: &str) -> Result<Vec<(i64, Complex64)>, String> {
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').map(str::trim).collect();
            let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{item}`: {e}"));
            let k = parts[0].parse::<i64>().map_err(|e| format!("`{item}`: {e}"))?;
            match parts.len() {
                2 => Ok((k, Complex64::new(num(parts[1])?, 0.0))),
                3 => Ok((k, Complex64::new(num(parts[1])?, num(parts[2])?))),
                _ => Err(format!("`{item}`: expected k:re or k:re:im")),
            }
        })
        .collect()
}

fn parse_bool(raw: &RawConfig, key: &str) -> Result<bool, ConfigError> {
    match raw.get(key) {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(ConfigError::Value { key: key.into(), message: format!("`{v}` is not a boolean") }),
    }
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let value_err = |key: &str, e: landau_core::Error| ConfigError::Value { key: key.into(), message: e.to_string() };
        let h_order: usize = raw.parse("model.h_order")?;
        let mut model = make_preset_with_order(raw.get("model.preset"), h_order).map_err(|e| value_err("model.preset", e))?;
        if let Some(beta) = raw.auto_f64("model.beta")? {
            model = ModelConfig::new(beta, model.h.clone(), 1, &model.label).map_err(|e| value_err("model.beta", e))?;
        }
        let f = |k: &str| raw.parse::<f64>(k);
        let equilibrium = match raw.get("equilibrium.profile") {
            "maxwellian" => EquilibriumChoice::Fixed(Equilibrium::maxwellian()),
            "two_stream" => EquilibriumChoice::Fixed(Equilibrium::two_stream_with_width(f("equilibrium.v0")?, f("equilibrium.beam_width")?)),
            "two_stream_scan" => EquilibriumChoice::TwoStreamScan,
            "bump_on_tail" => EquilibriumChoice::Fixed(Equilibrium::bump_on_tail(
                f("equilibrium.fraction")?,
                f("equilibrium.drift")?,
                f("equilibrium.width")?,
            )),
            "cauchy" => EquilibriumChoice::Fixed(Equilibrium::cauchy(f("equilibrium.lambda0")?)),
            other => return Err(ConfigError::Value { key: "equilibrium.profile".into(), message: format!("unknown profile `{other}`") }),
        };
        if let EquilibriumChoice::Fixed(eq) = &equilibrium {
            eq.validate().map_err(|e| value_err("equilibrium.profile", e))?;
        }

        let mut violations = Vec::new();
        let weight = GevreyWeight {
            gamma: f("gevrey.gamma")?,
            sigma: f("gevrey.sigma")?,
            lambda_inf: f("gevrey.lambda_inf")?,
            c_decay: f("gevrey.c_decay")?,
            delta: f("gevrey.delta")?,
            b: f("gevrey.b")?,
            m: raw.parse("gevrey.m")?,
            dimension: 1,
        };
        if let Err(landau_core::Error::Config(msg)) = weight.validate() {
            violations.extend(msg.split("; ").map(str::to_string));
        }

        let kmax: i64 = raw.parse("grid.kmax")?;
        let margin = f("grid.margin")?;
        let horizon = f("grid.horizon")?;
        let hmax = raw.auto_f64("grid.hmax")?.unwrap_or(0.0);
        let grids = Grids::new(kmax, f("grid.deta")?, hmax, f("grid.dt")?, horizon, margin).map_err(|e| value_err("grid", e))?;
        if hmax > 0.0 && hmax < kmax as f64 * horizon + margin {
            violations.push(format!(
                "grid.hmax = {hmax} violates H_max >= K_max T + margin = {} (density traces at eta = kt must stay on the grid)",
                kmax as f64 * horizon + margin
            ));
        }

        let modes = parse_modes(raw.get("datum.modes")).map_err(|m| ConfigError::Value { key: "datum.modes".into(), message: m })?;
        let datum = AsymptoticDatum::gaussian(f("datum.amplitude")?, &modes, f("datum.width")?).map_err(|e| value_err("datum.modes", e))?;
        if datum.max_mode() > kmax {
            violations.push(format!("datum mode {} exceeds grid.kmax = {kmax}", datum.max_mode()));
        }

        let start = match raw.get("scatter.start") {
            "free" => Start::FreeExtension,
            "zero" => Start::Zero,
            v => return Err(ConfigError::Value { key: "scatter.start".into(), message: format!("`{v}` is not free or zero") }),
        };
        let scatter = ScatterConfig {
            tol: f("scatter.tol")?,
            max_iters: raw.parse("scatter.max_iters")?,
            contraction_factor: f("scatter.contraction_factor")?,
            ball_factor: f("scatter.ball_factor")?,
            smallness: f("scatter.smallness")?,
            nonlinear: parse_bool(&raw, "scatter.nonlinear")?,
            start,
            lambda_bar: raw.auto_f64("scatter.lambda_bar")?,
        };
        if !(scatter.contraction_factor > 0.0 && scatter.contraction_factor <= 1.0) {
            violations.push(format!("scatter.contraction_factor = {} must lie in (0, 1]", scatter.contraction_factor));
        }
        let poisson = PoissonConfig {
            tol: f("poisson.tol")?,
            max_iters: raw.parse("poisson.max_iters")?,
            ball_threshold: raw.auto_f64("poisson.ball_threshold")?,
            amplitude: f("poisson.amplitude")?,
        };
        let penrose = PenroseConfig {
            kmax: raw.parse("penrose.kmax")?,
            omega_max: f("penrose.omega_max")?,
            samples: raw.parse("penrose.samples")?,
            require_stable: parse_bool(&raw, "penrose.require_stable")?,
        };
        let kernel_modes = raw
            .get("kernel.modes")
            .split(',')
            .map(|s| s.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ConfigError::Value { key: "kernel.modes".into(), message: e.to_string() })?;
        if kernel_modes.iter().any(|&k| k == 0) {
            violations.push("kernel.modes: the resolvent kernel is defined for k != 0".into());
        }
        let damp = DampConfig {
            amplitude: f("damp.amplitude")?,
            kmax: raw.parse("damp.kmax")?,
            horizon: f("damp.horizon")?,
            window: (f("damp.window_start")?, f("damp.window_end")?),
        };
        if !(damp.window.0 < damp.window.1 && damp.window.1 <= damp.horizon) {
            violations.push(format!("damp window {:?} must be increasing and end before damp.horizon = {}", damp.window, damp.horizon));
        }
        if !violations.is_empty() {
            return Err(ConfigError::Hypotheses(violations));
        }
        Ok(RunConfig {
            out: PathBuf::from(raw.get("run.out")),
            threads: raw.parse("run.threads")?,
            verbose: parse_bool(&raw, "run.verbose")?,
            model,
            equilibrium,
            grids,
            margin,
            weight,
            datum,
            scatter,
            poisson,
            penrose,
            kernel_modes,
            damp,
            raw,
        })
    }

    pub fn from_str_with(text: &str, overrides: &[(&str, String)]) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::parse_str(text)?;
        for (k, v) in overrides {
            raw.set(k, v).map_err(|message| ConfigError::Value { key: k.to_string(), message })?;
        }
        Self::from_raw(raw)
    }
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;
    fn from_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_str_with(text, &[])
    }
}

pub fn read_config_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    read_config_text(path)?.parse()
}
