use thiserror::Error;

/// Failure modes of the solver stack.
///
/// The variants are grouped by how a driver should react: configuration and
/// hypothesis problems are the caller's to fix, the numerical ones signal a
/// regime where the perturbative construction does not apply.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("equilibrium evaluation produced a non-finite value at eta = {eta}")]
    Equilibrium { eta: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("tau = {re}{im:+}i lies outside the analyticity margin (Re tau must be >= {bound})")]
    Domain { re: f64, im: f64, bound: f64 },

    #[error("near-singular resolvent for k = {k}: |D| = {value:.3e} below floor {floor:.1e} (Penrose margin violated)")]
    NearSingular { k: i64, value: f64, floor: f64 },

    #[error("inconclusive Penrose scan: tail bound {tail:.3e} >= running minimum {min:.3e}; widen k_scan_max")]
    Inconclusive { tail: f64, min: f64 },

    #[error("Volterra diagonal entry {value:.3e} too small; reduce the time step")]
    StepSize { value: f64 },

    #[error("weighted norm overflowed; use a smaller lambda_inf or a coarser sigma")]
    Overflow,

    #[error("no contraction: {0}")]
    NoContraction(String),

    #[error("power series diverges: weighted norm {norm:.3e} exceeds radius margin {radius:.3e}")]
    Divergence { norm: f64, radius: f64 },

    #[error("blow-up at t = {t}: non-finite state; reduce the time step")]
    BlowUp { t: f64 },

    #[error("iterate left the ball: {0}")]
    BallExit(String),
}

impl Error {
    /// True for failures of the numerical construction itself (as opposed to
    /// bad input or a violated model hypothesis).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::Inconclusive { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
