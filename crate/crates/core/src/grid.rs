//! Index conventions for the truncated Fourier lattice, the velocity-frequency
//! grid and the uniform time grid. Only one space dimension is discretized.

/// Integer modes `-kmax..=kmax`, stored at index `k + kmax`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub kmax: i64,
}

impl Lattice {
    pub fn new(kmax: i64) -> Self {
        assert!(kmax >= 0, "kmax must be nonnegative");
        Lattice { kmax }
    }

    pub fn len(&self) -> usize {
        (2 * self.kmax + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, k: i64) -> usize {
        debug_assert!(k.abs() <= self.kmax);
        (k + self.kmax) as usize
    }

    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        i as i64 - self.kmax
    }

    #[inline]
    pub fn contains(&self, k: i64) -> bool {
        k.abs() <= self.kmax
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        -self.kmax..=self.kmax
    }
}

/// Symmetric uniform grid `eta_j = (j - half) * deta`, `j = 0..=2*half`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaGrid {
    pub half: usize,
    pub deta: f64,
}

impl EtaGrid {
    pub fn new(half: usize, deta: f64) -> Self {
        assert!(deta > 0.0);
        EtaGrid { half, deta }
    }

    /// Grid with spacing `deta` covering at least `[-hmax, hmax]`.
    pub fn covering(hmax: f64, deta: f64) -> Self {
        let half = (hmax / deta - 1e-9).ceil().max(1.0) as usize;
        EtaGrid::new(half, deta)
    }

    pub fn len(&self) -> usize {
        2 * self.half + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn eta(&self, j: usize) -> f64 {
        (j as f64 - self.half as f64) * self.deta
    }

    pub fn hmax(&self) -> f64 {
        self.half as f64 * self.deta
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.eta(j)).collect()
    }

    /// Index of the node mirrored through the origin.
    #[inline]
    pub fn mirror(&self, j: usize) -> usize {
        2 * self.half - j
    }
}

/// Uniform time grid `t_j = j dt`, `j = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, dt: f64) -> Self {
        assert!(dt > 0.0 && steps >= 1);
        TimeGrid { steps, dt }
    }

    /// Grid with step close to `dt` ending exactly at `horizon`.
    pub fn with_horizon(horizon: f64, dt: f64) -> Self {
        let steps = (horizon / dt).round().max(1.0) as usize;
        TimeGrid::new(steps, horizon / steps as f64)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.t(j)).collect()
    }
}

/// Japanese bracket `sqrt(1 + x^2)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `sqrt(1 + k^2 + eta^2)` for a single mode.
#[inline]
pub fn bracket2(k: f64, eta: f64) -> f64 {
    (1.0 + k * k + eta * eta).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_roundtrip() {
        let l = Lattice::new(3);
        assert_eq!(l.len(), 7);
        for k in l.modes() {
            assert_eq!(l.mode(l.index(k)), k);
        }
    }

    #[test]
    fn eta_grid_is_symmetric() {
        let g = EtaGrid::covering(10.0, 0.125);
        assert_eq!(g.hmax(), 10.0);
        for j in 0..g.len() {
            assert_eq!(g.eta(g.mirror(j)), -g.eta(j));
        }
    }

    #[test]
    fn time_grid_hits_horizon() {
        let g = TimeGrid::with_horizon(32.0, 0.05);
        assert_eq!(g.steps, 640);
        assert!((g.horizon() - 32.0).abs() < 1e-12);
    }
}
