//! CSV tables, state snapshots and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use landau_core::kinetic::SpectralState;

/// Fixed 17-significant-digit scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text from a header and rows of already formatted cells.
pub fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, name: &str, content: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)
}

/// Snapshot rows `k_index,eta_index,re,im` after a metadata comment line.
pub fn snapshot(state: &SpectralState) -> String {
    let lat = state.lattice;
    let grid = state.grid;
    let mut s = format!(
        "# t={} kmax={} n_k={} n_eta={} deta={} hmax={} k=k_index-kmax eta=(eta_index-{})*deta\n",
        num(state.t),
        lat.kmax,
        lat.len(),
        grid.len(),
        num(grid.deta),
        num(grid.hmax()),
        grid.half
    );
    s.push_str("k_index,eta_index,re,im\n");
    let n = grid.len();
    for (i, z) in state.values.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", i / n, i % n, num(z.re), num(z.im));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use landau_core::grid::{EtaGrid, Lattice};
    use num_complex::Complex64;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn snapshot_layout() {
        let s = SpectralState::from_fn(0.0, Lattice::new(1), EtaGrid::new(1, 0.5), |k, eta| Complex64::new(k as f64, eta));
        let text = snapshot(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# t="));
        assert_eq!(lines[1], "k_index,eta_index,re,im");
        assert_eq!(lines.len(), 2 + 9);
        assert_eq!(lines[2], format!("0,0,{},{}", num(-1.0), num(-0.5)));
    }
}
