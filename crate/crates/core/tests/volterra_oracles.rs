use landau_core::dispersion::{inverse_laplace_khat, KernelOptions, ResolventTable};
use landau_core::grid::{Lattice, TimeGrid};
use landau_core::model::{make_preset, Equilibrium};
use landau_core::volterra::*;
use num_complex::Complex64;

fn gaussian_source(times: TimeGrid, lattice: Lattice) -> SourceHistory {
    ModeHistory::from_fn(times, lattice, |t, k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let kf = k as f64;
            // conjugate-symmetric in k
            Complex64::new((-0.5 * t * t).exp(), 0.3 * kf * (-t).exp() / (1.0 + kf * kf))
        }
    })
}

fn tables(lattice: Lattice, times: TimeGrid) -> Vec<ResolventTable> {
    let vp = make_preset("vp").unwrap();
    let eq = Equilibrium::maxwellian();
    let mut out = Vec::new();
    for k in 1..=lattice.kmax {
        let t = inverse_laplace_khat(&vp, &eq, k, times, KernelOptions::default()).unwrap();
        out.push(t.conjugate());
        out.push(t);
    }
    out
}

#[test]
fn contour_kernel_matches_time_domain_kernel() {
    let vp = make_preset("vp").unwrap();
    let eq = Equilibrium::maxwellian();
    let times = TimeGrid::new(400, 0.025);
    for k in 1..=3 {
        let table = inverse_laplace_khat(&vp, &eq, k, times, KernelOptions::default()).unwrap();
        // the marching scheme is sixth order; run it four times finer
        let td: Vec<_> = resolvent_kernel_time_domain(&vp, &eq, k, TimeGrid::new(1600, 0.00625)).unwrap().into_iter().step_by(4).collect();
        let diff = table.values.iter().zip(&td).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = td.iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("k={k} diff={diff:.3e} scale={scale:.3e} trunc={:.3e} lambda1={} r2={} contour={}", table.truncation_bound, table.fit_lambda1, table.fit_r2, table.contour_re);
        assert!(diff < 1e-9 * scale.max(1.0), "k={k}: {diff}");
    }
}

#[test]
fn direct_and_resolvent_paths_agree() {
    let vp = make_preset("vp").unwrap();
    let eq = Equilibrium::maxwellian();
    let times = TimeGrid::new(256, 0.0625);
    let lattice = Lattice::new(8);
    let src = gaussian_source(times, lattice);
    let direct = solve_direct_backward(&vp, &eq, &src).unwrap();
    let res = solve_resolvent(&vp, &src, &tables(lattice, times)).unwrap();
    let rel = direct.density.distance(&res.density) / direct.density.l2();
    println!("relative L2 = {rel:.3e}");
    assert!(rel < 1e-6);
    assert!(residual(&vp, &eq, &src, &direct.density).unwrap() < 1e-10 * src.max_abs());
    assert!(direct.density.reality_defect() < 1e-12);
}

#[test]
fn coarse_direct_solve_matches_fine_grid() {
    let vp = make_preset("vp").unwrap();
    let eq = Equilibrium::maxwellian();
    let lattice = Lattice::new(1);
    let f = |t: f64, k: i64| if k == 0 { Complex64::new(0.0, 0.0) } else { Complex64::new((-0.5 * t * t).exp(), 0.0) };
    let fine = TimeGrid::new(1280, 0.0125);
    let b = solve_direct_backward(&vp, &eq, &ModeHistory::from_fn(fine, lattice, f)).unwrap();
    let rel = |n: usize, dt: f64| {
        let g = TimeGrid::new(n, dt);
        let stride = 1280 / n;
        let a = solve_direct_backward(&vp, &eq, &ModeHistory::from_fn(g, lattice, f)).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..g.len() {
            num += (a.density.at(j, 1) - b.density.at(stride * j, 1)).norm_sqr();
            den += b.density.at(stride * j, 1).norm_sqr();
        }
        (num / den).sqrt()
    };
    let r64 = rel(64, 0.25);
    let r128 = rel(128, 0.125);
    println!("relative L2 against dt = 0.0125: dt=0.25 {r64:.3e}, dt=0.125 {r128:.3e}");
    // dt = 0.25 resolves the unit-width source with four points per standard
    // deviation; the end-corrected rule is still pre-asymptotic there
    assert!(r64 < 1e-4);
    assert!(r128 < 1e-5);
    assert!(r64 / r128 > 64.0);
}

#[test]
fn discrete_resolvent_identity() {
    let vp = make_preset("vp").unwrap();
    let eq = Equilibrium::maxwellian();
    let defect = |n: usize, dt: f64, k: i64| {
        let times = TimeGrid::new(n, dt);
        let table = inverse_laplace_khat(&vp, &eq, k, times, KernelOptions::default()).unwrap();
        let kappa = kernel_samples(&eq, k, times);
        let (l, kk) = operator_matrices(vp.coupling(k), &kappa, &table.values, dt);
        resolvent_identity_defect(&l, &kk)
    };
    for k in 1..=3 {
        let coarse = defect(128, 0.005, k);
        let fine = defect(256, 0.0025, k);
        println!("k={k} defect dt=0.005 {coarse:.3e}, dt=0.0025 {fine:.3e}");
        assert!(fine <= 1e-8);
        assert!(coarse / fine > 4.0);
    }
}
