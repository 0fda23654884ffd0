use landau_core::dispersion::dispersion_roots;
use landau_core::error::Error;
use landau_core::field::PoissonOptions;
use landau_core::gevrey::GevreyWeight;
use landau_core::kinetic::AsymptoticDatum;
use landau_core::model::{make_preset, Equilibrium};
use landau_core::scattering::{linear_damping, Grids, ScatterOptions, Scatterer, Start};

fn scatterer(model: &str, eps: f64, start: Start) -> Scatterer {
    let model = make_preset(model).unwrap();
    let grids = Grids::new(2, 0.125, 0.0, 0.1, 8.0, 6.0).unwrap();
    let mut opts = ScatterOptions::for_model(&model);
    opts.start = start;
    opts.tol = 1e-10;
    Scatterer::new(model, Equilibrium::maxwellian(), GevreyWeight::default(), grids, AsymptoticDatum::single_mode(eps), opts).unwrap()
}

#[test]
fn free_extension_and_zero_start_reach_the_same_initial_state() {
    for model in ["vp", "vpme"] {
        let a = scatterer(model, 1e-3, Start::FreeExtension).fixed_point_drive().unwrap();
        let b = scatterer(model, 1e-3, Start::Zero).fixed_point_drive().unwrap();
        assert!(a.converged && b.converged);
        assert!(a.contraction_ratios.iter().all(|r| *r < 1.0));
        let d = a.g0.sup_distance(&b.g0);
        assert!(d <= 1e-12, "{model}: {d:e}");
        let scale = a.solution.volterra_density.max_abs();
        assert!(a.trace_defect <= 1e-5 * scale, "{:e}", a.trace_defect);
    }
}

#[test]
fn linearized_map_is_a_single_step() {
    let model = make_preset("vp").unwrap();
    let grids = Grids::new(2, 0.125, 0.0, 0.1, 8.0, 6.0).unwrap();
    let mut opts = ScatterOptions::for_model(&model);
    opts.nonlinear = false;
    let s = Scatterer::new(model, Equilibrium::maxwellian(), GevreyWeight::default(), grids, AsymptoticDatum::single_mode(1e-3), opts).unwrap();
    let run = s.fixed_point_drive().unwrap();
    assert!(run.converged);
    // the second image only differs by roundoff
    assert!(run.iterates[2].distance <= 1e-9 * run.iterates[1].distance);
}

#[test]
fn round_trip_returns_to_the_datum() {
    let s = scatterer("screened", 1e-3, Start::FreeExtension);
    let run = s.fixed_point_drive().unwrap();
    let rt = s.roundtrip_check(&run).unwrap();
    assert!(rt.spectral_error <= 10.0 * (s.options.tol + rt.step_doubling_difference), "{rt:?}");
    assert!(rt.final_quarter_nonincreasing);
    assert!(rt.mass_drift <= 1e-12);
}

#[test]
fn oversized_datum_is_rejected() {
    let model = make_preset("vp").unwrap();
    let grids = Grids::new(2, 0.125, 0.0, 0.1, 8.0, 6.0).unwrap();
    let mut opts = ScatterOptions::for_model(&model);
    opts.smallness = 1.0;
    let s = Scatterer::new(model, Equilibrium::maxwellian(), GevreyWeight::default(), grids, AsymptoticDatum::single_mode(1e-3), opts).unwrap();
    assert!(matches!(s.fixed_point_drive(), Err(Error::BallExit(_))));
}

#[test]
fn small_amplitude_field_decays_at_the_landau_rate() {
    let model = make_preset("vp").unwrap();
    let grids = Grids::new(1, 0.125, 0.0, 0.05, 30.0, 6.0).unwrap();
    let rep = linear_damping(&model, &Equilibrium::maxwellian(), &GevreyWeight::default(), 1e-4, grids, (5.0, 25.0), PoissonOptions::for_model(&model)).unwrap();
    let root = dispersion_roots(&model, &Equilibrium::maxwellian(), 1, 3.0, 4.0).unwrap()[0];
    assert_eq!(rep.root, root);
    assert!(rep.relative_error <= 0.05, "measured {} root {}", rep.measured_rate, root);
}

#[test]
fn trace_consistency_improves_with_the_eta_step() {
    let defect = |deta: f64| {
        let model = make_preset("vp").unwrap();
        let grids = Grids::new(2, deta, 0.0, 0.1, 8.0, 6.0).unwrap();
        let opts = ScatterOptions::for_model(&model);
        let s = Scatterer::new(model, Equilibrium::maxwellian(), GevreyWeight::default(), grids, AsymptoticDatum::single_mode(1e-3), opts).unwrap();
        s.fixed_point_drive().unwrap().trace_defect
    };
    let (a, b) = (defect(0.25), defect(0.125));
    assert!(a / b > 8.0, "{a:e} {b:e}");
}
