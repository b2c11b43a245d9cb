use std::f64::consts::PI;

use nsac_core::benchmarks::*;
use nsac_core::constitutive::{psi, sigma};
use nsac_core::diagnostics::interface_energy;
use nsac_core::grid::{GridSpec, ScalarField};
use proptest::prelude::*;

#[test]
fn circle_profile_values() {
    let g = GridSpec::unit(128).unwrap();
    let eps = 0.02;
    let phi = init_tanh_circle(g, 0.3, eps, (0.5, 0.5), 1.0).unwrap();
    // cell (64, 64) sits half a diagonal cell from the center
    let d = 0.5 * 2f64.sqrt() / 128.0;
    assert!((phi.at(64, 64) - ((0.3 - d) / (2f64.sqrt() * eps)).tanh()).abs() < 1e-15);
    assert!(phi.at(64, 64) > 1.0 - 1e-6);
    // cells straddling the circle on the x axis
    let (a, b) = (phi.at(101, 64), phi.at(102, 64));
    let exact = |i: f64| ((0.3 - ((i + 0.5) / 128.0 - 0.5).hypot(0.5 / 128.0)) / (2f64.sqrt() * eps)).tanh();
    assert!(a > 0.0 && b < 0.0);
    assert!((a - exact(101.0)).abs() < 1e-12 && (b - exact(102.0)).abs() < 1e-12);
    assert!(phi.values.iter().all(|v| v.abs() < 1.0));
    let neg = init_tanh_circle(g, 0.3, eps, (0.5, 0.5), -1.0).unwrap();
    assert!(neg.values.iter().zip(&phi.values).all(|(a, b)| *a == -b));
    assert!(matches!(init_tanh_circle(g, 0.05, eps, (0.5, 0.5), 1.0), Err(BenchError::RadiusOutOfRange { .. })));
    assert!(matches!(init_tanh_circle(g, 0.45, eps, (0.5, 0.5), 1.0), Err(BenchError::RadiusOutOfRange { .. })));
}

#[test]
fn circle_interface_energy() {
    let g = GridSpec::unit(256).unwrap();
    let phi = init_tanh_circle(g, 0.3, 0.02, (0.5, 0.5), 1.0).unwrap();
    let target = sigma() * 2.0 * PI * 0.3;
    assert!((interface_energy(&phi, 0.02) - target).abs() <= 0.05 * target);
}

#[test]
fn radius_measurement() {
    let g = GridSpec::unit(128).unwrap();
    let phi = init_tanh_circle(g, 0.3, 0.02, (0.5, 0.5), 1.0).unwrap();
    let r = fit_radius(&phi).unwrap();
    assert!((r - 0.3).abs() <= g.dx(), "{r}");
    let geo = interface_geometry(&phi).unwrap();
    assert!((geo.area_radius - geo.contour_radius).abs() <= g.dx() + 0.02);
    assert!((geo.center.0 - 0.5).abs() < 1e-6 && (geo.center.1 - 0.5).abs() < 1e-6);
    assert!(geo.inner_positive);

    let moved = init_tanh_circle(g, 0.3, 0.02, (0.5 + 5.0 * g.dx(), 0.5 - 3.0 * g.dx()), 1.0).unwrap();
    assert!((fit_radius(&moved).unwrap() - r).abs() < 1e-9);

    assert_eq!(fit_radius(&ScalarField::constant(g, 1.0)), Err(BenchError::NoInterface));
    assert_eq!(fit_radius(&ScalarField::constant(g, -1.0)), Err(BenchError::NoInterface));
    let two = ScalarField::from_fn(g, |x, y| {
        let a = 0.12 - (x - 0.27).hypot(y - 0.5);
        let b = 0.12 - (x - 0.73).hypot(y - 0.5);
        (a.max(b) / 0.03).tanh()
    });
    assert!(matches!(fit_radius(&two), Err(BenchError::MultipleComponents(2))));
}

#[test]
fn front_position_of_a_plane() {
    let g = GridSpec::new(128, 8, 1.0, 8.0 / 128.0).unwrap();
    let phi = init_tanh_plane(g, 0.4, 0.02, 1.0);
    assert!((front_position(&phi).unwrap() - 0.4).abs() < 1e-3);
    assert_eq!(front_position(&ScalarField::constant(g, 1.0)), Err(BenchError::NoInterface));
}

#[test]
fn radius_law_oracle() {
    assert!((mcf_circle_oracle(0.3, 0.0, 1.0, 0.0, 0.02).unwrap() - 0.05f64.sqrt()).abs() < 1e-15);
    assert!((0.05f64.sqrt() - 0.223607).abs() < 1e-6);
    assert_eq!(mcf_circle_oracle(0.3, 0.0, 1.0, 0.0, 0.0).unwrap(), 0.3);
    assert_eq!(mcf_rk4(0.3, 0.7, 0.0).unwrap(), 0.3);
    assert!(matches!(mcf_closed_form(0.3, 0.05), Err(BenchError::Extinct { .. })));
    assert!(matches!(mcf_rk4(0.3, 0.0, 0.05), Err(BenchError::Extinct { .. })));
    // forcing 1/R0 holds the radius
    assert!((mcf_rk4(0.25, 4.0, 0.1).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn slope_fit() {
    let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64 * 0.1, 2.0 - 0.5 * k as f64 * 0.1)).collect();
    assert!((fit_slope(&pts) + 0.5).abs() < 1e-12);
}

fn short_front(ell_bar: f64) -> FrontConfig {
    FrontConfig { ell_bar, t_end: 0.1, oracle_n: 1024, ..Default::default() }
}

#[test]
fn resting_front_stays_put() {
    let rep = run_front_benchmark(&short_front(0.0)).unwrap();
    assert!(rep.metric("speed").unwrap().abs() <= 1e-4);
    assert!(rep.pass);
}

#[test]
fn front_direction_follows_the_orientation() {
    let fwd = run_front_benchmark(&short_front(0.05)).unwrap();
    let back = run_front_benchmark(&FrontConfig { orientation: -1.0, ..short_front(0.05) }).unwrap();
    let (a, b) = (fwd.metric("speed").unwrap(), back.metric("speed").unwrap());
    assert!(a.abs() > 0.05);
    assert!((a + b).abs() <= 1e-9 * a.abs(), "{a} {b}");
}

#[test]
fn front_speed_is_shift_equivariant() {
    let base = short_front(0.05);
    let dx = base.length / base.nx as f64;
    let a = run_front_benchmark(&base).unwrap().metric("speed").unwrap();
    let b = run_front_benchmark(&FrontConfig { x0: base.x0 + 6.0 * dx, ..base.clone() })
        .unwrap()
        .metric("speed")
        .unwrap();
    assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} {b}");
}

#[test]
fn shrinking_circle_radius_is_monotone() {
    let cfg = McfConfig { n: 64, eps: 0.04, r0: 0.3, ..Default::default() };
    let rep = run_mcf_benchmark(&cfg).unwrap();
    assert_eq!(rep.metric("radius_monotone"), Some(1.0));
    assert!(rep.series.windows(2).all(|w| w[1].1 <= w[0].1));
    let (t0, r0, o0) = rep.series[0];
    assert_eq!((t0, o0), (0.0, 0.3));
    assert!((r0 - 0.3).abs() < 1.0 / 64.0);
    assert!(rep.series.last().unwrap().2 <= 0.5 * 0.3 + 1e-9);
}

#[test]
fn radii_converge_at_first_order_in_dt() {
    let radii = |dt: f64| {
        let rep = run_mcf_benchmark(&McfConfig { n: 64, eps: 0.04, dt: Some(dt), ..Default::default() }).unwrap();
        rep.series.iter().map(|s| s.1).collect::<Vec<f64>>()
    };
    let dt = default_ac_dt(0.04);
    assert!((dt - 8e-5).abs() < 1e-18);
    let (a, b, c) = (radii(dt), radii(0.5 * dt), radii(0.25 * dt));
    let change = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs() / q).fold(0.0f64, f64::max);
    let ratio = change(&a, &b) / change(&b, &c);
    assert!((1.6..=2.5).contains(&ratio), "{ratio}");
}

#[test]
fn default_step_rule() {
    assert!((default_ac_dt(0.02) - 1e-5).abs() < 1e-18);
    assert!((default_ac_dt(0.01) - 1.25e-6).abs() < 1e-18);
    // the 0.1ε² cap takes over for wide interfaces
    assert_eq!(default_ac_dt(0.2), 0.1 * 0.2 * 0.2);
    assert_eq!(McfConfig::default().dt(), default_ac_dt(0.02));
}

#[test]
fn degenerate_sweep_has_one_row() {
    let cfg = SweepConfig { eps_list: vec![0.08], ..Default::default() };
    let (rep, rows) = run_energy_convergence_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rep.pass);
    assert!(run_energy_convergence_sweep(&SweepConfig { eps_list: vec![0.04, 0.08], ..Default::default() }).is_err());
}

/// ∫|ψ(φ) − σχ_disk| for the initial profile by fine midpoint quadrature.
fn psi_error(eps: f64) -> f64 {
    let n = 1024;
    let g = GridSpec::unit(n).unwrap();
    let phi = init_tanh_circle(g, 0.3, eps, (0.5, 0.5), 1.0).unwrap();
    let chi = ScalarField::from_fn(g, |x, y| if (x - 0.5).hypot(y - 0.5) < 0.3 { 1.0 } else { 0.0 });
    phi.values.iter().zip(&chi.values).map(|(p, c)| (psi(*p) - sigma() * c).abs()).sum::<f64>() * g.cell_area()
}

#[test]
fn initial_psi_error_is_first_order() {
    let (a, b) = (psi_error(0.04), psi_error(0.02));
    assert!((1.8..=2.2).contains(&(a / b)), "{a} {b}");
}

#[test]
fn hot_release_slows_the_shrinking() {
    let run = |theta0: f64| {
        let cfg = CoupledConfig { n: 64, eps: 0.05, r0: 0.25, theta0, dt: 1e-4, steps: 300, radius_every: 50, ..Default::default() };
        let out = run_coupled_release(&cfg).unwrap();
        let first = out.report.series.first().unwrap().1;
        let last = out.report.series.last().unwrap().1;
        (first - last, out.theta_floor)
    };
    let (cold, ok1) = run(1.0);
    let (hot, ok5) = run(5.0);
    assert!(ok1 && ok5);
    assert!(hot < cold, "{hot} vs {cold}");
}

#[test]
fn oversized_step_fails_cleanly() {
    let cfg = CoupledConfig { n: 32, eps: 0.04, r0: 0.25, dt: 0.05, steps: 3, ..Default::default() };
    match run_coupled_release(&cfg) {
        Err(BenchError::Step { .. }) => {}
        other => panic!("expected a step failure, got {other:?}"),
    }
}

#[test]
fn report_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut rep = BenchReport::new("demo");
    rep.series.push((0.0, 1.0, 1.0));
    rep.max_rel_error = 0.25;
    rep.pass = true;
    rep.write(dir.path()).unwrap();
    rep.write(dir.path()).unwrap();
    let verdict = std::fs::read_to_string(dir.path().join("verdict.txt")).unwrap();
    assert_eq!(verdict, "demo PASS max_rel_err=2.5e-1\ndemo PASS max_rel_err=2.5e-1\n");
    let csv = std::fs::read_to_string(dir.path().join("demo.csv")).unwrap();
    assert_eq!(csv, "t,measured,oracle\n0e0,1e0,1e0\n");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rk4_matches_the_closed_form(r0 in 0.1f64..0.5, frac in 0.0f64..0.9) {
        let t = frac * 0.5 * r0 * r0;
        let a = mcf_rk4(r0, 0.0, t).unwrap();
        let b = mcf_closed_form(r0, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-10, "{a} {b}");
    }
}
