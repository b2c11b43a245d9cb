use std::f64::consts::PI;

use nsac_core::constitutive::{LatentHeat, Material, ModelParams};
use nsac_core::diagnostics::{entropy_production_terms, record};
use nsac_core::grid::*;
use nsac_core::timestepper::*;
use proptest::prelude::*;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn fixed_dt(dt: f64) -> StepConfig {
    StepConfig { dt, adaptive_dt: false, ..Default::default() }
}

#[test]
fn chemical_potential_of_uniform_states() {
    let g = GridSpec::unit(16).unwrap();
    let p = ModelParams::default();
    let theta = ScalarField::constant(g, 0.7);
    let c = p.ell_delta(0.7);
    for phi in [1.0, 0.0] {
        let mu = compute_mu(&ScalarField::constant(g, phi), &theta, &p);
        assert!(mu.values.iter().all(|&m| (m + c).abs() < 1e-15));
    }
}

#[test]
fn chemical_potential_vanishes_on_the_equilibrium_profile() {
    let p = ModelParams { eps: 0.02, ..Default::default() };
    // θ = 0 gives ℓ_δ(0) = δ
    let err = |n: usize| {
        let g = GridSpec::new(n, 8, 1.0, 8.0 / n as f64).unwrap();
        let phi = ScalarField::from_fn(g, |x, _| ((x - 0.5) / (2f64.sqrt() * p.eps)).tanh());
        let mu = compute_mu(&phi, &ScalarField::zeros(g), &p);
        max_abs(&mu.map(|m| m + p.delta).values)
    };
    let (a, b) = (err(256), err(512));
    assert!(b < 0.05, "{b}");
    assert!((3.5..=4.5).contains(&(a / b)), "ratio {}", a / b);
}

#[test]
fn pure_phases_are_fixed_points_without_latent_forcing() {
    let g = GridSpec::unit(24).unwrap();
    let p = ModelParams::default();
    let zero = ScalarField::zeros(g);
    for splitting in [PhiSplitting::ExplicitW, PhiSplitting::ConvexSplit] {
        let cfg = StepConfig { phi_splitting: splitting, ..fixed_dt(1e-4) };
        for s in [1.0, -1.0] {
            let phi = ScalarField::constant(g, s);
            let (next, _) = step_allen_cahn(&phi, &VectorField::zeros(g), &zero, &p, &cfg, cfg.dt).unwrap();
            assert!(next.values.iter().all(|&x| (x - s).abs() <= 1e-14), "{splitting:?} {s}");
        }
    }
}

#[test]
fn unstable_uniform_state_moves_toward_one() {
    let g = GridSpec::unit(8).unwrap();
    let p = ModelParams::default();
    let zero = ScalarField::zeros(g);
    let cfg = fixed_dt(1e-4);
    let mut phi = ScalarField::constant(g, 0.5);
    let mut last = 0.5;
    for _ in 0..400 {
        phi = step_allen_cahn(&phi, &VectorField::zeros(g), &zero, &p, &cfg, cfg.dt).unwrap().0;
        let v = phi.values[0];
        let spread = phi.values.iter().fold(0.0f64, |m, &x| m.max((x - v).abs()));
        // CG stops at a 1e-10 relative residual
        assert!(spread <= 1e-9, "{spread}");
        assert!(v <= 1.0 + 1e-9);
        if last < 1.0 - 1e-6 {
            assert!(v > last);
        }
        last = v;
    }
    assert!(last > 0.99);
}

#[test]
fn heat_step_leaves_a_resting_uniform_state_alone() {
    let g = GridSpec::unit(16).unwrap();
    let m = Material::new(ModelParams::default()).unwrap();
    let state = SimState::at_rest(ScalarField::constant(g, 1.0), &ScalarField::constant(g, 0.8), m.params());
    let out = step_heat(&state, &state.phi, &m, &fixed_dt(1e-3), 1e-3).unwrap();
    for (a, b) in out.q.values.iter().zip(&state.q.values) {
        assert!((a - b).abs() <= 1e-14 * b);
    }
    assert_eq!(out.clamp_mass, 0.0);
}

#[test]
fn insulated_conduction_conserves_heat() {
    let g = GridSpec::unit(32).unwrap();
    let m = Material::new(ModelParams::default()).unwrap();
    let theta = ScalarField::from_fn(g, |x, y| 0.5 + 2.0 * (-((x - 0.4).powi(2) + (y - 0.6).powi(2)) / 0.01).exp());
    let mut state = SimState::at_rest(ScalarField::constant(g, -1.0), &theta, m.params());
    let cfg = fixed_dt(1e-3);
    for _ in 0..10 {
        let before = integrate(&state.q);
        let out = step_heat(&state, &state.phi, &m, &cfg, cfg.dt).unwrap();
        assert!((integrate(&out.q) - before).abs() <= 1e-10 * before);
        assert!(max(&out.q) < max(&state.q));
        state.q = out.q;
    }
}

#[test]
fn viscous_heating_matches_the_dissipation() {
    let n = 64;
    let g = GridSpec::unit(n).unwrap();
    let nu = 0.05;
    let amp = 0.5;
    let m = Material::new(ModelParams { nu1: nu, nu2: nu, ..Default::default() }).unwrap();
    let mut state = SimState::at_rest(ScalarField::constant(g, 1.0), &ScalarField::constant(g, 1.0), m.params());
    // a closed slip box admits no pure u(y) shear; this cosine mode is impermeable
    // and stress-free at the walls, with |∇𝐯 + ∇𝐯ᵀ|² = 8π²a²cos²(πx)cos²(πy)
    state.vel = VectorField::from_fns(
        g,
        |x, y| amp * (PI * x).sin() * (PI * y).cos(),
        |x, y| -amp * (PI * x).cos() * (PI * y).sin(),
    );
    state.vel.enforce_slip();
    let cfg = fixed_dt(1e-3);
    let q0 = integrate(&state.q);
    let mut booked = 0.0;
    for _ in 0..100 {
        let out = step_heat(&state, &state.phi, &m, &cfg, cfg.dt).unwrap();
        booked += cfg.dt * out.sources.viscous;
        state.q = out.q;
    }
    let gained = integrate(&state.q) - q0;
    let exact = 100.0 * cfg.dt * 2.0 * nu * amp * amp * PI * PI;
    assert!((gained - exact).abs() <= 0.02 * exact, "{gained} vs {exact}");
    assert!((gained - booked).abs() <= 1e-10 * exact, "{gained} vs {booked}");
}

#[test]
fn resting_fluid_stays_at_rest() {
    let g = GridSpec::unit(16).unwrap();
    let p = ModelParams::default();
    let phi = ScalarField::constant(g, 1.0);
    let theta = ScalarField::constant(g, 1.0);
    let out = step_navier_stokes(&VectorField::zeros(g), &ScalarField::zeros(g), &phi, &theta, &p, &fixed_dt(1e-3), 1e-3)
        .unwrap();
    assert!(out.vel.u.iter().chain(&out.vel.v).all(|&x| x == 0.0));
}

#[test]
fn cosine_vortex_decays_at_the_stokes_rate() {
    let n = 128;
    let g = GridSpec::unit(n).unwrap();
    let nu = 0.01;
    let p = ModelParams { nu1: nu, nu2: nu, ..Default::default() };
    let phi = ScalarField::constant(g, 1.0);
    let theta = ScalarField::constant(g, 1.0);
    let mut vel = VectorField::from_fns(
        g,
        |x, y| (PI * x).sin() * (PI * y).cos(),
        |x, y| -(PI * x).cos() * (PI * y).sin(),
    );
    let mut pr = ScalarField::zeros(g);
    let cfg = fixed_dt(1e-3);
    let steps = 200;
    let k0 = kinetic_energy(&vel);
    for _ in 0..steps {
        let out = step_navier_stokes(&vel, &pr, &phi, &theta, &p, &cfg, cfg.dt).unwrap();
        vel = out.vel;
        pr = out.p;
    }
    let measured = -(kinetic_energy(&vel) / k0).ln() / (steps as f64 * cfg.dt);
    // |∇𝐯 + ∇𝐯ᵀ|² form: energy rate 2ν|k|², |k|² = 2π²
    let exact = 2.0 * nu * 2.0 * PI * PI;
    assert!((measured - exact).abs() <= 0.03 * exact, "{measured} vs {exact}");
}

#[test]
fn planar_interface_at_rest_has_small_spurious_currents() {
    let g = GridSpec::new(64, 64, 1.0, 1.0).unwrap();
    let p = ModelParams { eps: 0.04, ..Default::default() };
    let phi = ScalarField::from_fn(g, |x, _| ((x - 0.5) / (2f64.sqrt() * p.eps)).tanh());
    let theta = ScalarField::constant(g, 1.0);
    let mut vel = VectorField::zeros(g);
    let mut pr = ScalarField::zeros(g);
    let cfg = fixed_dt(1e-4);
    for _ in 0..100 {
        let out = step_navier_stokes(&vel, &pr, &phi, &theta, &p, &cfg, cfg.dt).unwrap();
        vel = out.vel;
        pr = out.p;
    }
    assert!(vel.max_abs() <= 1e-3, "{}", vel.max_abs());
    assert!(integrate(&pr).abs() < 1e-10);
}

#[test]
fn stable_dt_rules() {
    let g = GridSpec::unit(32).unwrap();
    let p = ModelParams::default();
    let cfg = StepConfig { dt: 1.0, ..Default::default() };
    let mut state = SimState::at_rest(ScalarField::constant(g, 1.0), &ScalarField::constant(g, 1.0), &p);
    let rest = stable_dt(&state, &p, &cfg);
    assert!(rest > 0.0 && rest <= cfg.dt);
    let h = g.dx();
    let capillary = (h * h * h / (2.0 * PI * nsac_core::constitutive::sigma())).sqrt();
    assert!(rest <= 0.25 * p.eps * p.eps / 2.0 + 1e-18 && rest <= capillary);

    state.vel = VectorField::from_fns(g, |_, _| 0.0, |_, _| 0.0);
    state.vel.u[40] = 1e3;
    let a = stable_dt(&state, &p, &cfg);
    assert!((a - cfg.cfl_target * h / 1e3).abs() < 1e-18);
    state.vel.u[40] = 2e3;
    let b = stable_dt(&state, &p, &cfg);
    assert!((a / b - 2.0).abs() < 1e-12);
    assert!(stable_dt(&state, &p, &StepConfig { dt: 1e-9, ..cfg }) == 1e-9);
}

#[test]
fn fixed_dt_beyond_the_bound_is_refused() {
    let g = GridSpec::unit(16).unwrap();
    let m = Material::new(ModelParams::default()).unwrap();
    let state = SimState::at_rest(ScalarField::constant(g, -1.0), &ScalarField::constant(g, 1.0), m.params());
    assert!(matches!(coupled_step(&state, &m, &fixed_dt(1.0)), Err(StepError::Unstable { .. })));
    let (next, rep) = coupled_step(&state, &m, &StepConfig { dt: 1.0, ..Default::default() }).unwrap();
    assert!(rep.dt_used < 1.0);
    assert_eq!(next.t, state.t + rep.dt_used);
}

#[test]
fn step_config_validation() {
    assert!(StepConfig { poisson_tol: 1e-3, ..Default::default() }.validate().is_err());
    assert!(StepConfig { dt: 0.0, ..Default::default() }.validate().is_err());
    assert!(StepConfig { cfl_target: 0.6, ..Default::default() }.validate().is_err());
    assert!(StepConfig::default().validate().is_ok());
    assert!("lag-kappa".parse::<HeatLagging>().is_ok());
    assert!("implicit".parse::<PhiSplitting>().is_err());
}

#[test]
fn coupled_run_keeps_the_monitored_invariants() {
    let n = 64;
    let g = GridSpec::unit(n).unwrap();
    let m = Material::new(ModelParams { eps: 0.05, ..Default::default() }).unwrap();
    let p = m.params().clone();
    let phi = ScalarField::from_fn(g, |x, y| {
        let r = (x - 0.5).hypot(y - 0.5);
        ((0.3 - r) / (2f64.sqrt() * p.eps)).tanh()
    });
    let mut state = SimState::at_rest(phi, &ScalarField::constant(g, 1.0), &p);
    let cfg = fixed_dt(1e-4);
    let q_floor = p.q_floor();
    let mut prev_rec = record(&state, &m, 0.0, 0.0);
    for _ in 0..200 {
        let (next, rep) = coupled_step(&state, &m, &cfg).unwrap();
        let rec = record(&next, &m, rep.max_divergence, rep.clamp_mass);
        assert!(rec.is_finite());
        assert!((rec.e_tot - (rec.e_kin + rec.e_int + rec.h_heat)).abs() <= 1e-12 * rec.e_tot);
        assert!(next.q.values.iter().all(|&q| q >= q_floor));
        assert!(rep.max_divergence <= 10.0 * cfg.poisson_tol, "{}", rep.max_divergence);
        assert!(integrate(&next.p).abs() <= 1e-10);
        assert!(rec.phi_min >= -1.0 - 1e-6 && rec.phi_max <= 1.1 + 1e-6);
        assert!(rec.entropy - prev_rec.entropy >= -1e-8);
        assert!(rec.theta_min >= 0.5);
        let pr = entropy_production_terms(&state, &next, rep.dt_used, &m, &cfg);
        assert!(pr.viscous >= 0.0 && pr.conduction >= 0.0 && pr.kinetic >= 0.0);
        assert!(rep.sources.viscous >= 0.0 && rep.sources.kinetic_ac >= 0.0);
        state = next;
        prev_rec = rec;
    }
    assert!((state.t - 200.0 * cfg.dt).abs() < 1e-15);
}

#[test]
fn linear_latent_heat_runs() {
    let g = GridSpec::unit(32).unwrap();
    let m = Material::new(ModelParams { latent: LatentHeat::Linear { lambda: 1.0 }, alpha: 1.0, ..Default::default() })
        .unwrap();
    let phi = ScalarField::from_fn(g, |x, _| ((x - 0.5) / 0.06).tanh());
    let mut state = SimState::at_rest(phi, &ScalarField::constant(g, 0.5), m.params());
    for _ in 0..20 {
        state = coupled_step(&state, &m, &fixed_dt(1e-4)).unwrap().0;
    }
    assert!(state.validate().is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heat_floor_and_incompressibility_hold(theta0 in 0.05f64..3.0, amp in 0.0f64..0.95, r0 in 0.15f64..0.3) {
        let g = GridSpec::unit(24).unwrap();
        let m = Material::new(ModelParams { eps: 0.06, ..Default::default() }).unwrap();
        let p = m.params().clone();
        let phi = ScalarField::from_fn(g, |x, y| ((r0 - (x - 0.5).hypot(y - 0.5)) / (2f64.sqrt() * p.eps)).tanh());
        let theta = ScalarField::from_fn(g, |x, y| theta0 * (1.0 + amp * (PI * x).cos() * (PI * y).cos()));
        let mut state = SimState::at_rest(phi, &theta, &p);
        state.vel = VectorField::from_fns(g, |x, y| 0.3 * (PI * x).sin() * (PI * y).cos(), |x, y| -0.3 * (PI * x).cos() * (PI * y).sin());
        let cfg = fixed_dt(2e-4);
        for _ in 0..5 {
            let (next, rep) = coupled_step(&state, &m, &cfg).unwrap();
            prop_assert!(next.q.values.iter().all(|&q| q >= p.q_floor()));
            prop_assert!(rep.max_divergence <= 10.0 * cfg.poisson_tol);
            prop_assert!(rep.clamp_mass >= 0.0);
            prop_assert!(next.t == state.t + rep.dt_used);
            state = next;
        }
    }
}
