//! Acceptance run: one PASS/FAIL line per criterion. Failures are reported, not
//! asserted, so the binary exits 0 once every criterion has been evaluated.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nsac_core::app::{parse_config, run, CHECKPOINT_FILE, DIAGNOSTICS_FILE};
use nsac_core::benchmarks::*;
use nsac_core::constitutive::{checks, sigma, w, LatentHeat, Material, ModelParams};
use nsac_core::diagnostics::{interface_energy, relative_interface_energy, tilt_excess, BoundCheck};
use nsac_core::grid::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn constitutive_exactness() -> Verdict {
    let start = Instant::now();
    let mut failed = Vec::new();
    let variants = [
        ("arctan", ModelParams::default()),
        ("linear", ModelParams { latent: LatentHeat::Linear { lambda: 1.0 }, alpha: 1.0, ..Default::default() }),
    ];
    let mut n = 0;
    for (label, p) in variants {
        let m = Material::new(p).unwrap();
        for c in checks::run_all(&m) {
            n += 1;
            if !c.pass {
                failed.push(format!("{label}/{}: {}", c.name, c.detail));
            }
        }
    }
    // σ once more from √(2W) with a plain trapezoid
    let s = trapezoid(|x| (2.0 * w(x)).sqrt(), -1.0, 1.0, 200_000);
    let sigma_ok = (s - 2.0 * 2f64.sqrt() / 3.0).abs() <= 1e-8 && (sigma() - s).abs() <= 1e-8;
    if !sigma_ok {
        failed.push(format!("trapezoid sigma {s}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < 10.0;
    verdict(pass, format!("{n} property checks, {} failed {:?}; runtime {secs:.2}s (limit 10s)", failed.len(), failed))
}

fn random_scalar(g: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField { grid: g, values: (0..g.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect() }
}

fn random_slip_vector(g: GridSpec, rng: &mut ChaCha8Rng) -> VectorField {
    let mut a = VectorField {
        grid: g,
        u: (0..g.n_u()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        v: (0..g.n_v()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    a.enforce_slip();
    a
}

fn discrete_operators() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut sbp = 0.0f64;
    for _ in 0..40 {
        let g = GridSpec::new(rng.gen_range(8..64), rng.gen_range(8..64), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0))
            .unwrap();
        let f = random_scalar(g, &mut rng);
        let a = random_slip_vector(g, &mut rng);
        let lhs = face_inner(&grad_to_faces(&f), &a);
        let rhs = -inner(&f, &div_from_faces(&a));
        let scale = face_inner(&a, &a).sqrt() * inner(&f, &f).sqrt() / g.dx().min(g.dy());
        sbp = sbp.max((lhs - rhs).abs() / scale);
    }

    let lap = |n: usize| {
        let g = GridSpec::unit(n).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (PI * x).cos() * (2.0 * PI * y).cos());
        let exact = f.map(|v| -5.0 * PI * PI * v);
        max_abs(&laplacian_neumann(&f).zip_map(&exact, |a, b| a - b).values)
    };
    let grad = |n: usize| {
        let g = GridSpec::unit(n).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (PI * x).cos() * (PI * y).cos());
        let gr = grad_to_faces(&f);
        let mut e = 0.0f64;
        for j in 0..n {
            for i in 1..n {
                let (x, y) = (i as f64 * g.dx(), (j as f64 + 0.5) * g.dy());
                e = e.max((gr.u_at(i, j) + PI * (PI * x).sin() * (PI * y).cos()).abs());
            }
        }
        e
    };
    let div = |n: usize| {
        let g = GridSpec::unit(n).unwrap();
        let a = VectorField::from_fns(g, |x, y| (PI * x).sin() * (PI * y).cos(), |x, y| (PI * x).cos() * (PI * y).sin());
        let exact = ScalarField::from_fn(g, |x, y| 2.0 * PI * (PI * x).cos() * (PI * y).cos());
        max_abs(&div_from_faces(&a).zip_map(&exact, |a, b| a - b).values)
    };
    let ratios = [lap(64) / lap(128), grad(64) / grad(128), div(64) / div(128)];
    let secs = start.elapsed().as_secs_f64();
    let pass = sbp <= 1e-12 && ratios.iter().all(|r| (3.5..=4.5).contains(r)) && secs < 30.0;
    verdict(
        pass,
        format!(
            "SBP max scaled defect {sbp:.2e} (tol 1e-12); 64->128 error ratios laplacian {:.3} grad {:.3} div {:.3} (need [3.5, 4.5]); runtime {secs:.2}s (limit 30s)",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn energy_conservation(base: &CoupledOutcome, half: &CoupledOutcome) -> Verdict {
    let ratio = base.max_drift / half.max_drift;
    let final_ratio = base.final_drift.abs() / half.final_drift.abs();
    let pass = base.max_drift <= 5e-3 && ratio >= 2.0;
    verdict(
        pass,
        format!(
            "max |E_tot - E_tot(0)|/E_tot(0) = {:.3e} (tol 5e-3); dt/2 over the same horizon: {:.3e}, reduction {ratio:.3} (need >= 2); final-time drift reduction {final_ratio:.3}",
            base.max_drift, half.max_drift
        ),
    )
}

fn entropy_production(base: &CoupledOutcome) -> Verdict {
    let pass = base.min_entropy_step >= -1e-6 && base.min_production >= 0.0 && base.weak_residual >= -1e-5;
    verdict(
        pass,
        format!(
            "min per-step dS/|S(0)| = {:.3e} (slack -1e-6); min production = {:.3e} (need >= 0); weak residual with zeta = 1 + cos(pi x) = {:.3e} (slack -1e-5); global budget slack {:.3e}",
            base.min_entropy_step,
            base.min_production,
            base.weak_residual,
            base.report.metric("budget_residual").unwrap_or(f64::NAN)
        ),
    )
}

fn phi_bounds(out: &CoupledOutcome, eps: f64) -> Verdict {
    let lo = out.records.iter().map(|r| r.phi_min).fold(f64::INFINITY, f64::min);
    let hi = out.records.iter().map(|r| r.phi_max).fold(f64::NEG_INFINITY, f64::max);
    let eps_tau = ModelParams::default().eps_tau(0.1).unwrap();
    let pass = eps < eps_tau && lo >= -1.0 - 1e-6 && hi <= 1.1 + 1e-6 && out.phi_bounds == BoundCheck::Pass;
    verdict(
        pass,
        format!("eps = {eps} < eps_tau = {eps_tau:.5}; min phi = {lo:.8}, max phi = {hi:.8} over {} records", out.records.len()),
    )
}

fn theta_positivity(base: &CoupledOutcome) -> Verdict {
    let tmin = base.records.iter().map(|r| r.theta_min).fold(f64::INFINITY, f64::min);
    let q0 = base.records[0].h_heat;
    let pass = tmin >= 0.5 && base.clamp_total <= 1e-6 * q0 && base.theta_floor;
    verdict(pass, format!("min theta = {tmin:.6} (floor 0.5); clamp mass {:.3e} (limit {:.3e})", base.clamp_total, 1e-6 * q0))
}

fn sharp_interface_mcf() -> Verdict {
    let coarse = McfConfig::default();
    let fine = McfConfig { n: 512, eps: 0.01, ..Default::default() };
    let (a, b) = match (run_mcf_benchmark(&coarse), run_mcf_benchmark(&fine)) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => return verdict(false, format!("run failed: {:?} / {:?}", a.err(), b.err())),
    };
    let pass = a.pass && a.max_rel_error <= 0.03 && b.max_rel_error < a.max_rel_error;
    verdict(
        pass,
        format!(
            "eps 0.02 at 256^2 (dt {:e}): max rel radius error {:.3e} (tol 3e-2); eps 0.01 at 512^2 (dt {:e}): {:.3e} (must be smaller)",
            coarse.dt(),
            a.max_rel_error,
            fine.dt(),
            b.max_rel_error
        ),
    )
}

fn forced_front() -> Verdict {
    let rep = match run_front_benchmark(&FrontConfig::default()) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("run failed: {e}")),
    };
    let m = |k: &str| rep.metric(k).unwrap_or(f64::NAN);
    let pass = m("err_vs_oracle") <= 0.05 && m("err_vs_solvability") <= 0.05;
    verdict(
        pass,
        format!(
            "speed {:.5} vs 1D oracle {:.5} (rel err {:.3e}, tol 5e-2); |c|/ell_bar = {:.5} vs 2/sigma = {:.5} (rel err {:.3e}, tol 5e-2)",
            m("speed"),
            m("oracle_speed"),
            m("err_vs_oracle"),
            m("ratio"),
            m("ratio_target"),
            m("err_vs_solvability")
        ),
    )
}

fn energy_convergence() -> Verdict {
    let (rep, rows) = match run_energy_convergence_sweep(&SweepConfig::default()) {
        Ok(x) => x,
        Err(e) => return verdict(false, format!("run failed: {e}")),
    };
    let strictly = |f: fn(&SweepRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let pass = rows.len() == 3 && strictly(|r| r.energy_error) && strictly(|r| r.psi_error) && rep.pass;
    let table: Vec<String> =
        rows.iter().map(|r| format!("eps {} n {}: energy {:.3e} psi {:.3e}", r.eps, r.n, r.energy_error, r.psi_error)).collect();
    verdict(pass, table.join("; "))
}

/// Smooth random field from a few Neumann cosine modes.
fn smooth_field(g: GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let modes: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(0..4) as f64, rng.gen_range(0..4) as f64, rng.gen_range(-1.0..1.0)))
        .collect();
    let c0 = rng.gen_range(-0.5..0.5);
    ScalarField::from_fn(g, |x, y| {
        let s: f64 = modes.iter().map(|(k, l, a)| a * (k * PI * x / g.lx).cos() * (l * PI * y / g.ly).cos()).sum();
        (amp * (s + c0)).tanh()
    })
}

fn tilt_coercivity() -> Verdict {
    let g = GridSpec::unit(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = f64::NEG_INFINITY;
    let mut negative = 0;
    for _ in 0..50 {
        let p = ModelParams { eps: rng.gen_range(0.02..0.1), ..Default::default() };
        let amp = rng.gen_range(0.5..20.0);
        let phi = smooth_field(g, &mut rng, amp);
        let zeta = smooth_field(g, &mut rng, 1.0).map(|z| 1.0 + z);
        let (a1, a2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let mut xi = VectorField::from_fns(g, |x, y| (PI * x).sin() * (a1 * y).cos(), |x, y| (PI * y).sin() * (a2 * x).sin());
        xi.enforce_slip();
        let (cx, cy) = cell_velocity(&xi);
        let top = cx.iter().zip(&cy).map(|(a, b)| a.hypot(*b)).fold(0.0f64, f64::max);
        let s = rng.gen_range(0.0..1.0) / top.max(1e-12);
        xi.u.iter_mut().chain(xi.v.iter_mut()).for_each(|v| *v *= s);

        let rel = relative_interface_energy(&phi, &zeta, &xi, &p).unwrap();
        let (ge, ee) = tilt_excess(&phi, &zeta, &xi, &p).unwrap();
        if ge < 0.0 || ee < 0.0 {
            negative += 1;
        }
        worst = worst.max((ge.max(ee) - rel) / interface_energy(&phi, p.eps).max(1.0));
    }
    // the discrete identity is exact, so the fitted dx constant is the positive part of the defect
    let c_dx = (worst - 1e-8).max(0.0) / g.dx();
    let pass = negative == 0 && worst <= 1e-8;
    verdict(
        pass,
        format!("50 samples at 64^2: max (excess - relative energy)/scale = {worst:.3e} (allowance 1e-8); measured dx constant {c_dx:.3e}; negative excess in {negative}"),
    )
}

fn engineering() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let cfg = |dir: &Path, extra: &str| {
        format!(
            "grid.nx = 32\nmodel.eps = 0.05\ninit.r0 = 0.25\ninit.noise = 0.02\nrun.seed = 3\nstep.dt = 2e-4\n\
             step.adaptive_dt = false\nrun.outdir = {}\n{extra}",
            dir.display()
        )
    };
    let go = |dir: &Path, extra: &str| run(&parse_config(&cfg(dir, extra)).unwrap()).unwrap();
    let (a, b, c, d) = (root.path().join("a"), root.path().join("b"), root.path().join("c"), root.path().join("d"));
    go(&a, "run.t_end = 4e-3\n");
    go(&b, "run.t_end = 4e-3\n");
    let same = [DIAGNOSTICS_FILE, CHECKPOINT_FILE].iter().all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap());

    let head = go(&c, "run.t_end = 2e-3\n");
    let resume = format!(
        "grid.nx = 32\nmodel.eps = 0.05\ninit.kind = checkpoint\ninit.path = {}\nstep.dt = 2e-4\nstep.adaptive_dt = false\n\
         run.t_end = 4e-3\nrun.outdir = {}\n",
        c.join(CHECKPOINT_FILE).display(),
        d.display()
    );
    let tail = run(&parse_config(&resume).unwrap()).unwrap();
    let splice = (tail.first.e_tot - head.last.e_tot).abs() / head.last.e_tot;

    let rejections = [
        ("grid.nx = 32\nmodel.alpha = 0.4\n", 2, "alpha must lie in (0.5, 1]"),
        ("grid.nx = 32\n\nmodel.alpha = 1.5\n", 3, "alpha must lie in (0.5, 1]"),
        ("grid.nx = 32\nmodel.beta = 1.9\n", 2, "beta must be >= 2"),
        ("grid.nx = 32\nmodel.eps = 0.05\nmodel.delta = 0.9\n", 3, "delta must be below"),
    ];
    let mut rejected = 0;
    for (text, line, msg) in rejections {
        if let Err(e) = parse_config(text) {
            if e.line == Some(line) && e.message.contains(msg) {
                rejected += 1;
            }
        }
    }
    let pass = same && splice <= 1e-12 && rejected == rejections.len();
    verdict(
        pass,
        format!(
            "reruns byte-identical: {same}; E_tot splice {splice:.2e} (tol 1e-12); {rejected}/{} invalid configs rejected at the right line",
            rejections.len()
        ),
    )
}

fn main() {
    let total = Instant::now();
    let mut results: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut record = |k: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {k:>2} {name}: {} {} [{secs:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((k, name, v, secs));
    };

    record(1, "constitutive exactness", &mut constitutive_exactness);
    record(2, "discrete operators", &mut discrete_operators);

    let base_cfg = CoupledConfig::default();
    let half_cfg = CoupledConfig { dt: 0.5 * base_cfg.dt, steps: 2 * base_cfg.steps, ..base_cfg.clone() };
    let t = Instant::now();
    let coupled = run_coupled_release(&base_cfg);
    let halved = run_coupled_release(&half_cfg);
    let shared = t.elapsed().as_secs_f64();
    match (&coupled, &halved) {
        (Ok(base), Ok(half)) => {
            record(3, "energy conservation", &mut || {
                let v = energy_conservation(base, half);
                verdict(v.pass, format!("{}; both runs took {shared:.1}s", v.detail))
            });
            record(4, "entropy production", &mut || entropy_production(base));
            record(6, "theta positivity", &mut || theta_positivity(base));
        }
        _ => {
            let why = format!("coupled run failed: {:?} / {:?}", coupled.as_ref().err(), halved.as_ref().err());
            for (k, name) in [(3, "energy conservation"), (4, "entropy production"), (6, "theta positivity")] {
                record(k, name, &mut || verdict(false, why.clone()));
            }
        }
    }
    // R0 < 1/2 − 4ε leaves R0 = 0.25, which collapses near t = 0.045; stop at t = 0.025
    let wide = CoupledConfig { eps: 0.05, r0: 0.25, steps: 1000, ..CoupledConfig::default() };
    record(5, "phi bounds", &mut || match run_coupled_release(&wide) {
        Ok(out) => phi_bounds(&out, wide.eps),
        Err(e) => verdict(false, format!("run failed: {e}")),
    });
    record(7, "sharp-interface MCF", &mut sharp_interface_mcf);
    record(8, "forced front", &mut forced_front);
    record(9, "energy convergence", &mut energy_convergence);
    record(10, "tilt-excess coercivity", &mut tilt_coercivity);
    record(11, "engineering", &mut engineering);

    results.sort_by_key(|r| r.0);
    let passed = results.iter().filter(|r| r.2.pass).count();
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    println!(
        "acceptance: {passed}/{} PASS{} [{:.1}s]",
        results.len(),
        if failed.is_empty() { String::new() } else { format!(", FAIL: {}", failed.join(", ")) },
        total.elapsed().as_secs_f64()
    );
}
