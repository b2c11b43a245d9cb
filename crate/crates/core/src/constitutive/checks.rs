//! Property sweeps over the constitutive functions, shared by the CLI and tests.

use super::{dlog_delta, dpsi, dw, psi, quadrature, sigma, w, LatentHeat, Material, ModelParams};

/// Relative tolerance for centered finite differences against analytic derivatives.
pub const FD_REL_TOL: f64 = 1e-6;
/// Tolerance for the two surface-tension quadratures against 2√2/3.
pub const SIGMA_TOL: f64 = 1e-8;
/// Tolerance on branch values of the regularized functions.
pub const BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl PropertyCheck {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.to_string(), pass, detail }
    }
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// σ as ∫ g'² over ℝ for the optimal profile g(ξ) = tanh(ξ/√2).
pub fn sigma_from_profile() -> f64 {
    let gp = |x: f64| {
        let c = (x / std::f64::consts::SQRT_2).cosh();
        std::f64::consts::FRAC_1_SQRT_2 / (c * c)
    };
    simpson(|x| gp(x) * gp(x), -60.0, 60.0, 200_000)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn fd_check(name: &str, pts: &[f64], f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64) -> PropertyCheck {
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for &s in pts {
        let h = 1e-5 * s.abs().max(1e-3);
        let num = (f(s + h) - f(s - h)) / (2.0 * h);
        let ex = df(s);
        let rel = (num - ex).abs() / ex.abs().max(1e-3);
        if rel > worst {
            worst = rel;
            at = s;
        }
    }
    PropertyCheck::new(
        name,
        worst <= FD_REL_TOL,
        format!("max relative FD mismatch {worst:.3e} at s = {at:.4e}"),
    )
}

/// Minimum over the sampled grid of ℓ'_δ/ℓ_δ² ÷ (log'_δ)², the constant C₀.
pub fn logdelta2_constant(p: &ModelParams, pts: &[f64]) -> f64 {
    pts.iter()
        .map(|&s| {
            let ld = p.ell_delta(s);
            let lhs = p.dell_delta(s) / (ld * ld);
            let g = dlog_delta(s, p.delta);
            lhs / (g * g)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Run the full constitutive property suite for one material.
pub fn run_all(m: &Material) -> Vec<PropertyCheck> {
    let mut out = Vec::new();
    let p: &ModelParams = m;

    let s_gk = quadrature::integrate(dpsi, -1.0, 1.0, 1e-13);
    let s_prof = sigma_from_profile();
    let err = (s_gk - sigma()).abs().max((s_prof - sigma()).abs());
    out.push(PropertyCheck::new(
        "sigma_two_quadratures",
        err <= SIGMA_TOL,
        format!("gauss-kronrod {s_gk:.12}, profile {s_prof:.12}, closed form {:.12}", sigma()),
    ));

    let d11 = dw(1.1);
    out.push(PropertyCheck::new("dw_at_1.1", (d11 - 0.231).abs() <= 1e-15, format!("W'(1.1) = {d11}")));

    let lin = Material::new(ModelParams {
        alpha: 1.0,
        latent: LatentHeat::Linear { lambda: 1.0 },
        ..p.clone()
    })
    .expect("linear variant of a valid material is valid");
    let l2 = lin.lambda(2.0).unwrap_or(f64::NAN);
    out.push(PropertyCheck::new("lambda_linear_closed_form", (l2 - 2.0).abs() <= BRANCH_TOL, format!("Lambda(2) = {l2}")));
    let h1 = m.h_entropy_flux(1.0).unwrap_or(f64::NAN);
    out.push(PropertyCheck::new("h_at_one", h1.abs() <= BRANCH_TOL, format!("h(1) = {h1:e}")));

    // branch values against the defining formulas
    let d = p.delta;
    let a1 = 1.0 + p.alpha;
    let mut berr = 0.0f64;
    for &s in &[0.5 * d, 2.0 * d, 0.3, 4.0] {
        let l = p.ell(s);
        let want = if l >= d { l } else { d / (2.0 - l / d) };
        berr = berr.max((p.ell_delta(s) - want).abs());
        let want = if s >= d { s.ln() } else { s / d + d.ln() - 1.0 };
        berr = berr.max((p.log_delta(s) - want).abs());
    }
    for &s in &[-3.0, -0.1, 0.0, 0.2, 5.0] {
        let want = if s >= 0.0 {
            (s * s + d * d).powf(a1 / 2.0) / a1
        } else {
            2.0 * d.powf(a1) / (a1 * (2.0 - s))
        };
        berr = berr.max((p.heat_q_delta(s) - want).abs() / want.abs().max(1.0));
    }
    berr = berr.max((p.log_delta(d) - (d / d + d.ln() - 1.0)).abs());
    out.push(PropertyCheck::new("regularized_branches", berr <= BRANCH_TOL, format!("max deviation {berr:.3e}")));

    let mut grid = vec![0.0];
    grid.extend(log_spaced(1e-6, 1e4, 9_999));
    let c0 = logdelta2_constant(p, &grid);
    out.push(PropertyCheck::new(
        "logdelta2_inequality",
        c0 > 0.0 && c0.is_finite(),
        format!("C0 = min ratio over {} points = {c0:.6}", grid.len()),
    ));

    let pts = log_spaced(1e-2, 1e2, 100);
    out.push(fd_check("fd_w", &log_spaced(1e-2, 3.0, 100), &w, &dw));
    out.push(fd_check("fd_q", &pts, &|s| p.heat_q(s).unwrap(), &|s| p.c_v(s).unwrap()));
    out.push(fd_check("fd_kappa_hat", &pts, &|s| p.kappa_hat(s), &|s| p.kappa(s)));
    out.push(fd_check("fd_lambda", &pts, &|s| m.lambda(s).unwrap(), &|s| m.dlambda(s)));
    out.push(fd_check("fd_h", &pts, &|s| m.h_entropy_flux(s).unwrap(), &|s| p.kappa(s) / p.ell(s)));
    let psi_pts: Vec<f64> = (0..100).map(|k| -0.99 + 2.08 * k as f64 / 99.0).collect();
    out.push(fd_check("fd_psi", &psi_pts, &psi, &dpsi));

    // ℓ_δ > 0 and ℓ_δ → ℓ on (0, ∞)
    let probe = log_spaced(1e-3, 1e3, 200);
    let mut pos = true;
    let mut gaps = Vec::new();
    for k in 1..=4 {
        let q = ModelParams { delta: 10f64.powi(-k), ..p.clone() };
        pos &= (-50..=50).all(|j| q.ell_delta(j as f64 * 0.37) > 0.0) && probe.iter().all(|&s| q.ell_delta(s) > 0.0);
        gaps.push(probe.iter().map(|&s| (q.ell_delta(s) - q.ell(s)).abs()).fold(0.0, f64::max));
    }
    let shrinking = gaps.windows(2).all(|g| g[1] <= g[0]) && gaps[3] < 1e-3;
    out.push(PropertyCheck::new(
        "ell_delta_positive_and_convergent",
        pos && shrinking,
        format!("sup |ell_delta - ell| on [1e-3, 1e3] for delta = 1e-1..1e-4: {:?}", gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()),
    ));

    // monotonicity and round trips
    let samples: Vec<f64> = (-200..=400).map(|j| j as f64 * 0.05).collect();
    let mono = samples.windows(2).all(|x| p.heat_q_delta(x[1]) > p.heat_q_delta(x[0]))
        && pts.windows(2).all(|x| p.heat_q(x[1]).unwrap() > p.heat_q(x[0]).unwrap());
    let mut rt = 0.0f64;
    for &s in &samples {
        rt = rt.max((p.heat_q_delta_inv(p.heat_q_delta(s)) - s).abs() / s.abs().max(1.0));
    }
    for &s in &pts {
        rt = rt.max((p.heat_q_inv(p.heat_q(s).unwrap()).unwrap() - s).abs() / s);
    }
    out.push(PropertyCheck::new("q_monotone_roundtrip", mono && rt <= 1e-10, format!("max round-trip error {rt:.3e}")));

    if let LatentHeat::Arctan = p.latent {
        let sweep: Vec<f64> = (0..10_000).map(|k| k as f64 * 1e-3).chain(log_spaced(10.0, 1e6, 1000)).collect();
        let lam = p.latent.lambda_bound();
        let l_sup = p.latent.sup().unwrap_or(f64::INFINITY);
        let (c_ell, gamma) = p.latent.decay_constants().unwrap_or((f64::NAN, f64::NAN));
        let mut ok = p.ell(0.0) == 0.0;
        ok &= sweep.iter().all(|&s| p.ell(s) >= 0.0 && p.ell(s) <= l_sup && p.ell(s) <= lam * s + 1e-15);
        ok &= sweep.windows(2).all(|x| p.dell(x[1]) <= p.dell(x[0]));
        ok &= sweep.iter().filter(|&&s| s >= 1.0).all(|&s| 1.0 / (1.0 + s.powf(gamma)) <= c_ell * p.dell(s) * (1.0 + 1e-12));
        // largest δ₀ with ℓ(s) ≥ δ₀ ℓ'(0) s on (0, 1)
        let d0_max = sweep
            .iter()
            .filter(|&&s| s > 0.0 && s < 1.0)
            .map(|&s| p.ell(s) / (p.dell(0.0) * s))
            .fold(f64::INFINITY, f64::min);
        out.push(PropertyCheck::new(
            "latent_heat_assumptions",
            ok && d0_max > 0.0,
            format!("(a)-(d),(f) hold with L = {l_sup:.6}, lambda = {lam}, C_ell = {c_ell}, gamma = {gamma}; (e) holds for delta0 <= {d0_max:.6}"),
        ));
    }
    out
}
