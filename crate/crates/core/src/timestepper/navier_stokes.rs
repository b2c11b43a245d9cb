use rayon::prelude::*;

use super::elliptic::ScalarElliptic;
use super::{StepConfig, StepError};
use crate::constitutive::ModelParams;
use crate::grid::{
    div_from_faces, grad_to_faces, korteweg_force, node_viscosity, viscous_apply_raw, viscous_diagonal, ScalarField,
    VectorField,
};
use crate::solver::{pcg, CgOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct NsOutcome {
    pub vel: VectorField,
    pub p: ScalarField,
    pub poisson_iters: usize,
    pub helmholtz_iters: usize,
    pub max_divergence: f64,
}

/// Centered (𝐯·∇)𝐯 on the faces, mirrored tangential ghosts at walls.
pub fn momentum_advection(a: &VectorField) -> VectorField {
    let g = a.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let (u, v) = (&a.u, &a.v);
    let ui = |i: usize, j: usize| u[i + j * (nx + 1)];
    let vi = |i: usize, j: usize| v[i + j * nx];
    let mut out = VectorField::zeros(g);
    out.u.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        let (jm, jp) = (j.saturating_sub(1), (j + 1).min(ny - 1));
        for i in 1..nx {
            let ux = (ui(i + 1, j) - ui(i - 1, j)) / (2.0 * dx);
            let uy = (ui(i, jp) - ui(i, jm)) / (2.0 * dy);
            let vbar = 0.25 * (vi(i - 1, j) + vi(i, j) + vi(i - 1, j + 1) + vi(i, j + 1));
            row[i] = ui(i, j) * ux + vbar * uy;
        }
    });
    out.v.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            return;
        }
        for i in 0..nx {
            let (im, ip) = (i.saturating_sub(1), (i + 1).min(nx - 1));
            let vx = (vi(ip, j) - vi(im, j)) / (2.0 * dx);
            let vy = (vi(i, j + 1) - vi(i, j - 1)) / (2.0 * dy);
            let ubar = 0.25 * (ui(i, j - 1) + ui(i + 1, j - 1) + ui(i, j) + ui(i + 1, j));
            row[i] = ubar * vx + vi(i, j) * vy;
        }
    });
    out
}

/// Predictor with explicit advection and capillary force, implicit viscosity
/// with ν(θⁿ), then projection onto discretely divergence-free fields.
pub fn step_navier_stokes(
    vel: &VectorField,
    p_old: &ScalarField,
    phi: &ScalarField,
    theta: &ScalarField,
    params: &ModelParams,
    cfg: &StepConfig,
    dt: f64,
) -> Result<NsOutcome, StepError> {
    let g = vel.grid;
    let nu: Vec<f64> = theta.values.iter().map(|&s| params.nu(s)).collect();
    let nu_node = node_viscosity(&g, &nu);
    let force = korteweg_force(phi, params.eps);
    let adv = momentum_advection(vel);

    let nu_len = g.n_u();
    let mut rhs: Vec<f64> = Vec::with_capacity(nu_len + g.n_v());
    rhs.extend(vel.u.iter().zip(&force.u).zip(&adv.u).map(|((a, f), c)| a + dt * (f - c)));
    rhs.extend(vel.v.iter().zip(&force.v).zip(&adv.v).map(|((a, f), c)| a + dt * (f - c)));
    let mut star = VectorField { grid: g, u: rhs[..nu_len].to_vec(), v: rhs[nu_len..].to_vec() };
    star.enforce_slip();
    rhs[..nu_len].copy_from_slice(&star.u);
    rhs[nu_len..].copy_from_slice(&star.v);

    let (du, dv) = viscous_diagonal(&g, &nu, &nu_node);
    let diag: Vec<f64> = du.iter().chain(&dv).map(|d| 1.0 + dt * d).collect();
    let apply = |x: &[f64], y: &mut [f64]| {
        let (xu, xv) = x.split_at(nu_len);
        let (yu, yv) = y.split_at_mut(nu_len);
        viscous_apply_raw(&g, &nu, &nu_node, xu, xv, yu, yv);
        y.par_iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi - dt * *yi);
    };
    let mut x: Vec<f64> = vel.u.iter().chain(&vel.v).copied().collect();
    let opts = CgOptions { rel_tol: cfg.poisson_tol, max_iters: cfg.max_iters, ..Default::default() };
    let visc = pcg(apply, &diag, &rhs, &mut x, &opts).map_err(|source| StepError::Solver { stage: "viscous", source })?;
    star.u.copy_from_slice(&x[..nu_len]);
    star.v.copy_from_slice(&x[nu_len..]);
    star.enforce_slip();

    // −Δp = −div 𝐯*/dt, so that 𝐯 = 𝐯* − dt∇p has div 𝐯 = −dt·r
    let b: Vec<f64> = div_from_faces(&star).values.iter().map(|d| -d / dt).collect();
    let c = vec![0.0; g.n_cells()];
    let kx = vec![1.0; g.n_u()];
    let ky = vec![1.0; g.n_v()];
    let lap = ScalarElliptic { grid: g, c: &c, kx: &kx, ky: &ky, scale: 1.0, unit: true };
    let mut p = p_old.values.clone();
    let popts = CgOptions {
        rel_tol: cfg.poisson_tol,
        abs_inf_tol: cfg.poisson_tol / dt,
        max_iters: cfg.max_iters,
        zero_mean: true,
    };
    let pst = pcg(|a, y| lap.apply(a, y), &lap.diagonal(), &b, &mut p, &popts)
        .map_err(|source| StepError::Solver { stage: "pressure", source })?;
    let p = ScalarField { grid: g, values: p };
    let gp = grad_to_faces(&p);
    star.u.iter_mut().zip(&gp.u).for_each(|(a, gr)| *a -= dt * gr);
    star.v.iter_mut().zip(&gp.v).for_each(|(a, gr)| *a -= dt * gr);
    star.enforce_slip();
    let max_divergence = div_from_faces(&star).values.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(NsOutcome { vel: star, p, poisson_iters: pst.iters, helmholtz_iters: visc.iters, max_divergence })
}
