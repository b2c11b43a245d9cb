//! Internal-heat update at the midpoint temperature.
//!
//! The conduction flux on a face is ∇h_δ(θ) / avg(1/ℓ_δ(θ)) with θ evaluated at
//! q^{n+½}. Paired with 1/ℓ_δ(θ) it produces a nonnegative entropy term face by face,
//! and it reduces to κ(θ)∇θ for smooth fields.

use rayon::prelude::*;

use super::elliptic::ScalarElliptic;
use super::{SimState, SourceIntegrals, StepConfig, StepError};
use crate::constitutive::Material;
use crate::grid::{advect_scalar, fixed_sum, strain_norm2, AdvectionScheme, GridSpec, ScalarField, VectorField};
use crate::solver::{pcg, CgOptions};

const NEWTON_MAX: usize = 40;
const NEWTON_TOL: f64 = 1e-13;
const NEWTON_ACCEPT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatOutcome {
    pub q: ScalarField,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub clamp_mass: f64,
    pub sources: SourceIntegrals,
}

/// Dφ/Dt ≈ (φⁿ⁺¹ − φⁿ)/dt + 𝐯ⁿ·∇φⁿ with the scheme used by the phase step.
pub fn phase_rate(
    phi_old: &ScalarField,
    phi_new: &ScalarField,
    vel: &VectorField,
    scheme: AdvectionScheme,
    dt: f64,
) -> ScalarField {
    let adv = advect_scalar(phi_old, vel, scheme);
    let mut out = phi_new.zip_map(phi_old, |a, b| (a - b) / dt);
    out.values.iter_mut().zip(&adv.values).for_each(|(o, a)| *o += a);
    out
}

/// Face conduction fluxes (u-layout, v-layout) for the given temperature; zero on walls.
pub fn conduction_flux(theta: &ScalarField, material: &Material) -> (Vec<f64>, Vec<f64>) {
    let h: Vec<f64> = theta.values.iter().map(|&s| material.h_delta(s)).collect();
    let il: Vec<f64> = theta.values.iter().map(|&s| 1.0 / material.ell_delta(s)).collect();
    flux_from(&theta.grid, &h, &il)
}

fn flux_from(g: &GridSpec, h: &[f64], il: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut fx = vec![0.0; g.n_u()];
    let mut fy = vec![0.0; g.n_v()];
    fx.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        for i in 1..nx {
            let (a, b) = (i - 1 + j * nx, i + j * nx);
            row[i] = (h[b] - h[a]) / dx / (0.5 * (il[a] + il[b]));
        }
    });
    fy.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            return;
        }
        for i in 0..nx {
            let (a, b) = (i + (j - 1) * nx, i + j * nx);
            row[i] = (h[b] - h[a]) / dy / (0.5 * (il[a] + il[b]));
        }
    });
    (fx, fy)
}

fn flux_divergence(g: &GridSpec, fx: &[f64], fy: &[f64]) -> Vec<f64> {
    let nx = g.nx;
    let (dx, dy) = (g.dx(), g.dy());
    let mut out = vec![0.0; g.n_cells()];
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for i in 0..nx {
            row[i] = (fx[i + 1 + j * (nx + 1)] - fx[i + j * (nx + 1)]) / dx + (fy[i + (j + 1) * nx] - fy[i + j * nx]) / dy;
        }
    });
    out
}

fn face_average(g: &GridSpec, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (g.nx, g.ny);
    let mut kx = vec![0.0; g.n_u()];
    let mut ky = vec![0.0; g.n_v()];
    for j in 0..ny {
        for i in 1..nx {
            kx[i + j * (nx + 1)] = 0.5 * (c[i - 1 + j * nx] + c[i + j * nx]);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            ky[i + j * nx] = 0.5 * (c[i + (j - 1) * nx] + c[i + j * nx]);
        }
    }
    (kx, ky)
}

/// Implicit-midpoint update of q = Q_δ(θ) followed by flooring at Q_δ(0).
pub fn step_heat(
    state: &SimState,
    phi_new: &ScalarField,
    material: &Material,
    cfg: &StepConfig,
    dt: f64,
) -> Result<HeatOutcome, StepError> {
    let p = material.params();
    let g = state.grid();
    let n = g.n_cells();
    let qn = &state.q.values;
    let eps = p.eps;

    let theta_n = state.theta(p);
    let nu = theta_n.map(|s| p.nu(s));
    let s_visc = strain_norm2(&state.vel, &nu).values;
    let d = phase_rate(&state.phi, phi_new, &state.vel, cfg.phi_advection, dt).values;
    let adv_q = advect_scalar(&state.q, &state.vel, cfg.q_advection).values;
    // everything except conduction and the latent sink
    let explicit: Vec<f64> = (0..n).map(|k| s_visc[k] + eps * d[k] * d[k] - adv_q[k]).collect();

    let scale = qn.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let opts = CgOptions { rel_tol: 1e-10, max_iters: cfg.max_iters, ..Default::default() };
    // returns (−R, max|R|, θ at the midpoint, ℓ_δ there)
    let residual = |q: &[f64]| {
        let w: Vec<f64> = (0..n).into_par_iter().map(|k| p.heat_q_delta_inv(0.5 * (qn[k] + q[k]))).collect();
        let h: Vec<f64> = w.par_iter().map(|&s| material.h_delta(s)).collect();
        let ell: Vec<f64> = w.par_iter().map(|&s| p.ell_delta(s)).collect();
        let il: Vec<f64> = ell.iter().map(|e| 1.0 / e).collect();
        let (fx, fy) = flux_from(&g, &h, &il);
        let div = flux_divergence(&g, &fx, &fy);
        let res: Vec<f64> =
            (0..n).into_par_iter().map(|k| -(q[k] - qn[k] - dt * (div[k] + explicit[k] - ell[k] * d[k]))).collect();
        let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (res, worst, w, ell)
    };
    let mut q = qn.clone();
    let (mut res, mut worst, mut w, mut ell) = residual(&q);
    let mut newton_iters = 0;
    let mut cg_iters = 0;
    while worst > NEWTON_TOL * scale && newton_iters < NEWTON_MAX {
        newton_iters += 1;

        // Linearize in δθ_mid: δq = 2Q_δ′(w) δθ_mid.
        let il: Vec<f64> = ell.iter().map(|e| 1.0 / e).collect();
        let cq: Vec<f64> = w.iter().map(|&s| 2.0 * p.dheat_q_delta(s)).collect();
        let c: Vec<f64> = (0..n).map(|k| (cq[k] + dt * p.dell_delta(w[k]) * d[k]).max(0.5 * cq[k])).collect();
        let kr: Vec<f64> = w.iter().map(|&s| p.kappa_delta(s) / p.ell_delta(s)).collect();
        let (ax, ay) = face_average(&g, &kr);
        let (bx, by) = face_average(&g, &il);
        let kx: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect();
        let ky: Vec<f64> = ay.iter().zip(&by).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect();
        let op = ScalarElliptic { grid: g, c: &c, kx: &kx, ky: &ky, scale: dt, unit: false };
        let mut dth = vec![0.0; n];
        let st = pcg(|a, b| op.apply(a, b), &op.diagonal(), &res, &mut dth, &opts)
            .map_err(|source| StepError::Solver { stage: "heat", source })?;
        cg_iters += st.iters;

        // backtrack across the kinks of the regularized branches
        let mut lam = 1.0;
        loop {
            let trial: Vec<f64> = q.iter().zip(&cq).zip(&dth).map(|((qk, ck), dk)| qk + lam * ck * dk).collect();
            let next = residual(&trial);
            if next.1 < worst || lam < 1.0 / 64.0 {
                q = trial;
                (res, worst, w, ell) = next;
                break;
            }
            lam *= 0.5;
        }
    }
    if !(worst <= NEWTON_ACCEPT * scale) {
        return Err(StepError::HeatNewton { iters: newton_iters, residual: worst });
    }

    let area = g.cell_area();
    let floor = p.q_floor();
    let mut clamp = vec![0.0; n];
    for (qk, ck) in q.iter_mut().zip(clamp.iter_mut()) {
        if *qk < floor {
            *ck = floor - *qk;
            *qk = floor;
        }
    }
    let kin: Vec<f64> = d.iter().map(|x| eps * x * x).collect();
    let lat: Vec<f64> = ell.iter().zip(&d).map(|(e, x)| e * x).collect();
    let sources = SourceIntegrals {
        viscous: fixed_sum(&s_visc, g.nx) * area,
        kinetic_ac: fixed_sum(&kin, g.nx) * area,
        latent: fixed_sum(&lat, g.nx) * area,
    };
    Ok(HeatOutcome {
        q: ScalarField { grid: g, values: q },
        newton_iters,
        cg_iters,
        clamp_mass: fixed_sum(&clamp, g.nx) * area,
        sources,
    })
}
