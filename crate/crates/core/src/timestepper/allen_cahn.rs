use rayon::prelude::*;

use super::elliptic::ScalarElliptic;
use super::{PhiSplitting, StepConfig, StepError};
use crate::constitutive::{dw, ModelParams};
use crate::grid::{advect_scalar, ScalarField, VectorField};
use crate::solver::{pcg, CgOptions};

const NEWTON_MAX: usize = 50;

/// Allen–Cahn update with implicit diffusion. `latent` holds ℓ(θⁿ) per cell.
/// Returns the new φ and the number of CG iterations spent.
pub fn step_allen_cahn(
    phi: &ScalarField,
    vel: &VectorField,
    latent: &ScalarField,
    params: &ModelParams,
    cfg: &StepConfig,
    dt: f64,
) -> Result<(ScalarField, usize), StepError> {
    let g = phi.grid;
    let eps = params.eps;
    let r = dt / (eps * eps);
    let adv = advect_scalar(phi, vel, cfg.phi_advection);
    let kx = vec![1.0; g.n_u()];
    let ky = vec![1.0; g.n_v()];
    let opts = CgOptions { rel_tol: cfg.poisson_tol, max_iters: cfg.max_iters, ..Default::default() };
    let map_err = |source| StepError::Solver { stage: "allen-cahn", source };

    match cfg.phi_splitting {
        PhiSplitting::ExplicitW => {
            let rhs: Vec<f64> = (0..g.n_cells())
                .map(|k| {
                    let p = phi.values[k];
                    p - dt * adv.values[k] - r * dw(p) + dt * latent.values[k] / eps
                })
                .collect();
            let c = vec![1.0; g.n_cells()];
            let op = ScalarElliptic { grid: g, c: &c, kx: &kx, ky: &ky, scale: dt, unit: false };
            let mut x = phi.values.clone();
            let st = pcg(|a, b| op.apply(a, b), &op.diagonal(), &rhs, &mut x, &opts).map_err(map_err)?;
            Ok((ScalarField { grid: g, values: x }, st.iters))
        }
        PhiSplitting::ConvexSplit => {
            // W = φ⁴/4 (implicit) + (1 − 2φ²)/4 (explicit)
            let rhs: Vec<f64> = (0..g.n_cells())
                .map(|k| {
                    let p = phi.values[k];
                    p + r * p - dt * adv.values[k] + dt * latent.values[k] / eps
                })
                .collect();
            let scale = rhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let mut x = phi.values.clone();
            let mut res = vec![0.0; g.n_cells()];
            let mut c = vec![0.0; g.n_cells()];
            let mut iters = 0;
            for _ in 0..NEWTON_MAX {
                let ones = vec![1.0; g.n_cells()];
                let lin = ScalarElliptic { grid: g, c: &ones, kx: &kx, ky: &ky, scale: dt, unit: false };
                lin.apply(&x, &mut res);
                res.par_iter_mut().zip(&x).zip(&rhs).for_each(|((o, xi), b)| *o = b - (*o + r * xi * xi * xi));
                let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if worst <= 1e-13 * scale {
                    return Ok((ScalarField { grid: g, values: x }, iters));
                }
                c.iter_mut().zip(&x).for_each(|(ci, xi)| *ci = 1.0 + 3.0 * r * xi * xi);
                let jac = ScalarElliptic { grid: g, c: &c, kx: &kx, ky: &ky, scale: dt, unit: false };
                let mut dx = vec![0.0; g.n_cells()];
                let st = pcg(|a, b| jac.apply(a, b), &jac.diagonal(), &res, &mut dx, &opts).map_err(map_err)?;
                iters += st.iters;
                x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            }
            let worst = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Err(StepError::PhaseNewton { iters: NEWTON_MAX, residual: worst })
        }
    }
}
