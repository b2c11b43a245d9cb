//! One time step of the coupled system, split as φ → q → 𝐯.

mod allen_cahn;
pub(crate) mod elliptic;
mod heat;
mod navier_stokes;

use std::str::FromStr;

use thiserror::Error;

pub use allen_cahn::step_allen_cahn;
pub use heat::{conduction_flux, phase_rate, step_heat, HeatOutcome};
pub use navier_stokes::{momentum_advection, step_navier_stokes, NsOutcome};

use crate::constitutive::{d2w, dw, sigma, Material, ModelParams};
use crate::grid::{laplacian_neumann, AdvectionScheme, GridError, GridSpec, ScalarField, VectorField};
use crate::solver::SolveError;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub phi: ScalarField,
    /// Internal heat q = Q_δ(θ).
    pub q: ScalarField,
    pub vel: VectorField,
    /// Zero-mean pressure.
    pub p: ScalarField,
}

impl SimState {
    /// Resting state with the given order parameter and temperature.
    pub fn at_rest(phi: ScalarField, theta: &ScalarField, params: &ModelParams) -> Self {
        let g = phi.grid;
        Self {
            t: 0.0,
            q: theta.map(|s| params.heat_q_delta(s)),
            phi,
            vel: VectorField::zeros(g),
            p: ScalarField::zeros(g),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.phi.grid
    }

    pub fn theta(&self, params: &ModelParams) -> ScalarField {
        theta_of(&self.q, params)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        self.phi.validate()?;
        self.q.validate()?;
        self.p.validate()?;
        self.vel.validate()
    }
}

pub fn theta_of(q: &ScalarField, params: &ModelParams) -> ScalarField {
    q.map(|x| params.heat_q_delta_inv(x))
}

/// ℓ_δ(θ) per cell.
pub fn latent_of(theta: &ScalarField, params: &ModelParams) -> ScalarField {
    theta.map(|s| params.ell_delta(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiSplitting {
    ExplicitW,
    ConvexSplit,
}

impl FromStr for PhiSplitting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "explicit-w" | "explicit" => Ok(Self::ExplicitW),
            "convex-split" => Ok(Self::ConvexSplit),
            _ => Err(format!("unknown phi splitting `{s}` (expected `explicit-w` or `convex-split`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatLagging {
    /// κ frozen at the previous Newton iterate in the linearized solve.
    LagKappa,
}

impl FromStr for HeatLagging {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lag-kappa" => Ok(Self::LagKappa),
            _ => Err(format!("unknown heat lagging `{s}` (expected `lag-kappa`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub cfl_target: f64,
    pub poisson_tol: f64,
    pub max_iters: usize,
    pub phi_splitting: PhiSplitting,
    pub heat_lagging: HeatLagging,
    pub phi_advection: AdvectionScheme,
    pub q_advection: AdvectionScheme,
    /// Shrink dt to the stability bound instead of failing.
    pub adaptive_dt: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 2.5e-5,
            cfl_target: 0.4,
            poisson_tol: 1e-10,
            max_iters: 20_000,
            phi_splitting: PhiSplitting::ExplicitW,
            heat_lagging: HeatLagging::LagKappa,
            phi_advection: AdvectionScheme::Upwind2,
            q_advection: AdvectionScheme::Upwind2,
            adaptive_dt: true,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.cfl_target > 0.0 && self.cfl_target <= 0.5) {
            return Err(format!("cfl_target must lie in (0, 0.5], got {}", self.cfl_target));
        }
        if !(self.poisson_tol > 0.0 && self.poisson_tol <= 1e-4) {
            return Err(format!("poisson_tol must lie in (0, 1e-4], got {}", self.poisson_tol));
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Space integrals of the heat sources over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SourceIntegrals {
    /// ∫ν|∇𝐯+∇𝐯ᵀ|²
    pub viscous: f64,
    /// ∫ε|Dφ/Dt|²
    pub kinetic_ac: f64,
    /// ∫ℓ Dφ/Dt
    pub latent: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub dt_used: f64,
    pub poisson_iters: usize,
    pub helmholtz_iters: usize,
    pub heat_newton_iters: usize,
    pub max_divergence: f64,
    pub sources: SourceIntegrals,
    /// Heat added by flooring q at Q_δ(0) in this step.
    pub clamp_mass: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("{stage} solve failed: {source}")]
    Solver { stage: &'static str, source: SolveError },
    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e}")]
    Unstable { dt: f64, bound: f64 },
    #[error("heat Newton iteration stalled after {iters} iterations (residual {residual:.3e})")]
    HeatNewton { iters: usize, residual: f64 },
    #[error("phase Newton iteration stalled after {iters} iterations (residual {residual:.3e})")]
    PhaseNewton { iters: usize, residual: f64 },
    #[error("non-finite values after the {stage} stage")]
    NonFinite { stage: &'static str },
}

/// μ = −εΔφ + W′(φ)/ε − ℓ_δ(θ).
pub fn compute_mu(phi: &ScalarField, theta: &ScalarField, params: &ModelParams) -> ScalarField {
    let eps = params.eps;
    let lap = laplacian_neumann(phi);
    let mut out = ScalarField::zeros(phi.grid);
    for (k, o) in out.values.iter_mut().enumerate() {
        *o = -eps * lap.values[k] + dw(phi.values[k]) / eps - params.ell_delta(theta.values[k]);
    }
    out
}

/// Largest admissible step: advective CFL, explicit-reaction bound (explicit W′
/// only) and the explicit capillary bound, capped at `cfg.dt`.
pub fn stable_dt(state: &SimState, params: &ModelParams, cfg: &StepConfig) -> f64 {
    stability_bound(state, params, cfg).min(cfg.dt)
}

fn stability_bound(state: &SimState, params: &ModelParams, cfg: &StepConfig) -> f64 {
    let g = state.grid();
    let h = g.dx().min(g.dy());
    let vmax = state.vel.max_abs();
    let mut bound = f64::INFINITY;
    if vmax > 0.0 {
        bound = bound.min(cfg.cfl_target * h / vmax);
    }
    if cfg.phi_splitting == PhiSplitting::ExplicitW {
        let w2 = state.phi.values.iter().fold(0.0f64, |m, &p| m.max(d2w(p).abs()));
        if w2 > 0.0 {
            bound = bound.min(0.25 * params.eps * params.eps / w2);
        }
    }
    // surface-tension waves with unit density
    bound.min((h * h * h / (2.0 * std::f64::consts::PI * sigma())).sqrt())
}

/// Advance φ, then q, then 𝐯.
pub fn coupled_step(state: &SimState, material: &Material, cfg: &StepConfig) -> Result<(SimState, StepReport), StepError> {
    let params = material.params();
    let bound = stability_bound(state, params, cfg);
    let dt = if cfg.dt <= bound {
        cfg.dt
    } else if cfg.adaptive_dt {
        bound
    } else {
        return Err(StepError::Unstable { dt: cfg.dt, bound });
    };

    let theta = state.theta(params);
    let latent = latent_of(&theta, params);
    let (phi, ac_iters) = step_allen_cahn(&state.phi, &state.vel, &latent, params, cfg, dt)?;
    phi.validate().map_err(|_| StepError::NonFinite { stage: "allen-cahn" })?;

    let heat = step_heat(state, &phi, material, cfg, dt)?;
    heat.q.validate().map_err(|_| StepError::NonFinite { stage: "heat" })?;

    let ns = step_navier_stokes(&state.vel, &state.p, &phi, &theta, params, cfg, dt)?;
    ns.vel.validate().map_err(|_| StepError::NonFinite { stage: "navier-stokes" })?;
    ns.p.validate().map_err(|_| StepError::NonFinite { stage: "navier-stokes" })?;

    let report = StepReport {
        dt_used: dt,
        poisson_iters: ns.poisson_iters,
        helmholtz_iters: ac_iters + heat.cg_iters + ns.helmholtz_iters,
        heat_newton_iters: heat.newton_iters,
        max_divergence: ns.max_divergence,
        sources: heat.sources,
        clamp_mass: heat.clamp_mass,
    };
    let next = SimState { t: state.t + dt, phi, q: heat.q, vel: ns.vel, p: ns.p };
    Ok((next, report))
}
