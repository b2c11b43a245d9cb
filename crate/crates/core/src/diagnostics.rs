//! Monitored functionals: energies, entropy and its production, bounds,
//! equipartition and relative interface energies.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::constitutive::{dpsi, psi, sigma, w, Material, ModelParams};
use crate::grid::{
    cell_gradient, cell_velocity, fixed_sum, grad_sq_cells, kinetic_energy, laplacian_neumann, max, min,
    strain_norm2, ScalarField, VectorField,
};
use crate::timestepper::{conduction_flux, phase_rate, theta_of, SimState, StepConfig};

/// Tie-break direction for the diffuse normal where ∇φ vanishes.
pub const TIE_BREAK: [f64; 2] = [1.0, 0.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("series are misaligned: {records} records for {productions} production intervals")]
    Misaligned { records: usize, productions: usize },
    #[error("|xi| exceeds 1 at cell ({i}, {j}): {norm}")]
    XiTooLarge { i: usize, j: usize, norm: f64 },
    #[error("xi has a nonzero normal component on the boundary")]
    XiBoundary,
    #[error("zeta must be nonnegative, found {0} ")]
    NegativeZeta(f64),
    #[error("need at least one state")]
    Empty,
}

pub const CSV_HEADER: &str =
    "t,E_tot,E_kin,E_int,H_heat,S,phi_min,phi_max,theta_min,theta_max,equip_disc,perimeter_est,max_div,clamp_mass";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub e_tot: f64,
    pub e_kin: f64,
    pub e_int: f64,
    pub h_heat: f64,
    pub entropy: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub equip_disc: f64,
    pub perimeter_est: f64,
    pub max_div: f64,
    /// Cumulative heat added by the q floor.
    pub clamp_mass: f64,
}

impl DiagRecord {
    pub fn values(&self) -> [f64; 14] {
        [
            self.t,
            self.e_tot,
            self.e_kin,
            self.e_int,
            self.h_heat,
            self.entropy,
            self.phi_min,
            self.phi_max,
            self.theta_min,
            self.theta_max,
            self.equip_disc,
            self.perimeter_est,
            self.max_div,
            self.clamp_mass,
        ]
    }

    /// Shortest round-trip formatting, so rows are reproducible bit for bit.
    pub fn csv_row(&self) -> String {
        self.values().iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

/// Interface energy density ε|∇φ|²/2 + W(φ)/ε, gradient from face differences.
pub fn interface_energy_density(phi: &ScalarField, eps: f64) -> ScalarField {
    let gsq = grad_sq_cells(phi);
    phi.zip_map(&gsq, |p, g2| 0.5 * eps * g2 + w(p) / eps)
}

pub fn interface_energy(phi: &ScalarField, eps: f64) -> f64 {
    sum_cells(&interface_energy_density(phi, eps))
}

fn sum_cells(f: &ScalarField) -> f64 {
    fixed_sum(&f.values, f.grid.nx) * f.grid.cell_area()
}

/// |∇ψ(φ)| per cell, with ∇ψ = √(2W(φ)) times the centered gradient.
pub fn grad_psi_norm(phi: &ScalarField) -> ScalarField {
    let (gx, gy) = cell_gradient(phi);
    let mut out = phi.map(dpsi);
    for (k, o) in out.values.iter_mut().enumerate() {
        *o *= gx[k].hypot(gy[k]);
    }
    out
}

/// ∫|∇ψ(φ)|/σ, the diffuse perimeter.
pub fn perimeter_estimate(phi: &ScalarField) -> f64 {
    sum_cells(&grad_psi_norm(phi)) / sigma()
}

/// ∫|ε|∇φ|²/2 − W/ε|.
pub fn equipartition_discrepancy(phi: &ScalarField, eps: f64) -> f64 {
    let gsq = grad_sq_cells(phi);
    sum_cells(&phi.zip_map(&gsq, |p, g2| (0.5 * eps * g2 - w(p) / eps).abs()))
}

/// ∫(Λ(θ) + φ).
pub fn entropy(phi: &ScalarField, theta: &ScalarField, material: &Material) -> f64 {
    let s = phi.zip_map(theta, |p, t| material.lambda(t.max(0.0)).unwrap_or(f64::NAN) + p);
    sum_cells(&s)
}

pub fn record(state: &SimState, material: &Material, max_div: f64, clamp_mass: f64) -> DiagRecord {
    let p = material.params();
    let theta = state.theta(p);
    let e_kin = kinetic_energy(&state.vel);
    let e_int = interface_energy(&state.phi, p.eps);
    let h_heat = sum_cells(&state.q);
    DiagRecord {
        t: state.t,
        e_tot: e_kin + e_int + h_heat,
        e_kin,
        e_int,
        h_heat,
        entropy: entropy(&state.phi, &theta, material),
        phi_min: min(&state.phi),
        phi_max: max(&state.phi),
        theta_min: min(&theta),
        theta_max: max(&theta),
        equip_disc: equipartition_discrepancy(&state.phi, p.eps),
        perimeter_est: perimeter_estimate(&state.phi),
        max_div,
        clamp_mass,
    }
}

/// Appends one CSV row per record, flushing each time.
pub struct DiagWriter {
    out: BufWriter<File>,
}

impl DiagWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    /// Reopen an existing file for appending (after a restore).
    pub fn append(path: &Path) -> io::Result<Self> {
        Ok(Self { out: BufWriter::new(File::options().append(true).open(path)?) })
    }

    pub fn write(&mut self, r: &DiagRecord) -> io::Result<()> {
        writeln!(self.out, "{}", r.csv_row())?;
        self.out.flush()
    }
}

/// Entropy-production integrals over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProductionTerms {
    /// ∫ν/ℓ |∇𝐯+∇𝐯ᵀ|²
    pub viscous: f64,
    /// Face sum of the conduction flux against −∇(1/ℓ); the discrete (ℓ′/ℓ²)κ|∇θ|².
    pub conduction: f64,
    /// ∫ε/ℓ |Dφ/Dt|²
    pub kinetic: f64,
}

impl ProductionTerms {
    pub fn total(&self) -> f64 {
        self.viscous + self.conduction + self.kinetic
    }
}

/// Per-cell and per-face pieces shared by the global and the weak entropy checks.
struct StepPieces {
    theta_mid: ScalarField,
    inv_ell: Vec<f64>,
    visc: Vec<f64>,
    kin: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
}

fn step_pieces(prev: &SimState, next: &SimState, dt: f64, material: &Material, cfg: &StepConfig) -> StepPieces {
    let p = material.params();
    let qmid = prev.q.zip_map(&next.q, |a, b| 0.5 * (a + b));
    let theta_mid = theta_of(&qmid, p);
    let inv_ell: Vec<f64> = theta_mid.values.iter().map(|&s| 1.0 / p.ell_delta(s)).collect();
    let nu = prev.theta(p).map(|s| p.nu(s));
    let s2 = strain_norm2(&prev.vel, &nu);
    let visc: Vec<f64> = s2.values.iter().zip(&inv_ell).map(|(s, il)| s * il).collect();
    let d = phase_rate(&prev.phi, &next.phi, &prev.vel, cfg.phi_advection, dt);
    let kin: Vec<f64> = d.values.iter().zip(&inv_ell).map(|(x, il)| p.eps * x * x * il).collect();
    let (fx, fy) = conduction_flux(&theta_mid, material);
    StepPieces { theta_mid, inv_ell, visc, kin, fx, fy }
}

/// Σ_f w_f F_f (−∇_f(1/ℓ)) dx dy, with w_f the face average of `weight`.
fn conduction_production(g: &crate::grid::GridSpec, pieces: &StepPieces, weight: Option<&[f64]>) -> f64 {
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let il = &pieces.inv_ell;
    let wavg = |a: usize, b: usize| weight.map_or(1.0, |w| 0.5 * (w[a] + w[b]));
    let mut rows = vec![0.0; ny];
    for (j, r) in rows.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 1..nx {
            let (a, b) = (i - 1 + j * nx, i + j * nx);
            acc += wavg(a, b) * pieces.fx[i + j * (nx + 1)] * (il[a] - il[b]) / dx;
        }
        if j > 0 {
            for i in 0..nx {
                let (a, b) = (i + (j - 1) * nx, i + j * nx);
                acc += wavg(a, b) * pieces.fy[i + j * nx] * (il[a] - il[b]) / dy;
            }
        }
        *r = acc;
    }
    rows.iter().sum::<f64>() * g.cell_area()
}

/// Viscous, conduction and kinetic entropy production at the step midpoint.
pub fn entropy_production_terms(
    prev: &SimState,
    next: &SimState,
    dt: f64,
    material: &Material,
    cfg: &StepConfig,
) -> ProductionTerms {
    let g = prev.grid();
    let pieces = step_pieces(prev, next, dt, material, cfg);
    let area = g.cell_area();
    ProductionTerms {
        viscous: fixed_sum(&pieces.visc, g.nx) * area,
        conduction: conduction_production(&g, &pieces, None),
        kinetic: fixed_sum(&pieces.kin, g.nx) * area,
    }
}

/// min over checkpoints k of S_k − S_0 − Σ_{i<k} production_i · dt_i, with dt from
/// the record times.
pub fn entropy_budget_check(records: &[DiagRecord], productions: &[ProductionTerms]) -> Result<f64, DiagError> {
    if records.len() != productions.len() + 1 {
        return Err(DiagError::Misaligned { records: records.len(), productions: productions.len() });
    }
    let s0 = records[0].entropy;
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for (k, pr) in productions.iter().enumerate() {
        acc += pr.total() * (records[k + 1].t - records[k].t);
        worst = worst.min(records[k + 1].entropy - s0 - acc);
    }
    Ok(worst)
}

fn check_zeta(zeta: &ScalarField) -> Result<(), DiagError> {
    match zeta.values.iter().copied().find(|z| *z < 0.0 || !z.is_finite()) {
        Some(z) => Err(DiagError::NegativeZeta(z)),
        None => Ok(()),
    }
}

/// Incremental assembly of the discrete weak entropy balance for a fixed ζ:
/// the slack after each step is
/// Σζ s(tₙ₊₁) − Σζ s(tₙ) − dt [Σζ·production + Σ h(θ)Δζ + Σ s 𝐯·∇ζ],
/// with s = Λ(θ) + φ. Returns the running minimum of the cumulative slack.
pub struct WeakEntropyMonitor<'a> {
    zeta: ScalarField,
    lap_zeta: ScalarField,
    material: &'a Material,
    cfg: StepConfig,
    cumulative: f64,
    worst: f64,
}

impl<'a> WeakEntropyMonitor<'a> {
    pub fn new(zeta: ScalarField, material: &'a Material, cfg: StepConfig) -> Result<Self, DiagError> {
        check_zeta(&zeta)?;
        let lap_zeta = laplacian_neumann(&zeta);
        Ok(Self { zeta, lap_zeta, material, cfg, cumulative: 0.0, worst: 0.0 })
    }

    fn weighted_entropy(&self, state: &SimState) -> f64 {
        let theta = state.theta(self.material.params());
        let s = state
            .phi
            .zip_map(&theta, |p, t| self.material.lambda(t.max(0.0)).unwrap_or(f64::NAN) + p);
        sum_cells(&s.zip_map(&self.zeta, |a, b| a * b))
    }

    pub fn push(&mut self, prev: &SimState, next: &SimState) -> f64 {
        let dt = next.t - prev.t;
        let g = prev.grid();
        let (nx, ny) = (g.nx, g.ny);
        let area = g.cell_area();
        let z = &self.zeta.values;
        let pieces = step_pieces(prev, next, dt, self.material, &self.cfg);
        let cellwise: Vec<f64> = (0..g.n_cells()).map(|k| z[k] * (pieces.visc[k] + pieces.kin[k])).collect();
        let production = fixed_sum(&cellwise, nx) * area + conduction_production(&g, &pieces, Some(z));

        let h: Vec<f64> = pieces.theta_mid.values.iter().map(|&s| self.material.h_delta(s)).collect();
        let hlap: Vec<f64> = h.iter().zip(&self.lap_zeta.values).map(|(a, b)| a * b).collect();
        let flux = fixed_sum(&hlap, nx) * area;

        // ∫ s 𝐯·∇ζ on faces with s at the time midpoint
        let s_mid: Vec<f64> = (0..g.n_cells())
            .map(|k| {
                let t = pieces.theta_mid.values[k].max(0.0);
                self.material.lambda(t).unwrap_or(f64::NAN) + 0.5 * (prev.phi.values[k] + next.phi.values[k])
            })
            .collect();
        let (dx, dy) = (g.dx(), g.dy());
        let mut rows = vec![0.0; ny];
        for (j, r) in rows.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 1..nx {
                let (a, b) = (i - 1 + j * nx, i + j * nx);
                acc += prev.vel.u[i + j * (nx + 1)] * 0.5 * (s_mid[a] + s_mid[b]) * (z[b] - z[a]) / dx;
            }
            if j > 0 {
                for i in 0..nx {
                    let (a, b) = (i + (j - 1) * nx, i + j * nx);
                    acc += prev.vel.v[i + j * nx] * 0.5 * (s_mid[a] + s_mid[b]) * (z[b] - z[a]) / dy;
                }
            }
            *r = acc;
        }
        let transport = rows.iter().sum::<f64>() * area;

        let slack = self.weighted_entropy(next) - self.weighted_entropy(prev) - dt * (production + flux + transport);
        self.cumulative += slack;
        self.worst = self.worst.min(self.cumulative);
        self.worst
    }

    pub fn residual(&self) -> f64 {
        self.worst
    }
}

/// Weak entropy slack over a series of consecutive states.
pub fn weak_entropy_residual(
    states: &[SimState],
    zeta: &ScalarField,
    material: &Material,
    cfg: &StepConfig,
) -> Result<f64, DiagError> {
    if states.is_empty() {
        return Err(DiagError::Empty);
    }
    let mut mon = WeakEntropyMonitor::new(zeta.clone(), material, *cfg)?;
    for pair in states.windows(2) {
        mon.push(&pair[0], &pair[1]);
    }
    Ok(mon.residual())
}

/// Cell values of ξ with the admissibility checks |ξ| ≤ 1 and ξ·n = 0.
fn xi_cells(xi: &VectorField) -> Result<(Vec<f64>, Vec<f64>), DiagError> {
    if !xi.satisfies_slip() {
        return Err(DiagError::XiBoundary);
    }
    let (cx, cy) = cell_velocity(xi);
    let nx = xi.grid.nx;
    for k in 0..cx.len() {
        let n = cx[k].hypot(cy[k]);
        if n > 1.0 + 1e-12 {
            return Err(DiagError::XiTooLarge { i: k % nx, j: k / nx, norm: n });
        }
    }
    Ok((cx, cy))
}

/// E_int,ε(φ; ζ) − ∫ζ (ξ·∇)ψ(φ).
pub fn relative_interface_energy(
    phi: &ScalarField,
    zeta: &ScalarField,
    xi: &VectorField,
    params: &ModelParams,
) -> Result<f64, DiagError> {
    check_zeta(zeta)?;
    let (cx, cy) = xi_cells(xi)?;
    let dens = interface_energy_density(phi, params.eps);
    let (gx, gy) = cell_gradient(phi);
    let vals: Vec<f64> = (0..phi.values.len())
        .map(|k| {
            let dp = dpsi(phi.values[k]);
            zeta.values[k] * (dens.values[k] - dp * (cx[k] * gx[k] + cy[k] * gy[k]))
        })
        .collect();
    Ok(fixed_sum(&vals, phi.grid.nx) * phi.grid.cell_area())
}

/// (∫ζ ½(√ε|∇φ| − √(2W/ε))², ∫ζ ½|ν_ε − ξ|²|∇ψ|) with ν_ε = ∇φ/|∇φ|, or the
/// tie-break direction where ∇φ = 0.
pub fn tilt_excess(
    phi: &ScalarField,
    zeta: &ScalarField,
    xi: &VectorField,
    params: &ModelParams,
) -> Result<(f64, f64), DiagError> {
    check_zeta(zeta)?;
    let (cx, cy) = xi_cells(xi)?;
    let eps = params.eps;
    let (gx, gy) = cell_gradient(phi);
    let n = phi.values.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in 0..n {
        let p = phi.values[k];
        let gn = gx[k].hypot(gy[k]);
        let d = eps.sqrt() * gn - (2.0 * w(p) / eps).sqrt();
        a[k] = zeta.values[k] * 0.5 * d * d;
        let (nx_, ny_) = if gn > 0.0 { (gx[k] / gn, gy[k] / gn) } else { (TIE_BREAK[0], TIE_BREAK[1]) };
        let (ex, ey) = (nx_ - cx[k], ny_ - cy[k]);
        b[k] = zeta.values[k] * 0.5 * (ex * ex + ey * ey) * dpsi(p) * gn;
    }
    let area = phi.grid.cell_area();
    Ok((fixed_sum(&a, phi.grid.nx) * area, fixed_sum(&b, phi.grid.nx) * area))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCheck {
    Pass,
    Fail,
    /// ε does not satisfy ε < W′(1+τ)/L, or ℓ is unbounded.
    Inapplicable,
}

pub fn phi_bound_check(record: &DiagRecord, params: &ModelParams, tau: f64) -> BoundCheck {
    match params.eps_tau(tau) {
        Some(et) if params.eps < et => {
            if record.phi_min >= -1.0 - 1e-6 && record.phi_max <= 1.0 + tau + 1e-6 {
                BoundCheck::Pass
            } else {
                BoundCheck::Fail
            }
        }
        _ => BoundCheck::Inapplicable,
    }
}

/// Floor c0/2 on θ over the run and cumulative clamp mass at most `clamp_limit`.
pub fn theta_floor_check(records: &[DiagRecord], c0: f64, clamp_limit: f64) -> bool {
    let tmin = records.iter().map(|r| r.theta_min).fold(f64::INFINITY, f64::min);
    let clamp = records.iter().map(|r| r.clamp_mass).fold(0.0, f64::max);
    tmin >= 0.5 * c0 && clamp <= clamp_limit
}

/// ψ(φ) per cell.
pub fn psi_field(phi: &ScalarField) -> ScalarField {
    phi.map(psi)
}
