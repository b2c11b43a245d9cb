//! Constitutive functions of the model and their δ-regularized variants.
//!
//! Closed forms live on [`ModelParams`]; the entropy potentials Λ and h, which
//! need quadrature for the bounded latent-heat class, live on [`Material`],
//! which caches them on lookup tables built once per run.

pub mod checks;
pub mod quadrature;
pub mod table;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, SQRT_2};
use std::ops::Deref;

use thiserror::Error;

use self::quadrature::integrate;
use self::table::LogTable;

/// Absolute tolerance for every quadrature behind Λ, h, F_δ and Λ_δ.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("{func}: argument {value} outside domain ({domain})")]
    Domain { func: &'static str, value: f64, domain: &'static str },
    #[error("{0}")]
    Invalid(String),
}

fn domain(func: &'static str, value: f64, domain: &'static str) -> ConstitutiveError {
    ConstitutiveError::Domain { func, value, domain }
}

/// The two admissible latent-heat classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatentHeat {
    /// ℓ(s) = λ s.
    Linear { lambda: f64 },
    /// ℓ(s) = arctan s: bounded by L = π/2, sublinear with λ = 1, ℓ'(0) = 1.
    Arctan,
}

impl LatentHeat {
    pub fn ell(&self, s: f64) -> f64 {
        match *self {
            LatentHeat::Linear { lambda } => lambda * s,
            // extension by ℓ'(0) s below zero
            LatentHeat::Arctan => {
                if s >= 0.0 {
                    s.atan()
                } else {
                    s
                }
            }
        }
    }

    pub fn dell(&self, s: f64) -> f64 {
        match *self {
            LatentHeat::Linear { lambda } => lambda,
            LatentHeat::Arctan => {
                if s >= 0.0 {
                    1.0 / (1.0 + s * s)
                } else {
                    1.0
                }
            }
        }
    }

    /// Supremum L of ℓ on [0, ∞); `None` when unbounded.
    pub fn sup(&self) -> Option<f64> {
        match self {
            LatentHeat::Linear { .. } => None,
            LatentHeat::Arctan => Some(FRAC_PI_2),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.sup().is_some()
    }

    /// ℓ'(0).
    pub fn dell0(&self) -> f64 {
        self.dell(0.0)
    }

    /// Slope λ with ℓ(s) ≤ λ s.
    pub fn lambda_bound(&self) -> f64 {
        match *self {
            LatentHeat::Linear { lambda } => lambda,
            LatentHeat::Arctan => 1.0,
        }
    }

    /// (C_ℓ, γ) with (1 + s^γ)^{-1} ≤ C_ℓ ℓ'(s) on [1, ∞).
    pub fn decay_constants(&self) -> Option<(f64, f64)> {
        match self {
            LatentHeat::Linear { .. } => None,
            LatentHeat::Arctan => Some((1.0, 2.0)),
        }
    }

    /// Inverse of ℓ on the range of ℓ over [0, ∞).
    pub fn ell_inv(&self, y: f64) -> Option<f64> {
        match *self {
            LatentHeat::Linear { lambda } => (y >= 0.0).then(|| y / lambda),
            LatentHeat::Arctan => (0.0..FRAC_PI_2).contains(&y).then(|| y.tan()),
        }
    }
}

/// Physical and constitutive parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub latent: LatentHeat,
    pub delta: f64,
    pub delta0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            eps: 0.04,
            alpha: 0.75,
            beta: 2.0,
            kappa1: 0.1,
            kappa2: 0.1,
            nu1: 0.1,
            nu2: 0.1,
            latent: LatentHeat::Arctan,
            delta: 1e-4,
            delta0: 0.9,
        }
    }
}

/// ¼(s² − 1)².
pub fn w(s: f64) -> f64 {
    let a = s * s - 1.0;
    0.25 * a * a
}

/// s³ − s.
pub fn dw(s: f64) -> f64 {
    s * s * s - s
}

/// 3s² − 1.
pub fn d2w(s: f64) -> f64 {
    3.0 * s * s - 1.0
}

/// √(2W(s)) = |1 − s²|/√2.
pub fn dpsi(s: f64) -> f64 {
    (1.0 - s * s).abs() * FRAC_1_SQRT_2
}

/// ψ(s) = ∫₋₁ˢ √(2W), extended with the same integrand outside [−1, 1].
pub fn psi(s: f64) -> f64 {
    // factored cubics keep ψ(−1) = 0 exact
    if s < -1.0 {
        FRAC_1_SQRT_2 * (s + 1.0) * (s + 1.0) * (s - 2.0) / 3.0
    } else if s <= 1.0 {
        FRAC_1_SQRT_2 * (s + 1.0) * (s + 1.0) * (2.0 - s) / 3.0
    } else {
        sigma() + FRAC_1_SQRT_2 * (s - 1.0) * (s - 1.0) * (s + 2.0) / 3.0
    }
}

/// Surface tension σ = ψ(1) − ψ(−1) = 2√2/3.
pub fn sigma() -> f64 {
    2.0 * SQRT_2 / 3.0
}

/// Regularized logarithm.
pub fn log_delta(s: f64, delta: f64) -> f64 {
    if s >= delta {
        s.ln()
    } else {
        s / delta + delta.ln() - 1.0
    }
}

pub fn dlog_delta(s: f64, delta: f64) -> f64 {
    if s >= delta {
        1.0 / s
    } else {
        1.0 / delta
    }
}

/// Lipschitz positive surrogate of the identity used to build ℓ_δ.
pub fn l_tilde_delta(y: f64, delta: f64) -> f64 {
    if y >= delta {
        y
    } else {
        delta / (2.0 - y / delta)
    }
}

pub fn dl_tilde_delta(y: f64, delta: f64) -> f64 {
    if y >= delta {
        1.0
    } else {
        let d = 2.0 - y / delta;
        1.0 / (d * d)
    }
}

impl ModelParams {
    /// Check every parameter constraint; the message names the offending key.
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let bad = |m: String| Err(ConstitutiveError::Invalid(m));
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0.5, 1], got {}", self.alpha));
        }
        if !(self.beta >= 2.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 2, got {}", self.beta));
        }
        if !(self.kappa1 > 0.0 && self.kappa2 > 0.0) {
            return bad(format!(
                "kappa1 and kappa2 must be positive, got {} and {}",
                self.kappa1, self.kappa2
            ));
        }
        if !(self.nu1 > 0.0 && self.nu1 <= self.nu2 && self.nu2.is_finite()) {
            return bad(format!("viscosity bounds must satisfy 0 < nu1 <= nu2, got {} and {}", self.nu1, self.nu2));
        }
        if let LatentHeat::Linear { lambda } = self.latent {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return bad(format!("lambda must be positive, got {lambda}"));
            }
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return bad(format!("delta0 must lie in (0, 1), got {}", self.delta0));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        let cap = self.delta0 * self.latent.dell0();
        if self.latent.is_bounded() && self.delta >= cap {
            return bad(format!("delta must be below delta0 * ell'(0) = {cap}, got {}", self.delta));
        }
        Ok(())
    }

    pub fn heat_q(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s >= 0.0) {
            return Err(domain("heat_Q", s, "s >= 0"));
        }
        Ok(s.powf(1.0 + self.alpha) / (1.0 + self.alpha))
    }

    pub fn heat_q_inv(&self, q: f64) -> Result<f64, ConstitutiveError> {
        if !(q >= 0.0) {
            return Err(domain("heat_Q_inv", q, "q >= 0"));
        }
        Ok(((1.0 + self.alpha) * q).powf(1.0 / (1.0 + self.alpha)))
    }

    pub fn c_v(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s >= 0.0) {
            return Err(domain("c_V", s, "s >= 0"));
        }
        Ok(s.powf(self.alpha))
    }

    /// κ₁ + κ₂ s^β, for s ≥ 0.
    pub fn kappa(&self, s: f64) -> f64 {
        self.kappa1 + self.kappa2 * s.max(0.0).powf(self.beta)
    }

    /// ∫₀ˢ κ.
    pub fn kappa_hat(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        self.kappa1 * s + self.kappa2 * s.powf(self.beta + 1.0) / (self.beta + 1.0)
    }

    /// ν₁ + (ν₂ − ν₁)/(1 + s); constant when ν₁ = ν₂.
    pub fn nu(&self, s: f64) -> f64 {
        self.nu1 + (self.nu2 - self.nu1) / (1.0 + s.max(0.0))
    }

    pub fn ell(&self, s: f64) -> f64 {
        self.latent.ell(s)
    }

    pub fn dell(&self, s: f64) -> f64 {
        self.latent.dell(s)
    }

    pub fn log_delta(&self, s: f64) -> f64 {
        log_delta(s, self.delta)
    }

    pub fn dlog_delta(&self, s: f64) -> f64 {
        dlog_delta(s, self.delta)
    }

    /// ℓ_δ = l̃_δ ∘ ℓ, strictly positive on ℝ.
    pub fn ell_delta(&self, s: f64) -> f64 {
        l_tilde_delta(self.ell(s), self.delta)
    }

    pub fn dell_delta(&self, s: f64) -> f64 {
        dl_tilde_delta(self.ell(s), self.delta) * self.dell(s)
    }

    pub fn heat_q_delta(&self, s: f64) -> f64 {
        let a1 = 1.0 + self.alpha;
        if s >= 0.0 {
            (s * s + self.delta * self.delta).powf(0.5 * a1) / a1
        } else {
            2.0 * self.delta.powf(a1) / (a1 * (2.0 - s))
        }
    }

    pub fn dheat_q_delta(&self, s: f64) -> f64 {
        let a1 = 1.0 + self.alpha;
        if s >= 0.0 {
            s * (s * s + self.delta * self.delta).powf(0.5 * (self.alpha - 1.0))
        } else {
            let d = 2.0 - s;
            2.0 * self.delta.powf(a1) / (a1 * d * d)
        }
    }

    /// Q_δ(0), the floor of the internal heat.
    pub fn q_floor(&self) -> f64 {
        self.heat_q_delta(0.0)
    }

    pub fn heat_q_delta_inv(&self, q: f64) -> f64 {
        let a1 = 1.0 + self.alpha;
        let q0 = self.q_floor();
        if q >= q0 {
            // δ² expm1(·) avoids the cancellation in ((1+α)q)^{2/(1+α)} − δ² near the floor
            self.delta * ((2.0 / a1) * (q / q0).ln()).exp_m1().sqrt()
        } else {
            2.0 - 2.0 * self.delta.powf(a1) / (a1 * q)
        }
    }

    pub fn kappa_delta(&self, s: f64) -> f64 {
        if s > self.delta {
            self.kappa(s)
        } else {
            self.kappa1 + self.kappa2 * self.delta * self.delta * s.abs().powf(self.beta - 2.0)
        }
    }

    /// ε_τ = W'(1 + τ)/L: below this width the order parameter stays in [−1, 1 + τ].
    pub fn eps_tau(&self, tau: f64) -> Option<f64> {
        self.latent.sup().map(|l| dw(1.0 + tau) / l)
    }
}

#[derive(Debug, Clone)]
struct Tables {
    lambda: LogTable,
    h: LogTable,
    // interpolated h(1), subtracted so that h(1) = 0 exactly
    h_one: f64,
}

const TABLE_S_MIN: f64 = 1e-8;
const TABLE_S_MAX: f64 = 1e6;
const TABLE_NODES: usize = 12_000;

/// Validated parameters plus cached entropy potentials.
#[derive(Debug, Clone)]
pub struct Material {
    params: ModelParams,
    tables: Option<Tables>,
    // ℓ_δ = ℓ and κ_δ = κ above this temperature.
    theta_reg: f64,
    h_at_reg: f64,
}

impl Deref for Material {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.params
    }
}

impl Material {
    pub fn new(params: ModelParams) -> Result<Self, ConstitutiveError> {
        params.validate()?;
        let mut m = Self { params, tables: None, theta_reg: 0.0, h_at_reg: 0.0 };
        if m.params.latent.is_bounded() {
            let lam = LogTable::build(
                TABLE_S_MIN,
                TABLE_S_MAX,
                TABLE_NODES,
                m.lambda_segment(0.0, TABLE_S_MIN),
                |a, b| m.lambda_segment(a, b),
                |s| m.dlambda(s),
            );
            let h = LogTable::build(
                TABLE_S_MIN,
                TABLE_S_MAX,
                TABLE_NODES,
                m.h_segment(1.0, TABLE_S_MIN),
                |a, b| m.h_segment(a, b),
                |s| m.params.kappa(s) / m.params.ell(s),
            );
            let h_one = h.eval(1.0);
            m.tables = Some(Tables { lambda: lam, h, h_one });
        }
        let ell_reg = m.params.latent.ell_inv(m.params.delta).unwrap_or(f64::INFINITY);
        m.theta_reg = ell_reg.max(m.params.delta);
        m.h_at_reg = m.h_raw(m.theta_reg);
        Ok(m)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Λ(b) − Λ(a) for 0 ≤ a ≤ b by quadrature in u = y^α, which removes
    /// the y^{α−1} endpoint singularity.
    fn lambda_segment(&self, a: f64, b: f64) -> f64 {
        let al = self.params.alpha;
        let lat = self.params.latent;
        let g = move |u: f64| {
            let y = u.powf(1.0 / al);
            let r = if y == 0.0 { 1.0 / lat.dell0() } else { y / lat.ell(y) };
            r / al
        };
        integrate(g, a.powf(al), b.powf(al), QUAD_TOL)
    }

    /// h(b) − h(a) for a, b > 0 by quadrature in u = ln y.
    fn h_segment(&self, a: f64, b: f64) -> f64 {
        let p = &self.params;
        let g = |u: f64| {
            let y = u.exp();
            p.kappa(y) * y / p.ell(y)
        };
        integrate(g, a.ln(), b.ln(), QUAD_TOL)
    }

    /// Λ' = Q'/ℓ = s^α/ℓ(s).
    pub fn dlambda(&self, s: f64) -> f64 {
        s.powf(self.params.alpha) / self.params.ell(s)
    }

    /// Caloric entropy Λ(s) = ∫₀ˢ y^α/ℓ(y) dy.
    pub fn lambda(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s >= 0.0) {
            return Err(domain("Lambda", s, "s >= 0"));
        }
        Ok(self.lambda_raw(s))
    }

    pub(crate) fn lambda_raw(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match (&self.tables, self.params.latent) {
            (_, LatentHeat::Linear { lambda }) => s.powf(self.params.alpha) / (self.params.alpha * lambda),
            (Some(t), _) if t.lambda.contains(s) => t.lambda.eval(s),
            (Some(t), _) if s > t.lambda.s_max() => t.lambda.last() + self.lambda_segment(t.lambda.s_max(), s),
            _ => self.lambda_segment(0.0, s),
        }
    }

    /// Λ by direct quadrature, bypassing the table.
    pub fn lambda_quadrature(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s >= 0.0) {
            return Err(domain("Lambda", s, "s >= 0"));
        }
        Ok(self.lambda_segment(0.0, s))
    }

    /// Entropy-flux potential h(s) = ∫₁ˢ κ/ℓ.
    pub fn h_entropy_flux(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s > 0.0) {
            return Err(domain("h_entropy_flux", s, "s > 0"));
        }
        Ok(self.h_raw(s))
    }

    fn h_raw(&self, s: f64) -> f64 {
        let p = &self.params;
        match (&self.tables, p.latent) {
            (_, LatentHeat::Linear { lambda }) => {
                (p.kappa1 * s.ln() + p.kappa2 * (s.powf(p.beta) - 1.0) / p.beta) / lambda
            }
            (Some(t), _) if t.h.contains(s) => t.h.eval(s) - t.h_one,
            (Some(t), _) if s > t.h.s_max() => t.h.last() - t.h_one + self.h_segment(t.h.s_max(), s),
            _ => self.h_segment(1.0, s),
        }
    }

    /// h by direct quadrature, bypassing tables and closed forms.
    pub fn h_quadrature(&self, s: f64) -> Result<f64, ConstitutiveError> {
        if !(s > 0.0) {
            return Err(domain("h_entropy_flux", s, "s > 0"));
        }
        Ok(self.h_segment(1.0, s))
    }

    /// h_δ(s) = ∫₁ˢ κ_δ/ℓ_δ, finite down to s = 0; equals h where the
    /// regularization is inactive.
    pub fn h_delta(&self, s: f64) -> f64 {
        if s >= self.theta_reg {
            return self.h_raw(s);
        }
        let p = &self.params;
        self.h_at_reg - integrate(|y| p.kappa_delta(y) / p.ell_delta(y), s, self.theta_reg, QUAD_TOL)
    }

    pub fn dh_delta(&self, s: f64) -> f64 {
        self.params.kappa_delta(s) / self.params.ell_delta(s)
    }

    /// Kirchhoff-type transform F_δ(q) = ∫ √(κ_δ(Q_δ⁻¹) (Q_δ⁻¹)') based at q = Q_δ(0),
    /// computed as ∫₀^{Q_δ⁻¹(q)} √(κ_δ(σ) Q_δ'(σ)) dσ.
    pub fn f_delta(&self, q: f64) -> f64 {
        let p = &self.params;
        let top = p.heat_q_delta_inv(q);
        integrate(|s| (p.kappa_delta(s) * p.dheat_q_delta(s)).sqrt(), 0.0, top, QUAD_TOL)
    }

    /// Λ_δ(θ) = ∫₀^θ Q_δ'/ℓ_δ.
    pub fn lambda_delta(&self, theta: f64) -> f64 {
        let p = &self.params;
        integrate(|s| p.dheat_q_delta(s) / p.ell_delta(s), 0.0, theta, QUAD_TOL)
    }
}
