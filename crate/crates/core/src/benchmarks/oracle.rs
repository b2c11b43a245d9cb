//! Reference solutions that do not share code with the 2D solver.

use super::BenchError;

const ORACLE_DT: f64 = 1e-5;

/// Radius of a circle under dR/dt = −1/R + sign·c_ℓ·ℓ̄ (two dimensions).
/// Closed form √(R0² − 2t) when ℓ̄ = 0, otherwise RK4 with step 1e−5.
pub fn mcf_circle_oracle(r0: f64, ell_bar: f64, sign: f64, c_ell: f64, t: f64) -> Result<f64, BenchError> {
    if ell_bar == 0.0 {
        return mcf_closed_form(r0, t);
    }
    mcf_rk4(r0, sign * c_ell * ell_bar, t)
}

pub fn mcf_closed_form(r0: f64, t: f64) -> Result<f64, BenchError> {
    let r2 = r0 * r0 - 2.0 * t;
    if r2 <= 0.0 {
        return Err(BenchError::Extinct { t });
    }
    Ok(r2.sqrt())
}

/// RK4 for dR/dt = −1/R + forcing.
pub fn mcf_rk4(r0: f64, forcing: f64, t: f64) -> Result<f64, BenchError> {
    let f = |r: f64| -1.0 / r + forcing;
    let n = (t / ORACLE_DT).ceil() as usize;
    if n == 0 {
        return Ok(r0);
    }
    let h = t / n as f64;
    let mut r = r0;
    for _ in 0..n {
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(r > 0.0) || !r.is_finite() {
            return Err(BenchError::Extinct { t });
        }
    }
    Ok(r)
}

/// Fine-grid 1D Allen–Cahn integrator for u_t = u_xx − W′(u)/ε² + ℓ̄/ε on
/// [0, L] with Neumann ends: Crank–Nicolson diffusion, explicit reaction,
/// tridiagonal solve by the Thomas algorithm.
pub struct FrontOracle {
    pub n: usize,
    pub length: f64,
    pub eps: f64,
    pub ell_bar: f64,
    pub dt: f64,
}

impl FrontOracle {
    /// Front positions sampled every `every` steps: (t, x_front).
    pub fn run(&self, x0: f64, orientation: f64, t_end: f64, every: usize) -> Result<Vec<(f64, f64)>, BenchError> {
        let n = self.n;
        let h = self.length / n as f64;
        let x = |i: usize| (i as f64 + 0.5) * h;
        let mut u: Vec<f64> =
            (0..n).map(|i| orientation * ((x(i) - x0) / (std::f64::consts::SQRT_2 * self.eps)).tanh()).collect();
        let r = 0.5 * self.dt / (h * h);
        let steps = (t_end / self.dt).round() as usize;
        let mut out = vec![(0.0, crossing(&u, h)?)];
        let mut rhs = vec![0.0; n];
        let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let left = if i > 0 { r } else { 0.0 };
            let right = if i + 1 < n { r } else { 0.0 };
            a[i] = -left;
            c[i] = -right;
            b[i] = 1.0 + left + right;
        }
        let e2 = self.eps * self.eps;
        for s in 1..=steps {
            for i in 0..n {
                let ul = if i > 0 { u[i - 1] } else { u[i] };
                let ur = if i + 1 < n { u[i + 1] } else { u[i] };
                let react = -(u[i] * u[i] * u[i] - u[i]) / e2 + self.ell_bar / self.eps;
                rhs[i] = u[i] + r * (ul - 2.0 * u[i] + ur) + self.dt * react;
            }
            thomas(&a, &b, &c, &mut rhs);
            std::mem::swap(&mut u, &mut rhs);
            if s % every == 0 {
                out.push((s as f64 * self.dt, crossing(&u, h)?));
            }
        }
        Ok(out)
    }
}

fn crossing(u: &[f64], h: f64) -> Result<f64, BenchError> {
    let mut hit = None;
    for i in 0..u.len() - 1 {
        if (u[i] > 0.0) != (u[i + 1] > 0.0) {
            if hit.is_some() {
                return Err(BenchError::MultipleComponents(2));
            }
            hit = Some((i as f64 + 0.5) * h + u[i] / (u[i] - u[i + 1]) * h);
        }
    }
    hit.ok_or(BenchError::FrontAtBoundary)
}

/// In-place tridiagonal solve; `d` becomes the solution.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    d[0] /= b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Least-squares slope of (t, x) pairs.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    cov / var
}
