use std::str::FromStr;

use rayon::prelude::*;

use super::{GridError, GridSpec, ScalarField, VectorField};
use crate::constitutive::dw;

/// Row-partial sums added in row order, so the result does not depend on
/// how rows are scheduled.
pub fn fixed_sum(values: &[f64], row: usize) -> f64 {
    if values.len() < 1 << 16 {
        return values.chunks(row).map(|r| r.iter().sum::<f64>()).sum();
    }
    let partial: Vec<f64> = values.par_chunks(row).map(|r| r.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// Midpoint-rule integral.
pub fn integrate(f: &ScalarField) -> f64 {
    fixed_sum(&f.values, f.grid.nx) * f.grid.cell_area()
}

pub fn min(f: &ScalarField) -> f64 {
    f.values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(f: &ScalarField) -> f64 {
    f.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Cell inner product ⟨a, b⟩ = Σ a b dx dy.
pub fn inner(a: &ScalarField, b: &ScalarField) -> f64 {
    let prod: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
    fixed_sum(&prod, a.grid.nx) * a.grid.cell_area()
}

/// Face inner product ⟨U, V⟩ = Σ (u u' + v v') dx dy.
pub fn face_inner(a: &VectorField, b: &VectorField) -> f64 {
    let g = a.grid;
    let pu: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x * y).collect();
    let pv: Vec<f64> = a.v.iter().zip(&b.v).map(|(x, y)| x * y).collect();
    (fixed_sum(&pu, g.nx + 1) + fixed_sum(&pv, g.nx)) * g.cell_area()
}

/// ∫|𝐯|²/2 on the staggered grid.
pub fn kinetic_energy(a: &VectorField) -> f64 {
    0.5 * face_inner(a, a)
}

/// Five-point Laplacian with homogeneous Neumann walls, written on raw slices.
/// Same floating-point expression as `div_into(grad_to_faces(f))`.
pub fn laplacian_into(g: &GridSpec, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (g.nx, g.ny);
    let (ix, iy) = (1.0 / g.dx(), 1.0 / g.dy());
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let c = &f[j * nx..(j + 1) * nx];
        let below = (j > 0).then(|| &f[(j - 1) * nx..j * nx]);
        let above = (j + 1 < ny).then(|| &f[(j + 1) * nx..(j + 2) * nx]);
        for i in 0..nx {
            let gxr = if i + 1 < nx { (c[i + 1] - c[i]) * ix } else { 0.0 };
            let gxl = if i > 0 { (c[i] - c[i - 1]) * ix } else { 0.0 };
            row[i] = (gxr - gxl) * ix;
        }
        for i in 0..nx {
            let gyt = above.map_or(0.0, |a| (a[i] - c[i]) * iy);
            let gyb = below.map_or(0.0, |b| (c[i] - b[i]) * iy);
            row[i] += (gyt - gyb) * iy;
        }
    });
}

pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let mut out = ScalarField::zeros(f.grid);
    laplacian_into(&f.grid, &f.values, &mut out.values);
    out
}

/// Face gradient; wall faces carry zero flux.
pub fn grad_to_faces(f: &ScalarField) -> VectorField {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (ix, iy) = (1.0 / g.dx(), 1.0 / g.dy());
    let mut out = VectorField::zeros(g);
    let v = &f.values;
    out.u.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        for i in 1..nx {
            row[i] = (v[i + j * nx] - v[i - 1 + j * nx]) * ix;
        }
    });
    out.v.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            return;
        }
        for i in 0..nx {
            row[i] = (v[i + j * nx] - v[i + (j - 1) * nx]) * iy;
        }
    });
    out
}

pub fn div_into(a: &VectorField, out: &mut [f64]) {
    let g = a.grid;
    let nx = g.nx;
    let (ix, iy) = (1.0 / g.dx(), 1.0 / g.dy());
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for i in 0..nx {
            let ur = a.u[i + 1 + j * (nx + 1)];
            let ul = a.u[i + j * (nx + 1)];
            let vt = a.v[i + (j + 1) * nx];
            let vb = a.v[i + j * nx];
            row[i] = (ur - ul) * ix + (vt - vb) * iy;
        }
    });
}

pub fn div_from_faces(a: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(a.grid);
    div_into(a, &mut out.values);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionScheme {
    Centered,
    Upwind2,
}

impl FromStr for AdvectionScheme {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self, GridError> {
        match s {
            "centered" => Ok(Self::Centered),
            "upwind2" | "upwind" => Ok(Self::Upwind2),
            other => Err(GridError::UnknownScheme(other.to_string())),
        }
    }
}

impl AdvectionScheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Centered => "centered",
            Self::Upwind2 => "upwind2",
        }
    }
}

// Face value minus the owning cell value, for the face between cells `a`
// (upstream when vel > 0) and `b`; `aa` and `bb` are the next cells out.
#[inline]
fn face_excess(scheme: AdvectionScheme, vel: f64, aa: f64, a: f64, b: f64, bb: f64, own: f64) -> f64 {
    let face = match scheme {
        AdvectionScheme::Centered => 0.5 * (a + b),
        AdvectionScheme::Upwind2 => {
            if vel > 0.0 {
                1.5 * a - 0.5 * aa
            } else {
                1.5 * b - 0.5 * bb
            }
        }
    };
    face - own
}

/// 𝐯·∇f in the form div(f𝐯) − f div 𝐯, with mirrored ghosts at walls.
pub fn advect_scalar(f: &ScalarField, a: &VectorField, scheme: AdvectionScheme) -> ScalarField {
    let mut out = ScalarField::zeros(f.grid);
    advect_into(f, a, scheme, &mut out.values);
    out
}

pub fn advect_into(f: &ScalarField, a: &VectorField, scheme: AdvectionScheme, out: &mut [f64]) {
    let g = f.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let v = &f.values;
    let at = |i: isize, j: isize| -> f64 {
        let i = i.clamp(0, nx as isize - 1) as usize;
        let j = j.clamp(0, ny as isize - 1) as usize;
        v[i + j * nx]
    };
    out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        let jj = j as isize;
        for i in 0..nx {
            let ii = i as isize;
            let own = v[i + j * nx];
            let ur = a.u[i + 1 + j * (nx + 1)];
            let ul = a.u[i + j * (nx + 1)];
            let vt = a.v[i + (j + 1) * nx];
            let vb = a.v[i + j * nx];
            let mut acc = 0.0;
            if ur != 0.0 {
                acc += ur * face_excess(scheme, ur, at(ii - 1, jj), own, at(ii + 1, jj), at(ii + 2, jj), own) / dx;
            }
            if ul != 0.0 {
                acc -= ul * face_excess(scheme, ul, at(ii - 2, jj), at(ii - 1, jj), own, at(ii + 1, jj), own) / dx;
            }
            if vt != 0.0 {
                acc += vt * face_excess(scheme, vt, at(ii, jj - 1), own, at(ii, jj + 1), at(ii, jj + 2), own) / dy;
            }
            if vb != 0.0 {
                acc -= vb * face_excess(scheme, vb, at(ii, jj - 2), at(ii, jj - 1), own, at(ii, jj + 1), own) / dy;
            }
            row[i] = acc;
        }
    });
}

/// Shear rate u_y + v_x at interior nodes; wall nodes carry zero shear under slip.
fn node_shear(g: &GridSpec, u: &[f64], v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut s = vec![0.0; (nx + 1) * (ny + 1)];
    s.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            return;
        }
        for i in 1..nx {
            let uy = (u[i + j * (nx + 1)] - u[i + (j - 1) * (nx + 1)]) / dy;
            let vx = (v[i + j * nx] - v[i - 1 + j * nx]) / dx;
            row[i] = uy + vx;
        }
    });
    s
}

#[inline]
fn node_average(g: &GridSpec, cell: &[f64], i: usize, j: usize) -> f64 {
    let nx = g.nx;
    0.25 * (cell[i - 1 + (j - 1) * nx] + cell[i + (j - 1) * nx] + cell[i - 1 + j * nx] + cell[i + j * nx])
}

/// Cell-centered ν|∇𝐯 + ∇𝐯ᵀ|²: normal strains at centers, shear at nodes
/// averaged to centers. Its integral is twice the discrete viscous dissipation.
pub fn strain_norm2(a: &VectorField, nu: &ScalarField) -> ScalarField {
    let g = a.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let shear = node_shear(&g, &a.u, &a.v);
    let nuc = &nu.values;
    // 2 ν_n (u_y + v_x)² at nodes
    let mut node = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            let s = shear[i + j * (nx + 1)];
            node[i + j * (nx + 1)] = 2.0 * node_average(&g, nuc, i, j) * s * s;
        }
    }
    let mut out = ScalarField::zeros(g);
    out.values.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for i in 0..nx {
            let ux = (a.u[i + 1 + j * (nx + 1)] - a.u[i + j * (nx + 1)]) / dx;
            let vy = (a.v[i + (j + 1) * nx] - a.v[i + j * nx]) / dy;
            let n = 0.25
                * (node[i + j * (nx + 1)]
                    + node[i + 1 + j * (nx + 1)]
                    + node[i + (j + 1) * (nx + 1)]
                    + node[i + 1 + (j + 1) * (nx + 1)]);
            row[i] = 4.0 * nuc[i + j * nx] * (ux * ux + vy * vy) + n;
        }
    });
    out
}

/// Node viscosities (mean of the four surrounding cells); zero on walls.
pub fn node_viscosity(g: &GridSpec, nu: &[f64]) -> Vec<f64> {
    let (nx, ny) = (g.nx, g.ny);
    let mut out = vec![0.0; (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            out[i + j * (nx + 1)] = node_average(g, nu, i, j);
        }
    }
    out
}

/// div(ν(∇𝐯 + ∇𝐯ᵀ)) on raw face arrays; wall-normal faces get zero.
/// `nu_node` comes from [`node_viscosity`].
pub fn viscous_apply_raw(
    g: &GridSpec,
    nu: &[f64],
    nu_node: &[f64],
    u: &[f64],
    v: &[f64],
    out_u: &mut [f64],
    out_v: &mut [f64],
) {
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let mut txy = node_shear(g, u, v);
    txy.iter_mut().zip(nu_node).for_each(|(t, n)| *t *= n);
    let txx = |i: usize, j: usize| 2.0 * nu[i + j * nx] * (u[i + 1 + j * (nx + 1)] - u[i + j * (nx + 1)]) / dx;
    let tyy = |i: usize, j: usize| 2.0 * nu[i + j * nx] * (v[i + (j + 1) * nx] - v[i + j * nx]) / dy;
    out_u.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        row[0] = 0.0;
        row[nx] = 0.0;
        for i in 1..nx {
            row[i] = (txx(i, j) - txx(i - 1, j)) / dx + (txy[i + (j + 1) * (nx + 1)] - txy[i + j * (nx + 1)]) / dy;
        }
    });
    out_v.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            row.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        for i in 0..nx {
            row[i] = (tyy(i, j) - tyy(i, j - 1)) / dy + (txy[i + 1 + j * (nx + 1)] - txy[i + j * (nx + 1)]) / dx;
        }
    });
}

/// Diagonal of −div(ν(∇𝐯 + ∇𝐯ᵀ)) for Jacobi preconditioning (zero on wall faces).
pub fn viscous_diagonal(g: &GridSpec, nu: &[f64], nu_node: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (g.nx, g.ny);
    let (dx2, dy2) = (g.dx() * g.dx(), g.dy() * g.dy());
    let mut du = vec![0.0; g.n_u()];
    let mut dv = vec![0.0; g.n_v()];
    for j in 0..ny {
        for i in 1..nx {
            du[i + j * (nx + 1)] = 2.0 * (nu[i - 1 + j * nx] + nu[i + j * nx]) / dx2
                + (nu_node[i + j * (nx + 1)] + nu_node[i + (j + 1) * (nx + 1)]) / dy2;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            dv[i + j * nx] = 2.0 * (nu[i + (j - 1) * nx] + nu[i + j * nx]) / dy2
                + (nu_node[i + j * (nx + 1)] + nu_node[i + 1 + j * (nx + 1)]) / dx2;
        }
    }
    (du, dv)
}

/// div(ν(∇𝐯 + ∇𝐯ᵀ)) on the faces; wall-normal faces are left at zero.
pub fn viscous_apply(a: &VectorField, nu: &ScalarField, out: &mut VectorField) {
    let nn = node_viscosity(&a.grid, &nu.values);
    viscous_apply_raw(&a.grid, &nu.values, &nn, &a.u, &a.v, &mut out.u, &mut out.v);
}

/// μ̃ = −εΔφ + W′(φ)/ε.
pub fn mu_tilde(phi: &ScalarField, eps: f64) -> ScalarField {
    let mut lap = laplacian_neumann(phi);
    lap.values.iter_mut().zip(&phi.values).for_each(|(l, &p)| *l = -eps * *l + dw(p) / eps);
    lap
}

/// Face force avg(μ)∇φ for a given cell potential μ.
pub fn korteweg_force_mu(mu: &ScalarField, phi: &ScalarField) -> VectorField {
    let g = phi.grid;
    let nx = g.nx;
    let mut out = grad_to_faces(phi);
    let m = &mu.values;
    out.u.par_chunks_mut(nx + 1).enumerate().for_each(|(j, row)| {
        for i in 1..nx {
            row[i] *= 0.5 * (m[i - 1 + j * nx] + m[i + j * nx]);
        }
    });
    let ny = g.ny;
    out.v.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        if j == 0 || j == ny {
            return;
        }
        for i in 0..nx {
            row[i] *= 0.5 * (m[i + (j - 1) * nx] + m[i + j * nx]);
        }
    });
    out
}

/// Capillary force μ̃∇φ on faces; the gradient part of the Korteweg stress is
/// left to the pressure.
pub fn korteweg_force(phi: &ScalarField, eps: f64) -> VectorField {
    korteweg_force_mu(&mu_tilde(phi, eps), phi)
}

/// Cell average of squared face gradients: the density whose sum is ⟨∇f, ∇f⟩.
pub fn grad_sq_cells(f: &ScalarField) -> ScalarField {
    let gr = grad_to_faces(f);
    let g = f.grid;
    let nx = g.nx;
    let mut out = ScalarField::zeros(g);
    out.values.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
        for i in 0..nx {
            let ul = gr.u[i + j * (nx + 1)];
            let ur = gr.u[i + 1 + j * (nx + 1)];
            let vb = gr.v[i + j * nx];
            let vt = gr.v[i + (j + 1) * nx];
            row[i] = 0.5 * (ul * ul + ur * ur + vb * vb + vt * vt);
        }
    });
    out
}

/// Centered cell gradient (mean of the two adjacent face gradients).
pub fn cell_gradient(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    let gr = grad_to_faces(f);
    let g = f.grid;
    let nx = g.nx;
    let mut gx = vec![0.0; g.n_cells()];
    let mut gy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..nx {
            gx[i + j * nx] = 0.5 * (gr.u[i + j * (nx + 1)] + gr.u[i + 1 + j * (nx + 1)]);
            gy[i + j * nx] = 0.5 * (gr.v[i + j * nx] + gr.v[i + (j + 1) * nx]);
        }
    }
    (gx, gy)
}

/// Face velocities averaged to cell centers.
pub fn cell_velocity(a: &VectorField) -> (Vec<f64>, Vec<f64>) {
    let g = a.grid;
    let nx = g.nx;
    let mut cu = vec![0.0; g.n_cells()];
    let mut cv = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..nx {
            cu[i + j * nx] = 0.5 * (a.u[i + j * (nx + 1)] + a.u[i + 1 + j * (nx + 1)]);
            cv[i + j * nx] = 0.5 * (a.v[i + j * nx] + a.v[i + (j + 1) * nx]);
        }
    }
    (cu, cv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = GridSpec::unit(16).unwrap();
        let l = laplacian_neumann(&ScalarField::constant(g, 3.5));
        assert!(l.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn integrate_linear_is_exact() {
        let g = GridSpec::unit(32).unwrap();
        let f = ScalarField::from_fn(g, |x, _| x);
        assert!((integrate(&f) - 0.5).abs() < 1e-12);
        assert_eq!(integrate(&ScalarField::constant(g, 2.0)), 2.0);
        assert_eq!(min(&f), g.xc(0));
        assert_eq!(max(&f), g.xc(31));
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("centered".parse::<AdvectionScheme>().unwrap(), AdvectionScheme::Centered);
        assert!("quick".parse::<AdvectionScheme>().is_err());
    }
}
