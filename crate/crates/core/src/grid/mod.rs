//! Rectangular grids, cell-centered scalars and MAC-staggered velocities.
//!
//! Scalars are stored row-major, index `i + j * nx`. Horizontal velocity `u`
//! lives on the `(nx + 1) × ny` vertical faces (index `i + j * (nx + 1)`),
//! vertical velocity `v` on the `nx × (ny + 1)` horizontal faces
//! (index `i + j * nx`).

mod ops;
pub mod snapshot;

pub use ops::*;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 8 cells per direction, got {nx}x{ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("domain lengths must be positive and finite, got {lx} x {ly}")]
    BadLength { lx: f64, ly: f64 },
    #[error("non-finite value {value} at cell ({i}, {j})")]
    NonFinite { i: usize, j: usize, value: f64 },
    #[error("field shape does not match grid: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("unknown advection scheme `{0}` (expected `centered` or `upwind2`)")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        if nx < 8 || ny < 8 {
            return Err(GridError::TooSmall { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(GridError::BadLength { lx, ly });
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// Square unit box with `n × n` cells.
    pub fn unit(n: usize) -> Result<Self, GridError> {
        Self::new(n, n, 1.0, 1.0)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_u(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn n_v(&self) -> usize {
        self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    /// Cell-center abscissa.
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    /// Cell-center ordinate.
    pub fn yc(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy()
    }

    /// Stable digest input: counts and lengths as exact bit patterns.
    pub fn digest_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(32);
        b.extend_from_slice(&(self.nx as u64).to_le_bytes());
        b.extend_from_slice(&(self.ny as u64).to_le_bytes());
        b.extend_from_slice(&self.lx.to_le_bytes());
        b.extend_from_slice(&self.ly.to_le_bytes());
        b
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n_cells()] }
    }

    /// Sample `f(x, y)` at cell centers.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.xc(i), grid.yc(j)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_cells() {
            return Err(GridError::Shape { expected: grid.n_cells(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i + j * self.grid.nx]
    }

    /// Reject NaN and infinities.
    pub fn validate(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(GridError::NonFinite {
                i: k % self.grid.nx,
                j: k / self.grid.nx,
                value: self.values[k],
            }),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// MAC-staggered vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, u: vec![0.0; grid.n_u()], v: vec![0.0; grid.n_v()] }
    }

    /// Sample component functions at face centers.
    pub fn from_fns(grid: GridSpec, fu: impl Fn(f64, f64) -> f64, fv: impl Fn(f64, f64) -> f64) -> Self {
        let (dx, dy) = (grid.dx(), grid.dy());
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                out.u[i + j * (grid.nx + 1)] = fu(i as f64 * dx, grid.yc(j));
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                out.v[i + j * grid.nx] = fv(grid.xc(i), j as f64 * dy);
            }
        }
        out
    }

    #[inline]
    pub fn u_at(&self, i: usize, j: usize) -> f64 {
        self.u[i + j * (self.grid.nx + 1)]
    }

    #[inline]
    pub fn v_at(&self, i: usize, j: usize) -> f64 {
        self.v[i + j * self.grid.nx]
    }

    /// Zero the wall-normal components (first slip condition).
    pub fn enforce_slip(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for j in 0..ny {
            self.u[j * (nx + 1)] = 0.0;
            self.u[nx + j * (nx + 1)] = 0.0;
        }
        for i in 0..nx {
            self.v[i] = 0.0;
            self.v[i + ny * nx] = 0.0;
        }
    }

    pub fn satisfies_slip(&self) -> bool {
        let mut c = self.clone();
        c.enforce_slip();
        c == *self
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.u.iter().chain(&self.v).all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(GridError::NonFinite { i: 0, j: 0, value: f64::NAN })
        }
    }
}
