//! Cell-centered operators of the form c·x − s·div(K∇x) with Neumann walls.

use rayon::prelude::*;

use crate::grid::GridSpec;

pub(crate) struct ScalarElliptic<'a> {
    pub grid: GridSpec,
    /// Per-cell diagonal shift.
    pub c: &'a [f64],
    /// Face coefficients on the u-layout (vertical faces) and v-layout.
    pub kx: &'a [f64],
    pub ky: &'a [f64],
    pub scale: f64,
    /// c ≡ 0 and K ≡ 1 (plain −Δ scaled); enables a branch-free kernel.
    pub unit: bool,
}

impl ScalarElliptic<'_> {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        if self.unit {
            return self.apply_unit(x, y);
        }
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let s = self.scale;
        y.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let xc = &x[j * nx..(j + 1) * nx];
            let cc = &self.c[j * nx..(j + 1) * nx];
            let kxr = &self.kx[j * (nx + 1)..(j + 1) * (nx + 1)];
            // flux through each interior vertical face, then its divergence
            let mut left = 0.0;
            for i in 0..nx {
                let right = if i + 1 < nx { kxr[i + 1] * (xc[i + 1] - xc[i]) * idx2 } else { 0.0 };
                row[i] = cc[i] * xc[i] - s * (right - left);
                left = right;
            }
            if j > 0 {
                let xb = &x[(j - 1) * nx..j * nx];
                let kb = &self.ky[j * nx..(j + 1) * nx];
                for i in 0..nx {
                    row[i] += s * kb[i] * (xc[i] - xb[i]) * idy2;
                }
            }
            if j + 1 < ny {
                let xt = &x[(j + 1) * nx..(j + 2) * nx];
                let kt = &self.ky[(j + 1) * nx..(j + 2) * nx];
                for i in 0..nx {
                    row[i] -= s * kt[i] * (xt[i] - xc[i]) * idy2;
                }
            }
        });
    }

    fn apply_unit(&self, x: &[f64], y: &mut [f64]) {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (idx2, idy2) = (self.scale / (g.dx() * g.dx()), self.scale / (g.dy() * g.dy()));
        y.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            let xc = &x[j * nx..(j + 1) * nx];
            row[0] = (xc[0] - xc[1]) * idx2;
            for i in 1..nx - 1 {
                row[i] = (2.0 * xc[i] - xc[i - 1] - xc[i + 1]) * idx2;
            }
            row[nx - 1] = (xc[nx - 1] - xc[nx - 2]) * idx2;
            if j > 0 {
                let xb = &x[(j - 1) * nx..j * nx];
                row.iter_mut().zip(xc.iter().zip(xb)).for_each(|(r, (c, b))| *r += (c - b) * idy2);
            }
            if j + 1 < ny {
                let xt = &x[(j + 1) * nx..(j + 2) * nx];
                row.iter_mut().zip(xc.iter().zip(xt)).for_each(|(r, (c, t))| *r += (c - t) * idy2);
            }
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (idx2, idy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
        let mut d = vec![0.0; g.n_cells()];
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 0.0;
                if i + 1 < nx {
                    s += self.kx[i + 1 + j * (nx + 1)] * idx2;
                }
                if i > 0 {
                    s += self.kx[i + j * (nx + 1)] * idx2;
                }
                if j + 1 < ny {
                    s += self.ky[i + (j + 1) * nx] * idy2;
                }
                if j > 0 {
                    s += self.ky[i + j * nx] * idy2;
                }
                let k = i + j * nx;
                d[k] = self.c[k] + self.scale * s;
                if d[k] <= 0.0 {
                    d[k] = 1.0;
                }
            }
        }
        d
    }
}
