//! Interface measurements on cell-centered φ.

use std::collections::VecDeque;

use super::BenchError;
use crate::grid::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceGeometry {
    /// √(area{φ > 0}/π)
    pub area_radius: f64,
    /// Zero-contour length / 2π
    pub contour_radius: f64,
    /// Centroid of {φ > 0}.
    pub center: (f64, f64),
    /// True when the positive phase is the enclosed one.
    pub inner_positive: bool,
}

/// Area of {f > 0} in a triangle of area `area` under linear interpolation.
fn tri_positive_area(f: [f64; 3], area: f64) -> f64 {
    let pos = f.iter().filter(|v| **v > 0.0).count();
    match pos {
        0 => 0.0,
        3 => area,
        1 => {
            let k = f.iter().position(|v| *v > 0.0).unwrap();
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            area * a * a / ((a - b) * (a - c))
        }
        _ => {
            let k = f.iter().position(|v| *v <= 0.0).unwrap();
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            if a == 0.0 {
                area
            } else {
                area * (1.0 - a * a / ((a - b) * (a - c)))
            }
        }
    }
}

/// Length of the zero segment in a triangle with vertices `p`.
fn tri_zero_length(f: [f64; 3], p: [(f64, f64); 3]) -> f64 {
    let mut pts = Vec::with_capacity(2);
    for e in 0..3 {
        let (a, b) = (e, (e + 1) % 3);
        if (f[a] > 0.0) != (f[b] > 0.0) {
            let s = f[a] / (f[a] - f[b]);
            pts.push((p[a].0 + s * (p[b].0 - p[a].0), p[a].1 + s * (p[b].1 - p[a].1)));
        }
    }
    if pts.len() == 2 {
        (pts[0].0 - pts[1].0).hypot(pts[0].1 - pts[1].1)
    } else {
        0.0
    }
}

fn components(phi: &ScalarField) -> (usize, bool) {
    let g = phi.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut seen = vec![false; g.n_cells()];
    let mut count = 0;
    let mut touches = false;
    for start in 0..g.n_cells() {
        if seen[start] || phi.values[start] <= 0.0 {
            continue;
        }
        count += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == ny {
                touches = true;
            }
            let mut push = |kk: usize| {
                if !seen[kk] && phi.values[kk] > 0.0 {
                    seen[kk] = true;
                    queue.push_back(kk);
                }
            };
            if i > 0 {
                push(k - 1);
            }
            if i + 1 < nx {
                push(k + 1);
            }
            if j > 0 {
                push(k - nx);
            }
            if j + 1 < ny {
                push(k + nx);
            }
        }
    }
    (count, touches)
}

/// Area- and contour-based radius of the single closed component of {φ > 0}.
pub fn interface_geometry(phi: &ScalarField) -> Result<InterfaceGeometry, BenchError> {
    let g = phi.grid;
    let (nx, ny) = (g.nx, g.ny);
    let positive = phi.values.iter().filter(|v| **v > 0.0).count();
    if positive == 0 || positive == g.n_cells() {
        return Err(BenchError::NoInterface);
    }
    let (count, touches) = components(phi);
    if count > 1 {
        return Err(BenchError::MultipleComponents(count));
    }
    if touches {
        return Err(BenchError::TouchesBoundary);
    }
    let (dx, dy) = (g.dx(), g.dy());
    let quarter = 0.25 * dx * dy;
    let mut area = 0.0;
    let mut length = 0.0;
    let (mut mx, mut my) = (0.0, 0.0);
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let f00 = phi.at(i, j);
            let f10 = phi.at(i + 1, j);
            let f01 = phi.at(i, j + 1);
            let f11 = phi.at(i + 1, j + 1);
            if f00 <= 0.0 && f10 <= 0.0 && f01 <= 0.0 && f11 <= 0.0 {
                continue;
            }
            let (x0, y0) = (g.xc(i), g.yc(j));
            let (x1, y1) = (x0 + dx, y0 + dy);
            let fc = 0.25 * (f00 + f10 + f01 + f11);
            let pc = (x0 + 0.5 * dx, y0 + 0.5 * dy);
            let corners = [((x0, y0), f00), ((x1, y0), f10), ((x1, y1), f11), ((x0, y1), f01)];
            let mut a_cell = 0.0;
            for e in 0..4 {
                let (pa, fa) = corners[e];
                let (pb, fb) = corners[(e + 1) % 4];
                a_cell += tri_positive_area([fa, fb, fc], quarter);
                length += tri_zero_length([fa, fb, fc], [pa, pb, pc]);
            }
            area += a_cell;
            mx += a_cell * pc.0;
            my += a_cell * pc.1;
        }
    }
    Ok(InterfaceGeometry {
        area_radius: (area / std::f64::consts::PI).sqrt(),
        contour_radius: length / (2.0 * std::f64::consts::PI),
        center: (mx / area, my / area),
        inner_positive: true,
    })
}

/// R = √(area{φ > 0}/π) with sub-cell linear interpolation.
pub fn fit_radius(phi: &ScalarField) -> Result<f64, BenchError> {
    interface_geometry(phi).map(|g| g.area_radius)
}

/// Zero crossing of a pseudo-1D profile along the middle row, by linear
/// interpolation between cell centers. Requires exactly one sign change.
pub fn front_position(phi: &ScalarField) -> Result<f64, BenchError> {
    let g = phi.grid;
    let j = g.ny / 2;
    let mut found = None;
    for i in 0..g.nx - 1 {
        let (a, b) = (phi.at(i, j), phi.at(i + 1, j));
        if (a > 0.0) != (b > 0.0) {
            if found.is_some() {
                return Err(BenchError::MultipleComponents(2));
            }
            found = Some(g.xc(i) + a / (a - b) * g.dx());
        }
    }
    found.ok_or(BenchError::NoInterface)
}
