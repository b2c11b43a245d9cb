//! Jacobi-preconditioned conjugate gradients with fixed-order reductions.

use rayon::prelude::*;
use thiserror::Error;

const DOT_CHUNK: usize = 4096;
/// Below this length the thread-pool overhead dominates; results do not depend on the choice.
const PAR_MIN: usize = 1 << 16;

/// Dot product summed chunk by chunk in index order; independent of thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < PAR_MIN {
        return a.chunks(DOT_CHUNK).zip(b.chunks(DOT_CHUNK)).map(|(x, y)| lane_dot(x, y)).sum();
    }
    let partial: Vec<f64> = a
        .par_chunks(DOT_CHUNK)
        .zip(b.par_chunks(DOT_CHUNK))
        .map(|(x, y)| lane_dot(x, y))
        .collect();
    partial.iter().sum()
}

/// Elementwise update, threaded only for long vectors.
fn update<F>(out: &mut [f64], a: &[f64], f: F)
where
    F: Fn(&mut f64, f64) + Sync + Send,
{
    if out.len() < PAR_MIN {
        out.iter_mut().zip(a).for_each(|(o, &x)| f(o, x));
    } else {
        out.par_iter_mut().zip(a).for_each(|(o, &x)| f(o, x));
    }
}

// Four interleaved accumulators, combined in a fixed order.
fn lane_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (xc, xr) = x.split_at(x.len() / 4 * 4);
    let (yc, yr) = y.split_at(xc.len());
    for (a, b) in xc.chunks_exact(4).zip(yc.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (a, b) in xr.iter().zip(yr) {
        s += a * b;
    }
    s
}

fn sum(a: &[f64]) -> f64 {
    if a.len() < PAR_MIN {
        return a.chunks(DOT_CHUNK).map(|x| x.iter().sum::<f64>()).sum();
    }
    let partial: Vec<f64> = a.par_chunks(DOT_CHUNK).map(|x| x.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

fn remove_mean(a: &mut [f64]) {
    let m = sum(a) / a.len() as f64;
    a.iter_mut().for_each(|x| *x -= m);
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Stop once ‖r‖₂ ≤ rel_tol ‖b‖₂ ...
    pub rel_tol: f64,
    /// ... and ‖r‖_∞ ≤ abs_inf_tol.
    pub abs_inf_tol: f64,
    pub max_iters: usize,
    /// Work in the mean-zero subspace (singular Neumann operators).
    pub zero_mean: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_inf_tol: f64::INFINITY, max_iters: 10_000, zero_mean: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CgStats {
    pub iters: usize,
    pub rel_residual: f64,
    pub inf_residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradients did not converge in {iters} iterations (relative residual {rel_residual:.3e})")]
    NotConverged { iters: usize, rel_residual: f64 },
}

/// Solve A x = b for symmetric positive (semi)definite A, warm-started from `x`.
pub fn pcg<A>(apply: A, diag: &[f64], b: &[f64], x: &mut [f64], opts: &CgOptions) -> Result<CgStats, SolveError>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut rhs = b.to_vec();
    if opts.zero_mean {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let bnorm = dot(&rhs, &rhs).sqrt();
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    update(&mut r, &rhs, |ri, bi| *ri = bi - *ri);
    if opts.zero_mean {
        remove_mean(&mut r);
    }
    let done = |r: &[f64]| {
        let rn = dot(r, r).sqrt();
        let rel = if bnorm > 0.0 { rn / bnorm } else { rn };
        (rel <= opts.rel_tol && inf_norm(r) <= opts.abs_inf_tol, rel)
    };
    let (ok, mut rel) = done(&r);
    if ok || bnorm == 0.0 {
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            rel = 0.0;
        }
        return Ok(CgStats { iters: 0, rel_residual: rel, inf_residual: inf_norm(&r) });
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let precondition = |r: &[f64], z: &mut [f64]| {
        z.iter_mut().zip(r).zip(&inv).for_each(|((zi, ri), di)| *zi = ri * di);
        if opts.zero_mean {
            remove_mean(z);
        }
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rz / pap;
        update(x, &p, |xi, pi| *xi += a * pi);
        update(&mut r, &ap, |ri, api| *ri -= a * api);
        let (ok, rel_now) = done(&r);
        rel = rel_now;
        if ok {
            if opts.zero_mean {
                remove_mean(x);
            }
            return Ok(CgStats { iters: it, rel_residual: rel, inf_residual: inf_norm(&r) });
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        update(&mut p, &z, |pi, zi| *pi = zi + beta * *pi);
    }
    Err(SolveError::NotConverged { iters: opts.max_iters, rel_residual: rel })
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1D Dirichlet Laplacian: tridiag(-1, 2, -1)
    fn apply_1d(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            y[i] = 2.0 * x[i] - l - r;
        }
    }

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let want: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply_1d(&want, &mut b);
        let mut x = vec![0.0; n];
        let st = pcg(apply_1d, &vec![2.0; n], &b, &mut x, &CgOptions { rel_tol: 1e-13, ..Default::default() }).unwrap();
        assert!(st.iters <= n + 1);
        for (a, w) in x.iter().zip(&want) {
            assert!((a - w).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![1.0; 10];
        let st = pcg(apply_1d, &[2.0; 10], &[0.0; 10], &mut x, &CgOptions::default()).unwrap();
        assert_eq!(st.iters, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
