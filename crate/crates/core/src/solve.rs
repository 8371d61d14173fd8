//! Multi-start damped Newton over a uniform seed grid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{min_singular_value, norm, pinv_solve};
use crate::map::MapSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Seeds per axis.
    pub grid: usize,
    pub max_iter: usize,
    pub tol_root: f64,
    /// Deduplication radius relative to the box diameter.
    pub sep_rel: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { grid: 32, max_iter: 60, tol_root: 1e-10, sep_rel: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Converged { x: Vec<f64>, residual: f64 },
    Stalled { x: Vec<f64>, residual: f64 },
    Escaped,
}

/// Solves `J dx = -r` in place by Gaussian elimination with partial
/// pivoting; returns false when a pivot is negligible.
fn gauss_solve(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        if a[piv * n + col].abs() <= 1e-13 * scale {
            return false;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    true
}

fn residual(f: &MapSpec, x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let r: Vec<f64> = f.eval_raw(x).iter().zip(y).map(|(a, b)| a - b).collect();
    let n = norm(&r);
    (r, if n.is_finite() { n } else { f64::INFINITY })
}

/// Newton step direction; minimum-norm when the Jacobian is singular or
/// not square.
fn step(f: &MapSpec, x: &[f64], r: &[f64]) -> Vec<f64> {
    let (k, d) = (f.codomain_dim(), f.dim());
    if k == d {
        let mut a = vec![0.0; d * d];
        f.jacobian_into(x, &mut a);
        let mut b: Vec<f64> = r.iter().map(|v| -v).collect();
        if gauss_solve(&mut a, &mut b, d) {
            return b;
        }
    }
    let j = f.jacobian_raw(x);
    let rhs = DVector::from_iterator(k, r.iter().map(|v| -v));
    pinv_solve(&j, &rhs, 1e-12).iter().copied().collect()
}

/// Damped Newton with Armijo backtracking from `seed`.
pub fn newton(f: &MapSpec, y: &[f64], seed: &[f64], cfg: &SolverConfig) -> Outcome {
    let m = f.manifold();
    let tol = cfg.tol_root * norm(y).max(1.0);
    let seam_axes = m.seam_axes();
    let escaped = |x: &[f64]| {
        x.iter().zip(m.bounds()).enumerate().any(|(i, (v, (lo, hi)))| {
            let slack = 0.25 * (hi - lo);
            !seam_axes.contains(&i) && (*v < lo - slack || *v > hi + slack) || !v.is_finite()
        })
    };
    let mut x = seed.to_vec();
    let (mut r, mut rn) = residual(f, &x, y);
    for _ in 0..cfg.max_iter {
        if rn <= tol {
            break;
        }
        let dx = step(f, &x, &r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + lambda * b).collect();
            let cand = m.normalize(&cand);
            let (rc, rcn) = residual(f, &cand, y);
            if rcn <= (1.0 - 1e-4 * lambda) * rn {
                accepted = Some((cand, rc, rcn));
                break;
            }
            lambda *= 0.5;
        }
        let Some((cand, rc, rcn)) = accepted else {
            return Outcome::Stalled { x, residual: rn };
        };
        x = cand;
        r = rc;
        rn = rcn;
        if escaped(&x) {
            return Outcome::Escaped;
        }
    }
    if rn <= tol {
        Outcome::Converged { x, residual: rn }
    } else {
        Outcome::Stalled { x, residual: rn }
    }
}

/// Cell-centered seed grid with `n` points per axis.
pub fn seed_grid(bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let d = bounds.len();
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            bounds
                .iter()
                .map(|(lo, hi)| {
                    let i = k % n;
                    k /= n;
                    lo + (hi - lo) * (i as f64 + 0.5) / n as f64
                })
                .collect()
        })
        .collect()
}

/// Distance between chart points, allowing one seam identification.
pub fn seam_distance(f: &MapSpec, a: &[f64], b: &[f64]) -> f64 {
    let mut best = crate::linalg::dist(a, b);
    for s in f.manifold().seams() {
        best = best.min(crate::linalg::dist(&s.apply(a), b)).min(crate::linalg::dist(&s.apply_inv(a), b));
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Root {
    pub x: Vec<f64>,
    pub residual: f64,
    pub sigma_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSolve {
    pub roots: Vec<Root>,
    /// Stalled runs whose residual is small but which match no root.
    pub near_misses: Vec<(Vec<f64>, f64)>,
}

/// Runs Newton from every seed of an `n`-per-axis grid, deduplicates and
/// sorts the converged points.
pub fn solve_grid(f: &MapSpec, y: &[f64], n: usize, cfg: &SolverConfig) -> GridSolve {
    let m = f.manifold();
    let seeds = seed_grid(m.bounds(), n);
    let outcomes: Vec<Outcome> = seeds.par_iter().map(|s| newton(f, y, s, cfg)).collect();
    let sep = cfg.sep_rel * m.diameter();
    let tol = 1e-9 * m.diameter().max(1.0);
    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut stalled = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Converged { x, residual } => {
                let x = m.normalize(&x);
                if !m.contains(&x, tol) {
                    continue;
                }
                match found.iter_mut().find(|(r, _)| seam_distance(f, r, &x) <= sep) {
                    Some(slot) if residual < slot.1 => *slot = (x, residual),
                    Some(_) => {}
                    None => found.push((x, residual)),
                }
            }
            Outcome::Stalled { x, residual } if residual < 1e-6 && m.contains(&x, tol) => stalled.push((x, residual)),
            _ => {}
        }
    }
    let far = 1e-4 * m.diameter();
    let near_misses = stalled.into_iter().filter(|(x, _)| found.iter().all(|(r, _)| seam_distance(f, r, x) > far)).collect();
    let mut roots: Vec<Root> = found
        .into_iter()
        .map(|(x, residual)| {
            let j: DMatrix<f64> = f.jacobian_raw(&x);
            let det = (j.nrows() == j.ncols()).then(|| j.determinant());
            Root { sigma_min: min_singular_value(&j), x, residual, det }
        })
        .collect();
    roots.sort_by(|a, b| {
        a.x.iter().zip(&b.x).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    GridSolve { roots, near_misses }
}
