//! Differentials transported along manifold paths.
//!
//! Along a chart path the operator is `dF(x) · M`, where `M` is the product
//! of the frame transitions crossed so far. A loop's class compares the
//! operator at the basepoint with the operator at the last chart point
//! before the closing crossing. For index `n ≠ 0` the head is squared up
//! with a block fixed at the basepoint: cokernel columns when `n < 0`,
//! kernel rows when `n > 0`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::geometry::{ManifoldPath, Step};
use crate::linalg::{cokernel_basis, kernel_basis};
use crate::map::MapSpec;
use crate::operator::TAU_RANK;
use crate::path::{OperatorPath, ParityClass, PathError};

/// Square-up block chosen at a basepoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Stabilization {
    None,
    /// `b × (b − a)` columns spanning the cokernel.
    Columns(DMatrix<f64>),
    /// `(a − b) × a` rows spanning the kernel.
    Rows(DMatrix<f64>),
}

impl Stabilization {
    pub fn at(head: &DMatrix<f64>) -> Stabilization {
        let (b, a) = head.shape();
        if a == b {
            return Stabilization::None;
        }
        if a < b {
            let c = cokernel_basis(head, TAU_RANK);
            let mut cols = DMatrix::zeros(b, b - a);
            for k in 0..(b - a).min(c.ncols()) {
                cols.set_column(k, &c.column(k));
            }
            Stabilization::Columns(cols)
        } else {
            let k = kernel_basis(head, TAU_RANK);
            let mut rows = DMatrix::zeros(a - b, a);
            for j in 0..(a - b).min(k.ncols()) {
                rows.set_row(j, &k.column(j).transpose());
            }
            Stabilization::Rows(rows)
        }
    }

    pub fn square(&self, head: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Stabilization::None => head.clone(),
            Stabilization::Columns(c) => {
                let (b, a) = head.shape();
                let mut m = DMatrix::zeros(b, b);
                m.view_mut((0, 0), (b, a)).copy_from(head);
                m.view_mut((0, a), (b, b - a)).copy_from(c);
                m
            }
            Stabilization::Rows(r) => {
                let (b, a) = head.shape();
                let mut m = DMatrix::zeros(a, a);
                m.view_mut((0, 0), (b, a)).copy_from(head);
                m.view_mut((b, 0), (a - b, a)).copy_from(r);
                m
            }
        }
    }
}

/// Operator path `t ↦ S(dF(x(t)) · M(t))` for a path parameterized by arc
/// length on `[0, 1]`. Trailing crossings do not enter.
pub fn operator_path(f: &Arc<MapSpec>, path: &ManifoldPath, stab: &Stabilization) -> OperatorPath {
    let segs = path.framed_segments(f.manifold());
    let lengths: Vec<f64> = segs.iter().map(|(a, b, _)| crate::linalg::dist(a, b)).collect();
    let total: f64 = lengths.iter().sum();
    let mut cum = Vec::with_capacity(segs.len() + 1);
    cum.push(0.0);
    for l in &lengths {
        cum.push(cum.last().unwrap() + l / total.max(f64::MIN_POSITIVE));
    }
    let size = match stab {
        Stabilization::None | Stabilization::Columns(_) => f.codomain_dim(),
        Stabilization::Rows(_) => f.dim(),
    };
    let f = Arc::clone(f);
    let stab = stab.clone();
    let refiner = Arc::new(move |t: f64| {
        let k = match cum.partition_point(|&c| c <= t) {
            0 => 0,
            i => (i - 1).min(segs.len() - 1),
        };
        let (from, to, m) = &segs[k];
        let span = cum[k + 1] - cum[k];
        let w = if span > 0.0 { ((t - cum[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let x: Vec<f64> = from.iter().zip(to).map(|(a, b)| a + w * (b - a)).collect();
        stab.square(&(f.jacobian_raw(&x) * m))
    });
    OperatorPath::from_fn(size, 64, refiner)
}

#[derive(Debug, Clone)]
pub struct LoopParity {
    pub parity: ParityClass,
    pub basepoint: Vec<f64>,
    /// Operator path actually used (after any basepoint shift).
    pub path: OperatorPath,
    pub shifted: bool,
}

/// Class of the transported differential around a loop. A critical
/// basepoint is moved off the loop by a short detour `p' → p0 → … → p0 → p'`.
pub fn loop_parity(f: &Arc<MapSpec>, lp: &ManifoldPath) -> Result<LoopParity, PathError> {
    let p0 = lp.start().ok_or_else(|| PathError::InvalidPath("empty loop".into()))?.to_vec();
    let try_at = |path: &ManifoldPath, base: &[f64]| {
        let stab = Stabilization::at(&f.jacobian_raw(base));
        let op = operator_path(f, path, &stab);
        op.parity().map(|p| (p, op))
    };
    let first_err = match try_at(lp, &p0) {
        Ok((parity, path)) => return Ok(LoopParity { parity, basepoint: p0, path, shifted: false }),
        Err(e) => e,
    };
    let m = f.manifold();
    let tol = 1e-9 * m.diameter().max(1.0);
    for frac in [1e-3, 1e-2, 3e-2, 0.1] {
        for axis in 0..m.dim() {
            for dir in [1.0, -1.0] {
                let (lo, hi) = m.bounds()[axis];
                let mut q = p0.clone();
                q[axis] += dir * frac * (hi - lo);
                if !m.contains(&q, 0.0) || (q[axis] - lo).abs() < tol || (q[axis] - hi).abs() < tol {
                    continue;
                }
                let detour = detour_loop(lp, &p0, &q);
                if let Ok((parity, path)) = try_at(&detour, &q) {
                    return Ok(LoopParity { parity, basepoint: q, path, shifted: true });
                }
            }
        }
    }
    Err(first_err)
}

fn detour_loop(lp: &ManifoldPath, p0: &[f64], q: &[f64]) -> ManifoldPath {
    let mut steps = vec![Step::Segment { from: q.to_vec(), to: p0.to_vec() }];
    steps.extend(lp.steps.iter().cloned());
    steps.push(Step::Segment { from: p0.to_vec(), to: q.to_vec() });
    ManifoldPath::from_steps(lp.dim(), steps)
}

/// Orientation signature: one class per declared generator loop.
pub fn orientation_signature(f: &Arc<MapSpec>) -> Result<Vec<ParityClass>, PathError> {
    f.manifold().generator_loops().iter().map(|lp| loop_parity(f, lp).map(|l| l.parity)).collect()
}

/// Pairwise parity of two regular points of an index-0 map along `path`.
pub fn pair_parity(f: &MapSpec, path: &ManifoldPath) -> ParityClass {
    let (Some(x), Some(y)) = (path.start(), path.end()) else { return ParityClass::TRIVIAL };
    let m = path.accumulated_transition(f.manifold());
    let dx = f.jacobian_raw(x).determinant();
    let dy = (f.jacobian_raw(y) * m).determinant();
    ParityClass::from_bool((dx > 0.0) != (dy > 0.0))
}
