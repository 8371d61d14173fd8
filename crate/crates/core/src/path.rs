//! Paths of index-0 operators and their class in the relative fundamental
//! group of (index-0 Fredholm operators, invertible operators), which is Z/2.
//!
//! Within the head-plus-identity-tail model the determinant is a continuous
//! function on a path which vanishes exactly on the singular stratum. The
//! class of a path with invertible endpoints is therefore read off from the
//! endpoint determinant signs: it is nontrivial iff the signs differ.
//!
//! Loops given in chart coordinates need no extra treatment. A seam frame
//! change is already part of the endpoint operator, and since the invertible
//! operators form a contractible space, closing the path up inside them does
//! not change its relative class. [`OperatorPath::crossing_count`] is a
//! diagnostic that counts sign changes directly.

use std::fmt;
use std::ops::Add;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::expr::{parse_real, ExprError, Tape};
use crate::operator::{Operator, OperatorJson};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("SingularEndpoint: |det| = {det:e} at t = {t} is within the margin {eps:e}")]
    SingularEndpoint { t: f64, det: f64, eps: f64 },
    #[error("SingularJoint: joint determinant {det:e} at t = {t} fails the margin {eps:e} or changes sign")]
    SingularJoint { t: f64, det: f64, eps: f64 },
    #[error("JointMismatch: joint endpoints do not meet the paths they connect")]
    JointMismatch,
    #[error("NoConvergence: sign-change count still changing after {depth} refinements")]
    NoConvergence { depth: usize },
    #[error("InvalidPath: {0}")]
    InvalidPath(String),
    #[error("{0}")]
    Expr(#[from] ExprError),
}

impl PathError {
    pub fn code(&self) -> &'static str {
        match self {
            PathError::SingularEndpoint { .. } => "SingularEndpoint",
            PathError::SingularJoint { .. } => "SingularJoint",
            PathError::JointMismatch => "JointMismatch",
            PathError::NoConvergence { .. } => "NoConvergence",
            PathError::InvalidPath(_) => "InvalidPath",
            PathError::Expr(e) => e.kind_name(),
        }
    }
}

/// Element of Z/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ParityClass(u8);

impl ParityClass {
    pub const TRIVIAL: ParityClass = ParityClass(0);
    pub const NONTRIVIAL: ParityClass = ParityClass(1);

    pub fn from_bool(nontrivial: bool) -> Self {
        ParityClass(nontrivial as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_trivial(self) -> bool {
        self.0 == 0
    }
}

impl Add for ParityClass {
    type Output = ParityClass;

    fn add(self, rhs: Self) -> Self {
        ParityClass(self.0 ^ rhs.0)
    }
}

impl fmt::Display for ParityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for ParityClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

/// Closed-form head as a function of the path parameter in `[0, 1]`.
pub type Refiner = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub struct OperatorPath {
    ts: Vec<f64>,
    heads: Vec<DMatrix<f64>>,
    refiner: Option<Refiner>,
}

impl fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorPath")
            .field("ts", &self.ts)
            .field("size", &self.size())
            .field("refiner", &self.refiner.is_some())
            .finish()
    }
}

/// Sign with zero kept distinct.
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl OperatorPath {
    /// Builds a piecewise-linear path. Operators must have index 0; heads
    /// are padded to a common size.
    pub fn from_samples(samples: Vec<(f64, Operator)>) -> Result<Self, PathError> {
        if samples.len() < 2 {
            return Err(PathError::InvalidPath("need at least two samples".into()));
        }
        if let Some((_, op)) = samples.iter().find(|(_, op)| op.index() != 0) {
            return Err(PathError::InvalidPath(format!("sample has index {}", op.index())));
        }
        let ts: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
        if ts[0] != 0.0 || *ts.last().unwrap() != 1.0 || ts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(PathError::InvalidPath("t must increase strictly from 0 to 1".into()));
        }
        let n = samples.iter().map(|(_, op)| op.a()).max().unwrap_or(0);
        let heads = samples.into_iter().map(|(_, op)| op.pad_domain_to(n).head().clone()).collect();
        Ok(OperatorPath { ts, heads, refiner: None })
    }

    /// Path given by a closed-form head `t ↦ m(t)` on `[0, 1]`, sampled on
    /// `samples + 1` equally spaced points for interpolation fallbacks.
    pub fn from_fn(size: usize, samples: usize, m: Refiner) -> Self {
        let samples = samples.max(1);
        let ts: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
        let heads = ts
            .iter()
            .map(|&t| {
                let h = m(t);
                assert_eq!(h.shape(), (size, size), "refiner head has the wrong shape");
                h
            })
            .collect();
        OperatorPath { ts, heads, refiner: Some(m) }
    }

    pub fn size(&self) -> usize {
        self.heads[0].nrows()
    }

    pub fn head_at(&self, t: f64) -> DMatrix<f64> {
        if let Some(r) = &self.refiner {
            return r(t.clamp(0.0, 1.0));
        }
        let t = t.clamp(0.0, 1.0);
        let k = match self.ts.partition_point(|&s| s <= t) {
            0 => 0,
            i => (i - 1).min(self.ts.len() - 2),
        };
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let w = (t - t0) / (t1 - t0);
        &self.heads[k] * (1.0 - w) + &self.heads[k + 1] * w
    }

    pub fn op_at(&self, t: f64) -> Operator {
        Operator::new(self.head_at(t))
    }

    pub fn det_at(&self, t: f64) -> f64 {
        let h = self.head_at(t);
        if h.nrows() == 0 {
            1.0
        } else {
            h.determinant()
        }
    }

    fn endpoint_sign(&self, t: f64) -> Result<i8, PathError> {
        let op = self.op_at(t);
        let det = self.det_at(t);
        let eps = op.eps_det();
        if det.abs() <= eps {
            return Err(PathError::SingularEndpoint { t, det, eps });
        }
        Ok(sign(det))
    }

    pub fn parity(&self) -> Result<ParityClass, PathError> {
        let s0 = self.endpoint_sign(0.0)?;
        let s1 = self.endpoint_sign(1.0)?;
        Ok(ParityClass::from_bool(s0 != s1))
    }

    /// Parameter values where the determinant changes sign, located by
    /// bisection after adaptive refinement of a uniform grid. The grid starts
    /// with `subdivisions` cells (plus the sample nodes of interpolated
    /// paths) and doubles until two consecutive depths agree.
    pub fn sign_changes(&self, subdivisions: usize) -> Result<Vec<f64>, PathError> {
        self.endpoint_sign(0.0)?;
        self.endpoint_sign(1.0)?;
        const MAX_DEPTH: usize = 14;
        let mut n = subdivisions.max(1);
        let mut prev = self.count_on_grid(n);
        for _ in 0..MAX_DEPTH {
            n *= 2;
            let cur = self.count_on_grid(n);
            if cur.len() == prev.len() {
                return Ok(cur.into_iter().map(|(lo, hi)| self.bisect(lo, hi)).collect());
            }
            prev = cur;
        }
        Err(PathError::NoConvergence { depth: MAX_DEPTH })
    }

    pub fn crossing_count(&self, subdivisions: usize) -> Result<usize, PathError> {
        self.sign_changes(subdivisions).map(|v| v.len())
    }

    /// Brackets `[lo, hi]` of consecutive grid points with opposite nonzero
    /// determinant signs; zero samples are skipped.
    fn count_on_grid(&self, n: usize) -> Vec<(f64, f64)> {
        let mut grid: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        if self.refiner.is_none() {
            grid.extend(self.ts.iter().copied());
            grid.sort_by(f64::total_cmp);
            grid.dedup();
        }
        let mut out = Vec::new();
        let mut last: Option<(f64, i8)> = None;
        for t in grid {
            let s = sign(self.det_at(t));
            if s == 0 {
                continue;
            }
            if let Some((tl, sl)) = last {
                if sl != s {
                    out.push((tl, t));
                }
            }
            last = Some((t, s));
        }
        out
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let s_lo = sign(self.det_at(lo));
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = sign(self.det_at(mid));
            if s == 0 {
                return mid;
            }
            if s == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> OperatorPath {
        let ts = self.ts.iter().rev().map(|t| 1.0 - t).collect();
        let heads = self.heads.iter().rev().cloned().collect();
        let refiner = self.refiner.clone().map(|r| -> Refiner { Arc::new(move |t| r(1.0 - t)) });
        OperatorPath { ts, heads, refiner }
    }

    /// Inserts extra interpolation nodes without changing the path.
    pub fn refined(&self, factor: usize) -> OperatorPath {
        if self.refiner.is_some() {
            return self.clone();
        }
        let factor = factor.max(1);
        let mut ts = Vec::new();
        let mut heads = Vec::new();
        for k in 0..self.ts.len() - 1 {
            for j in 0..factor {
                let t = self.ts[k] + (self.ts[k + 1] - self.ts[k]) * j as f64 / factor as f64;
                ts.push(t);
                heads.push(self.head_at(t));
            }
        }
        ts.push(1.0);
        heads.push(self.heads.last().unwrap().clone());
        OperatorPath { ts, heads, refiner: None }
    }

    /// `p # joint # q`, each piece occupying a third of `[0, 1]`. The joint
    /// must stay invertible without changing determinant sign.
    pub fn concatenate(p: &OperatorPath, q: &OperatorPath, joint: &OperatorPath) -> Result<OperatorPath, PathError> {
        p.parity()?;
        q.parity()?;
        let n = p.size().max(q.size()).max(joint.size());
        let pad = |h: DMatrix<f64>| Operator::new(h).pad_domain_to(n).head().clone();

        let close = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
            let (x, y) = (pad(x.clone()), pad(y.clone()));
            (x - &y).amax() <= 1e-9 * y.amax().max(1.0)
        };
        if !close(&joint.head_at(0.0), &p.head_at(1.0)) || !close(&joint.head_at(1.0), &q.head_at(0.0)) {
            return Err(PathError::JointMismatch);
        }

        let check_n = 64 * joint.ts.len().max(2);
        let s0 = sign(joint.det_at(0.0));
        for i in 0..=check_n {
            let t = i as f64 / check_n as f64;
            let op = Operator::new(pad(joint.head_at(t)));
            let det = op.determinant().unwrap_or(0.0);
            let eps = op.eps_det();
            if det.abs() <= eps || sign(det) != s0 {
                return Err(PathError::SingularJoint { t, det, eps });
            }
        }

        let pieces = [p, joint, q];
        let refiner = if pieces.iter().all(|x| x.refiner.is_some()) {
            let fs: Vec<Refiner> = pieces.iter().map(|x| x.refiner.clone().unwrap()).collect();
            let f: Refiner = Arc::new(move |t: f64| {
                let k = ((t * 3.0).floor() as usize).min(2);
                let h = fs[k](t * 3.0 - k as f64);
                Operator::new(h).pad_domain_to(n).head().clone()
            });
            Some(f)
        } else {
            None
        };

        let mut ts = Vec::new();
        let mut heads = Vec::new();
        for (k, piece) in pieces.iter().enumerate() {
            for (j, (t, h)) in piece.ts.iter().zip(&piece.heads).enumerate() {
                if k > 0 && j == 0 {
                    continue;
                }
                ts.push((k as f64 + t) / 3.0);
                heads.push(pad(h.clone()));
            }
        }
        *ts.last_mut().unwrap() = 1.0;
        Ok(OperatorPath { ts, heads, refiner })
    }
}

/// JSON form: `{"samples": [{"t": real, "op": Operator}], "expr": optional}`.
///
/// `expr`, when present, is a square matrix of entry expressions in `t`
/// used for exact resampling between the listed samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathJson {
    pub samples: Vec<SampleJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleJson {
    pub t: f64,
    pub op: OperatorJson,
}

pub fn parse_path_json(text: &str) -> Result<OperatorPath, PathError> {
    let j: PathJson = serde_json::from_str(text).map_err(|e| PathError::InvalidPath(e.to_string()))?;
    let samples = j
        .samples
        .into_iter()
        .map(|s| Operator::try_from(s.op).map(|op| (s.t, op)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PathError::InvalidPath(e.to_string()))?;
    let mut path = OperatorPath::from_samples(samples)?;
    if let Some(rows) = j.expr {
        let n = rows.len();
        if n != path.size() || rows.iter().any(|r| r.len() != n) {
            return Err(PathError::InvalidPath("expr must be square and match the sample heads".into()));
        }
        let tapes = rows
            .iter()
            .flatten()
            .map(|s| parse_real(s, &["t"]).map(|e| Tape::compile(&e)))
            .collect::<Result<Vec<_>, _>>()?;
        path.refiner = Some(Arc::new(move |t| DMatrix::from_fn(n, n, |r, c| tapes[r * n + c].eval(&[t]))));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_path(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> OperatorPath {
        OperatorPath::from_fn(2, 16, Arc::new(move |t| DMatrix::from_row_slice(2, 2, &[f(t), 0.0, 0.0, 1.0])))
    }

    #[test]
    fn constant_identity_is_trivial() {
        let p = OperatorPath::from_samples(vec![(0.0, Operator::identity(2)), (1.0, Operator::identity(2))]).unwrap();
        assert_eq!(p.parity(), Ok(ParityClass::TRIVIAL));
        assert_eq!(p.crossing_count(4), Ok(0));
    }

    #[test]
    fn single_transverse_crossing() {
        let p = diag_path(|t| 1.0 - 2.0 * t);
        assert_eq!(p.parity(), Ok(ParityClass::NONTRIVIAL));
        let at = p.sign_changes(8).unwrap();
        assert_eq!(at.len(), 1);
        assert!((at[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn touching_without_crossing() {
        let p = diag_path(|t| (2.0 * t - 1.0).powi(2) + 1e-3);
        assert_eq!(p.parity(), Ok(ParityClass::TRIVIAL));
        assert_eq!(p.crossing_count(8), Ok(0));
    }

    #[test]
    fn singular_endpoint_is_rejected() {
        let p = diag_path(|t| t);
        assert!(matches!(p.parity(), Err(PathError::SingularEndpoint { .. })));
    }

    #[test]
    fn concatenation_adds() {
        let nontrivial = diag_path(|t| 1.0 - 2.0 * t);
        let back = nontrivial.reversed();
        let joint = diag_path(|_| -1.0);
        let cat = OperatorPath::concatenate(&nontrivial, &back, &joint).unwrap();
        assert_eq!(cat.parity(), Ok(ParityClass::TRIVIAL));
        assert_eq!(cat.crossing_count(8), Ok(2));
    }

    #[test]
    fn singular_joint_is_rejected() {
        let p = diag_path(|t| 1.0 - 2.0 * t);
        let joint = diag_path(|t| -1.0 + 2.0 * t);
        let q = diag_path(|t| 1.0 + t);
        assert!(matches!(OperatorPath::concatenate(&p, &q, &joint), Err(PathError::SingularJoint { .. })));
    }

    #[test]
    fn json_with_expressions() {
        let text = r#"{"samples":[{"t":0,"op":{"a":1,"b":1,"head":[[1]]}},
                                  {"t":1,"op":{"a":1,"b":1,"head":[[-1]]}}],
                       "expr":[["cos(pi*t)"]]}"#;
        let p = parse_path_json(text).unwrap();
        let at = p.sign_changes(4).unwrap();
        assert_eq!(at.len(), 1);
        assert!((at[0] - 0.5).abs() < 1e-12);
    }
}
