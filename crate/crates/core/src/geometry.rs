//! Box domains with affine seam identifications and frame transitions.
//!
//! A seam glues a source facet of the box onto a target facet through an
//! affine map `σ(x) = L x + c`. Moving forward across a seam (from a source
//! facet point `x` to `σ(x)`) changes the tangent frame by the seam's
//! transition `T`, so a differential compatible with the seam satisfies
//! `dF(σ(x)) · T = dF(x)`. Paths record the accumulated product of the
//! transitions they cross.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::expr::parse_real;
use crate::linalg::dist;

/// Coordinate tolerance for facet membership and seam identification.
pub const TAU_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("InvalidManifold: {0}")]
    Invalid(String),
    #[error("InvalidSeam: seam {seam}: {reason}")]
    Seam { seam: usize, reason: String },
    #[error("InvalidGenerator: generator {generator}: {reason}")]
    Generator { generator: usize, reason: String },
}

impl GeometryError {
    pub fn code(&self) -> &'static str {
        match self {
            GeometryError::Invalid(_) => "InvalidManifold",
            GeometryError::Seam { .. } => "InvalidSeam",
            GeometryError::Generator { .. } => "InvalidGenerator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lo,
    Hi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Facet {
    pub axis: usize,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seam {
    pub source: Facet,
    pub target: Facet,
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub transition: DMatrix<f64>,
    linear_inv: DMatrix<f64>,
    transition_inv: DMatrix<f64>,
}

impl Seam {
    /// Seam with `transition` defaulting to the linear part of the map.
    pub fn new(
        source: Facet,
        target: Facet,
        linear: DMatrix<f64>,
        offset: DVector<f64>,
        transition: Option<DMatrix<f64>>,
    ) -> Result<Self, String> {
        let transition = transition.unwrap_or_else(|| linear.clone());
        let linear_inv = linear.clone().try_inverse().ok_or("seam map is not invertible")?;
        let transition_inv = transition.clone().try_inverse().ok_or("frame transition is not invertible")?;
        Ok(Seam { source, target, linear, offset, transition, linear_inv, transition_inv })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.linear * DVector::from_column_slice(x) + &self.offset;
        v.iter().copied().collect()
    }

    pub fn apply_inv(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.linear_inv * (DVector::from_column_slice(y) - &self.offset);
        v.iter().copied().collect()
    }

    /// Frame change for a crossing in the given direction.
    pub fn frame(&self, inverse: bool) -> &DMatrix<f64> {
        if inverse {
            &self.transition_inv
        } else {
            &self.transition
        }
    }
}

/// Homotopy type of the domain up to stabilization by the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "generators")]
pub enum DomainClass {
    Contractible,
    Circle,
    Other(usize),
}

impl DomainClass {
    /// Point and circle types, where orientation signatures determine the
    /// homotopy class of the differential.
    pub fn is_supported(self) -> bool {
        !matches!(self, DomainClass::Other(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Segment { from: Vec<f64>, to: Vec<f64> },
    Crossing { seam: usize, inverse: bool, from: Vec<f64>, to: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPath {
    pub steps: Vec<Step>,
    dim: usize,
}

impl ManifoldPath {
    fn new(dim: usize) -> Self {
        ManifoldPath { steps: Vec::new(), dim }
    }

    pub fn from_steps(dim: usize, steps: Vec<Step>) -> Self {
        ManifoldPath { steps, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn push_segment(&mut self, from: &[f64], to: &[f64]) {
        if dist(from, to) > 0.0 {
            self.steps.push(Step::Segment { from: from.to_vec(), to: to.to_vec() });
        }
    }

    pub fn start(&self) -> Option<&[f64]> {
        self.steps.first().map(|s| match s {
            Step::Segment { from, .. } | Step::Crossing { from, .. } => from.as_slice(),
        })
    }

    pub fn end(&self) -> Option<&[f64]> {
        self.steps.last().map(|s| match s {
            Step::Segment { to, .. } | Step::Crossing { to, .. } => to.as_slice(),
        })
    }

    pub fn length(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Segment { from, to } => dist(from, to),
                Step::Crossing { .. } => 0.0,
            })
            .sum()
    }

    pub fn crossings(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Crossing { .. })).count()
    }

    /// Product of crossed frame transitions, latest on the left.
    pub fn accumulated_transition(&self, m: &SeamManifold) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.dim, self.dim);
        for s in &self.steps {
            if let Step::Crossing { seam, inverse, .. } = s {
                acc = m.seams[*seam].frame(*inverse) * acc;
            }
        }
        acc
    }

    /// Segments with the transition accumulated before each one.
    pub fn framed_segments(&self, m: &SeamManifold) -> Vec<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
        let mut acc = DMatrix::identity(self.dim, self.dim);
        let mut out = Vec::new();
        for s in &self.steps {
            match s {
                Step::Segment { from, to } => out.push((from.clone(), to.clone(), acc.clone())),
                Step::Crossing { seam, inverse, .. } => acc = m.seams[*seam].frame(*inverse) * acc,
            }
        }
        out
    }

    /// The path run backwards; crossings flip direction.
    pub fn reversed(&self) -> ManifoldPath {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Segment { from, to } => Step::Segment { from: to.clone(), to: from.clone() },
                Step::Crossing { seam, inverse, from, to } => {
                    Step::Crossing { seam: *seam, inverse: !inverse, from: to.clone(), to: from.clone() }
                }
            })
            .collect();
        ManifoldPath { steps, dim: self.dim }
    }

    /// Concatenation; `other` must start where `self` ends.
    pub fn then(mut self, other: &ManifoldPath) -> ManifoldPath {
        self.steps.extend(other.steps.iter().cloned());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeamManifold {
    bounds: Vec<(f64, f64)>,
    seams: Vec<Seam>,
    generators: Vec<Vec<Vec<f64>>>,
}

impl SeamManifold {
    pub fn boxed(bounds: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        Self::new(bounds, Vec::new(), Vec::new())
    }

    pub fn new(bounds: Vec<(f64, f64)>, seams: Vec<Seam>, generators: Vec<Vec<Vec<f64>>>) -> Result<Self, GeometryError> {
        if bounds.is_empty() {
            return Err(GeometryError::Invalid("dimension must be at least 1".into()));
        }
        if let Some(i) = bounds.iter().position(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(GeometryError::Invalid(format!("box interval {i} is empty or not finite")));
        }
        let m = SeamManifold { bounds, seams, generators };
        for (i, s) in m.seams.iter().enumerate() {
            m.check_seam(s).map_err(|reason| GeometryError::Seam { seam: i, reason })?;
        }
        for g in 0..m.generators.len() {
            m.generator_path(g)?;
        }
        Ok(m)
    }

    fn check_seam(&self, s: &Seam) -> Result<(), String> {
        let d = self.dim();
        if s.source.axis >= d || s.target.axis >= d {
            return Err("facet axis out of range".into());
        }
        if s.linear.shape() != (d, d) || s.offset.len() != d || s.transition.shape() != (d, d) {
            return Err(format!("seam data must be {d}-dimensional"));
        }
        // Image of the source facet's corners must span exactly the target facet.
        let src = self.facet_box(s.source);
        let tgt = self.facet_box(s.target);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for corner in 0..(1usize << d) {
            let x: Vec<f64> = (0..d).map(|i| if corner >> i & 1 == 0 { src[i].0 } else { src[i].1 }).collect();
            let y = s.apply(&x);
            for i in 0..d {
                lo[i] = lo[i].min(y[i]);
                hi[i] = hi[i].max(y[i]);
            }
        }
        let scale = self.diameter().max(1.0);
        for i in 0..d {
            if (lo[i] - tgt[i].0).abs() > TAU_GEOM * scale || (hi[i] - tgt[i].1).abs() > TAU_GEOM * scale {
                return Err(format!("seam map does not send the source facet onto the target facet (axis {i})"));
            }
        }
        Ok(())
    }

    fn facet_box(&self, f: Facet) -> Vec<(f64, f64)> {
        let mut b = self.bounds.clone();
        let v = self.facet_value(f);
        b[f.axis] = (v, v);
        b
    }

    pub fn facet_value(&self, f: Facet) -> f64 {
        match f.side {
            Side::Lo => self.bounds[f.axis].0,
            Side::Hi => self.bounds[f.axis].1,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt()
    }

    /// Axes that are glued by some seam.
    pub fn seam_axes(&self) -> Vec<usize> {
        let mut axes: Vec<usize> = self.seams.iter().flat_map(|s| [s.source.axis, s.target.axis]).collect();
        axes.sort_unstable();
        axes.dedup();
        axes
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }

    fn tol(&self) -> f64 {
        TAU_GEOM * self.diameter().max(1.0)
    }

    /// Canonical chart representative: points on a target facet are moved
    /// to the matching source facet point, points beyond a glued facet are
    /// wrapped back across it.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        let tol = self.tol();
        for _ in 0..8 {
            let mut moved = false;
            for s in &self.seams {
                let beyond_target = match s.target.side {
                    Side::Lo => x[s.target.axis] <= self.bounds[s.target.axis].0 + tol,
                    Side::Hi => x[s.target.axis] >= self.bounds[s.target.axis].1 - tol,
                };
                if beyond_target {
                    x = s.apply_inv(&x);
                    moved = true;
                    break;
                }
                let beyond_source = match s.source.side {
                    Side::Lo => x[s.source.axis] < self.bounds[s.source.axis].0 - tol,
                    Side::Hi => x[s.source.axis] > self.bounds[s.source.axis].1 + tol,
                };
                if beyond_source {
                    x = s.apply(&x);
                    moved = true;
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        x
    }

    /// Seam and direction carrying `x` to `y`, if the two are identified.
    pub fn identification(&self, x: &[f64], y: &[f64]) -> Option<(usize, bool)> {
        let tol = self.tol();
        for (i, s) in self.seams.iter().enumerate() {
            let on_src = (x[s.source.axis] - self.facet_value(s.source)).abs() <= tol;
            if on_src && dist(&s.apply(x), y) <= tol {
                return Some((i, false));
            }
            let on_tgt = (x[s.target.axis] - self.facet_value(s.target)).abs() <= tol;
            if on_tgt && dist(&s.apply_inv(x), y) <= tol {
                return Some((i, true));
            }
        }
        None
    }

    pub fn domain_class(&self) -> DomainClass {
        match (self.seams.len(), self.generators.len()) {
            (0, _) => DomainClass::Contractible,
            (1, 1) if self.seams[0].source.axis == self.seams[0].target.axis
                && self.seams[0].source.side != self.seams[0].target.side =>
            {
                DomainClass::Circle
            }
            (_, n) => DomainClass::Other(n),
        }
    }

    /// Same box, seams and generators up to `tol`.
    pub fn approx_eq(&self, other: &SeamManifold, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol);
        let flat = |b: &[(f64, f64)]| b.iter().flat_map(|(lo, hi)| [*lo, *hi]).collect::<Vec<_>>();
        close(&flat(&self.bounds), &flat(&other.bounds))
            && self.seams.len() == other.seams.len()
            && self.seams.iter().zip(&other.seams).all(|(a, b)| {
                a.source == b.source
                    && a.target == b.target
                    && close(a.linear.as_slice(), b.linear.as_slice())
                    && close(a.offset.as_slice(), b.offset.as_slice())
                    && close(a.transition.as_slice(), b.transition.as_slice())
            })
            && self.generators.len() == other.generators.len()
            && self.generators.iter().zip(&other.generators).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(u, v)| close(u, v))
            })
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generator_vertices(&self) -> &[Vec<Vec<f64>>] {
        &self.generators
    }

    /// Piecewise-linear loop through the declared vertices. The loop closes
    /// either because the last vertex equals the first or through a seam
    /// crossing from the last vertex onto the first.
    pub fn generator_path(&self, g: usize) -> Result<ManifoldPath, GeometryError> {
        let err = |reason: String| GeometryError::Generator { generator: g, reason };
        let verts = &self.generators[g];
        if verts.len() < 2 {
            return Err(err("needs at least two vertices".into()));
        }
        let tol = self.tol();
        for v in verts {
            if !self.contains(v, tol) {
                return Err(err(format!("vertex {v:?} lies outside the box")));
            }
        }
        let mut path = ManifoldPath::new(self.dim());
        let n = verts.len();
        for i in 0..n {
            let (x, y) = (&verts[i], &verts[(i + 1) % n]);
            if i == n - 1 && dist(x, y) <= tol {
                break;
            }
            if i < n - 1 {
                path.push_segment(x, y);
                continue;
            }
            match self.identification(x, y) {
                Some((seam, inverse)) => {
                    path.steps.push(Step::Crossing { seam, inverse, from: x.clone(), to: y.clone() })
                }
                None => return Err(err("loop does not close".into())),
            }
        }
        Ok(path)
    }

    pub fn generator_loops(&self) -> Vec<ManifoldPath> {
        (0..self.generators.len()).map(|g| self.generator_path(g).expect("validated at construction")).collect()
    }

    /// Every candidate path from `x` to `y` using at most one seam crossing:
    /// the straight segment first, then one-crossing unfoldings.
    pub fn connect_candidates(&self, x: &[f64], y: &[f64]) -> Vec<ManifoldPath> {
        let mut direct = ManifoldPath::new(self.dim());
        direct.push_segment(x, y);
        let mut out = vec![direct];
        for (i, s) in self.seams.iter().enumerate() {
            for inverse in [false, true] {
                if let Some(p) = self.unfolded(i, s, inverse, x, y) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn unfolded(&self, idx: usize, s: &Seam, inverse: bool, x: &[f64], y: &[f64]) -> Option<ManifoldPath> {
        // Image of x in the chart beyond the facet we exit through.
        let (x_img, facet) = if inverse { (s.apply_inv(x), s.source) } else { (s.apply(x), s.target) };
        let c = self.facet_value(facet);
        let a = facet.axis;
        let denom = y[a] - x_img[a];
        let frac = if denom.abs() < f64::MIN_POSITIVE {
            if (x_img[a] - c).abs() <= self.tol() {
                0.0
            } else {
                return None;
            }
        } else {
            (c - x_img[a]) / denom
        };
        if !(-1e-12..=1.0 + 1e-12).contains(&frac) {
            return None;
        }
        let mut q: Vec<f64> = x_img.iter().zip(y).map(|(u, v)| u + frac.clamp(0.0, 1.0) * (v - u)).collect();
        for (i, (lo, hi)) in self.bounds.iter().enumerate() {
            q[i] = q[i].clamp(*lo, *hi);
        }
        q[a] = c;
        let p = if inverse { s.apply(&q) } else { s.apply_inv(&q) };
        let mut path = ManifoldPath::new(self.dim());
        path.push_segment(x, &p);
        path.steps.push(Step::Crossing { seam: idx, inverse, from: p, to: q.clone() });
        path.push_segment(&q, y);
        Some(path)
    }

    /// Shortest candidate from [`connect_candidates`](Self::connect_candidates);
    /// the direct segment wins ties.
    pub fn connect(&self, x: &[f64], y: &[f64]) -> ManifoldPath {
        let mut best: Option<ManifoldPath> = None;
        for p in self.connect_candidates(x, y) {
            let better = match &best {
                None => true,
                Some(b) => p.length() < b.length() - self.tol(),
            };
            if better {
                best = Some(p);
            }
        }
        best.expect("direct segment is always a candidate")
    }
}

/// A number given either literally or as a constant expression such as `"pi/2"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64, String> {
        match self {
            Scalar::Num(v) => Ok(*v),
            Scalar::Text(s) => parse_real(s, &[]).map(|e| e.eval(&[])).map_err(|e| format!("'{s}': {e}")),
        }
    }
}

fn values(v: &[Scalar]) -> Result<Vec<f64>, String> {
    v.iter().map(Scalar::value).collect()
}

fn matrix(rows: &[Vec<Scalar>], d: usize, what: &str) -> Result<DMatrix<f64>, String> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(format!("{what} must be a {d}x{d} matrix"));
    }
    let flat = rows.iter().map(|r| values(r)).collect::<Result<Vec<_>, _>>()?.concat();
    Ok(DMatrix::from_row_slice(d, d, &flat))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamMapToml {
    pub linear: Vec<Vec<Scalar>>,
    pub offset: Vec<Scalar>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamToml {
    pub source: Facet,
    pub target: Facet,
    pub map: SeamMapToml,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<Scalar>>>,
}

/// The `[manifold]` table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldToml {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[Scalar; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seams: Vec<SeamToml>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Vec<Vec<Scalar>>>,
}

impl ManifoldToml {
    pub fn build(&self) -> Result<SeamManifold, GeometryError> {
        let inv = GeometryError::Invalid;
        let d = self.dim;
        if self.bounds.len() != d {
            return Err(inv(format!("box has {} intervals but dim = {d}", self.bounds.len())));
        }
        let bounds = self
            .bounds
            .iter()
            .map(|[lo, hi]| Ok((lo.value()?, hi.value()?)))
            .collect::<Result<Vec<_>, String>>()
            .map_err(inv)?;
        let mut seams = Vec::new();
        for (i, s) in self.seams.iter().enumerate() {
            let seam_err = |reason: String| GeometryError::Seam { seam: i, reason };
            let linear = matrix(&s.map.linear, d, "map.linear").map_err(seam_err)?;
            let offset = values(&s.map.offset).map_err(seam_err)?;
            if offset.len() != d {
                return Err(seam_err(format!("map.offset must have {d} entries")));
            }
            let transition = s.transition.as_ref().map(|t| matrix(t, d, "transition")).transpose().map_err(seam_err)?;
            seams.push(Seam::new(s.source, s.target, linear, DVector::from_vec(offset), transition).map_err(seam_err)?);
        }
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(g, verts)| {
                verts
                    .iter()
                    .map(|v| {
                        let v = values(v).map_err(|reason| GeometryError::Generator { generator: g, reason })?;
                        if v.len() != d {
                            return Err(GeometryError::Generator { generator: g, reason: format!("vertex must have {d} coordinates") });
                        }
                        Ok(v)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        SeamManifold::new(bounds, seams, generators)
    }
}

#[derive(Deserialize)]
struct ManifoldDoc {
    manifold: ManifoldToml,
}

/// Parses a document with a `[manifold]` table; other tables are ignored.
pub fn parse_manifold_toml(text: &str) -> Result<SeamManifold, GeometryError> {
    let doc: toml::Table = toml::from_str(text).map_err(|e| GeometryError::Invalid(e.to_string()))?;
    let m = doc.get("manifold").cloned().ok_or_else(|| GeometryError::Invalid("missing [manifold] table".into()))?;
    let doc = ManifoldDoc { manifold: m.try_into().map_err(|e: toml::de::Error| GeometryError::Invalid(e.to_string()))? };
    doc.manifold.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn band() -> SeamManifold {
        let seam = Seam::new(
            Facet { axis: 0, side: Side::Lo },
            Facet { axis: 0, side: Side::Hi },
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DVector::from_vec(vec![PI, 0.0]),
            None,
        )
        .unwrap();
        SeamManifold::new(vec![(0.0, PI), (-6.0, 6.0)], vec![seam], vec![vec![vec![0.0, -PI], vec![PI, PI]]]).unwrap()
    }

    fn cylinder() -> SeamManifold {
        let seam = Seam::new(
            Facet { axis: 0, side: Side::Lo },
            Facet { axis: 0, side: Side::Hi },
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![2.0 * PI, 0.0]),
            None,
        )
        .unwrap();
        SeamManifold::new(vec![(0.0, 2.0 * PI), (-1.0, 1.0)], vec![seam], vec![vec![vec![0.0, 0.0], vec![2.0 * PI, 0.0]]])
            .unwrap()
    }

    #[test]
    fn box_connect_is_straight() {
        let m = SeamManifold::boxed(vec![(-2.0, 2.0), (-2.0, 2.0)]).unwrap();
        let p = m.connect(&[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(p.steps.len(), 1);
        assert!(m.generator_loops().is_empty());
        assert_eq!(m.domain_class(), DomainClass::Contractible);
    }

    #[test]
    fn cylinder_crossing_uses_transition() {
        let m = cylinder();
        let p = m.connect(&[0.2, 0.0], &[2.0 * PI - 0.2, 0.5]);
        assert_eq!(p.crossings(), 1);
        assert_eq!(p.accumulated_transition(&m), m.seams()[0].transition);
        let loops = m.generator_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].crossings(), 1);
        assert_eq!(m.domain_class(), DomainClass::Circle);
    }

    #[test]
    fn band_generator_and_connect() {
        let m = band();
        let g = &m.generator_loops()[0];
        assert_eq!(g.steps.len(), 2);
        assert!(g.accumulated_transition(&m).determinant() < 0.0);

        // theta 0.1 -> 3.0: going through the seam is shorter than 2.9 straight.
        let (x, y) = ([0.1, 1.0], [3.0, -1.0]);
        let cands = m.connect_candidates(&x, &y);
        let direct = cands[0].length();
        let best = m.connect(&x, &y);
        assert!(best.length() <= direct);
        assert_eq!(best.crossings(), 1);
        assert!(best.length() < 1.0);
        let round = best.then(&m.connect(&y, &x));
        let acc = round.accumulated_transition(&m);
        assert!((acc - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn normalize_moves_target_facet_to_source() {
        let m = band();
        let y = m.normalize(&[PI, 2.0]);
        assert!((y[0]).abs() < 1e-12 && (y[1] + 2.0).abs() < 1e-12);
        let z = m.normalize(&[PI + 0.5, 2.0]);
        assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_seam_is_rejected() {
        let seam = Seam::new(
            Facet { axis: 0, side: Side::Lo },
            Facet { axis: 0, side: Side::Hi },
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 0.0]),
            None,
        )
        .unwrap();
        assert!(SeamManifold::new(vec![(0.0, 2.0), (0.0, 1.0)], vec![seam], vec![]).is_err());
    }

    #[test]
    fn toml_with_expressions() {
        let text = r#"
[manifold]
dim = 2
box = [[0, "pi"], [-6, 6]]
generators = [[[0, "-pi"], ["pi", "pi"]]]
[[manifold.seams]]
source = { axis = 0, side = "lo" }
target = { axis = 0, side = "hi" }
map = { linear = [[1, 0], [0, -1]], offset = ["pi", 0] }
"#;
        let m = parse_manifold_toml(text).unwrap();
        assert_eq!(m, band());
    }
}
