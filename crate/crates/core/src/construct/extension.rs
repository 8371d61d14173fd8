//! Extension of a Fredholm map from `U` to the whole box through a
//! partition of unity.
//!
//! `f̄(x) = Σ_j φ_j(x) (g(x_j) + ∫₀¹ A(x_j + s(x − x_j)) (x − x_j) ds)`
//! with `φ_j` tensor cubic B-splines on a lattice of spacing `h` and `x_j`
//! the lattice points. Every bump containing `x` lies within
//! `R* = 4√d h` of `x`, so the cover is a star refinement of the balls
//! `B_{R*}(x)` once those balls satisfy the radius conditions (a)–(f).

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{bspline, nodes};
use super::{toml_error, ConstructError, Region, Witness};
use crate::expr::{parse_real, Expr, Tape};
use crate::geometry::{ManifoldToml, Scalar};
use crate::linalg::{dist, min_singular_value, norm, operator_norm};

/// Relative width of the collar around the box on which `g` and `A` must be
/// defined; lattice points and radius balls live there.
const COLLAR: f64 = 0.1;
/// Conservatism factor applied to the smallest singular value.
const DELTA1_FACTOR: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    domain: Region,
    names: Vec<String>,
    u: Option<Region>,
    v: Option<Region>,
    f: Option<Vec<Tape>>,
    g: Vec<Tape>,
    a: Vec<Tape>,
    /// `∂A/∂x_i`, stored axis-major.
    da: Vec<Tape>,
    codomain: Option<Region>,
    k: usize,
}

fn eval_all(tapes: &[Tape], x: &[f64]) -> Vec<f64> {
    tapes.iter().map(|t| t.eval(x)).collect()
}

impl ExtensionProblem {
    /// `u` and `v` are both given or both absent; `f` is required with them.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: Region,
        names: Vec<String>,
        u: Option<Region>,
        v: Option<Region>,
        f: Option<Vec<Expr>>,
        g: Vec<Expr>,
        a: Vec<Vec<Expr>>,
        codomain: Option<Region>,
    ) -> Result<Self, ConstructError> {
        let inv = |m: String| Err(ConstructError::InvalidProblem(m));
        let d = domain.dim();
        let k = g.len();
        if names.len() != d {
            return inv(format!("{} variable names for a {d}-dimensional box", names.len()));
        }
        if k == 0 {
            return inv("g needs at least one component".into());
        }
        if a.len() != k || a.iter().any(|row| row.len() != d) {
            return inv(format!("a must be a {k}x{d} matrix of expressions"));
        }
        if let Some(n) = &codomain {
            if n.dim() != k {
                return inv(format!("codomain box has dimension {}, expected {k}", n.dim()));
            }
        }
        let f = match (&u, &v, f) {
            (None, None, _) => None,
            (Some(u), Some(v), Some(f)) => {
                if u.dim() != d || v.dim() != d {
                    return inv("u and v must have the dimension of the box".into());
                }
                if !u.compactly_inside(v) {
                    return inv("the closure of u must lie inside v".into());
                }
                if !u.is_inside(&domain) {
                    return inv("u must lie inside the box".into());
                }
                if f.len() != k {
                    return inv(format!("f has {} components, g has {k}", f.len()));
                }
                Some(f)
            }
            (Some(_), Some(_), None) => return inv("f is required when u and v are given".into()),
            _ => return inv("u and v must be given together".into()),
        };
        let da = (0..d).flat_map(|i| a.iter().flatten().map(move |e| Tape::compile(&e.derivative(i)))).collect();
        let df: Option<Vec<Tape>> =
            f.as_ref().map(|f| f.iter().flat_map(|c| (0..d).map(move |i| Tape::compile(&c.derivative(i)))).collect());
        let problem = ExtensionProblem {
            g: g.iter().map(Tape::compile).collect(),
            a: a.iter().flatten().map(Tape::compile).collect(),
            da,
            f: f.as_ref().map(|f| f.iter().map(Tape::compile).collect()),
            domain,
            names,
            u,
            v,
            codomain,
            k,
        };
        problem.validate(df.as_deref())?;
        Ok(problem)
    }

    fn lattice_size(&self) -> usize {
        (4096f64.powf(1.0 / self.dim() as f64).floor() as usize).clamp(3, 17)
    }

    fn validate(&self, df: Option<&[Tape]>) -> Result<(), ConstructError> {
        let inv = |m: String| Err(ConstructError::InvalidProblem(m));
        let n = self.lattice_size();
        for x in self.collar().lattice(n) {
            let a = self.a(&x);
            let g = self.g(&x);
            if a.iter().chain(&g).any(|v| !v.is_finite()) || self.da(&x).iter().flatten().any(|v| !v.is_finite()) {
                return inv(format!("g or a is not defined at {x:?}"));
            }
            let s = min_singular_value(&a);
            if !(s > 1e-9 * operator_norm(&a).max(1.0)) {
                return inv(format!("a is not of full rank at {x:?} (smallest singular value {s:e})"));
            }
            if let Some(c) = &self.codomain {
                if !c.contains(&g) {
                    return inv(format!("g({x:?}) lies outside the codomain box"));
                }
            }
        }
        if let (Some(v), Some(f), Some(df)) = (&self.v, &self.f, df) {
            let d = self.dim();
            for x in v.lattice(n) {
                let fx = eval_all(f, &x);
                let gx = self.g(&x);
                if dist(&fx, &gx) > 1e-9 * (1.0 + norm(&fx)) {
                    return inv(format!("g differs from f at {x:?} in v"));
                }
                let dfx = DMatrix::from_fn(self.k, d, |r, c| df[r * d + c].eval(&x));
                if operator_norm(&(&dfx - self.a(&x))) > 1e-9 * (1.0 + operator_norm(&dfx)) {
                    return inv(format!("a differs from df at {x:?} in v"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.k
    }

    pub fn index(&self) -> i64 {
        self.dim() as i64 - self.k as i64
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn u(&self) -> Option<&Region> {
        self.u.as_ref()
    }

    pub fn v(&self) -> Option<&Region> {
        self.v.as_ref()
    }

    pub fn collar(&self) -> Region {
        self.domain.dilated(COLLAR)
    }

    pub fn f(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.f.as_ref().map(|f| eval_all(f, x))
    }

    pub fn g(&self, x: &[f64]) -> Vec<f64> {
        eval_all(&self.g, x)
    }

    pub fn a(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(self.k, d, |r, c| self.a[r * d + c].eval(x))
    }

    /// Partial derivatives `∂A/∂x_i` for every axis.
    pub fn da(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        let (d, k) = (self.dim(), self.k);
        (0..d).map(|i| DMatrix::from_fn(k, d, |r, c| self.da[i * k * d + r * d + c].eval(x))).collect()
    }

    /// Bound on `‖dA(x)‖` as a map into operators.
    fn da_norm(&self, x: &[f64]) -> f64 {
        self.da(x).iter().map(|m| operator_norm(m).powi(2)).sum::<f64>().sqrt()
    }

    /// Distance from `g(x)` to the complement of the codomain.
    pub fn delta0(&self, x: &[f64]) -> f64 {
        self.codomain.as_ref().map_or(f64::INFINITY, |c| c.depth(&self.g(x)))
    }

    /// Lower estimate of the distance from `A(x)` to operators that are not
    /// Fredholm of index `n`.
    pub fn delta1(&self, x: &[f64]) -> f64 {
        DELTA1_FACTOR * min_singular_value(&self.a(x))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionTable {
    #[serde(default)]
    u: Option<Vec<[Scalar; 2]>>,
    #[serde(default)]
    v: Option<Vec<[Scalar; 2]>>,
    #[serde(default)]
    f: Option<Vec<String>>,
    g: Vec<String>,
    a: Vec<Vec<String>>,
    #[serde(default)]
    codomain: Option<Vec<[Scalar; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionDoc {
    manifold: ManifoldToml,
    extension: ExtensionTable,
}

/// Parses an extension problem: a seamless `[manifold]` box and an
/// `[extension]` table with `u`, `v`, `f`, `g`, `a` and `codomain`.
pub fn parse_extension_toml(text: &str) -> Result<ExtensionProblem, ConstructError> {
    let doc: ExtensionDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let inv = ConstructError::InvalidProblem;
    let m = &doc.manifold;
    if !m.seams.is_empty() || !m.generators.is_empty() {
        return Err(inv("extension problems live on a box without seams".into()));
    }
    if m.bounds.len() != m.dim {
        return Err(inv(format!("box has {} intervals but dim = {}", m.bounds.len(), m.dim)));
    }
    let domain = Region::from_scalars(&m.bounds, "manifold.box")?;
    let d = domain.dim();
    let names = m.variables.clone().unwrap_or_else(|| (1..=d).map(|i| format!("x{i}")).collect());
    if names.len() != d {
        return Err(inv(format!("manifold.variables has {} names, dim = {d}", names.len())));
    }
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let expr = |field: &str, s: &str| parse_real(s, &vars).map_err(|e| inv(format!("extension.{field}: {e}")));
    let list = |field: &str, v: &[String]| v.iter().map(|s| expr(field, s)).collect::<Result<Vec<_>, _>>();
    let e = &doc.extension;
    let region = |r: &Option<Vec<[Scalar; 2]>>, what| r.as_ref().map(|r| Region::from_scalars(r, what)).transpose();
    ExtensionProblem::new(
        domain,
        names.clone(),
        region(&e.u, "extension.u")?,
        region(&e.v, "extension.v")?,
        e.f.as_ref().map(|f| list("f", f)).transpose()?,
        list("g", &e.g)?,
        e.a.iter().map(|row| list("a", row)).collect::<Result<Vec<_>, _>>()?,
        region(&e.codomain, "extension.codomain")?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverConfig {
    /// Probe points per axis for the radius search; `None` picks a size from the dimension.
    pub probes_per_axis: Option<usize>,
    /// Random directions sampled in every radius ball, besides the axes.
    pub ball_directions: usize,
    /// Smallest acceptable probe radius, relative to the shortest box side.
    pub min_radius: f64,
    pub seed: u64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig { probes_per_axis: None, ball_directions: 16, min_radius: 1e-4, seed: 0 }
    }
}

/// Uniform lattice cover with cubic spline bumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionCover {
    /// Lattice spacing `h`.
    pub spacing: f64,
    /// Radius `4√d h` containing every bump that meets a point.
    pub star_radius: f64,
    /// Lattice point with index zero on every axis.
    pub origin: Vec<f64>,
    /// Lattice points per axis.
    pub counts: Vec<usize>,
    /// Smallest admissible radius found at the probes.
    pub probe_radius: f64,
    /// Condition that bounded `probe_radius`.
    pub tightest: char,
}

const CONDITIONS: [char; 6] = ['a', 'b', 'c', 'd', 'e', 'f'];

struct Ball {
    dirs: Vec<Vec<f64>>,
}

impl Ball {
    fn new(d: usize, random: usize, seed: u64) -> Ball {
        let mut dirs = Vec::new();
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = s;
                dirs.push(e);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while dirs.len() < 2 * d + random {
            let v: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
            let n = norm(&v);
            if n > 1e-3 && n <= 1.0 {
                dirs.push(v.iter().map(|c| c / n).collect());
            }
        }
        Ball { dirs }
    }

    fn points<'a>(&'a self, x: &'a [f64], r: f64) -> impl Iterator<Item = Vec<f64>> + 'a {
        [1.0, 0.5].into_iter().flat_map(move |s| {
            self.dirs.iter().map(move |e| x.iter().zip(e).map(|(a, b)| a + s * r * b).collect())
        })
    }
}

/// Margins of conditions (a)–(f) for the ball `B_r(x)`, positive when the
/// condition holds; unconstrained conditions give `+∞`. Suprema over the
/// ball are estimated from `ball` samples.
fn condition_margins(p: &ExtensionProblem, ball: &Ball, x: &[f64], r: f64) -> [f64; 6] {
    let inf = f64::INFINITY;
    let a_cond = p.collar().depth(x) - r;
    let b_cond = match (&p.u, &p.v) {
        (Some(u), Some(v)) => (u.distance(x) - r).max(v.depth(x) - r),
        _ => inf,
    };
    let (d0, d1) = (p.delta0(x), p.delta1(x));
    let (gx, ax) = (p.g(x), p.a(x));
    let (mut osc_g, mut osc_a, mut sup_a, mut sup_da) = (0.0f64, 0.0f64, operator_norm(&ax), p.da_norm(x));
    for y in ball.points(x, r) {
        let ay = p.a(&y);
        if d0.is_finite() {
            osc_g = osc_g.max(dist(&p.g(&y), &gx));
        }
        osc_a = osc_a.max(operator_norm(&(&ay - &ax)));
        sup_a = sup_a.max(operator_norm(&ay));
        sup_da = sup_da.max(p.da_norm(&y));
    }
    let c_cond = if d0.is_finite() { 0.5 * d0 - osc_g } else { inf };
    let e_cond = if d0.is_finite() { 0.25 * d0 - r * sup_a } else { inf };
    [a_cond, b_cond, c_cond, 0.5 * d1 - osc_a, e_cond, 0.5 * d1 - r * sup_da]
}

fn tightest(m: &[f64; 6]) -> char {
    let i = (0..6).min_by(|&i, &j| m[i].total_cmp(&m[j])).unwrap();
    CONDITIONS[i]
}

/// Chooses the lattice spacing from the radii admissible at probe points.
pub fn build_cover(p: &ExtensionProblem, cfg: &CoverConfig) -> Result<PartitionCover, ConstructError> {
    let d = p.dim();
    let ball = Ball::new(d, cfg.ball_directions, cfg.seed);
    let n = cfg.probes_per_axis.unwrap_or_else(|| p.lattice_size());
    let probes = p.domain.lattice(n);
    let extent = p.domain.min_extent();
    let floor = cfg.min_radius * extent;
    let found: Vec<Result<(f64, char), ConstructError>> = probes
        .par_iter()
        .map(|x| {
            let mut r = 0.5 * extent;
            loop {
                let m = condition_margins(p, &ball, x, r);
                if m.iter().all(|v| *v > 0.0) {
                    return Ok((r, tightest(&condition_margins(p, &ball, x, 2.0 * r))));
                }
                r *= 0.5;
                if r < floor {
                    return Err(ConstructError::CoverFailure { condition: tightest(&m), point: x.clone(), radius: r });
                }
            }
        })
        .collect();
    let mut probe_radius = f64::INFINITY;
    let mut which = 'a';
    for res in found {
        let (r, c) = res?;
        if r < probe_radius {
            probe_radius = r;
            which = c;
        }
    }
    // Halved again because the admissible radius may dip between probes.
    let h = (0.5 * probe_radius / (4.0 * (d as f64).sqrt())).min(0.5 * COLLAR * extent);
    let origin: Vec<f64> = p.domain.bounds.iter().map(|(lo, _)| lo - 2.0 * h).collect();
    let counts = p.domain.bounds.iter().map(|(lo, hi)| ((hi - lo + 4.0 * h) / h).ceil() as usize + 1).collect();
    Ok(PartitionCover { spacing: h, star_radius: 4.0 * (d as f64).sqrt() * h, origin, counts, probe_radius, tightest: which })
}

/// A bump of the cover that is nonzero at some point.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// `d f̄ = A₁ + A₂ + A₃`: `A₁` collects the derivatives of the bumps and has
/// rank at most the number of bumps at the point.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub a3: DMatrix<f64>,
}

impl Decomposition {
    pub fn total(&self) -> DMatrix<f64> {
        &self.a1 + &self.a2 + &self.a3
    }
}

#[derive(Debug, Clone)]
pub struct Extension {
    problem: Arc<ExtensionProblem>,
    cover: PartitionCover,
}

pub fn extend(problem: Arc<ExtensionProblem>, cover: PartitionCover) -> Extension {
    Extension { problem, cover }
}

impl Extension {
    pub fn problem(&self) -> &ExtensionProblem {
        &self.problem
    }

    pub fn cover(&self) -> &PartitionCover {
        &self.cover
    }

    /// Bumps whose support contains `x`.
    pub fn bumps(&self, x: &[f64]) -> Vec<Bump> {
        let c = &self.cover;
        let h = c.spacing;
        let mut out = vec![Bump { center: Vec::new(), value: 1.0, gradient: Vec::new() }];
        for (i, xi) in x.iter().enumerate() {
            let t = (xi - c.origin[i]) / h;
            let lo = ((t - 2.0).floor() + 1.0).max(0.0) as usize;
            let hi = ((t + 2.0).ceil() - 1.0).min(c.counts[i] as f64 - 1.0);
            let mut next = Vec::with_capacity(out.len() * 4);
            let mut j = lo;
            while (j as f64) <= hi {
                let (b, db) = bspline(t - j as f64);
                if b > 0.0 {
                    for bump in &out {
                        let mut center = bump.center.clone();
                        center.push(c.origin[i] + j as f64 * h);
                        let mut gradient: Vec<f64> = bump.gradient.iter().map(|g| g * b).collect();
                        gradient.push(bump.value * db / h);
                        next.push(Bump { center, value: bump.value * b, gradient });
                    }
                }
                j += 1;
            }
            out = next;
        }
        out
    }

    /// `∫₀¹ A(c + s(x − c)) (x − c) ds`.
    fn segment_integral(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        let p = &self.problem;
        let delta: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
        let dv = nalgebra::DVector::from_column_slice(&delta);
        let mut acc = nalgebra::DVector::zeros(p.k);
        for (s, w) in nodes() {
            let z: Vec<f64> = c.iter().zip(&delta).map(|(ci, di)| ci + s * di).collect();
            acc += p.a(&z) * &dv * *w;
        }
        acc.iter().copied().collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.k];
        for b in self.bumps(x) {
            let base = self.problem.g(&b.center);
            let seg = self.segment_integral(&b.center, x);
            for (o, (g, s)) in out.iter_mut().zip(base.iter().zip(&seg)) {
                *o += b.value * (g + s);
            }
        }
        out
    }

    pub fn differential(&self, x: &[f64]) -> Decomposition {
        let p = &self.problem;
        let (k, d) = (p.k, p.dim());
        let mut a1 = DMatrix::zeros(k, d);
        let mut a2 = DMatrix::zeros(k, d);
        let mut a3 = DMatrix::zeros(k, d);
        for b in self.bumps(x) {
            let mut term = nalgebra::DVector::from_vec(p.g(&b.center));
            term += nalgebra::DVector::from_vec(self.segment_integral(&b.center, x));
            a1 += &term * nalgebra::RowDVector::from_row_slice(&b.gradient);
            let delta: Vec<f64> = x.iter().zip(&b.center).map(|(a, c)| a - c).collect();
            let dv = nalgebra::DVector::from_column_slice(&delta);
            for (s, w) in nodes() {
                let z: Vec<f64> = b.center.iter().zip(&delta).map(|(ci, di)| ci + s * di).collect();
                a2 += p.a(&z) * (b.value * w);
                for (i, dai) in p.da(&z).iter().enumerate() {
                    let col = dai * &dv * (b.value * w * s);
                    let mut target = a3.column_mut(i);
                    target += col;
                }
            }
        }
        Decomposition { a1, a2, a3 }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        self.differential(x).total()
    }

    /// `δ₁(x) − ‖A₂ + A₃ − A(x)‖`: positive when the non-finite-rank part of
    /// the differential stays within the Fredholm neighborhood of `A(x)`.
    pub fn fredholm_margin(&self, x: &[f64]) -> f64 {
        let dec = self.differential(x);
        self.problem.delta1(x) - operator_norm(&(&dec.a2 + &dec.a3 - self.problem.a(x)))
    }

    /// `h(t, x) = t f̄(x) + (1 − t) g(x)`.
    pub fn homotopy(&self, t: f64, x: &[f64]) -> Vec<f64> {
        self.eval(x).iter().zip(self.problem.g(x)).map(|(a, b)| t * a + (1.0 - t) * b).collect()
    }

    /// Margin of `H(t, x) = t d f̄(x) + (1 − t) A(x)` after removing `t A₁`.
    pub fn homotopy_operator_margin(&self, t: f64, x: &[f64]) -> f64 {
        let dec = self.differential(x);
        let ax = self.problem.a(x);
        let op = (&dec.a2 + &dec.a3) * t + &ax * (1.0 - t);
        self.problem.delta1(x) - operator_norm(&(op - ax))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub u_samples: usize,
    pub m_samples: usize,
    pub homotopy_samples: usize,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            u_samples: 500,
            m_samples: 1000,
            homotopy_samples: 200,
            times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionMargin {
    pub condition: char,
    /// Absent when the condition does not constrain the radius.
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopeReport {
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub worst: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FredholmReport {
    pub samples: usize,
    pub index: i64,
    pub worst: Option<Witness>,
    /// Smallest singular value of the full differential; informational, the
    /// finite-rank part may make it vanish.
    pub min_sigma_differential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub times: Vec<f64>,
    pub samples: usize,
    /// Depth of `h(t, x)` in the codomain box; absent for the whole space.
    pub image: Option<Witness>,
    pub operator: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub cover: PartitionCover,
    pub conditions: Vec<ConditionMargin>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub telescoping: Option<TelescopeReport>,
    pub fredholm: FredholmReport,
    pub homotopy: HomotopyReport,
}

impl VerifyReport {
    /// First failed check as an error carrying its witness.
    pub fn failure(&self) -> Option<ConstructError> {
        let fail = |check: String, w: &Witness| ConstructError::VerificationFailure {
            check,
            witness: w.point.clone(),
            margin: w.margin,
        };
        if let Some(t) = &self.telescoping {
            if let Some(w) = t.worst.as_ref().filter(|_| !(t.max_error < t.tolerance)) {
                return Some(fail("telescoping".into(), w));
            }
        }
        for c in &self.conditions {
            if let Some(w) = c.worst.as_ref().filter(|w| !(w.margin > 0.0)) {
                return Some(fail(format!("condition ({})", c.condition), w));
            }
        }
        let checks = [("fredholm", &self.fredholm.worst), ("homotopy image", &self.homotopy.image), ("homotopy operator", &self.homotopy.operator)];
        for (name, w) in checks {
            if let Some(w) = w.as_ref().filter(|w| !(w.margin > 0.0)) {
                return Some(fail(name.into(), w));
            }
        }
        None
    }
}

fn worst_of(items: impl Iterator<Item = (Vec<f64>, f64)>) -> Option<Witness> {
    let mut slot = None;
    for (x, m) in items {
        if m.is_finite() || m.is_nan() {
            Witness::worst(&mut slot, &x, if m.is_nan() { f64::NEG_INFINITY } else { m });
        }
    }
    slot
}

/// Post-hoc checks at random samples: exactness on `U`, conditions (a)–(f)
/// at the star radius, the Fredholm margin and both homotopies.
pub fn verify(ext: &Extension, cfg: &VerifyConfig) -> VerifyReport {
    let p = &ext.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let telescoping = p.u.as_ref().map(|u| {
        let pts: Vec<Vec<f64>> = (0..cfg.u_samples).map(|_| u.sample(&mut rng)).collect();
        let errs: Vec<(Vec<f64>, f64)> = pts
            .into_par_iter()
            .map(|x| {
                let e = dist(&ext.eval(&x), &p.f(&x).expect("f accompanies u"));
                (x, e)
            })
            .collect();
        let max_error = errs.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        let worst = worst_of(errs.into_iter().map(|(x, e)| (x, cfg.tolerance - e)));
        TelescopeReport { samples: cfg.u_samples, max_error, tolerance: cfg.tolerance, worst }
    });

    let ball = Ball::new(p.dim(), 16, cfg.seed);
    let m_pts: Vec<Vec<f64>> = (0..cfg.m_samples).map(|_| p.domain.sample(&mut rng)).collect();
    let per_point: Vec<([f64; 6], f64, f64)> = m_pts
        .par_iter()
        .map(|x| {
            let dec = ext.differential(x);
            let margin = p.delta1(x) - operator_norm(&(&dec.a2 + &dec.a3 - p.a(x)));
            (condition_margins(p, &ball, x, ext.cover.star_radius), margin, min_singular_value(&dec.total()))
        })
        .collect();
    let conditions = CONDITIONS
        .iter()
        .enumerate()
        .map(|(i, &c)| ConditionMargin {
            condition: c,
            worst: worst_of(m_pts.iter().zip(&per_point).map(|(x, r)| (x.clone(), r.0[i]))),
        })
        .collect();
    let fredholm = FredholmReport {
        samples: cfg.m_samples,
        index: p.index(),
        worst: worst_of(m_pts.iter().zip(&per_point).map(|(x, r)| (x.clone(), r.1))),
        min_sigma_differential: per_point.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
    };

    let h_pts: Vec<Vec<f64>> = (0..cfg.homotopy_samples).map(|_| p.domain.sample(&mut rng)).collect();
    let grid: Vec<(f64, &Vec<f64>)> = cfg.times.iter().flat_map(|&t| h_pts.iter().map(move |x| (t, x))).collect();
    let hm: Vec<(Vec<f64>, f64, f64)> = grid
        .par_iter()
        .map(|(t, x)| {
            let image = p.codomain.as_ref().map_or(f64::INFINITY, |c| c.depth(&ext.homotopy(*t, x)));
            (x.to_vec(), image, ext.homotopy_operator_margin(*t, x))
        })
        .collect();
    let homotopy = HomotopyReport {
        times: cfg.times.clone(),
        samples: cfg.homotopy_samples,
        image: worst_of(hm.iter().map(|(x, i, _)| (x.clone(), *i))),
        operator: worst_of(hm.iter().map(|(x, _, o)| (x.clone(), *o))),
    };
    let mut report =
        VerifyReport { passed: false, cover: ext.cover.clone(), conditions, telescoping, fredholm, homotopy };
    report.passed = report.failure().is_none();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const QUADRATIC: &str = r#"
[manifold]
dim = 2
box = [[-2, 2], [-2, 2]]

[extension]
u = [[-0.5, 0.5], [-0.5, 0.5]]
v = [[-1, 1], [-1, 1]]
f = ["x1 + 0.1*x2^2", "x2 + 0.1*x1^2"]
g = ["x1 + 0.1*x2^2", "x2 + 0.1*x1^2"]
a = [["1", "0.2*x2"], ["0.2*x1", "1"]]
"#;

    fn build(text: &str) -> Extension {
        let p = Arc::new(parse_extension_toml(text).unwrap());
        let c = build_cover(&p, &CoverConfig::default()).unwrap();
        extend(p, c)
    }

    #[test]
    fn identity_data_on_a_line_cancels() {
        // With A = 1 and g = 0, f̄(x) = x − Σ φ_j(x) x_j, which vanishes
        // because cubic splines reproduce linear functions.
        let ext = build("[manifold]\ndim = 1\nbox = [[-1, 1]]\n[extension]\ng = [\"0\"]\na = [[\"1\"]]\n");
        for x in [-0.93, -0.2, 0.0, 0.41, 0.99] {
            let direct: f64 = x - ext.bumps(&[x]).iter().map(|b| b.value * b.center[0]).sum::<f64>();
            assert!((ext.eval(&[x])[0] - direct).abs() < 1e-12);
            assert!(direct.abs() < 1e-12);
        }
    }

    #[test]
    fn bumps_form_a_partition_of_unity() {
        let ext = build(QUADRATIC);
        for x in [[0.1, -1.9], [1.99, 1.99], [-0.7, 0.3]] {
            let b = ext.bumps(&x);
            assert!((b.iter().map(|b| b.value).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(b.len() <= 16);
            for bump in &b {
                assert!(dist(&bump.center, &x) < ext.cover().star_radius / 2.0);
            }
        }
    }

    #[test]
    fn extension_reproduces_f_on_u_and_differentiates_consistently() {
        let ext = build(QUADRATIC);
        let p = ext.problem();
        for x in [[0.3, -0.2], [-0.49, 0.49]] {
            assert!(dist(&ext.eval(&x), &p.f(&x).unwrap()) < 1e-12);
        }
        let x = [1.3, -0.7];
        let h = 1e-6;
        let jac = ext.jacobian(&x);
        for i in 0..2 {
            let (mut a, mut b) = (x, x);
            a[i] += h;
            b[i] -= h;
            let (fa, fb) = (ext.eval(&a), ext.eval(&b));
            for r in 0..2 {
                assert!(((fa[r] - fb[r]) / (2.0 * h) - jac[(r, i)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn verification_passes_on_a_consistent_problem() {
        let ext = build(QUADRATIC);
        let cfg = VerifyConfig { u_samples: 50, m_samples: 100, homotopy_samples: 20, ..VerifyConfig::default() };
        let r = verify(&ext, &cfg);
        assert!(r.passed, "{:?}", r.failure());
        assert!(r.telescoping.unwrap().max_error < 1e-9);
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let bad_nesting = QUADRATIC.replace("v = [[-1, 1], [-1, 1]]", "v = [[-0.5, 1], [-1, 1]]");
        assert!(matches!(parse_extension_toml(&bad_nesting), Err(ConstructError::InvalidProblem(_))));
        let bad_a = QUADRATIC.replace("\"0.2*x1\", \"1\"", "\"0.2*x1\", \"1.1\"");
        assert!(matches!(parse_extension_toml(&bad_a), Err(ConstructError::InvalidProblem(_))));
        let singular = "[manifold]\ndim = 1\nbox = [[-1, 1]]\n[extension]\ng = [\"0\"]\na = [[\"x1\"]]\n";
        assert!(matches!(parse_extension_toml(singular), Err(ConstructError::InvalidProblem(_))));
        assert!(matches!(parse_extension_toml("[manifold]\ndim = 1\n"), Err(ConstructError::Syntax { .. })));
    }
}
