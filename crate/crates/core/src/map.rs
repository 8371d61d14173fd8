//! Cylinder maps `F × id`: an expression-defined finite part on a seam
//! manifold, with the identity on the tail.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::expr::{lower_complex, lower_real, parse_ast, parse_real, Expr, ExprError, ExprErrorKind, Guard, Tape};
use crate::geometry::{GeometryError, ManifoldToml, Scalar, SeamManifold};
use crate::linalg::norm;
use crate::operator::Operator;

pub const TAU_SEAM: f64 = 1e-9;
pub const TAU_FD: f64 = 1e-6;
/// Frame-transition check on seams; Jacobians carry one more rounding step.
const TAU_SEAM_JAC: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("SyntaxError at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("UnknownSymbol at {line}:{col}: {message}")]
    UnknownSymbol { line: usize, col: usize, message: String },
    #[error("SeamIncompatibility: seam {seam} at {point:?}: {what} mismatch {residual:e}")]
    SeamIncompatibility { seam: usize, point: Vec<f64>, what: &'static str, residual: f64 },
    #[error("SmoothnessDomainError: component {component}: {reason} near {point:?}")]
    SmoothnessDomain { component: usize, point: Vec<f64>, reason: String },
    #[error("OutOfDomain: {point:?} is outside the box")]
    OutOfDomain { point: Vec<f64> },
    #[error("CertificateViolated: |F(x)| = {value} < rho = {rho} at x = {witness:?} (|x| = {radius})")]
    CertificateViolated { witness: Vec<f64>, rho: f64, radius: f64, value: f64 },
    #[error("PropernessUncertified: {0}")]
    PropernessUncertified(String),
    #[error("InvalidSchema: {0}")]
    Schema(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl MapError {
    pub fn code(&self) -> &'static str {
        match self {
            MapError::Syntax { .. } => "SyntaxError",
            MapError::UnknownSymbol { .. } => "UnknownSymbol",
            MapError::SeamIncompatibility { .. } => "SeamIncompatibility",
            MapError::SmoothnessDomain { .. } => "SmoothnessDomainError",
            MapError::OutOfDomain { .. } => "OutOfDomain",
            MapError::CertificateViolated { .. } => "CertificateViolated",
            MapError::PropernessUncertified(_) => "PropernessUncertified",
            MapError::Schema(_) => "InvalidSchema",
            MapError::Geometry(e) => e.code(),
        }
    }

    /// Mathematical refusals, as opposed to malformed input.
    pub fn is_refusal(&self) -> bool {
        matches!(self, MapError::CertificateViolated { .. } | MapError::PropernessUncertified(_))
    }

    fn from_expr(e: ExprError, line: usize, col: usize) -> Self {
        match e.kind {
            ExprErrorKind::Syntax => MapError::Syntax { line, col, message: e.message },
            ExprErrorKind::UnknownSymbol => MapError::UnknownSymbol { line, col, message: e.message },
        }
    }
}

/// Declared radius function: `|F(x)| ≥ ρ` whenever `|x| ≥ R(ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Properness {
    radius: Expr,
    tape: Tape,
    pub margin: f64,
}

impl Properness {
    pub fn parse(radius: &str, margin: f64) -> Result<Self, MapError> {
        let radius = parse_real(radius, &["rho"]).map_err(|e| {
            let (line, col) = (e.pos.line, e.pos.col);
            MapError::from_expr(e, line, col)
        })?;
        Ok(Properness { tape: Tape::compile(&radius), radius, margin })
    }

    pub fn radius_at(&self, rho: f64) -> f64 {
        self.tape.eval(&[rho])
    }

    pub fn radius_text(&self) -> String {
        self.radius.display(&["rho".to_string()]).to_string()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub passed: bool,
    pub probes: usize,
    pub ladder: Vec<f64>,
    pub worst_margin: f64,
}

#[derive(Debug, Clone)]
pub struct MapSpec {
    manifold: SeamManifold,
    names: Vec<String>,
    components: Vec<Expr>,
    tapes: Vec<Tape>,
    jacobian: Vec<Tape>,
    properness: Option<Properness>,
    value_box: Option<Vec<(f64, f64)>>,
}

impl MapSpec {
    /// Validates smoothness and seam compatibility.
    pub fn new(
        manifold: SeamManifold,
        names: Vec<String>,
        components: Vec<Expr>,
        properness: Option<Properness>,
        value_box: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, MapError> {
        let d = manifold.dim();
        if names.len() != d {
            return Err(MapError::Schema(format!("{} variable names for a {d}-dimensional domain", names.len())));
        }
        if components.is_empty() {
            return Err(MapError::Schema("map needs at least one component".into()));
        }
        if let Some(vb) = &value_box {
            if vb.len() != components.len() || vb.iter().any(|(lo, hi)| !(lo <= hi)) {
                return Err(MapError::Schema("degree.values must give one interval per component".into()));
            }
        }
        let tapes = components.iter().map(Tape::compile).collect();
        let jacobian = components.iter().flat_map(|c| (0..d).map(move |v| Tape::compile(&c.derivative(v)))).collect();
        let spec = MapSpec { manifold, names, components, tapes, jacobian, properness, value_box };
        spec.check_smoothness()?;
        spec.check_seams()?;
        Ok(spec)
    }

    pub fn manifold(&self) -> &SeamManifold {
        &self.manifold
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.components.len()
    }

    pub fn index(&self) -> i64 {
        self.dim() as i64 - self.codomain_dim() as i64
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component_texts(&self) -> Vec<String> {
        self.components.iter().map(|c| c.display(&self.names).to_string()).collect()
    }

    pub fn properness(&self) -> Option<&Properness> {
        self.properness.as_ref()
    }

    /// Box from which regular values are drawn; defaults to `[-1, 1]^k`.
    pub fn value_box(&self) -> Vec<(f64, f64)> {
        self.value_box.clone().unwrap_or_else(|| vec![(-1.0, 1.0); self.codomain_dim()])
    }

    fn domain_tol(&self) -> f64 {
        1e-9 * self.manifold.diameter().max(1.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        if !self.manifold.contains(x, self.domain_tol()) {
            return Err(MapError::OutOfDomain { point: x.to_vec() });
        }
        Ok(self.eval_raw(x))
    }

    pub fn differential(&self, x: &[f64]) -> Result<Operator, MapError> {
        if !self.manifold.contains(x, self.domain_tol()) {
            return Err(MapError::OutOfDomain { point: x.to_vec() });
        }
        Ok(Operator::new(self.jacobian_raw(x)))
    }

    /// Evaluation without the domain check (solvers may step slightly outside).
    pub fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        self.tapes.iter().map(|t| t.eval(x)).collect()
    }

    /// Row-major Jacobian written into `out`.
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.jacobian) {
            *o = t.eval(x);
        }
    }

    pub fn jacobian_raw(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(self.codomain_dim(), d, |r, c| self.jacobian[r * d + c].eval(x))
    }

    /// Central finite-difference Jacobian; a test oracle only.
    pub fn jacobian_fd(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(self.codomain_dim(), d);
        for c in 0..d {
            let mut lo = x.to_vec();
            let mut hi = x.to_vec();
            lo[c] -= h;
            hi[c] += h;
            let (fl, fh) = (self.eval_raw(&lo), self.eval_raw(&hi));
            for r in 0..self.codomain_dim() {
                m[(r, c)] = (fh[r] - fl[r]) / (2.0 * h);
            }
        }
        m
    }

    fn sample_grid(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let per_axis = ((4096f64).powf(1.0 / d as f64).floor() as usize).clamp(3, 33);
        let n = if per_axis % 2 == 0 { per_axis - 1 } else { per_axis };
        let total = n.pow(d as u32);
        let b = self.manifold.bounds();
        (0..total)
            .map(|mut k| {
                (0..d)
                    .map(|i| {
                        let j = k % n;
                        k /= n;
                        b[i].0 + (b[i].1 - b[i].0) * j as f64 / (n - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }

    fn check_smoothness(&self) -> Result<(), MapError> {
        let grid = self.sample_grid();
        for (ci, comp) in self.components.iter().enumerate() {
            for guard in comp.guards() {
                let (e, positive) = match &guard {
                    Guard::NonZero(e) => (e, false),
                    Guard::Positive(e) => (e, true),
                };
                let tape = Tape::compile(e);
                let mut signs = (false, false);
                let mut closest: Option<(f64, &Vec<f64>)> = None;
                for x in &grid {
                    let v = tape.eval(x);
                    if v > 0.0 {
                        signs.0 = true;
                    } else if v < 0.0 {
                        signs.1 = true;
                    }
                    if closest.is_none_or(|(c, _)| v.abs() < c) {
                        closest = Some((v.abs(), x));
                    }
                    let bad = v == 0.0 || v.is_nan() || (positive && v < 0.0);
                    if bad {
                        return Err(self.smooth_err(ci, x, positive));
                    }
                }
                if signs.0 && signs.1 {
                    let at = closest.map(|(_, x)| x.clone()).unwrap_or_default();
                    return Err(self.smooth_err(ci, &at, positive));
                }
            }
            let tape = &self.tapes[ci];
            if let Some(x) = grid.iter().find(|x| !tape.eval(x).is_finite()) {
                return Err(MapError::SmoothnessDomain {
                    component: ci,
                    point: x.clone(),
                    reason: "value is not finite".into(),
                });
            }
        }
        Ok(())
    }

    fn smooth_err(&self, component: usize, x: &[f64], positive: bool) -> MapError {
        let reason = if positive { "sqrt argument is not positive" } else { "denominator vanishes" };
        MapError::SmoothnessDomain { component, point: x.to_vec(), reason: reason.into() }
    }

    fn check_seams(&self) -> Result<(), MapError> {
        let m = &self.manifold;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ea3);
        for (si, seam) in m.seams().iter().enumerate() {
            for _ in 0..100 {
                let mut x: Vec<f64> = m.bounds().iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect();
                x[seam.source.axis] = m.facet_value(seam.source);
                let y = seam.apply(&x);
                let (fx, fy) = (self.eval_raw(&x), self.eval_raw(&y));
                let scale = norm(&fx).max(1.0);
                let res = fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if res > TAU_SEAM * scale {
                    return Err(MapError::SeamIncompatibility { seam: si, point: x, what: "value", residual: res });
                }
                let jx = self.jacobian_raw(&x);
                let jy = self.jacobian_raw(&y) * &seam.transition;
                let res = (&jy - &jx).amax();
                if res > TAU_SEAM_JAC * jx.amax().max(1.0) {
                    return Err(MapError::SeamIncompatibility { seam: si, point: x, what: "differential", residual: res });
                }
            }
        }
        Ok(())
    }

    /// Sampled check of the declared radius function on spheres `|x| = R(ρ)`
    /// for a ladder of `ρ` values whose spheres meet the box.
    pub fn certify_properness(&self, probes: usize, seed: u64) -> Result<CertificateReport, MapError> {
        let cert = self
            .properness
            .as_ref()
            .ok_or_else(|| MapError::PropernessUncertified("no [properness] record".into()))?;
        let b = self.manifold.bounds();
        let r_max = b.iter().map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2)).sum::<f64>().sqrt();
        let r_min = b.iter().map(|(lo, hi)| if *lo > 0.0 { lo * lo } else if *hi < 0.0 { hi * hi } else { 0.0 }).sum::<f64>().sqrt();

        let mut rho_hi = 1.0;
        while cert.radius_at(rho_hi) <= r_max && rho_hi < 1e12 {
            rho_hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + rho_hi);
            if cert.radius_at(mid) <= r_max {
                lo = mid;
            } else {
                rho_hi = mid;
            }
        }
        const RUNGS: usize = 8;
        let ladder: Vec<f64> = (1..=RUNGS)
            .map(|j| lo * j as f64 / RUNGS as f64)
            .filter(|&rho| {
                let r = cert.radius_at(rho);
                r.is_finite() && r >= r_min && r <= r_max
            })
            .collect();
        if ladder.is_empty() {
            return Err(MapError::PropernessUncertified("no radius sphere meets the box".into()));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = self.domain_tol();
        let mut worst = f64::INFINITY;
        let mut total = 0;
        for &rho in &ladder {
            let radius = cert.radius_at(rho);
            let mut accepted = 0;
            let mut tries = 0;
            while accepted < probes && tries < 200 * probes {
                tries += 1;
                let p: Vec<f64> = b.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect();
                let n = norm(&p);
                if n == 0.0 {
                    continue;
                }
                let x: Vec<f64> = p.iter().map(|v| v * radius / n).collect();
                if !self.manifold.contains(&x, tol) {
                    continue;
                }
                accepted += 1;
                let value = norm(&self.eval_raw(&x));
                worst = worst.min(value - rho);
                if value < rho - cert.margin {
                    return Err(MapError::CertificateViolated { witness: x, rho, radius, value });
                }
            }
            total += accepted;
        }
        Ok(CertificateReport { passed: true, probes: total, ladder, worst_margin: worst })
    }

    /// Largest `R(ρ)` over regular values in `value_box` must fit in the box
    /// along every axis not glued by a seam; otherwise preimages may lie
    /// outside the chart.
    pub fn check_truncation(&self) -> Result<f64, MapError> {
        let cert = self
            .properness
            .as_ref()
            .ok_or_else(|| MapError::PropernessUncertified("no [properness] record".into()))?;
        let rho = self.value_box().iter().map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2)).sum::<f64>().sqrt();
        let radius = cert.radius_at(rho * (1.0 + 1e-9) + cert.margin);
        let seam_axes = self.manifold.seam_axes();
        for (i, (lo, hi)) in self.manifold.bounds().iter().enumerate() {
            if seam_axes.contains(&i) {
                continue;
            }
            if *lo > -radius || *hi < radius {
                return Err(MapError::PropernessUncertified(format!(
                    "box axis {i} = [{lo}, {hi}] does not contain [-R, R] with R = {radius} for values up to {rho}"
                )));
            }
        }
        Ok(radius)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapTable {
    #[serde(default)]
    codomain_dim: Option<usize>,
    #[serde(default)]
    components: Option<Vec<Spanned<String>>>,
    #[serde(default)]
    complex: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropernessTable {
    radius: Spanned<String>,
    #[serde(default)]
    margin: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreeTable {
    values: Vec<[Scalar; 2]>,
}

#[derive(Debug, Deserialize)]
struct MapDoc {
    manifold: ManifoldToml,
    map: MapTable,
    #[serde(default)]
    properness: Option<PropernessTable>,
    #[serde(default)]
    degree: Option<DegreeTable>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// File position of an expression error inside a TOML string value.
fn locate(text: &str, span: std::ops::Range<usize>, expr: &str, e: &ExprError) -> (usize, usize) {
    let raw = &text[span.clone()];
    let quote = if raw.starts_with("\"\"\"") || raw.starts_with("'''") { 3 } else { 1 };
    let mut line = 1;
    let mut col = 1;
    let mut byte = expr.len();
    for (i, c) in expr.char_indices() {
        if line == e.pos.line && col == e.pos.col {
            byte = i;
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    line_col(text, span.start + quote + byte)
}

fn toml_error(text: &str, e: toml::de::Error) -> MapError {
    match e.span() {
        Some(span) => {
            let (line, col) = line_col(text, span.start);
            MapError::Syntax { line, col, message: e.message().to_string() }
        }
        None => MapError::Schema(e.message().to_string()),
    }
}

/// Parses and validates a map document (`[manifold]`, `[map]`, optional
/// `[properness]` and `[degree]`).
pub fn parse_map(text: &str) -> Result<MapSpec, MapError> {
    let doc: MapDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let manifold = doc.manifold.build()?;
    let d = manifold.dim();
    let names: Vec<String> = match &doc.manifold.variables {
        Some(v) => v.clone(),
        None => (1..=d).map(|i| format!("x{i}")).collect(),
    };
    if names.len() != d {
        return Err(MapError::Schema(format!("manifold.variables has {} names, dim = {d}", names.len())));
    }
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != d || names.iter().any(|n| n == "pi" || parse_real(n, &[n.as_str()]) != Ok(Expr::Var(0))) {
        return Err(MapError::Schema("variable names must be distinct identifiers other than pi".into()));
    }
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();

    let components = match (&doc.map.components, &doc.map.complex) {
        (Some(list), None) => list
            .iter()
            .map(|s| {
                let expr = s.get_ref();
                parse_ast(expr).and_then(|ast| lower_real(&ast, &vars)).map_err(|e| {
                    let (line, col) = locate(text, s.span(), expr, &e);
                    MapError::from_expr(e, line, col)
                })
            })
            .collect::<Result<Vec<_>, _>>()?,
        (None, Some(s)) => {
            if d != 2 {
                return Err(MapError::Schema("complex maps need a 2-dimensional domain".into()));
            }
            let expr = s.get_ref();
            let pair = parse_ast(expr).and_then(|ast| lower_complex(&ast)).map_err(|e| {
                let (line, col) = locate(text, s.span(), expr, &e);
                MapError::from_expr(e, line, col)
            })?;
            vec![pair.re, pair.im]
        }
        _ => return Err(MapError::Schema("[map] needs exactly one of components or complex".into())),
    };
    if let Some(k) = doc.map.codomain_dim {
        if k != components.len() {
            return Err(MapError::Schema(format!("codomain_dim = {k} but {} components", components.len())));
        }
    }

    let properness = match &doc.properness {
        Some(p) => {
            let expr = p.radius.get_ref();
            let radius = parse_real(expr, &["rho"]).map_err(|e| {
                let (line, col) = locate(text, p.radius.span(), expr, &e);
                MapError::from_expr(e, line, col)
            })?;
            let margin = p.margin.unwrap_or(1e-9);
            if !(margin >= 0.0) {
                return Err(MapError::Schema("properness.margin must be non-negative".into()));
            }
            Some(Properness { tape: Tape::compile(&radius), radius, margin })
        }
        None => None,
    };
    let value_box = doc
        .degree
        .map(|dg| {
            dg.values
                .iter()
                .map(|[lo, hi]| Ok((lo.value()?, hi.value()?)))
                .collect::<Result<Vec<_>, String>>()
        })
        .transpose()
        .map_err(MapError::Schema)?;
    MapSpec::new(manifold, names, components, properness, value_box)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const F2: &str = r#"
[manifold]
dim = 2
box = [[-2.5, 2.5], [-2.5, 2.5]]
[map]
codomain_dim = 2
components = ["x1^2 - x2^2", "2*x1*x2"]
[properness]
radius = "1 + rho"
"#;

    const TAUT: &str = r#"
[manifold]
dim = 2
box = [[0, "pi"], [-6, 6]]
variables = ["theta", "r"]
generators = [[[0, "-pi"], ["pi", "pi"]]]
[[manifold.seams]]
source = { axis = 0, side = "lo" }
target = { axis = 0, side = "hi" }
map = { linear = [[1, 0], [0, -1]], offset = ["pi", 0] }
[map]
components = ["r*sin(theta)", "r*cos(theta)"]
[properness]
radius = "sqrt(rho^2 + pi^2)"
"#;

    #[test]
    fn parse_examples() {
        let f = parse_map(F2).unwrap();
        assert_eq!(f.index(), 0);
        assert_eq!(f.evaluate(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let df = f.differential(&[1.0, 0.0]).unwrap();
        assert_eq!(df.head(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));

        let text = F2.replace("components = [\"x1^2 - x2^2\", \"2*x1*x2\"]", "components = [\"x1^2 + x2^2\"]")
            .replace("codomain_dim = 2", "codomain_dim = 1");
        assert_eq!(parse_map(&text).unwrap().index(), 1);
    }

    #[test]
    fn tautological_map_values_and_differential() {
        let f = parse_map(TAUT).unwrap();
        let v = f.evaluate(&[PI / 2.0, 3.0]).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        let (th, r) = (0.7, -1.3);
        let df = f.differential(&[th, r]).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[r * th.cos(), th.sin(), -r * th.sin(), th.cos()]);
        assert!((df.head() - want).amax() < 1e-15);
    }

    #[test]
    fn smoothness_and_domain_errors() {
        let text = F2.replace("\"2*x1*x2\"", "\"1/x1\"");
        assert!(matches!(parse_map(&text), Err(MapError::SmoothnessDomain { component: 1, .. })));
        let text = F2.replace("\"2*x1*x2\"", "\"sqrt(x1 + 3)\"");
        assert!(parse_map(&text).is_ok());
        let f = parse_map(F2).unwrap();
        assert!(matches!(f.evaluate(&[3.0, 0.0]), Err(MapError::OutOfDomain { .. })));
    }

    #[test]
    fn errors_point_into_the_file() {
        let text = F2.replace("\"2*x1*x2\"", "\"2*x1*y\"");
        match parse_map(&text) {
            Err(MapError::UnknownSymbol { line, col, .. }) => {
                let l = text.lines().nth(line - 1).unwrap();
                assert_eq!(&l[col - 1..col], "y");
            }
            other => panic!("{other:?}"),
        }
        let text = F2.replace("\"2*x1*x2\"", "\"2*(x1\"");
        assert!(matches!(parse_map(&text), Err(MapError::Syntax { .. })));
    }

    #[test]
    fn seam_incompatibility_is_detected() {
        let text = TAUT.replace("\"r*cos(theta)\"", "\"r*cos(theta) + theta\"");
        assert!(matches!(parse_map(&text), Err(MapError::SeamIncompatibility { .. })));
    }

    #[test]
    fn complex_form_matches_real_form() {
        let text = F2.replace("components = [\"x1^2 - x2^2\", \"2*x1*x2\"]", "complex = \"z^2\"");
        let (a, b) = (parse_map(&text).unwrap(), parse_map(F2).unwrap());
        for x in [[0.3, -1.1], [2.0, 0.5]] {
            assert_eq!(a.eval_raw(&x), b.eval_raw(&x));
        }
    }

    #[test]
    fn properness_certificates() {
        assert!(parse_map(F2).unwrap().certify_properness(100, 0).unwrap().passed);
        assert!(parse_map(TAUT).unwrap().certify_properness(100, 0).unwrap().passed);
        let fake = F2.replace("\"2*x1*x2\"", "\"0\"").replace("\"x1^2 - x2^2\"", "\"x1\"");
        assert!(matches!(
            parse_map(&fake).unwrap().certify_properness(100, 0),
            Err(MapError::CertificateViolated { .. })
        ));
    }
}
