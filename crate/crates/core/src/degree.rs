//! Preimage counts at regular values: mod-2 degree, orientation signature,
//! absolute degree and positive-index Pontryagin inspection.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::framed::{FramedError, FramedPointSet};
use crate::linalg::norm;
use crate::map::{MapError, MapSpec};
use crate::operator::Operator;
use crate::path::{ParityClass, PathError};
use crate::solve::{newton, seed_grid, solve_grid, Outcome, Root, SolverConfig};
use crate::transport;

/// Regularity margin on the smallest singular value.
pub const TAU_REG: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DegreeError {
    #[error("IndexNonZero: the map has index {index}, this needs index 0")]
    IndexNonZero { index: i64 },
    #[error("IndexNotPositive: the map has index {index}")]
    IndexNotPositive { index: i64 },
    #[error("NoRegularValueFound after {attempts} attempts; last failure: {last}")]
    NoRegularValueFound { attempts: usize, last: String },
    #[error("UnstableCount at y = {value:?}: {coarse} roots on the {grid}-grid, {fine} after refinement")]
    UnstableCount { value: Vec<f64>, grid: usize, coarse: usize, fine: usize },
    #[error("ResidualFailure: Newton stalls at {point:?} with residual {residual:e}, away from every root")]
    ResidualFailure { point: Vec<f64>, residual: f64 },
    #[error("NotRegular: y = {value:?} has a preimage point with smallest singular value {sigma:e}")]
    NotRegular { value: Vec<f64>, sigma: f64 },
    #[error("ValueDependence: preimage parity differs between regular values ({counts:?})")]
    ValueDependence { counts: Vec<usize> },
    #[error("NotOrientable: orientation signature {signature:?} is nonzero; use deg2")]
    NotOrientable { signature: Vec<u8> },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Framed(#[from] FramedError),
}

impl DegreeError {
    pub fn code(&self) -> &'static str {
        match self {
            DegreeError::IndexNonZero { .. } => "IndexNonZero",
            DegreeError::IndexNotPositive { .. } => "IndexNotPositive",
            DegreeError::NoRegularValueFound { .. } => "NoRegularValueFound",
            DegreeError::UnstableCount { .. } => "UnstableCount",
            DegreeError::ResidualFailure { .. } => "ResidualFailure",
            DegreeError::NotRegular { .. } => "NotRegular",
            DegreeError::ValueDependence { .. } => "ValueDependence",
            DegreeError::NotOrientable { .. } => "NotOrientable",
            DegreeError::Map(e) => e.code(),
            DegreeError::Path(e) => e.code(),
            DegreeError::Framed(e) => e.code(),
        }
    }

    pub fn is_refusal(&self) -> bool {
        match self {
            DegreeError::Map(e) => e.is_refusal(),
            DegreeError::Framed(e) => e.is_refusal(),
            DegreeError::Path(PathError::InvalidPath(_) | PathError::Expr(_)) => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeConfig {
    pub solver: SolverConfig,
    pub attempts: usize,
    pub seed: u64,
    /// Probes per radius when certifying properness.
    pub probes: usize,
    /// Number of regular values the mod-2 degree is checked on.
    pub values: usize,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        DegreeConfig { solver: SolverConfig::default(), attempts: 64, seed: 0, probes: 64, values: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreimageSet {
    pub value: Vec<f64>,
    pub points: Vec<Root>,
    /// Seeds per axis of the grid whose count was confirmed by refinement.
    pub verified_grid: usize,
}

fn require_index0(f: &MapSpec) -> Result<(), DegreeError> {
    match f.index() {
        0 => Ok(()),
        index => Err(DegreeError::IndexNonZero { index }),
    }
}

/// All preimages of `y` in the box; the count must survive one doubling of
/// the seed grid.
pub fn solve_preimage(f: &MapSpec, y: &[f64], cfg: &SolverConfig) -> Result<PreimageSet, DegreeError> {
    require_index0(f)?;
    let coarse = solve_grid(f, y, cfg.grid, cfg);
    let fine = solve_grid(f, y, 2 * cfg.grid, cfg);
    let sep = 1e-4 * f.manifold().diameter();
    let matched = coarse.roots.len() == fine.roots.len()
        && coarse
            .roots
            .iter()
            .all(|a| fine.roots.iter().any(|b| crate::solve::seam_distance(f, &a.x, &b.x) <= sep));
    if !matched {
        return Err(DegreeError::UnstableCount {
            value: y.to_vec(),
            grid: cfg.grid,
            coarse: coarse.roots.len(),
            fine: fine.roots.len(),
        });
    }
    if let Some((point, residual)) = fine.near_misses.into_iter().next() {
        return Err(DegreeError::ResidualFailure { point, residual });
    }
    Ok(PreimageSet { value: y.to_vec(), points: fine.roots, verified_grid: cfg.grid })
}

/// Kantorovich quantity `h = L r / σ²` at an approximate root with
/// residual `r`, with `L` a central-difference estimate of the Jacobian's
/// Lipschitz constant. A root that converged in the linear regime of a
/// degenerate zero has `h` of order one; a regular root has `h ≪ 1`.
pub fn kantorovich(f: &MapSpec, x: &[f64], residual: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    let h = 1e-4 * norm(x).max(1.0);
    let mut lip = 0.0f64;
    for i in 0..x.len() {
        let (mut p, mut q) = (x.to_vec(), x.to_vec());
        p[i] += h;
        q[i] -= h;
        let d = (f.jacobian_raw(&p) - f.jacobian_raw(&q)) / (2.0 * h);
        lip = lip.max(crate::linalg::operator_norm(&d));
    }
    lip * residual / (sigma * sigma)
}

/// Largest Kantorovich quantity accepted as a certified regular root.
const KANTOROVICH_MAX: f64 = 0.1;

fn regular_root(f: &MapSpec, x: &[f64], residual: f64, sigma: f64) -> bool {
    sigma > TAU_REG && kantorovich(f, x, residual, sigma) < KANTOROVICH_MAX
}

fn check_regular(f: &MapSpec, pre: &PreimageSet) -> Result<(), DegreeError> {
    match pre.points.iter().find(|r| !regular_root(f, &r.x, r.residual, r.sigma_min)) {
        Some(r) => Err(DegreeError::NotRegular { value: pre.value.clone(), sigma: r.sigma_min }),
        None => Ok(()),
    }
}

/// Preimages of `y` if it is a regular value of an index-0 map.
pub fn regular_preimage(f: &MapSpec, y: &[f64], cfg: &SolverConfig) -> Result<PreimageSet, DegreeError> {
    let pre = solve_preimage(f, y, cfg)?;
    check_regular(f, &pre)?;
    Ok(pre)
}

/// Uniform draws over `region` until one is regular. For index 0 the full
/// preimage is solved; for positive index sampled preimage points must have
/// surjective differential.
pub fn sample_regular_value(
    f: &MapSpec,
    region: &[(f64, f64)],
    attempts: usize,
    rng: &mut impl Rng,
    cfg: &SolverConfig,
) -> Result<Vec<f64>, DegreeError> {
    if f.index() < 0 {
        return Err(DegreeError::IndexNotPositive { index: f.index() });
    }
    let mut last = String::from("no attempts made");
    for _ in 0..attempts {
        let y: Vec<f64> = region.iter().map(|(lo, hi)| if lo < hi { rng.random_range(*lo..*hi) } else { *lo }).collect();
        match is_regular_value(f, &y, cfg) {
            Ok(()) => return Ok(y),
            Err(e) => last = e.to_string(),
        }
    }
    Err(DegreeError::NoRegularValueFound { attempts, last })
}

/// Index-0 variant of [`sample_regular_value`] that keeps the solved preimage.
pub fn sample_regular_preimage(
    f: &MapSpec,
    region: &[(f64, f64)],
    attempts: usize,
    rng: &mut impl Rng,
    cfg: &SolverConfig,
) -> Result<PreimageSet, DegreeError> {
    require_index0(f)?;
    let mut last = String::from("no attempts made");
    for _ in 0..attempts {
        let y: Vec<f64> = region.iter().map(|(lo, hi)| if lo < hi { rng.random_range(*lo..*hi) } else { *lo }).collect();
        match regular_preimage(f, &y, cfg) {
            Ok(pre) => return Ok(pre),
            Err(e) => last = e.to_string(),
        }
    }
    Err(DegreeError::NoRegularValueFound { attempts, last })
}

pub fn is_regular_value(f: &MapSpec, y: &[f64], cfg: &SolverConfig) -> Result<(), DegreeError> {
    if f.index() == 0 {
        return regular_preimage(f, y, cfg).map(|_| ());
    }
    let report = pontryagin_inspect(f, y, 64, cfg)?;
    match report.points.iter().find(|p| !regular_root(f, &p.x, p.residual, p.sigma_min)) {
        Some(p) => Err(DegreeError::NotRegular { value: y.to_vec(), sigma: p.sigma_min }),
        None => Ok(()),
    }
}

/// Properness certificate plus the box-truncation check.
pub fn certify(f: &MapSpec, cfg: &DegreeConfig) -> Result<(), DegreeError> {
    f.certify_properness(cfg.probes, cfg.seed)?;
    f.check_truncation()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deg2Report {
    pub deg2: u8,
    pub preimage: PreimageSet,
    /// Preimage counts at every regular value checked.
    pub counts: Vec<usize>,
}

/// Preimage parity at `cfg.values` seeded regular values.
pub fn deg2(f: &MapSpec, cfg: &DegreeConfig) -> Result<Deg2Report, DegreeError> {
    require_index0(f)?;
    certify(f, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let region = f.value_box();
    let mut first = None;
    let mut counts = Vec::new();
    for _ in 0..cfg.values.max(1) {
        let pre = sample_regular_preimage(f, &region, cfg.attempts, &mut rng, &cfg.solver)?;
        counts.push(pre.points.len());
        first.get_or_insert(pre);
    }
    if counts.iter().any(|c| c % 2 != counts[0] % 2) {
        return Err(DegreeError::ValueDependence { counts });
    }
    Ok(Deg2Report { deg2: (counts[0] % 2) as u8, preimage: first.unwrap(), counts })
}

pub fn orientation_signature(f: &Arc<MapSpec>) -> Result<Vec<ParityClass>, DegreeError> {
    require_index0(f)?;
    Ok(transport::orientation_signature(f)?)
}

/// Framed point set of a regular preimage: pairwise parities along the
/// paths chosen by `connect`.
pub fn preimage_point_set(f: &MapSpec, pre: &PreimageSet, signature: Vec<ParityClass>) -> FramedPointSet {
    let m = f.manifold();
    let n = pre.points.len();
    let mut eps = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let path = m.connect(&pre.points[i].x, &pre.points[j].x);
            let e = transport::pair_parity(f, &path).value();
            eps[i][j] = e;
            eps[j][i] = e;
        }
    }
    let positions = pre.points.iter().map(|r| r.x.clone()).collect();
    FramedPointSet::new(positions, eps, signature, None).expect("square parity matrix")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsDegreeReport {
    pub abs_degree: usize,
    pub plus: usize,
    pub minus: usize,
    pub preimage: PreimageSet,
}

/// `||X⁺| − |X⁻||` at a given regular preimage of an orientable map.
pub fn abs_degree_at(f: &MapSpec, pre: &PreimageSet) -> Result<AbsDegreeReport, DegreeError> {
    let set = preimage_point_set(f, pre, vec![ParityClass::TRIVIAL; f.manifold().generator_count()]);
    let v = set.validate()?;
    Ok(AbsDegreeReport {
        abs_degree: v.plus.len().abs_diff(v.minus.len()),
        plus: v.plus.len(),
        minus: v.minus.len(),
        preimage: pre.clone(),
    })
}

pub fn abs_degree(f: &Arc<MapSpec>, cfg: &DegreeConfig) -> Result<AbsDegreeReport, DegreeError> {
    let signature = orientation_signature(f)?;
    if signature.iter().any(|s| !s.is_trivial()) {
        return Err(DegreeError::NotOrientable { signature: signature.iter().map(|s| s.value()).collect() });
    }
    certify(f, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pre = sample_regular_preimage(f, &f.value_box(), cfg.attempts, &mut rng, &cfg.solver)?;
    abs_degree_at(f, &pre)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeReport {
    pub index: i64,
    pub deg2: u8,
    pub abs_degree: Option<usize>,
    pub orientation_signature: Vec<ParityClass>,
    pub value: Vec<f64>,
    pub preimage: Vec<Root>,
    pub counts: Vec<usize>,
    pub verified_grid: usize,
}

/// Mod-2 degree, signature and, when orientable, absolute degree. With
/// `value` given, that value is used (it must be regular) instead of
/// sampling.
pub fn degree_report(f: &Arc<MapSpec>, cfg: &DegreeConfig, value: Option<&[f64]>) -> Result<DegreeReport, DegreeError> {
    let signature = orientation_signature(f)?;
    let (pre, counts) = match value {
        Some(y) => {
            certify(f, cfg)?;
            let pre = regular_preimage(f, y, &cfg.solver)?;
            let c = vec![pre.points.len()];
            (pre, c)
        }
        None => {
            let r = deg2(f, cfg)?;
            (r.preimage, r.counts)
        }
    };
    let orientable = signature.iter().all(|s| s.is_trivial());
    let abs = if orientable { Some(abs_degree_at(f, &pre)?.abs_degree) } else { None };
    Ok(DegreeReport {
        index: f.index(),
        deg2: (pre.points.len() % 2) as u8,
        abs_degree: abs,
        orientation_signature: signature,
        value: pre.value.clone(),
        verified_grid: pre.verified_grid,
        preimage: pre.points,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PontryaginPoint {
    pub x: Vec<f64>,
    pub residual: f64,
    pub kernel_dim: usize,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PontryaginReport {
    pub index: i64,
    pub value: Vec<f64>,
    pub points: Vec<PontryaginPoint>,
    /// Every sampled point has kernel of dimension equal to the index.
    pub framing_exact: bool,
}

/// Samples `f⁻¹(y)` for positive index by minimum-norm Newton projection
/// of grid seeds, and checks the kernel dimension at each sample.
pub fn pontryagin_inspect(f: &MapSpec, y: &[f64], samples: usize, cfg: &SolverConfig) -> Result<PontryaginReport, DegreeError> {
    if f.index() < 1 {
        return Err(DegreeError::IndexNotPositive { index: f.index() });
    }
    let m = f.manifold();
    let per_axis = ((4 * samples.max(1)) as f64).powf(1.0 / m.dim() as f64).ceil().max(2.0) as usize;
    let seeds = seed_grid(m.bounds(), per_axis);
    let tol = 1e-9 * m.diameter().max(1.0);
    let sep = 1e-3 * m.diameter();
    let mut points: Vec<PontryaginPoint> = Vec::new();
    for s in &seeds {
        if points.len() >= samples {
            break;
        }
        let Outcome::Converged { x, residual } = newton(f, y, s, cfg) else { continue };
        let x = m.normalize(&x);
        if !m.contains(&x, tol) || points.iter().any(|p| crate::solve::seam_distance(f, &p.x, &x) < sep) {
            continue;
        }
        let j = f.jacobian_raw(&x);
        let sigma_min = crate::linalg::min_singular_value(&j);
        let kernel_dim = Operator::new(j).kernel_cokernel_dims().map(|(k, _)| k).unwrap_or(usize::MAX);
        points.push(PontryaginPoint { x, residual, kernel_dim, sigma_min });
    }
    let framing_exact = points.iter().all(|p| p.kernel_dim as i64 == f.index());
    Ok(PontryaginReport { index: f.index(), value: y.to_vec(), points, framing_exact })
}

/// Residual norm `|F(x) − y|`, used by callers that post-check roots.
pub fn residual_norm(f: &MapSpec, x: &[f64], y: &[f64]) -> f64 {
    norm(&f.eval_raw(x).iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>())
}
