//! Radial rescaling `g = λ f` of a sphere-valued map into a proper map.
//!
//! With `ρ(x)` the distance from a closed box `A` measured in units of the
//! gap to the enclosing box `V`, the cover is `U₀ = {ρ < c₁}` and the
//! shells `U_j = {c_{j−1} < ρ < c_{j+1}}`. The partition of unity
//! `ψ₀ = 1 − S₀`, `ψ_j = S_{j−1} − S_j` with `S_j` a smooth step from `c_j`
//! to `c_{j+1}` gives `λ = Σ 2^j ψ_j = 1 + Σ_j 2^j S_j`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{toml_error, ConstructError, Region};
use crate::geometry::{DomainClass, Scalar};
use crate::linalg::norm;
use crate::map::{parse_map, MapSpec};

/// Tolerance on `| |f(x)| − 1 |`.
pub const TAU_SPHERE: f64 = 1e-9;

/// `C^∞` step: `0` for `t ≤ 0`, `1` for `t ≥ 1`.
pub struct Smoothstep;

impl Smoothstep {
    fn e(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }

    pub fn value(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            let (a, b) = (Self::e(t), Self::e(1.0 - t));
            a / (a + b)
        }
    }

    pub fn derivative(t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let (a, b) = (Self::e(t), Self::e(1.0 - t));
        let (da, db) = (a / (t * t), b / ((1.0 - t) * (1.0 - t)));
        (da * b + a * db) / ((a + b) * (a + b))
    }
}

#[derive(Debug, Clone)]
pub struct Properized {
    f: Arc<MapSpec>,
    a: Region,
    v: Region,
    shell: f64,
    /// The box lies in `V`, so the cover `{V}` suffices and `λ ≡ 1`.
    trivial: bool,
}

pub fn properize(f: Arc<MapSpec>, a: Region, v: Region, shell: f64) -> Result<Properized, ConstructError> {
    let inv = |m: &str| Err(ConstructError::InvalidProblem(m.into()));
    let m = f.manifold();
    if m.domain_class() != DomainClass::Contractible {
        return inv("properization needs a box domain without seams");
    }
    if a.dim() != m.dim() || v.dim() != m.dim() {
        return inv("a and v must have the dimension of the domain");
    }
    if !a.compactly_inside(&v) {
        return inv("the closed box a must lie inside the open box v");
    }
    if !(shell > 0.0 && shell.is_finite()) {
        return inv("shell width must be positive");
    }
    let domain = Region::new(m.bounds().to_vec())?;
    let n = (4096f64.powf(1.0 / m.dim() as f64).floor() as usize).clamp(3, 33);
    for x in domain.lattice(n) {
        let r = norm(&f.eval_raw(&x));
        if !((r - 1.0).abs() < TAU_SPHERE) {
            return Err(ConstructError::NotSphereValued { point: x, norm: r });
        }
    }
    let trivial = domain.bounds.iter().zip(&v.bounds).all(|(b, w)| w.0 < b.0 && b.1 < w.1);
    Ok(Properized { f, a, v, shell, trivial })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProperizeTable {
    a: Vec<[Scalar; 2]>,
    v: Vec<[Scalar; 2]>,
    #[serde(default)]
    shell: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct ProperizeDoc {
    properize: ProperizeTable,
}

/// Parses a map document with an extra `[properize]` table giving the boxes
/// `a`, `v` and an optional shell width.
pub fn parse_properize_toml(text: &str) -> Result<Properized, ConstructError> {
    let doc: ProperizeDoc = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    table.remove("properize");
    let map_text = toml::to_string(&table).map_err(|e| ConstructError::InvalidProblem(e.to_string()))?;
    let f = parse_map(&map_text).map_err(|e| ConstructError::InvalidProblem(format!("map: {e}")))?;
    let a = Region::from_scalars(&doc.properize.a, "properize.a")?;
    let v = Region::from_scalars(&doc.properize.v, "properize.v")?;
    properize(Arc::new(f), a, v, doc.properize.shell.unwrap_or(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellReport {
    pub shell: usize,
    pub rho_from: f64,
    pub rho_to: f64,
    pub samples: usize,
    pub min_lambda: Option<f64>,
    pub min_norm: Option<f64>,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProperizeReport {
    pub trivial: bool,
    /// Index of `f` as a map into the unit sphere.
    pub index_f: i64,
    pub index_g: i64,
    pub sphere_error: f64,
    pub a_samples: usize,
    /// Largest `|λ − 1|` on `A`; zero when `λ = 1` exactly.
    pub lambda_deviation_on_a: f64,
    /// Every sample with `λ = 1` lies in `V`.
    pub unit_level_in_v: bool,
    /// Every sample with `λ ≤ 2^n` lies in `U₀ ∪ … ∪ U_n`.
    pub sublevels_contained: bool,
    pub shells: Vec<ShellReport>,
    pub shells_verified: usize,
    pub passed: bool,
}

impl Properized {
    pub fn map(&self) -> &MapSpec {
        &self.f
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// Knot `c_j` of the shell partition.
    pub fn knot(&self, j: usize) -> f64 {
        match j {
            0 => 1.0 / 3.0,
            j => 2.0 / 3.0 + (j - 1) as f64 * self.shell,
        }
    }

    /// Scaled distance to `A` and its gradient.
    fn gauge(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut d = vec![0.0; x.len()];
        let mut slope = vec![0.0; x.len()];
        for (i, xi) in x.iter().enumerate() {
            let ((alo, ahi), (vlo, vhi)) = (self.a.bounds[i], self.v.bounds[i]);
            if *xi < alo {
                d[i] = (alo - xi) / (alo - vlo);
                slope[i] = -1.0 / (alo - vlo);
            } else if *xi > ahi {
                d[i] = (xi - ahi) / (vhi - ahi);
                slope[i] = 1.0 / (vhi - ahi);
            }
        }
        let rho = norm(&d);
        let grad = if rho > 0.0 { d.iter().zip(&slope).map(|(a, b)| a * b / rho).collect() } else { vec![0.0; x.len()] };
        (rho, grad)
    }

    pub fn rho(&self, x: &[f64]) -> f64 {
        self.gauge(x).0
    }

    fn lambda_of(&self, rho: f64) -> (f64, f64) {
        if self.trivial {
            return (1.0, 0.0);
        }
        let (mut lam, mut dlam) = (1.0, 0.0);
        let mut j = 0;
        while self.knot(j) < rho {
            let (c0, c1) = (self.knot(j), self.knot(j + 1));
            let w = 2f64.powi(j as i32);
            lam += w * Smoothstep::value((rho - c0) / (c1 - c0));
            dlam += w * Smoothstep::derivative((rho - c0) / (c1 - c0)) / (c1 - c0);
            j += 1;
        }
        (lam, dlam)
    }

    pub fn lambda(&self, x: &[f64]) -> f64 {
        self.lambda_of(self.rho(x)).0
    }

    pub fn lambda_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (rho, grad) = self.gauge(x);
        let dl = self.lambda_of(rho).1;
        grad.iter().map(|g| dl * g).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let l = self.lambda(x);
        self.f.eval_raw(x).iter().map(|v| l * v).collect()
    }

    /// `dg = f ⊗ dλ + λ df`, a rank-one perturbation of `λ df`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let fx = nalgebra::DVector::from_vec(self.f.eval_raw(x));
        let dl = nalgebra::RowDVector::from_vec(self.lambda_gradient(x));
        fx * dl + self.f.jacobian_raw(x) * self.lambda(x)
    }

    /// Index of `f` into the unit sphere of the codomain.
    pub fn index_f(&self) -> i64 {
        self.f.index() + 1
    }

    pub fn index_g(&self) -> i64 {
        self.f.index()
    }

    /// Point with prescribed gauge value in direction `u`, coordinates with
    /// `u_i = 0` drawn inside `A`.
    fn point_at(&self, rho: f64, u: &[f64], rng: &mut impl Rng) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, ui)| {
                let ((alo, ahi), (vlo, vhi)) = (self.a.bounds[i], self.v.bounds[i]);
                let d = rho * ui.abs();
                if *ui < 0.0 {
                    alo - d * (alo - vlo)
                } else if *ui > 0.0 {
                    ahi + d * (vhi - ahi)
                } else {
                    rng.random_range(alo..=ahi)
                }
            })
            .collect()
    }

    pub fn report(&self, shells: usize, samples: usize, seed: u64) -> ProperizeReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.a.dim();
        let m = self.f.manifold();
        let domain = Region { bounds: m.bounds().to_vec() };
        let inside = |x: &[f64]| x.iter().zip(m.bounds()).all(|(v, (lo, hi))| lo <= v && v <= hi);
        let mut a_pts: Vec<Vec<f64>> = self.a.lattice(3);
        a_pts.extend((0..samples).map(|_| self.a.sample(&mut rng)));
        a_pts.retain(|x| inside(x));
        let lambda_deviation_on_a = a_pts.iter().map(|x| (self.lambda(x) - 1.0).abs()).fold(0.0, f64::max);

        let mut all: Vec<Vec<f64>> = (0..samples).map(|_| domain.sample(&mut rng)).collect();
        let mut reports = Vec::new();
        for n in 0..shells {
            let (from, to) = (self.knot(n), self.knot(n + 1));
            let mut pts = Vec::new();
            for _ in 0..samples {
                let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let un = norm(&u);
                if un < 1e-6 {
                    continue;
                }
                let u: Vec<f64> = u.iter().map(|v| v / un).collect();
                let x = self.point_at(rng.random_range(from..to), &u, &mut rng);
                if inside(&x) {
                    pts.push(x);
                }
            }
            let bound = 2f64.powi(n as i32);
            let min_lambda = pts.iter().map(|x| self.lambda(x)).reduce(f64::min);
            let min_norm = pts.iter().map(|x| norm(&self.eval(x))).reduce(f64::min);
            let passed = !pts.is_empty() && min_norm.is_some_and(|v| v >= bound * (1.0 - TAU_SPHERE));
            reports.push(ShellReport { shell: n, rho_from: from, rho_to: to, samples: pts.len(), min_lambda, min_norm, bound, passed });
            all.extend(pts);
        }
        let sphere_error = all.iter().map(|x| (norm(&self.f.eval_raw(x)) - 1.0).abs()).fold(0.0, f64::max);
        let unit_level_in_v = all.iter().filter(|x| self.lambda(x) == 1.0).all(|x| self.trivial || self.v.contains(x));
        let sublevels_contained = self.trivial
            || all.iter().all(|x| {
                let (l, rho) = (self.lambda(x), self.rho(x));
                (0..shells).all(|n| l > 2f64.powi(n as i32) || rho < self.knot(n + 1))
            });
        let shells_verified = reports.iter().filter(|r| r.passed).count();
        let passed = lambda_deviation_on_a == 0.0
            && unit_level_in_v
            && sublevels_contained
            && sphere_error < TAU_SPHERE
            && (self.trivial || reports.iter().all(|r| r.passed || r.samples == 0));
        ProperizeReport {
            trivial: self.trivial,
            index_f: self.index_f(),
            index_g: self.index_g(),
            sphere_error,
            a_samples: a_pts.len(),
            lambda_deviation_on_a,
            unit_level_in_v,
            sublevels_contained,
            shells: reports,
            shells_verified,
            passed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const CONSTANT_LINE: &str = r#"
[manifold]
dim = 1
box = [[-8, 8]]

[map]
components = ["1", "0"]

[properize]
a = [[-1, 1]]
v = [[-2, 2]]
"#;

    #[test]
    fn smoothstep_is_monotone_with_matching_derivative() {
        let mut prev = 0.0;
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let s = Smoothstep::value(t);
            assert!(s >= prev);
            prev = s;
            let h = 1e-6;
            let fd = (Smoothstep::value(t + h) - Smoothstep::value(t - h)) / (2.0 * h);
            assert!((fd - Smoothstep::derivative(t)).abs() < 1e-6);
        }
        assert!((Smoothstep::value(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_map_on_a_line_grows_dyadically() {
        let p = parse_properize_toml(CONSTANT_LINE).unwrap();
        assert_eq!((p.index_f(), p.index_g()), (0, -1));
        assert_eq!(p.lambda(&[0.5]), 1.0);
        assert_eq!(p.lambda(&[1.3]), 1.0);
        // ρ(x) = |x| − 1 outside A; ρ ≥ c_{n+1} forces λ ≥ 2^{n+1}.
        for n in 0..5 {
            let x = 1.0 + p.knot(n + 1);
            assert!(p.lambda(&[x]) >= 2f64.powi(n as i32 + 1) - 1e-12);
            assert!(p.lambda(&[-x]) >= 2f64.powi(n as i32 + 1) - 1e-12);
        }
        let r = p.report(5, 200, 0);
        assert!(r.passed && r.shells_verified == 5, "{r:?}");
    }

    #[test]
    fn jacobian_matches_differences() {
        let text = CONSTANT_LINE.replace("box = [[-8, 8]]", "box = [[-8, 8], [-3, 3]]")
            .replace("[\"1\", \"0\"]", "[\"cos(x1)\", \"sin(x1)\"]")
            .replace("a = [[-1, 1]]", "a = [[-1, 1], [-1, 1]]")
            .replace("v = [[-2, 2]]", "v = [[-2, 2], [-1.5, 2]]")
            .replace("dim = 1", "dim = 2");
        let p = parse_properize_toml(&text).unwrap();
        assert_eq!((p.index_f(), p.index_g()), (1, 0));
        let x = [2.4, -1.6];
        let jac = p.jacobian(&x);
        for i in 0..2 {
            let (mut a, mut b) = (x, x);
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let (ga, gb) = (p.eval(&a), p.eval(&b));
            for r in 0..2 {
                assert!(((ga[r] - gb[r]) / 2e-6 - jac[(r, i)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn compact_box_inside_v_is_left_alone() {
        let text = CONSTANT_LINE.replace("box = [[-8, 8]]", "box = [[-1.5, 1.5]]");
        let p = parse_properize_toml(&text).unwrap();
        assert!(p.is_trivial());
        assert_eq!(p.lambda(&[1.49]), 1.0);
        assert_eq!(p.eval(&[1.2]), vec![1.0, 0.0]);
    }

    #[test]
    fn sphere_check() {
        let text = CONSTANT_LINE.replace("[\"1\", \"0\"]", "[\"1\", \"x1\"]");
        assert!(matches!(parse_properize_toml(&text), Err(ConstructError::NotSphereValued { .. })));
    }
}
