#![allow(dead_code)]

use fredholm::framed::FramedPointSet;
use fredholm::path::ParityClass;

/// Every framed point set with at most `max` points on a domain with one
/// generator loop: all label patterns over the trivial signature, and one
/// set per size over the nontrivial one.
pub fn all_point_sets(max: usize) -> Vec<FramedPointSet> {
    let mut out = Vec::new();
    for n in 0..=max {
        for bits in 0..(1u32 << n) {
            let labels: Vec<u8> = (0..n).map(|i| ((bits >> i) & 1) as u8).collect();
            out.push(FramedPointSet::from_labels(&labels, 1, None));
        }
        out.push(FramedPointSet::non_orientable(n, vec![ParityClass::NONTRIVIAL], None));
    }
    out
}

/// Index-0 quadratic perturbation of the identity whose differential is
/// the given `a` on `v`.
pub const EXT_QUADRATIC: &str = r#"
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

/// Nothing to extend: `g = 0` and a constant invertible `a`.
pub const EXT_EMPTY: &str = r#"
[manifold]
dim = 2
box = [[-1, 1], [-1, 1]]

[extension]
g = ["0", "0"]
a = [["2", "1"], ["0", "1"]]
"#;

/// A curve in the plane; index −1.
pub const EXT_CURVE: &str = r#"
[manifold]
dim = 1
box = [[-2, 2]]
variables = ["s"]

[extension]
u = [[-0.5, 0.5]]
v = [[-1, 1]]
f = ["s", "0.1*s^2"]
g = ["s", "0.1*s^2"]
a = [["1"], ["0.2*s"]]
"#;

/// Constant unit vector on a line.
pub const SPHERE_LINE: &str = r#"
[manifold]
dim = 1
box = [[-8, 8]]

[map]
components = ["1", "0"]

[properize]
a = [[-1, 1]]
v = [[-2, 2]]
"#;

/// Angle coordinate wrapped onto the unit circle.
pub const SPHERE_CIRCLE: &str = r#"
[manifold]
dim = 2
box = [[-8, 8], [-8, 8]]

[map]
components = ["cos(x1)", "sin(x1)"]

[properize]
a = [[-1, 1], [-1, 1]]
v = [[-2, 2], [-2, 2]]
"#;

/// Latitude and longitude onto the unit 2-sphere; index −1.
pub const SPHERE_GLOBE: &str = r#"
[manifold]
dim = 2
box = [[-6, 6], [-6, 6]]

[map]
components = ["cos(x1)*cos(x2)", "sin(x1)*cos(x2)", "sin(x2)"]

[properize]
a = [[-0.5, 0.5], [-1, 1]]
v = [[-1.5, 1.5], [-2, 2]]
shell = 0.5
"#;
