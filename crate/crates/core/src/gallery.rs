//! Built-in example maps as TOML documents.

use crate::map::{parse_map, MapSpec};

const PLANE: &str = "[manifold]\ndim = 2\nbox = [[-2.5, 2.5], [-2.5, 2.5]]\n";

/// `z ↦ z^n` for `n > 0`, `z ↦ conj(z)^|n|` for `n < 0`, `z ↦ |z|²` for `n = 0`.
pub fn f_n(n: i32) -> String {
    let map = match n {
        0 => "components = [\"x1^2 + x2^2\", \"0\"]".to_string(),
        n if n > 0 => format!("complex = \"z^{n}\""),
        n => format!("complex = \"conj(z)^{}\"", -n),
    };
    format!("{PLANE}\n[map]\ncodomain_dim = 2\n{map}\n\n[properness]\nradius = \"1 + rho\"\n")
}

/// `|z|²` as a real-valued map of index 1.
pub const F0_REAL: &str = r#"[manifold]
dim = 2
box = [[-2.5, 2.5], [-2.5, 2.5]]

[map]
codomain_dim = 1
components = ["x1^2 + x2^2"]

[properness]
radius = "1 + rho"
"#;

/// Tautological line bundle over the projective line: the band
/// `[0, π] × ℝ` with `(0, r) ~ (π, −r)`, mapped by `(θ, r) ↦ (r sin θ, r cos θ)`.
pub const TAUT: &str = r#"[manifold]
dim = 2
box = [[0, "pi"], [-6, 6]]
variables = ["theta", "r"]
generators = [[[0, "-pi"], ["pi", "pi"]]]

[[manifold.seams]]
source = { axis = 0, side = "lo" }
target = { axis = 0, side = "hi" }
map = { linear = [[1, 0], [0, -1]], offset = ["pi", 0] }

[map]
codomain_dim = 2
components = ["r*sin(theta)", "r*cos(theta)"]

[properness]
radius = "sqrt(rho^2 + pi^2)"
"#;

fn band_line(components: &str) -> String {
    format!(
        r#"[manifold]
dim = 3
box = [[0, "pi"], [-6, 6], [-4, 4]]
variables = ["theta", "r", "s"]
generators = [[[0, "-pi", 0], ["pi", "pi", 0]]]

[[manifold.seams]]
source = {{ axis = 0, side = "lo" }}
target = {{ axis = 0, side = "hi" }}
map = {{ linear = [[1, 0, 0], [0, -1, 0], [0, 0, 1]], offset = ["pi", 0, 0] }}

[map]
codomain_dim = 3
components = {components}

[properness]
radius = "sqrt(rho^2 + 1 + pi^2)"
"#
    )
}

/// `((θ, r), s) ↦ (r sin θ, r cos θ, s²)`.
pub fn g() -> String {
    band_line(r#"["r*sin(theta)", "r*cos(theta)", "s^2"]"#)
}

/// The tautological map extended by the identity in `s`.
pub fn taut_s() -> String {
    band_line(r#"["r*sin(theta)", "r*cos(theta)", "s"]"#)
}

pub const F0_ID: &str = r#"[manifold]
dim = 1
box = [[-3, 3]]
variables = ["s"]

[map]
codomain_dim = 1
components = ["s"]

[properness]
radius = "rho"
"#;

pub const F1_SQ: &str = r#"[manifold]
dim = 1
box = [[-3, 3]]
variables = ["s"]

[map]
codomain_dim = 1
components = ["s^2"]

[properness]
radius = "sqrt(rho)"
"#;

/// A homotopy through Fredholm maps that is not proper: zeros escape along `x = 1/t`.
pub const NONPROPER_H: &str = r#"[manifold]
dim = 2
box = [[0.05, 1], [-30, 30]]
variables = ["t", "x"]

[map]
codomain_dim = 1
components = ["(1 - exp(-(x - 1/t)^2))*x"]

[properness]
radius = "1 + rho"
"#;

/// Every built-in example as `(file stem, document)`.
pub fn all() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = (0..=5).map(|n| (format!("f{n}"), f_n(n))).collect();
    out.extend((1..=3).map(|n| (format!("fm{n}"), f_n(-n))));
    out.push(("f0_real".into(), F0_REAL.into()));
    out.push(("taut".into(), TAUT.into()));
    out.push(("taut_s".into(), taut_s()));
    out.push(("g".into(), g()));
    out.push(("f0_id".into(), F0_ID.into()));
    out.push(("f1_sq".into(), F1_SQ.into()));
    out.push(("nonproper_h".into(), NONPROPER_H.into()));
    out
}

pub fn get(name: &str) -> Option<String> {
    all().into_iter().find(|(n, _)| n == name).map(|(_, t)| t)
}

/// Parses a built-in example; panics on unknown names.
pub fn load(name: &str) -> MapSpec {
    let text = get(name).unwrap_or_else(|| panic!("no built-in example {name}"));
    parse_map(&text).unwrap_or_else(|e| panic!("built-in example {name}: {e}"))
}

#[cfg(test)]
mod tests {
    #[test]
    fn every_example_parses() {
        for (name, _) in super::all() {
            super::load(&name);
        }
    }
}
