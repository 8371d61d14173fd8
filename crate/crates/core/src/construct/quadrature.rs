use std::sync::OnceLock;

/// Nodes and weights of `n`-point Gauss–Legendre quadrature on `[0, 1]`,
/// found by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Order of the segment quadrature.
pub(crate) const ORDER: usize = 16;

pub(crate) fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(ORDER))
}

/// Cubic cardinal B-spline on `[-2, 2]` and its derivative. Integer shifts
/// sum to one and reproduce linear functions.
pub fn bspline(t: f64) -> (f64, f64) {
    let a = t.abs();
    let s = t.signum();
    if a < 1.0 {
        (2.0 / 3.0 - a * a + 0.5 * a * a * a, s * (-2.0 * a + 1.5 * a * a))
    } else if a < 2.0 {
        let b = 2.0 - a;
        (b * b * b / 6.0, -s * 0.5 * b * b)
    } else {
        (0.0, 0.0)
    }
}
