use rand::Rng;
use serde::Serialize;

use super::ConstructError;
use crate::geometry::Scalar;

/// Axis-aligned open box.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Region {
    pub bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self, ConstructError> {
        if let Some(i) = bounds.iter().position(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(ConstructError::InvalidProblem(format!("interval {i} of a box is empty or not finite")));
        }
        Ok(Region { bounds })
    }

    pub(crate) fn from_scalars(raw: &[[Scalar; 2]], what: &str) -> Result<Self, ConstructError> {
        let bounds = raw
            .iter()
            .map(|[lo, hi]| Ok((lo.value()?, hi.value()?)))
            .collect::<Result<Vec<_>, String>>()
            .map_err(|e| ConstructError::InvalidProblem(format!("{what}: {e}")))?;
        Region::new(bounds).map_err(|e| ConstructError::InvalidProblem(format!("{what}: {e}")))
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(v, (lo, hi))| lo < v && v < hi)
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| (lo - v).max(v - hi).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from `x` to the complement; zero outside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.bounds).map(|(v, (lo, hi))| (v - lo).min(hi - v)).fold(f64::INFINITY, f64::min).max(0.0)
    }

    /// Whether the closure of `self` lies in the open box `other`.
    pub fn compactly_inside(&self, other: &Region) -> bool {
        self.dim() == other.dim() && self.bounds.iter().zip(&other.bounds).all(|(a, b)| b.0 < a.0 && a.1 < b.1)
    }

    pub fn is_inside(&self, other: &Region) -> bool {
        self.dim() == other.dim() && self.bounds.iter().zip(&other.bounds).all(|(a, b)| b.0 <= a.0 && a.1 <= b.1)
    }

    /// Box grown by `fraction` of its extent on every side.
    pub fn dilated(&self, fraction: f64) -> Region {
        Region { bounds: self.bounds.iter().map(|(lo, hi)| (lo - fraction * (hi - lo), hi + fraction * (hi - lo))).collect() }
    }

    pub fn min_extent(&self) -> f64 {
        self.bounds.iter().map(|(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect()
    }

    /// Grid with `n` points per axis including the faces.
    pub fn lattice(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(2);
        let total = n.pow(self.dim() as u32);
        (0..total)
            .map(|mut k| {
                self.bounds
                    .iter()
                    .map(|(lo, hi)| {
                        let i = k % n;
                        k /= n;
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let r = Region::new(vec![(0.0, 1.0), (0.0, 2.0)]).unwrap();
        assert_eq!(r.distance(&[0.5, 1.0]), 0.0);
        assert!((r.distance(&[4.0, 6.0]) - 5.0).abs() < 1e-15);
        assert!((r.depth(&[0.25, 1.0]) - 0.25).abs() < 1e-15);
        assert_eq!(r.depth(&[2.0, 1.0]), 0.0);
        let small = Region::new(vec![(0.1, 0.9), (0.5, 1.5)]).unwrap();
        assert!(small.compactly_inside(&r) && !r.compactly_inside(&small));
        assert!(!r.compactly_inside(&r) && r.is_inside(&r));
    }
}
