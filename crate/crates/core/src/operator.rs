//! Fredholm operators on the real sequence space, stored as a finite head
//! block followed by a shifted identity tail.
//!
//! An operator with head `H` (shape `b × a`) sends `e_i` to `Σ_j H[j,i] e_j`
//! for `i ≤ a` and `e_{a+k}` to `e_{b+k}`. Its index is `a − b`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Relative singular-value cut below which a direction counts as kernel.
pub const TAU_RANK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("IllConditioned: singular value {sigma:e} is within a factor 10 of the rank tolerance")]
    IllConditioned { sigma: f64 },
    #[error("IndexNonZero: determinant needs index 0, operator has index {index}")]
    IndexNonZero { index: i64 },
    #[error("ShapeMismatch: head has {rows} rows and {cols} columns but declares b={b}, a={a}")]
    ShapeMismatch { rows: usize, cols: usize, a: usize, b: usize },
}

impl OperatorError {
    pub fn code(&self) -> &'static str {
        match self {
            OperatorError::IllConditioned { .. } => "IllConditioned",
            OperatorError::IndexNonZero { .. } => "IndexNonZero",
            OperatorError::ShapeMismatch { .. } => "ShapeMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    head: DMatrix<f64>,
}

impl Operator {
    /// Operator whose head is `head` (`b × a`).
    pub fn new(head: DMatrix<f64>) -> Self {
        Operator { head }
    }

    pub fn identity(n: usize) -> Self {
        Operator { head: DMatrix::identity(n, n) }
    }

    /// Builds a `b × a` head from row-major data.
    pub fn from_rows(b: usize, a: usize, rows: &[f64]) -> Self {
        Operator { head: DMatrix::from_row_slice(b, a, rows) }
    }

    pub fn head(&self) -> &DMatrix<f64> {
        &self.head
    }

    pub fn a(&self) -> usize {
        self.head.ncols()
    }

    pub fn b(&self) -> usize {
        self.head.nrows()
    }

    pub fn index(&self) -> i64 {
        self.a() as i64 - self.b() as i64
    }

    /// Enlarges the head by `p` tail coordinates; the operator is unchanged.
    pub fn pad(&self, p: usize) -> Self {
        let (b, a) = self.head.shape();
        let mut head = DMatrix::zeros(b + p, a + p);
        head.view_mut((0, 0), (b, a)).copy_from(&self.head);
        for k in 0..p {
            head[(b + k, a + k)] = 1.0;
        }
        Operator { head }
    }

    /// Pads so that the head domain has at least `a` columns.
    pub fn pad_domain_to(&self, a: usize) -> Self {
        self.pad(a.saturating_sub(self.a()))
    }

    /// Smallest head representing the same operator.
    pub fn canonical(&self) -> Self {
        let mut head = self.head.clone();
        loop {
            let (b, a) = head.shape();
            if a == 0 || b == 0 {
                break;
            }
            let col_is_unit = (0..b).all(|j| head[(j, a - 1)] == if j == b - 1 { 1.0 } else { 0.0 });
            let row_is_unit = (0..a).all(|i| head[(b - 1, i)] == if i == a - 1 { 1.0 } else { 0.0 });
            if !(col_is_unit && row_is_unit) {
                break;
            }
            head = head.view((0, 0), (b - 1, a - 1)).into_owned();
        }
        Operator { head }
    }

    /// Equality of the underlying operators, ignoring identity padding.
    pub fn same_operator(&self, other: &Operator) -> bool {
        self.canonical() == other.canonical()
    }

    /// Numerical rank of the head with relative tolerance [`TAU_RANK`].
    pub fn rank(&self) -> Result<usize, OperatorError> {
        let s = linalg::singular_values(&self.head);
        let Some(&smax) = s.first() else { return Ok(0) };
        if smax == 0.0 {
            return Ok(0);
        }
        let cut = TAU_RANK * smax;
        for &sigma in &s {
            if sigma > cut / 10.0 && sigma < cut * 10.0 {
                return Err(OperatorError::IllConditioned { sigma });
            }
        }
        Ok(s.iter().filter(|&&x| x >= cut).count())
    }

    /// `(dim ker, dim coker)`.
    pub fn kernel_cokernel_dims(&self) -> Result<(usize, usize), OperatorError> {
        let r = self.rank()?;
        Ok((self.a() - r, self.b() - r))
    }

    pub fn determinant(&self) -> Result<f64, OperatorError> {
        if self.a() != self.b() {
            return Err(OperatorError::IndexNonZero { index: self.index() });
        }
        if self.a() == 0 {
            return Ok(1.0);
        }
        Ok(self.head.determinant())
    }

    /// Largest absolute head entry, at least 1.
    pub fn scale(&self) -> f64 {
        self.head.iter().fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// Determinant margin below which an index-0 operator is treated as singular.
    pub fn eps_det(&self) -> f64 {
        1e-8 * self.scale().powi(self.a() as i32)
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self.determinant(), Ok(d) if d.abs() > self.eps_det())
    }

    /// `self ∘ other`: apply `other` first. Heads are padded so the
    /// codomain of `other` lines up with the domain of `self`.
    pub fn compose(&self, other: &Operator) -> Operator {
        let p = self.a().saturating_sub(other.b());
        let q = other.b().saturating_sub(self.a());
        let s = self.pad(q);
        let t = other.pad(p);
        Operator { head: s.head * t.head }
    }

    /// Operator with the head right-multiplied by a square `m` (a change of
    /// domain frame on the head coordinates).
    pub fn with_domain_frame(&self, m: &DMatrix<f64>) -> Operator {
        Operator { head: &self.head * m }
    }
}

/// JSON form: `{"a": int, "b": int, "head": [[row], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub a: usize,
    pub b: usize,
    pub head: Vec<Vec<f64>>,
}

impl From<&Operator> for OperatorJson {
    fn from(op: &Operator) -> Self {
        OperatorJson {
            a: op.a(),
            b: op.b(),
            head: (0..op.b()).map(|j| op.head.row(j).iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = OperatorError;

    fn try_from(j: OperatorJson) -> Result<Self, Self::Error> {
        let rows = j.head.len();
        let cols = j.head.first().map_or(0, Vec::len);
        let ragged = j.head.iter().any(|r| r.len() != cols);
        // An empty head carries its shape only through a and b.
        let shape_ok = if rows == 0 { j.b == 0 } else { rows == j.b && cols == j.a };
        if ragged || !shape_ok {
            return Err(OperatorError::ShapeMismatch { rows, cols, a: j.a, b: j.b });
        }
        let flat: Vec<f64> = j.head.into_iter().flatten().collect();
        Ok(Operator::from_rows(j.b, j.a, &flat))
    }
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = OperatorJson::deserialize(d)?;
        Operator::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Parses an operator from its JSON text.
pub fn parse_operator_json(text: &str) -> Result<Operator, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_examples() {
        assert_eq!(Operator::from_rows(1, 3, &[0.0; 3]).index(), 2);
        assert_eq!(Operator::from_rows(1, 1, &[2.0]).index(), 0);
        assert_eq!(Operator::identity(2).pad(1).index(), 0);
    }

    #[test]
    fn kernel_cokernel_examples() {
        assert_eq!(Operator::from_rows(1, 1, &[0.0]).kernel_cokernel_dims(), Ok((1, 1)));
        assert_eq!(Operator::from_rows(1, 2, &[1.0, 0.0]).kernel_cokernel_dims(), Ok((1, 0)));
        let nil = Operator::from_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(nil.kernel_cokernel_dims(), Ok((1, 1)));
    }

    #[test]
    fn ambiguous_rank_is_ill_conditioned() {
        let op = Operator::from_rows(2, 2, &[1.0, 0.0, 0.0, 1e-9]);
        assert!(matches!(op.rank(), Err(OperatorError::IllConditioned { .. })));
    }

    #[test]
    fn determinant_examples() {
        let d = Operator::from_rows(1, 1, &[2.0]);
        assert_eq!(d.determinant(), Ok(2.0));
        assert_eq!(d.pad(3).determinant(), Ok(2.0));
        let pi = std::f64::consts::PI;
        let df0 = Operator::from_rows(2, 2, &[-pi, 0.0, 0.0, 1.0]).pad(1);
        assert!((df0.determinant().unwrap() + pi).abs() < 1e-15);
        assert!(matches!(
            Operator::from_rows(1, 2, &[1.0, 0.0]).determinant(),
            Err(OperatorError::IndexNonZero { index: 1 })
        ));
    }

    #[test]
    fn canonical_trims_padding_only() {
        let op = Operator::from_rows(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(op.pad(4).canonical(), op);
        // A trailing unit column is not padding when its row carries other entries.
        let keep = Operator::from_rows(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(keep.canonical(), keep);
    }

    #[test]
    fn compose_aligns_heads() {
        // T: 1 -> 2 head (index -1), S: 3 -> 1 head (index 2)
        let t = Operator::from_rows(2, 1, &[1.0, 2.0]);
        let s = Operator::from_rows(1, 3, &[1.0, 1.0, 1.0]);
        let st = s.compose(&t);
        assert_eq!(st.index(), 1);
    }

    #[test]
    fn json_shape_is_checked() {
        assert!(parse_operator_json(r#"{"a":2,"b":1,"head":[[1,2]]}"#).is_ok());
        assert!(parse_operator_json(r#"{"a":2,"b":1,"head":[[1]]}"#).is_err());
        assert!(parse_operator_json(r#"{"a":3,"b":0,"head":[]}"#).is_ok());
    }
}
