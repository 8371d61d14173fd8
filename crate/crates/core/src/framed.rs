//! Zero-dimensional framed point sets and their cobordism calculus.
//!
//! A point set carries a pairwise parity `ε(i, j)`: whether the framing,
//! transported along a connecting path, flips the determinant sign. For
//! orientable framings `ε` is a cocycle and splits the points into two
//! classes `X⁺`, `X⁻`; the absolute degree is `||X⁺| − |X⁻||`. Two sets are
//! cobordant iff their framing classes agree and either their absolute
//! degrees agree (orientable) or their sizes agree mod 2 (non-orientable).
//! The moves below realize that calculus; [`oracle_cobordant`] searches over
//! them exhaustively as an independent check.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::path::ParityClass;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FramedError {
    #[error("CocycleViolation: eps({i},{j}) + eps({j},{k}) != eps({i},{k})")]
    CocycleViolation { i: usize, j: usize, k: usize },
    #[error("InvalidParity: {0}")]
    InvalidParity(String),
    #[error("NotOrientable: the framing has a nontrivial orientation signature")]
    NotOrientable,
    #[error("PairNotCancellable: points {i} and {j} are equivalent (eps = 0)")]
    PairNotCancellable { i: usize, j: usize },
    #[error("DomainMismatch: {0}")]
    DomainMismatch(String),
    #[error("SearchBudgetExceeded: no decision within {max_moves} moves")]
    SearchBudgetExceeded { max_moves: usize },
    #[error("OracleTooLarge: {0} points on one side; the exhaustive search takes at most 6")]
    OracleTooLarge(usize),
    #[error("InvalidPointSet: {0}")]
    Invalid(String),
}

impl FramedError {
    pub fn code(&self) -> &'static str {
        match self {
            FramedError::CocycleViolation { .. } => "CocycleViolation",
            FramedError::InvalidParity(_) => "InvalidParity",
            FramedError::NotOrientable => "NotOrientable",
            FramedError::PairNotCancellable { .. } => "PairNotCancellable",
            FramedError::DomainMismatch(_) => "DomainMismatch",
            FramedError::SearchBudgetExceeded { .. } => "SearchBudgetExceeded",
            FramedError::OracleTooLarge(_) => "OracleTooLarge",
            FramedError::Invalid(_) => "InvalidPointSet",
        }
    }

    pub fn is_refusal(&self) -> bool {
        !matches!(self, FramedError::Invalid(_) | FramedError::InvalidParity(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FramedPoint {
    pub id: String,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramedPointSet {
    points: Vec<FramedPoint>,
    eps: Vec<Vec<u8>>,
    /// Class of each point relative to the framing at the first point.
    labels: Vec<u8>,
    signature: Vec<ParityClass>,
    tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CobordismMove {
    CancelPair { i: usize, j: usize },
    FramingHomotopy,
    Isotopy { permutation: Vec<usize> },
    InsertPair { label: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub orientable: bool,
    /// Indices in `X⁺` and `X⁻` (orientable case only).
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CobordismVerdict {
    pub cobordant: bool,
    pub explanation: String,
}

impl FramedPointSet {
    /// Builds a set from positions and a full parity matrix. Distinct
    /// points with no recorded parity are treated as equivalent.
    pub fn new(
        positions: Vec<Vec<f64>>,
        eps: Vec<Vec<u8>>,
        signature: Vec<ParityClass>,
        tag: Option<String>,
    ) -> Result<Self, FramedError> {
        let n = positions.len();
        if eps.len() != n || eps.iter().any(|r| r.len() != n) {
            return Err(FramedError::InvalidParity(format!("parity matrix must be {n}x{n}")));
        }
        if eps.iter().flatten().any(|&e| e > 1) {
            return Err(FramedError::InvalidParity("entries must be 0 or 1".into()));
        }
        let labels = (0..n).map(|i| eps[0][i]).collect();
        let points = positions
            .into_iter()
            .enumerate()
            .map(|(i, position)| FramedPoint { id: format!("p{i}"), position })
            .collect();
        Ok(FramedPointSet { points, eps, labels, signature, tag })
    }

    /// Orientable set with the given class labels; `ε(i,j) = label_i ⊕ label_j`.
    pub fn from_labels(labels: &[u8], generators: usize, tag: Option<String>) -> Self {
        let n = labels.len();
        let eps = (0..n).map(|i| (0..n).map(|j| labels[i] ^ labels[j]).collect()).collect();
        let points = (0..n).map(|i| FramedPoint { id: format!("p{i}"), position: Vec::new() }).collect();
        FramedPointSet {
            points,
            eps,
            labels: labels.to_vec(),
            signature: vec![ParityClass::TRIVIAL; generators],
            tag,
        }
    }

    /// Non-orientable set of `n` points; the parity relation is irrelevant.
    pub fn non_orientable(n: usize, signature: Vec<ParityClass>, tag: Option<String>) -> Self {
        assert!(signature.iter().any(|s| !s.is_trivial()), "signature must be nontrivial");
        let points = (0..n).map(|i| FramedPoint { id: format!("p{i}"), position: Vec::new() }).collect();
        FramedPointSet { points, eps: vec![vec![0; n]; n], labels: vec![0; n], signature, tag }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[FramedPoint] {
        &self.points
    }

    pub fn eps(&self, i: usize, j: usize) -> u8 {
        self.eps[i][j]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn signature(&self) -> &[ParityClass] {
        &self.signature
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn is_orientable(&self) -> bool {
        self.signature.iter().all(|s| s.is_trivial())
    }

    pub fn validate(&self) -> Result<Validation, FramedError> {
        let n = self.len();
        for i in 0..n {
            if self.eps[i][i] != 0 {
                return Err(FramedError::InvalidParity(format!("eps({i},{i}) must be 0")));
            }
            for j in 0..i {
                if self.eps[i][j] != self.eps[j][i] {
                    return Err(FramedError::InvalidParity(format!("eps({i},{j}) is not symmetric")));
                }
            }
        }
        if !self.is_orientable() {
            return Ok(Validation { orientable: false, plus: Vec::new(), minus: Vec::new() });
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.eps[i][j] ^ self.eps[j][k] != self.eps[i][k] {
                        return Err(FramedError::CocycleViolation { i, j, k });
                    }
                }
            }
        }
        let plus = (0..n).filter(|&i| self.labels[i] == 0).collect();
        let minus = (0..n).filter(|&i| self.labels[i] == 1).collect();
        Ok(Validation { orientable: true, plus, minus })
    }

    pub fn abs_degree(&self) -> Result<usize, FramedError> {
        if !self.is_orientable() {
            return Err(FramedError::NotOrientable);
        }
        let v = self.validate()?;
        Ok(v.plus.len().abs_diff(v.minus.len()))
    }

    fn remove(&self, drop: &[usize]) -> FramedPointSet {
        let keep: Vec<usize> = (0..self.len()).filter(|i| !drop.contains(i)).collect();
        FramedPointSet {
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            eps: keep.iter().map(|&i| keep.iter().map(|&j| self.eps[i][j]).collect()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            signature: self.signature.clone(),
            tag: self.tag.clone(),
        }
    }

    pub fn cancel_pair(&self, i: usize, j: usize) -> Result<FramedPointSet, FramedError> {
        if i == j || i >= self.len() || j >= self.len() {
            return Err(FramedError::Invalid(format!("({i},{j}) is not a pair of distinct points")));
        }
        if self.is_orientable() && self.eps[i][j] == 0 {
            return Err(FramedError::PairNotCancellable { i, j });
        }
        Ok(self.remove(&[i, j]))
    }

    /// Composes the framing with a loop of nontrivial class: every point
    /// changes class relative to the basepoint framing.
    pub fn global_framing_flip(&self) -> FramedPointSet {
        let mut s = self.clone();
        for l in &mut s.labels {
            *l ^= 1;
        }
        s
    }

    /// Relabels points: new point `k` is old point `permutation[k]`.
    pub fn isotopy(&self, permutation: &[usize]) -> Result<FramedPointSet, FramedError> {
        let n = self.len();
        let mut seen = vec![false; n];
        if permutation.len() != n || permutation.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(FramedError::Invalid("not a permutation".into()));
        }
        Ok(FramedPointSet {
            points: permutation.iter().map(|&i| self.points[i].clone()).collect(),
            eps: permutation.iter().map(|&i| permutation.iter().map(|&j| self.eps[i][j]).collect()).collect(),
            labels: permutation.iter().map(|&i| self.labels[i]).collect(),
            signature: self.signature.clone(),
            tag: self.tag.clone(),
        })
    }

    /// Birth of a cancellable pair; in the orientable case the two new
    /// points carry labels `label` and `1 − label`.
    pub fn insert_pair(&self, label: u8) -> FramedPointSet {
        let mut s = self.clone();
        let orientable = self.is_orientable();
        let new_labels = if orientable { [label & 1, (label & 1) ^ 1] } else { [0, 0] };
        for (k, &l) in new_labels.iter().enumerate() {
            let n = s.len();
            for row in 0..n {
                let e = if orientable { s.labels[row] ^ l } else { 0 };
                s.eps[row].push(e);
            }
            let mut last: Vec<u8> = (0..n).map(|row| s.eps[row][n]).collect();
            last.push(0);
            s.eps.push(last);
            s.labels.push(l);
            s.points.push(FramedPoint { id: format!("b{}", self.len() + k), position: Vec::new() });
        }
        s
    }

    pub fn apply(&self, mv: &CobordismMove) -> Result<FramedPointSet, FramedError> {
        match mv {
            CobordismMove::CancelPair { i, j } => self.cancel_pair(*i, *j),
            CobordismMove::FramingHomotopy => Ok(self.global_framing_flip()),
            CobordismMove::Isotopy { permutation } => self.isotopy(permutation),
            CobordismMove::InsertPair { label } => Ok(self.insert_pair(*label)),
        }
    }

    /// Minimal cobordant representative and the moves that reach it.
    /// Orientable sets end with `|deg|` points of label 0; non-orientable
    /// sets end with `|X| mod 2` points.
    pub fn normal_form(&self) -> Result<(FramedPointSet, Vec<CobordismMove>), FramedError> {
        self.validate()?;
        let mut cur = self.clone();
        let mut moves = Vec::new();
        loop {
            let pair = if cur.is_orientable() {
                let i = cur.labels.iter().position(|&l| l == 0);
                let j = cur.labels.iter().position(|&l| l == 1);
                i.zip(j)
            } else if cur.len() >= 2 {
                Some((0, 1))
            } else {
                None
            };
            let Some((i, j)) = pair else { break };
            let mv = CobordismMove::CancelPair { i, j };
            cur = cur.apply(&mv)?;
            moves.push(mv);
        }
        if cur.is_orientable() && cur.labels.first() == Some(&1) {
            cur = cur.global_framing_flip();
            moves.push(CobordismMove::FramingHomotopy);
        }
        Ok((cur, moves))
    }

    /// Same size, signature, tag, and (up to relabeling) labels.
    fn isomorphic(&self, other: &FramedPointSet) -> bool {
        if self.len() != other.len() || self.signature != other.signature || self.tag != other.tag {
            return false;
        }
        if !self.is_orientable() {
            return true;
        }
        let n = self.len();
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            let ok = (0..n).all(|k| self.labels[perm[k]] == other.labels[k])
                && (0..n).all(|a| (0..n).all(|b| self.eps[perm[a]][perm[b]] == other.eps[a][b]));
            if ok {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }

    fn key(&self) -> (usize, usize) {
        if self.is_orientable() {
            let ones = self.labels.iter().filter(|&&l| l == 1).count();
            (self.len() - ones, ones)
        } else {
            (self.len(), 0)
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let Some(i) = (0..n - 1).rev().find(|&i| p[i] < p[i + 1]) else { return false };
    let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

fn same_domain(s0: &FramedPointSet, s1: &FramedPointSet) -> Result<(), FramedError> {
    if s0.signature.len() != s1.signature.len() {
        return Err(FramedError::DomainMismatch(format!(
            "{} vs {} generator loops",
            s0.signature.len(),
            s1.signature.len()
        )));
    }
    Ok(())
}

/// Closed-form decision.
pub fn cobordant(s0: &FramedPointSet, s1: &FramedPointSet) -> Result<CobordismVerdict, FramedError> {
    same_domain(s0, s1)?;
    s0.validate()?;
    s1.validate()?;
    let fmt_sig = |s: &FramedPointSet| s.signature.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    if s0.signature != s1.signature {
        return Ok(CobordismVerdict {
            cobordant: false,
            explanation: format!("orientation signatures differ: [{}] vs [{}]", fmt_sig(s0), fmt_sig(s1)),
        });
    }
    if s0.tag != s1.tag {
        return Ok(CobordismVerdict {
            cobordant: false,
            explanation: format!("framing class tags differ: {:?} vs {:?}", s0.tag, s1.tag),
        });
    }
    if s0.is_orientable() {
        let (d0, d1) = (s0.abs_degree()?, s1.abs_degree()?);
        Ok(CobordismVerdict {
            cobordant: d0 == d1,
            explanation: format!("orientable framings, |deg| {d0} vs {d1}"),
        })
    } else {
        let (p0, p1) = (s0.len() % 2, s1.len() % 2);
        Ok(CobordismVerdict {
            cobordant: p0 == p1,
            explanation: format!("non-orientable framings, |X| mod 2 {p0} vs {p1}"),
        })
    }
}

/// Breadth-first search over cancel, flip and birth moves from `s0`,
/// accepting any state isomorphic to `s1`. States never exceed
/// `max(|s0|, |s1|) + 2` points.
pub fn oracle_cobordant(s0: &FramedPointSet, s1: &FramedPointSet, max_moves: usize) -> Result<bool, FramedError> {
    same_domain(s0, s1)?;
    for s in [s0, s1] {
        if s.len() > 6 {
            return Err(FramedError::OracleTooLarge(s.len()));
        }
        s.validate()?;
    }
    let cap = s0.len().max(s1.len()) + 2;
    let mut seen = BTreeSet::new();
    let mut frontier = VecDeque::new();
    seen.insert(s0.key());
    frontier.push_back((s0.clone(), 0usize));
    let mut cut_off = false;
    while let Some((s, depth)) = frontier.pop_front() {
        if s.isomorphic(s1) {
            return Ok(true);
        }
        if depth == max_moves {
            cut_off = true;
            continue;
        }
        let mut next = vec![s.global_framing_flip()];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if let Ok(t) = s.cancel_pair(i, j) {
                    next.push(t);
                }
            }
        }
        if s.len() + 2 <= cap {
            next.push(s.insert_pair(0));
        }
        for t in next {
            if seen.insert(t.key()) {
                frontier.push_back((t, depth + 1));
            }
        }
    }
    if cut_off {
        Err(FramedError::SearchBudgetExceeded { max_moves })
    } else {
        Ok(false)
    }
}

/// Point-set JSON: `{"points": [...], "parity": [[i, j, eps], ...],
/// "orientation_signature": [...], "tag": "..."}`. Points are coordinate
/// arrays or `{"id": ..., "position": [...]}` objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetJson {
    pub points: Vec<PointJson>,
    #[serde(default)]
    pub parity: Vec<(usize, usize, u8)>,
    #[serde(default)]
    pub orientation_signature: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Position(Vec<f64>),
    Named { id: String, position: Vec<f64> },
}

impl PointSetJson {
    pub fn build(self) -> Result<FramedPointSet, FramedError> {
        let n = self.points.len();
        let mut eps: Vec<Vec<Option<u8>>> = vec![vec![None; n]; n];
        for &(i, j, e) in &self.parity {
            if i >= n || j >= n {
                return Err(FramedError::InvalidParity(format!("entry ({i},{j}) is out of range")));
            }
            if e > 1 {
                return Err(FramedError::InvalidParity(format!("eps({i},{j}) = {e} is not 0 or 1")));
            }
            for (a, b) in [(i, j), (j, i)] {
                match eps[a][b] {
                    Some(old) if old != e => {
                        return Err(FramedError::InvalidParity(format!("conflicting entries for ({i},{j})")))
                    }
                    _ => eps[a][b] = Some(e),
                }
            }
        }
        if self.orientation_signature.iter().any(|&s| s > 1) {
            return Err(FramedError::Invalid("orientation_signature entries must be 0 or 1".into()));
        }
        let eps = eps.into_iter().map(|r| r.into_iter().map(|e| e.unwrap_or(0)).collect()).collect();
        let mut ids = Vec::with_capacity(n);
        let positions = self
            .points
            .into_iter()
            .enumerate()
            .map(|(i, p)| match p {
                PointJson::Position(v) => {
                    ids.push(format!("p{i}"));
                    v
                }
                PointJson::Named { id, position } => {
                    ids.push(id);
                    position
                }
            })
            .collect();
        let signature = self.orientation_signature.iter().map(|&s| ParityClass::from_bool(s == 1)).collect();
        let mut set = FramedPointSet::new(positions, eps, signature, self.tag)?;
        for (p, id) in set.points.iter_mut().zip(ids) {
            p.id = id;
        }
        Ok(set)
    }
}

impl From<&FramedPointSet> for PointSetJson {
    fn from(s: &FramedPointSet) -> Self {
        let n = s.len();
        let mut parity = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                parity.push((i, j, s.eps[i][j]));
            }
        }
        PointSetJson {
            points: s.points.iter().map(|p| PointJson::Named { id: p.id.clone(), position: p.position.clone() }).collect(),
            parity,
            orientation_signature: s.signature.iter().map(|p| p.value()).collect(),
            tag: s.tag.clone(),
        }
    }
}

pub fn parse_point_set_json(text: &str) -> Result<FramedPointSet, FramedError> {
    let j: PointSetJson = serde_json::from_str(text).map_err(|e| FramedError::Invalid(e.to_string()))?;
    j.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[u8]) -> FramedPointSet {
        FramedPointSet::from_labels(labels, 0, None)
    }

    fn nonor(n: usize) -> FramedPointSet {
        FramedPointSet::non_orientable(n, vec![ParityClass::NONTRIVIAL], None)
    }

    fn eps_set(n: usize, entries: &[(usize, usize, u8)]) -> FramedPointSet {
        PointSetJson {
            points: vec![PointJson::Position(vec![]); n],
            parity: entries.to_vec(),
            orientation_signature: vec![],
            tag: None,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn validate_examples() {
        let v = eps_set(3, &[]).validate().unwrap();
        assert_eq!(v.plus, vec![0, 1, 2]);
        assert!(eps_set(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 0)]).validate().is_ok());
        assert!(matches!(
            eps_set(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).validate(),
            Err(FramedError::CocycleViolation { .. })
        ));
    }

    #[test]
    fn abs_degree_examples() {
        assert_eq!(set(&[0, 0, 0]).abs_degree(), Ok(3));
        assert_eq!(set(&[0, 1]).abs_degree(), Ok(0));
        assert_eq!(set(&[0, 0, 1, 0, 0]).abs_degree(), Ok(3));
        assert_eq!(nonor(3).abs_degree(), Err(FramedError::NotOrientable));
    }

    #[test]
    fn cancel_examples() {
        assert!(set(&[0, 1]).cancel_pair(0, 1).unwrap().is_empty());
        assert_eq!(set(&[0, 0]).cancel_pair(0, 1), Err(FramedError::PairNotCancellable { i: 0, j: 1 }));
        assert_eq!(nonor(3).cancel_pair(0, 2).unwrap().len(), 1);
    }

    #[test]
    fn flip_examples() {
        let s = set(&[0, 0, 0, 0, 1]);
        let f = s.global_framing_flip();
        let v = f.validate().unwrap();
        assert_eq!((v.plus.len(), v.minus.len()), (1, 4));
        assert_eq!(f.abs_degree(), Ok(3));
        assert!(set(&[]).global_framing_flip().is_empty());
        assert_eq!(set(&[0]).global_framing_flip().labels(), &[1]);
    }

    #[test]
    fn normal_form_examples() {
        let (nf, moves) = set(&[0, 1, 0, 0, 0]).normal_form().unwrap();
        assert_eq!(nf.len(), 3);
        assert!(nf.labels().iter().all(|&l| l == 0));
        let mut replay = set(&[0, 1, 0, 0, 0]);
        for m in &moves {
            replay = replay.apply(m).unwrap();
        }
        assert_eq!(replay, nf);
        assert!(oracle_cobordant(&set(&[0, 1, 0, 0, 0]), &nf, 10).unwrap());
        assert!(nonor(4).normal_form().unwrap().0.is_empty());
        assert!(set(&[]).normal_form().unwrap().0.is_empty());
    }

    #[test]
    fn cobordant_examples() {
        assert!(cobordant(&set(&[0, 0]), &set(&[1, 1, 0, 1])).unwrap().cobordant);
        assert!(!cobordant(&set(&[0, 0]), &set(&[])).unwrap().cobordant);
        assert!(cobordant(&nonor(3), &nonor(1)).unwrap().cobordant);
        let other = FramedPointSet::from_labels(&[0], 1, None);
        assert!(!cobordant(&other, &nonor(1)).unwrap().cobordant);
        assert!(matches!(cobordant(&set(&[0]), &nonor(1)), Err(FramedError::DomainMismatch(_))));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_cobordant(&set(&[0, 1]), &set(&[]), 8), Ok(true));
        assert_eq!(oracle_cobordant(&set(&[0]), &set(&[0, 0, 0]), 8), Ok(false));
        assert_eq!(oracle_cobordant(&set(&[]), &set(&[]), 0), Ok(true));
        assert!(matches!(
            oracle_cobordant(&set(&[0, 1, 0, 1]), &set(&[]), 1),
            Err(FramedError::SearchBudgetExceeded { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"points":[[0.0],[1.0],{"id":"c","position":[2.0]}],
                       "parity":[[0,1,1],[1,2,1]],"orientation_signature":[],"tag":"A"}"#;
        let s = parse_point_set_json(text).unwrap();
        assert_eq!(s.eps(0, 2), 0);
        assert_eq!(s.points()[2].id, "c");
        assert_eq!(s.abs_degree(), Ok(1));
        let back = PointSetJson::from(&s).build().unwrap();
        assert_eq!(back, s);
    }
}
