//! Equivalence decisions from computed invariants.
//!
//! Two proper index-0 maps are compared through their orientation
//! signatures and then, depending on orientability, through the absolute or
//! the mod-2 degree. Non-proper and negative-index comparisons only involve
//! the signatures of the differentials. Every box is treated as a model of
//! the same contractible space: boxes of different dimension differ by
//! identity directions of the tail. Seam domains must agree structurally.

use std::sync::Arc;

use serde::Serialize;

use crate::degree::{self, DegreeConfig, DegreeError};
use crate::gallery;
use crate::geometry::{DomainClass, SeamManifold};
use crate::map::{parse_map, MapError, MapSpec};
use crate::path::ParityClass;
use crate::transport;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("DomainMismatch: {0}")]
    DomainMismatch(String),
    #[error("IndexMismatch: indices {left} and {right}")]
    IndexMismatch { left: i64, right: i64 },
    #[error("IndexMismatch: this mode needs index {expected}, got {index}")]
    WrongIndex { expected: &'static str, index: i64 },
    #[error("PropernessUncertified: {0}")]
    PropernessUncertified(String),
    #[error("UnsupportedDomain: {0}")]
    UnsupportedDomain(String),
    #[error(transparent)]
    Degree(#[from] DegreeError),
}

impl ClassifyError {
    pub fn code(&self) -> &'static str {
        match self {
            ClassifyError::DomainMismatch(_) => "DomainMismatch",
            ClassifyError::IndexMismatch { .. } | ClassifyError::WrongIndex { .. } => "IndexMismatch",
            ClassifyError::PropernessUncertified(_) => "PropernessUncertified",
            ClassifyError::UnsupportedDomain(_) => "UnsupportedDomain",
            ClassifyError::Degree(e) => e.code(),
        }
    }

    pub fn is_refusal(&self) -> bool {
        match self {
            ClassifyError::Degree(e) => e.is_refusal(),
            _ => true,
        }
    }
}

impl From<crate::path::PathError> for ClassifyError {
    fn from(e: crate::path::PathError) -> Self {
        ClassifyError::Degree(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Equivalent,
    Inequivalent,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Proper0,
    Negative,
    Fredholm,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "proper0" => Ok(Mode::Proper0),
            "negative" => Ok(Mode::Negative),
            "fredholm" => Ok(Mode::Fredholm),
            other => Err(format!("unknown mode {other:?}; expected proper0, negative or fredholm")),
        }
    }
}

/// Invariants of one map. Degrees are present only in `proper0` mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    pub index: i64,
    pub domain_class: DomainClass,
    pub orientation_signature: Vec<ParityClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deg2: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_degree: Option<usize>,
}

impl Invariants {
    pub fn orientable(&self) -> bool {
        self.orientation_signature.iter().all(|s| s.is_trivial())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Difference {
    pub invariant: &'static str,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub mode: Mode,
    pub verdict: Verdict,
    pub reason: String,
    /// Invariants compared and found equal.
    pub matched: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difference: Option<Difference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
    pub left: Invariants,
    pub right: Invariants,
}

fn signature_text(s: &[ParityClass]) -> String {
    format!("{:?}", s.iter().map(|p| p.value()).collect::<Vec<_>>())
}

/// Checks that two domains can be compared.
pub fn compatible_domains(a: &SeamManifold, b: &SeamManifold) -> Result<(), ClassifyError> {
    let (ca, cb) = (a.domain_class(), b.domain_class());
    if ca != cb {
        return Err(ClassifyError::DomainMismatch(format!("domain classes {ca:?} and {cb:?}")));
    }
    if ca != DomainClass::Contractible && !a.approx_eq(b, 1e-9) {
        return Err(ClassifyError::DomainMismatch("seam domains with different boxes, seams or generators".into()));
    }
    Ok(())
}

fn compare(name: &'static str, l: String, r: String, matched: &mut Vec<&'static str>, diff: &mut Option<Difference>) {
    if diff.is_some() {
        return;
    }
    if l == r {
        matched.push(name);
    } else {
        *diff = Some(Difference { invariant: name, left: l, right: r });
    }
}

fn show<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Decision from two invariant records of the given mode. Symmetric up to
/// swapping `left` and `right` in the report.
pub fn decide(mode: Mode, left: Invariants, right: Invariants) -> Classification {
    let mut matched = Vec::new();
    let mut difference = None;
    let (ls, rs) = (signature_text(&left.orientation_signature), signature_text(&right.orientation_signature));
    compare("orientation_signature", ls, rs, &mut matched, &mut difference);
    if mode == Mode::Proper0 {
        compare("deg2", show(left.deg2), show(right.deg2), &mut matched, &mut difference);
        if left.orientable() {
            compare("abs_degree", show(left.abs_degree), show(right.abs_degree), &mut matched, &mut difference);
        }
    }
    let agree = format!("all invariants agree: {}", matched.join(", "));
    let (verdict, reason, caveat) = match &difference {
        Some(d) => (Verdict::Inequivalent, format!("{} differs: {} vs {}", d.invariant, d.left, d.right), None),
        None if left.domain_class.is_supported() => (Verdict::Equivalent, agree, None),
        None => (
            Verdict::Undecided,
            agree,
            Some(format!(
                "domain of class {:?} is not of the homotopy type of a point or a circle; agreeing invariants do not decide equivalence",
                left.domain_class
            )),
        ),
    };
    Classification { mode, verdict, reason, matched, difference, caveat, left, right }
}

fn signature(f: &Arc<MapSpec>) -> Result<Vec<ParityClass>, ClassifyError> {
    Ok(transport::orientation_signature(f)?)
}

fn certify(f: &MapSpec, side: &str, cfg: &DegreeConfig) -> Result<(), ClassifyError> {
    degree::certify(f, cfg).map_err(|e| match e {
        DegreeError::Map(MapError::CertificateViolated { .. } | MapError::PropernessUncertified(_)) => {
            ClassifyError::PropernessUncertified(format!("{side} map: {e}"))
        }
        e => e.into(),
    })
}

/// Invariants of a proper index-0 map.
pub fn invariants(f: &Arc<MapSpec>, cfg: &DegreeConfig) -> Result<Invariants, ClassifyError> {
    invariants_of(f, "the", cfg)
}

fn invariants_of(f: &Arc<MapSpec>, side: &str, cfg: &DegreeConfig) -> Result<Invariants, ClassifyError> {
    if f.index() != 0 {
        return Err(ClassifyError::WrongIndex { expected: "0", index: f.index() });
    }
    certify(f, side, cfg)?;
    let report = degree::degree_report(f, cfg, None)?;
    Ok(Invariants {
        index: 0,
        domain_class: f.manifold().domain_class(),
        orientation_signature: report.orientation_signature,
        deg2: Some(report.deg2),
        abs_degree: report.abs_degree,
    })
}

fn same_index(f: &MapSpec, g: &MapSpec) -> Result<(), ClassifyError> {
    if f.index() != g.index() {
        return Err(ClassifyError::IndexMismatch { left: f.index(), right: g.index() });
    }
    Ok(())
}

pub fn classify_index0(f: &Arc<MapSpec>, g: &Arc<MapSpec>, cfg: &DegreeConfig) -> Result<Classification, ClassifyError> {
    same_index(f, g)?;
    compatible_domains(f.manifold(), g.manifold())?;
    let (a, b) = rayon::join(|| invariants_of(f, "left", cfg), || invariants_of(g, "right", cfg));
    Ok(decide(Mode::Proper0, a?, b?))
}

fn signature_only(f: &Arc<MapSpec>) -> Result<Invariants, ClassifyError> {
    Ok(Invariants {
        index: f.index(),
        domain_class: f.manifold().domain_class(),
        orientation_signature: signature(f)?,
        deg2: None,
        abs_degree: None,
    })
}

/// Maps of equal negative index, compared through the signatures of their
/// stabilized differentials.
pub fn classify_negative_index(f: &Arc<MapSpec>, g: &Arc<MapSpec>) -> Result<Classification, ClassifyError> {
    same_index(f, g)?;
    if f.index() >= 0 {
        return Err(ClassifyError::WrongIndex { expected: "< 0", index: f.index() });
    }
    compatible_domains(f.manifold(), g.manifold())?;
    let (a, b) = rayon::join(|| signature_only(f), || signature_only(g));
    Ok(decide(Mode::Negative, a?, b?))
}

/// Fredholm maps without properness: the codomain is contractible, so only
/// the differentials are compared.
pub fn classify_fredholm_nonproper(f: &Arc<MapSpec>, g: &Arc<MapSpec>) -> Result<Classification, ClassifyError> {
    same_index(f, g)?;
    compatible_domains(f.manifold(), g.manifold())?;
    let (a, b) = rayon::join(|| signature_only(f), || signature_only(g));
    Ok(decide(Mode::Fredholm, a?, b?))
}

pub fn classify(mode: Mode, f: &Arc<MapSpec>, g: &Arc<MapSpec>, cfg: &DegreeConfig) -> Result<Classification, ClassifyError> {
    match mode {
        Mode::Proper0 => classify_index0(f, g, cfg),
        Mode::Negative => classify_negative_index(f, g),
        Mode::Fredholm => classify_fredholm_nonproper(f, g),
    }
}

/// Degree data selecting a normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CanonicalKey {
    /// Absolute degree of an orientable map.
    Orientable(usize),
    /// Mod-2 degree of a non-orientable map.
    NonOrientable(u8),
}

impl CanonicalKey {
    pub fn of(inv: &Invariants) -> Option<CanonicalKey> {
        if inv.orientable() {
            inv.abs_degree.map(CanonicalKey::Orientable)
        } else {
            inv.deg2.map(CanonicalKey::NonOrientable)
        }
    }
}

/// Normal-form document for the given invariants on a domain like `domain`:
/// `f_n` on any box, and on the band domains the tautological map or `g`.
pub fn canonical_document(key: CanonicalKey, domain: &SeamManifold) -> Result<String, ClassifyError> {
    let band = |text: &str| parse_map(text).map(|m| domain.approx_eq(m.manifold(), 1e-9)).unwrap_or(false);
    match key {
        CanonicalKey::Orientable(n) if domain.domain_class() == DomainClass::Contractible => {
            let n = i32::try_from(n).map_err(|_| ClassifyError::UnsupportedDomain(format!("degree {n} is too large")))?;
            Ok(gallery::f_n(n))
        }
        CanonicalKey::NonOrientable(1) if band(gallery::TAUT) => Ok(gallery::TAUT.to_string()),
        CanonicalKey::NonOrientable(1) if band(&gallery::taut_s()) => Ok(gallery::taut_s()),
        CanonicalKey::NonOrientable(0) if band(&gallery::g()) => Ok(gallery::g()),
        CanonicalKey::NonOrientable(d) if d > 1 => Err(ClassifyError::UnsupportedDomain(format!("deg2 = {d} is not a mod-2 degree"))),
        key => Err(ClassifyError::UnsupportedDomain(format!(
            "no normal form for {key:?} on a domain of class {:?}",
            domain.domain_class()
        ))),
    }
}

pub fn canonical_representative(key: CanonicalKey, domain: &SeamManifold) -> Result<MapSpec, ClassifyError> {
    let text = canonical_document(key, domain)?;
    Ok(parse_map(&text).expect("built-in normal forms parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(name: &str) -> Arc<MapSpec> {
        Arc::new(gallery::load(name))
    }

    #[test]
    fn degrees_separate_powers() {
        let c = classify_index0(&arc("f2"), &arc("f3"), &DegreeConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Inequivalent);
        assert_eq!(c.difference.unwrap().invariant, "deg2");
        let c = classify_index0(&arc("f2"), &arc("f4"), &DegreeConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Inequivalent);
        assert_eq!(c.difference.unwrap().invariant, "abs_degree");
    }

    #[test]
    fn conjugation_does_not_change_the_class() {
        let c = classify_index0(&arc("fm2"), &arc("f2"), &DegreeConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Equivalent);
        assert_eq!(c.matched, vec!["orientation_signature", "deg2", "abs_degree"]);
    }

    #[test]
    fn band_maps_differ_in_mod_two_degree() {
        let c = classify_index0(&arc("taut_s"), &arc("g"), &DegreeConfig::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Inequivalent);
        let d = c.difference.unwrap();
        assert_eq!((d.invariant, d.left.as_str(), d.right.as_str()), ("deg2", "1", "0"));
    }

    #[test]
    fn mismatched_inputs_are_refused() {
        let cfg = DegreeConfig::default();
        assert!(matches!(classify_index0(&arc("f2"), &arc("taut"), &cfg), Err(ClassifyError::DomainMismatch(_))));
        assert!(matches!(classify_index0(&arc("f2"), &arc("f0_real"), &cfg), Err(ClassifyError::IndexMismatch { .. })));
        let h = arc("nonproper_h");
        assert!(matches!(classify_index0(&h, &h, &cfg), Err(ClassifyError::WrongIndex { .. })));
    }

    #[test]
    fn boxes_have_a_single_fredholm_class() {
        let c = classify_fredholm_nonproper(&arc("f0_id"), &arc("f1_sq")).unwrap();
        assert_eq!(c.verdict, Verdict::Equivalent);
    }

    #[test]
    fn normal_forms() {
        let plane = gallery::load("f3");
        assert_eq!(canonical_document(CanonicalKey::Orientable(3), plane.manifold()).unwrap(), gallery::f_n(3));
        assert_eq!(canonical_document(CanonicalKey::Orientable(0), plane.manifold()).unwrap(), gallery::f_n(0));
        let band = gallery::load("g");
        assert_eq!(canonical_document(CanonicalKey::NonOrientable(0), band.manifold()).unwrap(), gallery::g());
        assert_eq!(canonical_document(CanonicalKey::NonOrientable(1), band.manifold()).unwrap(), gallery::taut_s());
        assert!(matches!(
            canonical_document(CanonicalKey::NonOrientable(0), plane.manifold()),
            Err(ClassifyError::UnsupportedDomain(_))
        ));
        assert!(matches!(
            canonical_document(CanonicalKey::Orientable(1), band.manifold()),
            Err(ClassifyError::UnsupportedDomain(_))
        ));
    }
}
