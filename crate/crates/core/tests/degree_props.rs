use std::sync::Arc;

use fredholm::degree::{abs_degree, deg2, degree_report, preimage_point_set, DegreeConfig, DegreeError};
use fredholm::gallery;
use fredholm::map::MapSpec;
use fredholm::path::ParityClass;

/// Index-0 gallery maps on domains of dimension at most 2.
fn planar_maps() -> Vec<(String, Arc<MapSpec>)> {
    gallery::all()
        .into_iter()
        .map(|(name, _)| (name.clone(), Arc::new(gallery::load(&name))))
        .filter(|(_, f)| f.index() == 0 && f.dim() <= 2)
        .collect()
}

#[test]
fn degrees_do_not_depend_on_the_value() {
    for (name, f) in planar_maps() {
        let reports: Vec<_> = (0..3)
            .map(|seed| degree_report(&f, &DegreeConfig { seed, ..DegreeConfig::default() }, None).unwrap())
            .collect();
        for r in &reports[1..] {
            assert_eq!(r.deg2, reports[0].deg2, "{name}");
            assert_eq!(r.abs_degree, reports[0].abs_degree, "{name}");
        }
        assert!(reports.iter().flat_map(|r| &r.counts).all(|c| c % 2 == reports[0].deg2 as usize), "{name}");
    }
}

#[test]
fn absolute_degree_has_the_parity_of_the_count() {
    for (name, f) in planar_maps() {
        let cfg = DegreeConfig::default();
        let d2 = deg2(&f, &cfg).unwrap().deg2;
        match abs_degree(&f, &cfg) {
            Ok(r) => assert_eq!((r.abs_degree % 2) as u8, d2, "{name}"),
            Err(DegreeError::NotOrientable { .. }) => assert_eq!(name, "taut"),
            Err(e) => panic!("{name}: {e}"),
        }
    }
}

#[test]
fn preimage_parity_is_an_equivalence_with_two_classes() {
    for (name, f) in planar_maps().into_iter().filter(|(n, _)| n != "taut") {
        let r = degree_report(&f, &DegreeConfig::default(), None).unwrap();
        let pre = fredholm::degree::PreimageSet { value: r.value, points: r.preimage, verified_grid: r.verified_grid };
        let set = preimage_point_set(&f, &pre, vec![ParityClass::TRIVIAL; f.manifold().generator_count()]);
        for i in 0..set.len() {
            assert_eq!(set.eps(i, i), 0, "{name}");
            for j in 0..set.len() {
                assert_eq!(set.eps(i, j), set.eps(j, i), "{name}");
            }
        }
        let v = set.validate().unwrap();
        assert_eq!(v.plus.len() + v.minus.len(), set.len(), "{name}");
    }
}

#[test]
fn absolute_degree_refuses_non_orientable_maps() {
    let f = Arc::new(gallery::load("taut"));
    let err = abs_degree(&f, &DegreeConfig::default()).unwrap_err();
    assert_eq!(err.code(), "NotOrientable");
    let r = degree_report(&f, &DegreeConfig::default(), None).unwrap();
    assert_eq!(r.abs_degree, None);
    assert_eq!(r.deg2, 1);
}
