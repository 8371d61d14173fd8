use fredholm::operator::Operator;
use fredholm::path::{OperatorPath, ParityClass};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn invertible(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(n).prop_filter("invertible", |m| m.determinant().abs() > 1e-2)
}

/// Piecewise-linear path with invertible endpoints, as its sample heads.
fn pl_heads() -> impl Strategy<Value = Vec<DMatrix<f64>>> {
    (1usize..4).prop_flat_map(pl_heads_of)
}

fn pl_heads_of(n: usize) -> impl Strategy<Value = Vec<DMatrix<f64>>> {
    (invertible(n), prop::collection::vec(matrix(n), 0..6), invertible(n)).prop_map(|(a, mid, b)| {
        let mut heads = vec![a];
        heads.extend(mid);
        heads.push(b);
        heads
    })
}

fn path_of(heads: &[DMatrix<f64>]) -> OperatorPath {
    let k = heads.len() - 1;
    let samples = heads.iter().enumerate().map(|(i, h)| (i as f64 / k as f64, Operator::new(h.clone()))).collect();
    OperatorPath::from_samples(samples).unwrap()
}

fn endpoint_oracle(heads: &[DMatrix<f64>]) -> ParityClass {
    let d0 = heads[0].determinant();
    let d1 = heads.last().unwrap().determinant();
    ParityClass::from_bool((d0 > 0.0) != (d1 > 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parity_counts_crossings_mod_two(heads in pl_heads()) {
        let p = path_of(&heads);
        let parity = p.parity().unwrap();
        prop_assert_eq!(parity, endpoint_oracle(&heads));
        if let Ok(n) = p.crossing_count(64) {
            prop_assert_eq!(parity.value() as usize, n % 2);
        }
    }

    #[test]
    fn reversal_and_refinement_keep_parity(heads in pl_heads(), factor in 1usize..5) {
        let p = path_of(&heads);
        let parity = p.parity().unwrap();
        prop_assert_eq!(p.reversed().parity().unwrap(), parity);
        prop_assert_eq!(p.refined(factor).parity().unwrap(), parity);
    }

    #[test]
    fn concatenation_adds_for_any_joint(
        (p, q) in (1usize..4).prop_flat_map(|n| (pl_heads_of(n), pl_heads_of(n))),
        c in 0.5f64..3.0,
        detour in 0.5f64..3.0,
    ) {
        // q starts at c·p(1), so positive multiples of p(1) join the two.
        let end = p.last().unwrap().clone();
        let mut q = q;
        q[0] = &end * c;
        let (pp, qp) = (path_of(&p), path_of(&q));
        let expected = ParityClass::from_bool(pp.parity().unwrap() != qp.parity().unwrap());
        let direct = path_of(&[end.clone(), &end * c]);
        let around = path_of(&[end.clone(), &end * detour, &end * c]);
        for joint in [direct, around] {
            let cat = OperatorPath::concatenate(&pp, &qp, &joint).unwrap();
            prop_assert_eq!(cat.parity().unwrap(), expected);
        }
    }

    #[test]
    fn frame_change_loop_parity(m in invertible(3), mid in matrix(3), flip in any::<bool>()) {
        let mut g = DMatrix::<f64>::identity(3, 3);
        if flip {
            g[(0, 0)] = -1.0;
        }
        let end = &m * &g;
        let p = path_of(&[m.clone(), mid, end]);
        prop_assert_eq!(p.parity().unwrap(), ParityClass::from_bool(flip));
    }
}

