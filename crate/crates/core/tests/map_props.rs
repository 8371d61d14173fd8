use fredholm::gallery;
use fredholm::map::MapSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn maps() -> Vec<(String, MapSpec)> {
    gallery::all().into_iter().map(|(name, _)| (name.clone(), gallery::load(&name))).collect()
}

fn sample(f: &MapSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    f.manifold().bounds().iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()
}

#[test]
fn symbolic_jacobian_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, f) in maps() {
        for _ in 0..100 {
            let x = sample(&f, &mut rng);
            let j = f.jacobian_raw(&x);
            let fd = f.jacobian_fd(&x, 1e-6);
            let err = (&j - &fd).amax() / j.amax().max(1.0);
            assert!(err < 1e-6, "{name} at {x:?}: relative error {err:e}");
        }
    }
}

#[test]
fn seams_glue_values_and_differentials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (name, f) in maps() {
        let m = f.manifold();
        for seam in m.seams() {
            for _ in 0..100 {
                let mut x = sample(&f, &mut rng);
                x[seam.source.axis] = m.facet_value(seam.source);
                let y = seam.apply(&x);
                let (fx, fy) = (f.eval_raw(&x), f.eval_raw(&y));
                let gap = fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(gap < 1e-9 * fx.iter().fold(1.0f64, |m, v| m.max(v.abs())), "{name}: value gap {gap:e}");
                let jx = f.jacobian_raw(&x);
                let jy = f.jacobian_raw(&y) * &seam.transition;
                assert!((&jy - &jx).amax() < 1e-8 * jx.amax().max(1.0), "{name}: differential gap at {x:?}");
            }
        }
    }
}

#[test]
fn differential_index_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, f) in maps() {
        for _ in 0..100 {
            let x = sample(&f, &mut rng);
            let op = f.differential(&x).unwrap();
            assert_eq!(op.index(), f.index(), "{name}");
        }
    }
}
