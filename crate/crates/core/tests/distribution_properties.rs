mod support;

use nvgame_core::distributions::{
    contaminate, independent_joint, product_support_capped, sample_extremal, DiscreteMarginal,
    Instance,
};
use nvgame_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{is_vertex, q_vertices, random_instance, Shape};

fn probs(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(1..=5) as f64).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|v| v / t).collect()
}

/// Three blocks with two atoms each; the middle block has two retailers.
fn cube(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scalar = |rng: &mut ChaCha8Rng| {
        let a: Vec<f64> = (0..2).map(|_| rng.random_range(1..=6) as f64).collect();
        DiscreteMarginal::scalar(&a, &probs(rng, 2))
    };
    let m0 = scalar(&mut rng);
    let m2 = scalar(&mut rng);
    let pair = DiscreteMarginal::new(
        (0..2)
            .map(|_| {
                vec![
                    rng.random_range(1..=6) as f64,
                    rng.random_range(1..=6) as f64,
                ]
            })
            .collect(),
        probs(&mut rng, 2),
    );
    Instance::new(
        1.5,
        1.0,
        vec![vec![0], vec![1, 2], vec![3]],
        vec![m0, pair, m2],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn extremal_samples_are_enumerated_vertices(seed in any::<u64>()) {
        let inst = cube(seed);
        let vertices = q_vertices(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        for _ in 0..100 {
            let cost: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = sample_extremal(&inst, &cost).unwrap();
            prop_assert!(q.is_consistent(&inst, 1e-9));
            prop_assert!(is_vertex(&q, &vertices, 1e-9), "{:?} not among {:?}", q.q, vertices);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contamination_stays_consistent(seed in any::<u64>(), cost_seed in any::<u64>()) {
        let inst = random_instance(seed, Shape::new(6, 4, 64));
        let k = inst.support_size() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(cost_seed);
        let cost: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let ext = sample_extremal(&inst, &cost).unwrap();
        let p_i = independent_joint(&inst).unwrap();
        for i in 0..=10 {
            let q = contaminate(&p_i, &ext, i as f64 / 10.0).unwrap();
            prop_assert!(q.consistency_error(&inst) <= 1e-9);
        }
    }

    #[test]
    fn independent_joint_has_unit_mass(seed in any::<u64>()) {
        let inst = random_instance(seed, Shape::new(8, 6, 500));
        let q = independent_joint(&inst).unwrap();
        prop_assert!((q.q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(q.is_consistent(&inst, 1e-12));
    }
}

#[test]
fn support_cap_is_a_structured_error() {
    let m = DiscreteMarginal::scalar(&[1.0, 2.0, 3.0, 4.0], &[0.25; 4]);
    let inst = Instance::new(2.0, 1.0, (0..4).map(|i| vec![i]).collect(), vec![m; 4]).unwrap();
    match product_support_capped(&inst, 100) {
        Err(Error::Capacity { size, cap }) => assert_eq!((size, cap), (256, 100)),
        other => panic!("expected a capacity error, got {other:?}"),
    }
    assert_eq!(product_support_capped(&inst, 256).unwrap().len(), 256);
}
