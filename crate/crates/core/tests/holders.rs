mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtm_core::{aggregate_collective, check_coherence, CollectiveOp, Taxonomy, DEFAULT_TOL};

/// Members sharing one tree shape, each with its own leaf importances.
fn members(rng: &mut ChaCha8Rng, shape: &Shape, k: usize) -> Vec<Taxonomy> {
    (0..k)
        .map(|_| {
            let v: BTreeMap<usize, f64> = (0..shape.n)
                .filter(|&i| shape.property[i])
                .map(|i| (i, rng.gen_range(-1.0..=1.0)))
                .collect();
            shape.build(&v)
        })
        .collect()
}

fn tree_shape(rng: &mut ChaCha8Rng) -> Shape {
    loop {
        let s = Shape::random(rng, 10, true);
        if s.property.iter().any(|p| *p) {
            return s;
        }
    }
}

const OPS: [CollectiveOp; 3] = [CollectiveOp::Mean, CollectiveOp::Median, CollectiveOp::Min];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn collective_leaves_are_compensative(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = tree_shape(&mut rng);
        let ms = members(&mut rng, &shape, k);
        for op in OPS {
            let Ok(c) = aggregate_collective(&ms, op, DEFAULT_TOL) else { continue };
            prop_assert!(c.validate().is_ok());
            prop_assert!(check_coherence(&c, DEFAULT_TOL).is_coherent());
            for p in c.property_nodes() {
                let vals: Vec<f64> = ms.iter().map(|m| m.importance(p.as_str()).unwrap()).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = c.importance(p.as_str()).unwrap();
                prop_assert!(lo <= v && v <= hi);
                if op == CollectiveOp::Min {
                    prop_assert_eq!(v, lo);
                }
            }
        }
    }

    #[test]
    fn unanimity(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = tree_shape(&mut rng);
        let one = members(&mut rng, &shape, 1).remove(0);
        let ms = vec![one.clone(); k];
        for op in OPS {
            let c = aggregate_collective(&ms, op, DEFAULT_TOL).unwrap();
            for p in one.property_nodes() {
                prop_assert_eq!(c.importance(p.as_str()), one.importance(p.as_str()));
            }
        }
    }

    #[test]
    fn order_of_members_does_not_matter(seed in any::<u64>(), k in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = tree_shape(&mut rng);
        let mut ms = members(&mut rng, &shape, k);
        for op in OPS {
            let a = aggregate_collective(&ms, op, DEFAULT_TOL);
            ms.shuffle(&mut rng);
            prop_assert_eq!(a, aggregate_collective(&ms, op, DEFAULT_TOL));
        }
    }
}

#[test]
fn mean_of_three_members() {
    let shape = Shape {
        n: 3,
        edges: vec![(0, 1), (0, 2)],
        property: vec![false, true, true],
    };
    let ms: Vec<Taxonomy> = [0.9, 0.6, 0.3]
        .iter()
        .map(|&v| shape.build(&BTreeMap::from([(1, v), (2, 0.0)])))
        .collect();
    let c = aggregate_collective(&ms, CollectiveOp::Mean, DEFAULT_TOL).unwrap();
    // (0.9 + 0.6 + 0.3) / 3, then the root is the mean of 0.6 and 0.0
    assert!((c.importance("n01").unwrap() - 0.6).abs() < 1e-12);
    assert!((c.importance("n00").unwrap() - 0.3).abs() < 1e-12);
}
