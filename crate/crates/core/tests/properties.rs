//! Randomized invariants of metrics, co-occurrence matrices and LBP.

mod common;

use proptest::prelude::*;
use texturekit::evaluate::roc_auc;
use texturekit::features::{compute_glcm, riu2_histogram, Circle, Direction};
use texturekit::Grid;

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (3usize..60).prop_flat_map(|n| {
        (
            proptest::collection::vec(0u8..12, n).prop_map(|v| v.into_iter().map(|k| k as f64 / 11.0).collect()),
            proptest::collection::vec(any::<bool>(), n).prop_map(|mut l| {
                l[0] = true;
                l[1] = false;
                l
            }),
        )
    })
}

proptest! {
    #[test]
    fn auc_matches_pairs_and_flips_with_scores((scores, labels) in scored_labels()) {
        let auc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((auc - common::auc_oracle(&scores, &labels)).abs() <= 1e-12);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&negated, &labels).unwrap() - (1.0 - auc)).abs() <= 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_rescaling((scores, labels) in scored_labels()) {
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s - 1.0).tanh()).collect();
        prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&squashed, &labels).unwrap());
    }

    #[test]
    fn glcm_is_symmetric_and_normalized(
        data in proptest::collection::vec(0.0f64..1.0, 64),
        levels in 2usize..12,
        dir in 0usize..4,
    ) {
        let g = Grid::new(8, 8, data).unwrap();
        let m = compute_glcm(&g, levels, 1, Direction::ALL[dir]).unwrap();
        let total: f64 = m.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        for i in 0..levels {
            for j in 0..levels {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn riu2_matches_per_pixel_coding(seed in 0u64..10_000, size in 7usize..14) {
        let g = common::random_patch(seed, size);
        for (p, r) in [(8usize, 1.0f64), (16, 2.0)] {
            let lib = riu2_histogram(&g, Circle { points: p, radius: r }).unwrap();
            prop_assert_eq!(lib, common::riu2_oracle(&g, p, r));
        }
    }

    #[test]
    fn riu2_is_rotation_invariant(seed in 0u64..10_000) {
        let g = common::random_patch(seed, 12);
        let turned = g.rotate90();
        for c in [Circle { points: 8, radius: 1.0 }, Circle { points: 16, radius: 2.0 }] {
            let a = riu2_histogram(&g, c).unwrap();
            let b = riu2_histogram(&turned, c).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
