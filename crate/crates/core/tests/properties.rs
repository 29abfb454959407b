//! Randomized structural properties, with shrinking on failure.

use proptest::collection::vec;
use proptest::prelude::*;

use lffr_core::data::{denormalize_prediction, normalize_targets, synth};
use lffr_core::hesim::{SimContext, SimParams};
use lffr_core::matrix::{gram, is_psd, kron, Matrix};
use lffr_core::sfh::build_sfh_linear;

/// Entries of the form k/16: exact dyadics whose small products stay
/// exact, so structural identities can be checked to the bit.
fn dyadic_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    vec(-16i32..=16, rows * cols).prop_map(move |ks| {
        let data = ks.iter().map(|&k| f64::from(k) / 16.0).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    })
}

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    vec(-1.0f64..=1.0, rows * cols)
        .prop_map(move |data| Matrix::from_vec(rows, cols, data).unwrap())
}

proptest! {
    #[test]
    fn kron_is_associative_bitwise(
        a in dyadic_matrix(2, 2),
        b in dyadic_matrix(2, 3),
        c in dyadic_matrix(3, 2),
    ) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn gram_matrices_are_psd(rows in 1usize..8, cols in 1usize..5, seed in any::<u64>()) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
        let x = Matrix::from_vec(rows, cols, data).unwrap();
        prop_assert!(is_psd(&gram(&x), 1e-9).unwrap());
    }

    #[test]
    fn linear_diagonal_dominance_shrinks(x in small_matrix(4, 3)) {
        let dom = build_sfh_linear(&x, 1e-8)
            .to_matrix()
            .sub(&gram(&x).scale(2.0))
            .unwrap();
        prop_assert!(is_psd(&dom, 1e-9).unwrap());
    }

    #[test]
    fn normalization_round_trips(
        raw in vec(-1e3f64..=1e3, 8),
        epsilon in 1e-10f64..=1e-2,
    ) {
        let y = Matrix::from_vec(raw.len(), 1, raw.clone()).unwrap();
        let (normalized, params) = normalize_targets(&y, epsilon);
        let span = params.y_max[0] - params.y_min[0] + epsilon;
        for (i, &orig) in raw.iter().enumerate() {
            let back = denormalize_prediction(normalized.get(i, 0), &params, 0);
            prop_assert!(
                (back - orig).abs() <= 1e-12 * span.max(1.0),
                "row {}: {} came back as {}", i, orig, back
            );
        }
    }

    #[test]
    fn synthetic_generation_is_deterministic(
        n in 1usize..12,
        d in 1usize..4,
        c in 1usize..3,
        seed in any::<u64>(),
    ) {
        let (ds1, r1) = synth(n, d, c, 0.1, seed);
        let (ds2, r2) = synth(n, d, c, 0.1, seed);
        prop_assert_eq!(&ds1.x, &ds2.x);
        prop_assert_eq!(&ds1.y, &ds2.y);
        prop_assert_eq!(r1, r2);
        let (ds3, _) = synth(n, d, c, 0.1, seed.wrapping_add(1));
        prop_assert_ne!(&ds1.y, &ds3.y);
    }

    #[test]
    fn rotations_compose_modulo_slot_count(
        slots in vec(-4.0f64..=4.0, 8),
        i in -20i64..=20,
        j in -20i64..=20,
    ) {
        let params = SimParams { slot_count: 8, ..SimParams::default() };
        let mut ctx = SimContext::new(params).unwrap();
        let m = Matrix::from_vec(1, 8, slots).unwrap();
        let ct = ctx.encrypt(&m).unwrap().pop().unwrap();
        let step = ctx.rotate(&ct, i);
        let composed = ctx.rotate(&step, j);
        let direct = ctx.rotate(&ct, i + j);
        prop_assert_eq!(composed.slots(), direct.slots());
    }

    #[test]
    fn sum_columns_matches_block_sums(
        slots in vec(-4.0f64..=4.0, 16),
        width_exp in 0u32..=4,
    ) {
        let width = 1usize << width_exp;
        let params = SimParams { slot_count: 16, ..SimParams::default() };
        let mut ctx = SimContext::new(params).unwrap();
        let m = Matrix::from_vec(1, 16, slots.clone()).unwrap();
        let ct = ctx.encrypt(&m).unwrap().pop().unwrap();
        let summed = ctx.sum_columns(&ct, width).unwrap();
        for block in 0..16 / width {
            let expected: f64 = slots[block * width..(block + 1) * width].iter().sum();
            for k in 0..width {
                let got = summed.slots()[block * width + k];
                prop_assert!(
                    (got - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "block {} slot {}: {} vs {}", block, k, got, expected
                );
            }
        }
    }

    #[test]
    fn bias_column_survives_feature_scaling(seed in any::<u64>(), n in 1usize..20) {
        let (ds, _) = synth(n, 3, 1, 0.0, seed);
        for i in 0..ds.n() {
            prop_assert_eq!(ds.x.get(i, 0), 1.0);
            for k in 1..ds.x.cols() {
                let v = ds.x.get(i, k);
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
