//! Randomized invariants of the tensor core: stochasticity preservation,
//! projection, the two contraction paths and file round-trips.

mod common;

use common::{l1, max_abs_diff, random_simplex, random_tensor, rng};
use hopm::{io, proj, ProbVector};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// `(order, dim, density, seed)` across m in {2,3,4}, n in {2..8}.
fn shape() -> impl Strategy<Value = (usize, usize, f64, u64)> {
    (2usize..=4, 2usize..=8, 0.1f64..=1.0, any::<u64>())
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn apply_preserves_the_simplex((m, n, d, seed) in shape()) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, m, n, d);
        let x = random_simplex(&mut r, n);
        let y = t.apply(&x).unwrap();
        prop_assert!(y.as_slice().iter().all(|v| *v >= -1e-15));
        prop_assert!((y.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        // the raw contraction already has unit mass
        let raw = t.contract(x.as_slice()).unwrap();
        prop_assert!(raw.iter().all(|v| *v >= -1e-15));
        prop_assert!((raw.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn proj_is_idempotent(z in prop::collection::vec(-1.0f64..1.0, 1..12)) {
        prop_assume!(z.iter().any(|v| *v > 0.0));
        let p = proj(&z).unwrap();
        prop_assert!(p.is_valid());
        let q = proj(p.as_slice()).unwrap();
        prop_assert!(max_abs_diff(p.as_slice(), q.as_slice()) <= 1e-15);
    }

    #[test]
    fn matrix_times_x_matches_apply((m, n, d, seed) in shape()) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, m, n, d);
        let x = random_simplex(&mut r, n);
        let via_matrix = t.apply_matrix(&x).unwrap().mul_vec(x.as_slice()).unwrap();
        let direct = t.apply(&x).unwrap();
        prop_assert!(max_abs_diff(&via_matrix, direct.as_slice()) <= 1e-12);
    }

    #[test]
    fn sparse_and_dense_storage_agree((m, n, d, seed) in shape()) {
        let mut r = rng(seed);
        let dense = random_tensor(&mut r, m, n, d);
        let sparse = dense.to_sparse();
        prop_assert!(dense.is_dense() && !sparse.is_dense());
        let x = random_simplex(&mut r, n);
        let a = dense.contract(x.as_slice()).unwrap();
        let b = sparse.contract(x.as_slice()).unwrap();
        prop_assert!(max_abs_diff(&a, &b) <= 1e-14);
        let ma = dense.contract_matrix(x.as_slice()).unwrap();
        let mb = sparse.contract_matrix(x.as_slice()).unwrap();
        prop_assert!(max_abs_diff(ma.column_major(), mb.column_major()) <= 1e-14);
        prop_assert_eq!(dense.column_sums().len(), sparse.column_sums().len());
        prop_assert!(max_abs_diff(&dense.column_sums(), &sparse.column_sums()) <= 1e-14);
    }

    /// Inputs shaped like extrapolation output: unit sum, possibly negative.
    #[test]
    fn proj_does_not_expand_distances_to_the_simplex(
        seed in any::<u64>(),
        n in 2usize..10,
        spread in 0.0f64..2.0,
    ) {
        let mut r = rng(seed);
        let a = random_simplex(&mut r, n);
        let b = random_simplex(&mut r, n);
        let x_hat: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(u, v)| (1.0 + spread) * u - spread * v)
            .collect();
        prop_assume!(x_hat.iter().any(|v| *v > 0.0));
        let y = random_simplex(&mut r, n);
        let p = proj(&x_hat).unwrap();
        prop_assert!(l1(p.as_slice(), y.as_slice()) <= l1(&x_hat, y.as_slice()) + 1e-15);
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn tensor_files_round_trip_exactly((m, n, d, seed) in shape()) {
        let mut r = rng(seed);
        let t = random_tensor(&mut r, m, n, d);
        let text = io::parse_text(&io::to_text(&t)).unwrap();
        prop_assert_eq!(&text, &t);
        let json = io::parse_json(&io::to_json(&t).unwrap()).unwrap();
        prop_assert_eq!(&json, &t);
    }

    #[test]
    fn vectors_serialize_as_plain_arrays(seed in any::<u64>(), n in 1usize..9) {
        let x = random_simplex(&mut rng(seed), n);
        let s = serde_json::to_string(&x).unwrap();
        prop_assert!(s.starts_with('['));
        let back: ProbVector = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, x);
    }
}
