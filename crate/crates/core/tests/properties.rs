use proptest::prelude::*;
use spreadlab::graph::{bound_right_degrees, SignedTree};
use spreadlab::io::{parse_bigraph, parse_bireg, write_bigraph, write_bireg};
use spreadlab::linalg::{binomial, for_each_subset, lp_norm};
use spreadlab::spread::{distortion, top_k_support};
use spreadlab::{best_k_sparse_error, sample_biregular, sample_left_regular, EnsembleParams, SignedMatrix};

/// `(n, m, s, t)` with `n t = m s`, `t <= m`, `s <= n`.
fn biregular_shape() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (1usize..=4, 0usize..=3, 1usize..=6).prop_map(|(t, extra, mult)| {
        let s = t + extra;
        (s * mult, t * mult, s, t)
    })
}

fn nonzero_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..=max_len).prop_filter("nonzero", |v| v.iter().any(|x| *x != 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_matrices_are_biregular((n, m, s, t) in biregular_shape(), seed in 0u64..1000) {
        let a = sample_biregular(&EnsembleParams::new(n, m, s, t, seed).unwrap()).unwrap();
        let g = a.as_signed().graph();
        prop_assert!(g.is_biregular(t, s));
        let mut edges = g.edges().to_vec();
        edges.sort_unstable();
        edges.dedup();
        prop_assert_eq!(edges.len(), n * t);
    }

    #[test]
    fn bireg_round_trips((n, m, s, t) in biregular_shape(), seed in 0u64..1000) {
        let a = sample_biregular(&EnsembleParams::new(n, m, s, t, seed).unwrap()).unwrap();
        let back = parse_bireg(&write_bireg(&a)).unwrap();
        prop_assert_eq!(back.as_signed().to_dense(), a.as_signed().to_dense());
        let g = a.as_signed().graph();
        prop_assert_eq!(&parse_bigraph(&write_bigraph(g)).unwrap(), g);
    }

    #[test]
    fn sparse_error_is_monotone_and_scale_free(x in nonzero_vec(24), p in 1.0f64..4.0, c in 0.01f64..50.0) {
        let mut prev = f64::INFINITY;
        for k in 1..=x.len() {
            let e = best_k_sparse_error(&x, k, p).unwrap().error;
            prop_assert!((0.0..=1.0).contains(&e));
            prop_assert!(e <= prev + 1e-15);
            let scaled: Vec<f64> = x.iter().map(|v| -c * v).collect();
            prop_assert!((best_k_sparse_error(&scaled, k, p).unwrap().error - e).abs() < 1e-12);
            prev = e;
        }
        prop_assert_eq!(best_k_sparse_error(&x, x.len(), p).unwrap().error, 0.0);
    }

    #[test]
    fn top_k_support_is_optimal(x in nonzero_vec(10), k in 1usize..=10, p in 1.0f64..3.0) {
        prop_assume!(k <= x.len());
        let got = best_k_sparse_error(&x, k, p).unwrap();
        prop_assert_eq!(&got.support, &top_k_support(&x, k));
        let norm = lp_norm(&x, p);
        let mut best = f64::INFINITY;
        for_each_subset(x.len(), k, |s| {
            let tail: Vec<f64> = x.iter().enumerate().map(|(i, v)| if s.contains(&i) { 0.0 } else { *v }).collect();
            best = best.min(lp_norm(&tail, p) / norm);
            true
        });
        prop_assert!((got.error - best).abs() < 1e-12);
    }

    #[test]
    fn distortion_stays_in_range(x in nonzero_vec(32), q in 1.0f64..2.0, dp in 0.1f64..3.0) {
        let p = q + dp;
        let d = distortion(&x, q, p).unwrap().value;
        let cap = (x.len() as f64).powf(1.0 / q - 1.0 / p);
        prop_assert!(d >= 1.0 - 1e-12 && d <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn subsets_are_counted_once(n in 0usize..12, k in 0usize..6) {
        let mut count = 0u128;
        let mut last: Option<Vec<usize>> = None;
        for_each_subset(n, k, |s| {
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            if let Some(prev) = &last {
                assert!(prev.as_slice() < s);
            }
            last = Some(s.to_vec());
            count += 1;
            true
        });
        prop_assert_eq!(count, if k <= n { binomial(n, k) } else { 0 });
    }

    #[test]
    fn degree_bounding_keeps_left_side(n in 4usize..30, t in 1usize..5, div in 1usize..4, seed in 0u64..500) {
        let m = (n / div).max(t);
        prop_assume!(m <= n);
        let g = sample_left_regular(n, m, t, seed).unwrap();
        let h = bound_right_degrees(&g, t).unwrap();
        prop_assert!(h.is_left_regular(t));
        prop_assert!(h.max_right_degree() * m <= t * n);
        for u in 0..n {
            let mut a: Vec<usize> = g.left_neighbors(u).collect();
            let mut b: Vec<usize> = h.left_neighbors(u).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a.len(), b.len());
        }
        // splitting never merges two edges of the same left vertex
        for r in 0..h.n_right() {
            let mut us: Vec<usize> = h.right_neighbors(r).collect();
            let before = us.len();
            us.dedup();
            prop_assert_eq!(us.len(), before);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tree_vectors_are_in_the_kernel_away_from_leaves(
        t in 2usize..5, s in 2usize..6, ell in 0usize..3, seed in 0u64..1000,
    ) {
        let tree = SignedTree::random(t, s, ell, seed).unwrap();
        let x = tree.tree_vector_scaled().unwrap();
        let img = tree.image_summary(&x).unwrap();
        prop_assert_eq!(img.max_internal_scaled, 0);
        // explicit product agrees with the summary
        let a: SignedMatrix = tree.to_signed_matrix().unwrap();
        let flat: Vec<f64> = SignedTree::flatten_left(&x).iter().map(|&v| v as f64).collect();
        let ax = a.to_dense() * nalgebra::DVector::from_vec(flat);
        let leaves = ax.iter().filter(|v| **v != 0.0).count();
        prop_assert!(leaves <= img.leaves);
        let l1: f64 = ax.iter().map(|v| v.abs()).sum();
        let want: f64 = img.magnitudes.iter().map(|&(mag, c)| mag as f64 * c as f64).sum();
        prop_assert_eq!(l1, want);
    }
}
