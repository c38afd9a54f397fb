//! Cross-module invariants exercised through the public API.

use npoint::assignment::{
    max_perm_correlation, perm_correlation, quotient_distance, quotient_distance_direct,
    DEFAULT_ENUMERATION_CAP,
};
use npoint::birkhoff::{h_objective, Bistochastic};
use npoint::catalog;
use npoint::spectral::{is_negative_type, tensor_cpsd_check, trace_kron_identity_check};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The expansion identity ties the enumeration maximum to the direct
    /// minimum over relabelings.
    #[test]
    fn expansion_identity_relative(seed in any::<u64>(), n in 2usize..6) {
        let f = catalog::random_gauge(n, seed);
        let g = catalog::random_gauge(n, seed ^ 0xf00d);
        let (corr, _) = max_perm_correlation(&f, &g, DEFAULT_ENUMERATION_CAP).unwrap();
        let (direct, _) = quotient_distance_direct(&f, &g, DEFAULT_ENUMERATION_CAP).unwrap();
        let nn = (n * n) as f64;
        let via_expansion = f.l2_norm_sq() + g.l2_norm_sq() - 2.0 / nn * corr;
        let direct_sq = direct * direct;
        prop_assert!(
            (via_expansion - direct_sq).abs() <= 1e-12 * (1.0 + direct_sq.abs()),
            "expansion {via_expansion} vs direct {direct_sq}"
        );
    }

    /// Vertex consistency: the coupling objective at a permutation matrix is
    /// the correlation at that permutation.
    #[test]
    fn coupling_objective_extends_correlation(seed in any::<u64>(), n in 2usize..7) {
        let f = catalog::random_gauge(n, seed);
        let g = catalog::random_gauge(n, seed ^ 0xc0ffee);
        let sigma = catalog::random_permutation(n, seed ^ 0x51);
        let h = h_objective(&f, &g, &Bistochastic::from_permutation(&sigma)).unwrap();
        let corr = perm_correlation(&f, &g, &sigma).unwrap();
        prop_assert!((h - corr).abs() <= 1e-12 * (1.0 + corr.abs()));
    }

    /// Both routes agree on the optimal value, not just on identities.
    #[test]
    fn quotient_routes_agree(seed in any::<u64>(), n in 2usize..6) {
        let f = catalog::random_gauge(n, seed);
        let g = catalog::random_gauge(n, seed ^ 0x1234);
        let (a, _) = quotient_distance(&f, &g, DEFAULT_ENUMERATION_CAP).unwrap();
        let (b, _) = quotient_distance_direct(&f, &g, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    /// The coupling objective in its trace form equals the vectorized
    /// Kronecker quadratic form at the same coupling.
    #[test]
    fn coupling_objective_is_kron_quadratic_form(seed in any::<u64>(), n in 2usize..6) {
        let dx = catalog::random_gauge(n, seed);
        let dy = catalog::random_gauge(n, seed ^ 0xfeed);
        let sigma = catalog::random_permutation(n, seed ^ 0x99);
        let p = Bistochastic::from_permutation(&sigma);
        let h = h_objective(&dx, &dy, &p).unwrap();
        let (lhs, rhs) = trace_kron_identity_check(
            p.as_matrix(),
            dx.as_matrix(),
            p.as_matrix(),
            dy.as_matrix(),
        )
        .unwrap();
        prop_assert!((lhs - h).abs() <= 1e-10 * (1.0 + h.abs()));
        prop_assert!((rhs - h).abs() <= 1e-10 * (1.0 + h.abs()));
    }

    /// Negative-type pairs have a conditionally PSD tensor product on the
    /// span of the couplings.
    #[test]
    fn tensor_check_on_four_point_pairs(seed in any::<u64>()) {
        let dx = catalog::random_metric(4, seed);
        let dy = catalog::random_metric(4, seed ^ 0x7a7a);
        prop_assert!(is_negative_type(&dx, 1e-9).0);
        prop_assert!(is_negative_type(&dy, 1e-9).0);
        let (ok, spectrum) = tensor_cpsd_check(&dx, &dy, 1e-9).unwrap();
        prop_assert!(ok, "min eigenvalue {:?}", spectrum.first());
    }
}
