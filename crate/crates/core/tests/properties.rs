use std::sync::Arc;

use ctgauss_core::coding::{codebook_size, Codebook};
use ctgauss_core::filter::riccati_stationary;
use ctgauss_core::mi::{duncan_mi, finite_bandwidth_capacity, sampled_mi_gaussian, two_user_mi, OuInput};
use ctgauss_core::regions::{
    bc_finite_w_bounds, bc_region, hausdorff_distance, ic_finite_w_bounds, ic_region, mac_finite_w_bounds, mac_region,
    repeated_region,
};
use ctgauss_core::{OuParams, RngSeed, SamplingGrid};
use proptest::prelude::*;

fn powers() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..5.0, 2..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_nests_grids(t in 0.1f64..20.0, k in 0u32..8) {
        let g = SamplingGrid::dyadic(t, k).unwrap();
        let f = g.refine();
        prop_assert!(f.contains_all(&g));
        let direct = SamplingGrid::dyadic(t, k + 1).unwrap();
        prop_assert!(SamplingGrid::dyadic(t, k + 1).unwrap().contains_all(&g));
        prop_assert_eq!(f.len(), direct.len());
        for (x, y) in f.times().iter().zip(direct.times()) {
            prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * t);
        }
    }

    #[test]
    fn sampled_mi_grows_under_refinement(
        a in 0.2f64..4.0,
        p in 0.1f64..3.0,
        snr in 0.1f64..4.0,
        t in 0.5f64..4.0,
        k in 0u32..5,
    ) {
        let params = OuParams::new(a, p).unwrap();
        let g = SamplingGrid::dyadic(t, k).unwrap();
        let coarse = sampled_mi_gaussian(&params, snr, &g).unwrap().value;
        let fine = sampled_mi_gaussian(&params, snr, &g.refine()).unwrap().value;
        prop_assert!(fine >= coarse - 1e-9);
        prop_assert!(fine <= duncan_mi(&params, snr, t).unwrap().value + 1e-9);
    }

    #[test]
    fn duncan_rate_below_half_power(a in 0.1f64..10.0, p in 0.01f64..5.0, snr in 0.01f64..10.0, t in 0.1f64..20.0) {
        let params = OuParams::new(a, p).unwrap();
        prop_assert!(duncan_mi(&params, snr, t).unwrap().rate() <= snr * p / 2.0 + 1e-12);
    }

    #[test]
    fn mmse_nonincreasing_in_snr(a in 0.1f64..10.0, p in 0.01f64..5.0, s in 0.01f64..10.0, ds in 0.0f64..5.0) {
        let params = OuParams::new(a, p).unwrap();
        prop_assert!(riccati_stationary(&params, s + ds) <= riccati_stationary(&params, s) + 1e-15);
    }

    #[test]
    fn bandwidth_sandwich(p in 0.01f64..10.0, w in 0.01f64..1e5) {
        let c = finite_bandwidth_capacity(p, w).unwrap();
        prop_assert!(c <= p / 2.0 + 1e-15);
        prop_assert!(c >= p / 2.0 - p * p / (8.0 * w) - 1e-12);
    }

    #[test]
    fn chain_rule_holds(a1 in 0.5f64..4.0, a2 in 0.5f64..4.0, p1 in 0.0f64..2.0, p2 in 0.0f64..2.0, g in 0.1f64..2.0) {
        let grid = Arc::new(SamplingGrid::dyadic(1.0, 5).unwrap());
        let m = two_user_mi(
            OuInput::new(OuParams::new(a1, p1).unwrap(), 1.0),
            OuInput::new(OuParams::new(a2, p2).unwrap(), g),
            &grid,
        ).unwrap();
        prop_assert!(m.chain_rule_gap() <= 1e-9);
        prop_assert!(m.first <= m.first_given_second + 1e-12);
        prop_assert!(m.second <= m.second_given_first + 1e-12);
    }

    #[test]
    fn mac_bounds_nest_and_grow(p in powers(), w in 0.1f64..1e3, factor in 1.0f64..10.0) {
        let (inner, outer) = mac_finite_w_bounds(&p, w).unwrap();
        prop_assert!(inner.is_subset_of(&outer).unwrap());
        let (inner2, outer2) = mac_finite_w_bounds(&p, w * factor).unwrap();
        prop_assert!(inner.is_subset_of(&inner2).unwrap());
        prop_assert!(outer.is_subset_of(&outer2).unwrap());
        prop_assert!(outer2.is_subset_of(&mac_region(&p).unwrap()).unwrap());
    }

    #[test]
    fn ic_bounds_nest_and_grow(
        d in prop::collection::vec(0.1f64..3.0, 2),
        c in prop::collection::vec(0.0f64..3.0, 2),
        p in prop::collection::vec(0.1f64..3.0, 2),
        w in 0.1f64..1e3,
        factor in 1.0f64..10.0,
    ) {
        let gains = vec![vec![d[0], c[0]], vec![c[1], d[1]]];
        let (inner, outer) = ic_finite_w_bounds(&gains, &p, w).unwrap();
        prop_assert!(inner.is_subset_of(&outer).unwrap());
        let (inner2, outer2) = ic_finite_w_bounds(&gains, &p, w * factor).unwrap();
        prop_assert!(inner.is_subset_of(&inner2).unwrap());
        prop_assert!(outer.is_subset_of(&outer2).unwrap());
    }

    #[test]
    fn ic_region_ignores_cross_gains(
        d in prop::collection::vec(0.1f64..3.0, 2),
        c in prop::collection::vec(-5.0f64..5.0, 4),
        p in prop::collection::vec(0.1f64..3.0, 2),
    ) {
        let a = ic_region(&[vec![d[0], c[0]], vec![c[1], d[1]]], &p).unwrap();
        let b = ic_region(&[vec![d[0], c[2]], vec![c[3], d[1]]], &p).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn repeated_region_scales_points(p in powers(), t0 in 0.1f64..10.0, raw in prop::collection::vec(0.0f64..3.0, 3)) {
        let base = mac_region(&p).unwrap();
        let rep = repeated_region(&base, t0).unwrap();
        let point: Vec<f64> = raw[..p.len()].iter().map(|x| x * t0).collect();
        let scaled: Vec<f64> = point.iter().map(|x| x / t0).collect();
        prop_assert_eq!(rep.contains(&point).unwrap(), base.contains(&scaled).unwrap());
    }

    #[test]
    fn hausdorff_is_a_symmetric_metric(p in powers(), q in powers(), w in 0.5f64..100.0) {
        prop_assume!(p.len() == q.len());
        let a = mac_region(&p).unwrap();
        let b = mac_region(&q).unwrap();
        let (inner, _) = mac_finite_w_bounds(&p, w).unwrap();
        let ab = hausdorff_distance(&a, &b).unwrap();
        prop_assert!((ab - hausdorff_distance(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!(hausdorff_distance(&a, &a).unwrap() <= 1e-12);
        let via = hausdorff_distance(&a, &inner).unwrap() + hausdorff_distance(&inner, &b).unwrap();
        prop_assert!(ab <= via + 1e-9);
    }

    #[test]
    fn bc_finite_w_inside_limit_and_monotone(s1 in 0.1f64..5.0, s2 in 0.1f64..5.0, p in 0.1f64..4.0, w in 0.5f64..100.0) {
        let r = bc_finite_w_bounds(&[s1, s2], p, w).unwrap();
        let r2 = bc_finite_w_bounds(&[s1, s2], p, 4.0 * w).unwrap();
        prop_assert!(r.is_subset_of(&r2).unwrap());
        prop_assert!(r2.is_subset_of(&bc_region(&[s1, s2], p).unwrap()).unwrap());
    }

    #[test]
    fn codebook_size_is_ceiling_of_exponential(r in 0.0f64..1.2, t in 0.1f64..8.0) {
        let n = codebook_size(r, t).unwrap();
        let e = (r * t).exp();
        prop_assert!(n >= 1);
        prop_assert!(n as f64 >= e * (1.0 - 1e-9));
        prop_assert!((n as f64) < e + 1.0);
    }

    #[test]
    fn codebooks_are_pure_functions_of_seed(seed in any::<u64>(), k in 0usize..4) {
        let p = OuParams::new(1.0, 1.0).unwrap();
        let g = Arc::new(SamplingGrid::dyadic(4.0, 5).unwrap());
        let a = Codebook::generate(p, 0.3, &g, RngSeed::master(seed), 64).unwrap();
        let b = Codebook::generate(p, 0.3, &g, RngSeed::master(seed), 64).unwrap();
        prop_assert_eq!(a.codeword(k), b.codeword(k));
    }
}
