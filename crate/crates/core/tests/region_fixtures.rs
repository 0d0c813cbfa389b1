//! Regions against hand-written JSON fixtures in the documented shape.

use ctgauss_core::regions::{
    bc_region, hausdorff_distance, ic_finite_w_bounds, mac_finite_w_bounds, mac_region, ChannelKind, ChannelSpec,
    RateRegion,
};

fn fixture(name: &str) -> RateRegion {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    RateRegion::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn same_set(a: &RateRegion, b: &RateRegion) {
    assert!(hausdorff_distance(a, b).unwrap() <= 1e-12);
    assert!(a.is_subset_of(b).unwrap() && b.is_subset_of(a).unwrap());
}

#[test]
fn limit_regions_match_fixtures() {
    same_set(&mac_region(&[2.0, 2.0]).unwrap(), &fixture("mac_limit.json"));
    same_set(&mac_region(&[1.0, 2.0, 3.0]).unwrap(), &fixture("mac3_limit.json"));
    same_set(&bc_region(&[2.0, 1.0], 2.0).unwrap(), &fixture("bc_limit.json"));
}

#[test]
fn band_limited_regions_match_fixtures() {
    let (inner, _) = mac_finite_w_bounds(&[2.0, 2.0], 1.0).unwrap();
    same_set(&inner, &fixture("mac_w1_inner.json"));
    let gains = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
    let (inner, _) = ic_finite_w_bounds(&gains, &[2.0, 2.0], 1.0).unwrap();
    same_set(&inner, &fixture("ic_w1_inner.json"));
}

#[test]
fn fixture_meta_survives_round_trip() {
    let r = fixture("mac_w1_inner.json");
    assert_eq!(r.meta().get("bound").map(String::as_str), Some("inner"));
    let back = RateRegion::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.vertices().len(), 5);
}

#[test]
fn spec_documents_build_fixture_regions() {
    let spec: ChannelSpec = serde_json::from_str(r#"{"kind": "mac", "powers": [2.0, 2.0]}"#).unwrap();
    assert_eq!(spec.kind, ChannelKind::Mac);
    same_set(&spec.region().unwrap(), &fixture("mac_limit.json"));
    let spec: ChannelSpec = serde_json::from_str(r#"{"kind": "bc", "snrs": [2.0, 1.0], "power": 2.0}"#).unwrap();
    same_set(&spec.region().unwrap(), &fixture("bc_limit.json"));
}

#[test]
fn malformed_documents_are_rejected() {
    assert!(RateRegion::from_json(r#"{"dimension": 2, "halfspaces": [{"coeffs": [1.0, 0.0], "rhs": 1.0}]}"#).is_err());
    assert!(RateRegion::from_json(r#"{"dimension": 1, "halfspaces": [{"coeffs": [-1.0], "rhs": 1.0}]}"#).is_err());
    assert!(serde_json::from_str::<ChannelSpec>(r#"{"kind": "mac", "powers": [1.0], "extra": 1}"#).is_err());
}
