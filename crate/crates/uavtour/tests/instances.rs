use proptest::prelude::*;
use uavtour::instance::{self, InstanceError, Point};
use uavtour::tour::{Tour, TourError};

#[test]
fn generation_is_deterministic() {
    let a = instance::generate(4, 20, 100.0, 12345, 1000.0).unwrap();
    let b = instance::generate(4, 20, 100.0, 12345, 1000.0).unwrap();
    assert_eq!(a, b);
    let c = instance::generate(4, 20, 100.0, 12346, 1000.0).unwrap();
    assert_ne!(a, c);
}

#[test]
fn default_scenario_shape() {
    let inst = instance::generate(4, 20, 100.0, 0, 1000.0).unwrap();
    assert_eq!(inst.num_clusters(), 4);
    assert_eq!(inst.nodes_per_cluster(), 20);
    assert_eq!(inst.depot, Point(500.0, 0.0));
    inst.validate().unwrap();
}

#[test]
fn invariants_hold_across_a_thousand_seeds() {
    for seed in 0..1000 {
        let k = 1 + (seed as usize % 10);
        let inst = instance::generate(k, 20, 100.0, seed, 1000.0)
            .unwrap_or_else(|e| panic!("seed {} failed: {}", seed, e));
        inst.validate()
            .unwrap_or_else(|e| panic!("seed {} invalid: {}", seed, e));
        // Spot-check the box invariant directly against generation geometry:
        // every node within zeta of its cluster's bounding-box midpoint.
        for cluster in &inst.clusters {
            let xs: Vec<f64> = cluster.iter().map(Point::x).collect();
            let ys: Vec<f64> = cluster.iter().map(Point::y).collect();
            let span_x = xs.iter().cloned().fold(f64::MIN, f64::max)
                - xs.iter().cloned().fold(f64::MAX, f64::min);
            let span_y = ys.iter().cloned().fold(f64::MIN, f64::max)
                - ys.iter().cloned().fold(f64::MAX, f64::min);
            assert!(span_x < 200.0 && span_y < 200.0);
        }
    }
}

#[test]
fn impossible_packing_fails_with_context() {
    // 40 boxes of side 200 m need 1.6e6 m^2, the area has 1e6 m^2.
    let err = instance::generate(40, 2, 100.0, 7, 1000.0).unwrap_err();
    match err {
        InstanceError::PackingFailed { k, placed, .. } => {
            assert_eq!(k, 40);
            assert!(placed < 40);
        }
        other => panic!("expected PackingFailed, got {}", other),
    }
}

#[test]
fn parameter_validation() {
    assert!(matches!(
        instance::generate(0, 20, 100.0, 1, 1000.0),
        Err(InstanceError::BadParams(_))
    ));
    assert!(matches!(
        instance::generate(4, 1, 100.0, 1, 1000.0),
        Err(InstanceError::BadParams(_))
    ));
    assert!(matches!(
        instance::generate(4, 20, 500.0, 1, 1000.0),
        Err(InstanceError::BadParams(_))
    ));
}

#[test]
fn save_load_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let inst = instance::generate(5, 12, 80.0, 99, 1000.0).unwrap();
    instance::save(&inst, &path).unwrap();
    let back = instance::load(&path).unwrap();
    assert_eq!(inst, back);
}

#[test]
fn load_rejects_overlapping_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut inst = instance::generate(2, 3, 100.0, 4, 1000.0).unwrap();
    inst.clusters[1] = inst.clusters[0].clone();
    instance::save(&inst, &path).unwrap();
    assert!(matches!(
        instance::load(&path),
        Err(InstanceError::Invalid(_))
    ));
}

#[test]
fn load_rejects_truncated_and_versioned_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trunc.json");
    let inst = instance::generate(2, 3, 100.0, 4, 1000.0).unwrap();
    instance::save(&inst, &path).unwrap();
    let body = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &body[..body.len() / 2]).unwrap();
    assert!(matches!(instance::load(&path), Err(InstanceError::Parse(_))));

    let future = body.replacen("\"version\": 1", "\"version\": 99", 1);
    std::fs::write(&path, future).unwrap();
    assert!(matches!(instance::load(&path), Err(InstanceError::Version(99))));
}

#[test]
fn tour_validation_catches_structural_errors() {
    let inst = instance::generate(3, 4, 100.0, 11, 1000.0).unwrap();
    assert!(Tour::from_pairs(&[(0, 0), (1, 1), (2, 2)]).validate(&inst).is_ok());
    assert!(matches!(
        Tour::from_pairs(&[(0, 0), (1, 1)]).validate(&inst),
        Err(TourError::WrongLength { got: 2, want: 3 })
    ));
    assert!(matches!(
        Tour::from_pairs(&[(0, 0), (0, 1), (2, 2)]).validate(&inst),
        Err(TourError::RepeatedCluster(0))
    ));
    assert!(matches!(
        Tour::from_pairs(&[(0, 0), (1, 9), (2, 2)]).validate(&inst),
        Err(TourError::OutOfRange { cluster: 1, node: 9 })
    ));
}

#[test]
fn tour_compact_format_round_trips() {
    let tour = Tour::from_pairs(&[(2, 17), (0, 3), (1, 0)]);
    let text = tour.to_compact();
    assert_eq!(text, "2:17|0:3|1:0");
    assert_eq!(Tour::from_compact(&text).unwrap(), tour);
    assert!(matches!(
        Tour::from_compact("2:17|junk"),
        Err(TourError::Malformed(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_instances_always_validate(
        seed in 0u64..100_000,
        k in 1usize..8,
        n in 2usize..25,
        zeta in 30.0f64..150.0,
    ) {
        let inst = instance::generate(k, n, zeta, seed, 1000.0).unwrap();
        prop_assert!(inst.validate().is_ok());
        prop_assert_eq!(inst.num_clusters(), k);
        prop_assert_eq!(inst.nodes_per_cluster(), n);
    }

    #[test]
    fn json_round_trip_preserves_every_bit(seed in 0u64..10_000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = instance::generate(3, 6, 90.0, seed, 1000.0).unwrap();
        instance::save(&inst, &path).unwrap();
        let back = instance::load(&path).unwrap();
        // PartialEq on f64 fields: bit-exact round trip required.
        prop_assert_eq!(inst, back);
    }
}
