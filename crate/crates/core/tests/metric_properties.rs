use proptest::prelude::*;
use smocklab::metric::{layered_oracle, rescaled_distance, RescaledMetric};
use smocklab::{smocked_distance, PatternSpec, Point};

fn patterns() -> Vec<PatternSpec> {
    [
        "lattice_2x1",
        "two_segments",
        "point_lattice",
        "box_stitch",
        "x_plus",
    ]
    .iter()
    .map(|n| PatternSpec::builtin(n).unwrap())
    .collect()
}

fn pt() -> impl Strategy<Value = Point> {
    (-6.0f64..6.0, -6.0f64..6.0).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pseudometric_axioms(a in pt(), b in pt(), c in pt()) {
        for s in patterns() {
            let ab = smocked_distance(&s, a, b).0;
            prop_assert_eq!(ab, smocked_distance(&s, b, a).0);
            prop_assert!(ab >= 0.0);
            prop_assert!(ab <= a.dist(b) + 1e-12);
            prop_assert_eq!(smocked_distance(&s, a, a).0, 0.0);
            let ac = smocked_distance(&s, a, c).0;
            let bc = smocked_distance(&s, b, c).0;
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn witness_replays_to_the_distance(a in pt(), b in pt()) {
        for s in patterns() {
            let (d, w) = smocked_distance(&s, a, b);
            prop_assert!((w.replay() - d).abs() <= 1e-9);
            prop_assert!((w.segment_lengths.iter().sum::<f64>() - d).abs() <= 1e-9);
            prop_assert_eq!(w.hops.first().unwrap().entry, a);
            prop_assert_eq!(w.hops.last().unwrap().exit, b);
        }
    }

    #[test]
    fn solver_agrees_with_layered_oracle(a in pt(), b in pt()) {
        for s in patterns() {
            let d = smocked_distance(&s, a, b).0;
            prop_assert!((d - layered_oracle(&s, a, b, 256)).abs() <= 1e-9);
        }
    }

    #[test]
    fn lattice_translation_invariance(a in pt(), b in pt(), i in -3i64..3, j in -3i64..3) {
        let s = PatternSpec::builtin("lattice_2x1").unwrap();
        let t = Point::new(2.0 * i as f64, j as f64);
        let d0 = smocked_distance(&s, a, b).0;
        let d1 = smocked_distance(&s, a + t, b + t).0;
        prop_assert!((d0 - d1).abs() <= 1e-9);
    }

    #[test]
    fn points_on_one_stitch_are_identified(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let s = PatternSpec::builtin("lattice_2x1").unwrap();
        prop_assert_eq!(smocked_distance(&s, Point::new(u, 0.0), Point::new(v, 0.0)).0, 0.0);
    }

    #[test]
    fn rescaling_shrinks_toward_the_norm(a in pt(), b in pt()) {
        // d_R is a scaled pseudometric: still below Euclidean
        let s = PatternSpec::builtin("lattice_2x1").unwrap();
        let m = RescaledMetric::new(s, 3.0).unwrap();
        prop_assert!(rescaled_distance(&m, a, b) <= a.dist(b) + 1e-12);
    }
}
