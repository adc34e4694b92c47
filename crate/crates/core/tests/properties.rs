use std::sync::{Arc, OnceLock};

use mapgroups::atlas::Atlas;
use mapgroups::flow::{FlowField, LevelSetDomain};
use mapgroups::io::{from_json, to_json, FieldFile, FieldPayload};
use mapgroups::lie::{exp_section, random_algebra_section, MatrixGroup};
use mapgroups::probe::suite_rng;
use mapgroups::sobolev::{hs_norm, BandlimitedField, SobolevOrder, WeightConvention};
use proptest::prelude::*;

fn circle() -> Arc<Atlas> {
    static ATLAS: OnceLock<Arc<Atlas>> = OnceLock::new();
    ATLAS.get_or_init(|| Arc::new(Atlas::circle2(33).unwrap())).clone()
}

fn group() -> impl Strategy<Value = MatrixGroup> {
    prop_oneof![Just(MatrixGroup::So3), Just(MatrixGroup::Su2), Just(MatrixGroup::Ut2)]
}

fn convention() -> impl Strategy<Value = WeightConvention> {
    prop_oneof![Just(WeightConvention::PaperHalf), Just(WeightConvention::Standard)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_grow_with_order(seed in any::<u64>(), m in 1usize..=2, a in 0.0f64..3.0, b in 0.0f64..3.0, c in convention()) {
        let f = BandlimitedField::random(m, 6, 2, 1.0, &mut suite_rng(seed, "prop-norms")).unwrap();
        let (s, t) = (a.max(b), a.min(b));
        let ns = hs_norm(&f, SobolevOrder::new(s).unwrap().with_convention(c)).unwrap();
        let nt = hs_norm(&f, SobolevOrder::new(t).unwrap().with_convention(c)).unwrap();
        prop_assert!(nt <= ns * (1.0 + 1e-12));
    }

    #[test]
    fn norm_is_homogeneous(seed in any::<u64>(), lambda in -4.0f64..4.0, s in 0.0f64..3.0) {
        let f = BandlimitedField::random(1, 8, 1, 1.0, &mut suite_rng(seed, "prop-scale")).unwrap();
        let o = SobolevOrder::new(s).unwrap();
        let lhs = hs_norm(&f.scale(lambda), o).unwrap();
        prop_assert!((lhs - lambda.abs() * hs_norm(&f, o).unwrap()).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn field_files_round_trip(seed in any::<u64>(), m in 1usize..=2, k in 1usize..=3) {
        let f = BandlimitedField::random(m, 4, k, 1.0, &mut suite_rng(seed, "prop-json")).unwrap();
        let text = to_json(&FieldFile::bandlimited(&f, WeightConvention::Standard)).unwrap();
        let back: FieldFile = from_json(&text).unwrap();
        prop_assert_eq!(back.weight_exponent_convention, WeightConvention::Standard);
        let FieldPayload::Bandlimited(p) = back.field else { panic!("wrong payload kind") };
        prop_assert_eq!(p.to_field().unwrap(), f);
    }

    #[test]
    fn exp_then_log_is_identity(seed in any::<u64>(), g in group(), frac in 0.05f64..0.9) {
        let mut rng = suite_rng(seed, "prop-exp");
        let xi = random_algebra_section(circle(), g, 3, frac * g.v_radius(), &mut rng).unwrap();
        let back = exp_section(g, &xi).unwrap().log_section().unwrap();
        prop_assert!(back.max_node_distance(&xi).unwrap() < 1e-9);
    }

    #[test]
    fn one_parameter_subgroups(seed in any::<u64>(), g in group(), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let xi = random_algebra_section(circle(), g, 3, 0.5, &mut suite_rng(seed, "prop-subgroup")).unwrap();
        let lhs = exp_section(g, &xi.scale(s)).unwrap().multiply(&exp_section(g, &xi.scale(t)).unwrap()).unwrap();
        let rhs = exp_section(g, &xi.scale(s + t)).unwrap();
        prop_assert!(lhs.max_distance(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn flow_is_a_group_action(name in prop_oneof![Just("disc"), Just("ellipse"), Just("peanut")],
                              x in -0.3f64..0.3, y in -0.3f64..0.3, s in -0.05f64..0.05, t in -0.05f64..0.05) {
        let f = FlowField::standard(LevelSetDomain::builtin(name).unwrap()).unwrap();
        let p = [x, y];
        let two = f.flow(&f.flow(&p, s, 128).unwrap(), t, 128).unwrap();
        let one = f.flow(&p, s + t, 128).unwrap();
        prop_assert!((two[0] - one[0]).hypot(two[1] - one[1]) < 1e-9);
    }
}
