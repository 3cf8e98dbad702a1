use dynwalk::coupling::{
    backward_law_test, backward_path_law_test, broken_coupling_crossings, check_non_crossing,
    check_step_structure, couple, run_backward, stationary_field, sweep_case,
};
use dynwalk::rng::{RandomSource, Stream};
use dynwalk::walk::direction;
use dynwalk::{EnvKind, EnvironmentSpec, SimConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn coupled_walks_never_cross(seed in any::<u64>(), i in 0usize..1000) {
        let case = sweep_case(seed, i, 256);
        let field = stationary_field(&case.spec, case.seed, case.steps).unwrap();
        let src = RandomSource::new(case.seed, Stream::WalkUniforms);
        let endpoint = case.offset + (case.steps as i64 % 2);
        let pair = couple(&field, &src, case.epsilon, endpoint, case.steps).unwrap();
        prop_assert!(check_non_crossing(&pair) >= 0);
        prop_assert!(check_step_structure(&pair));
        prop_assert!(pair.backward.check_invariants().is_ok());
    }

    /// Each backward step undoes the direction read at the later time.
    #[test]
    fn backward_steps_read_the_field(seed in any::<u64>(), eps in -0.5f64..=0.5, end in -20i64..20) {
        let spec = EnvironmentSpec::new(EnvKind::SsepRandomScan, 7, 0.4).with_substeps(2);
        let steps = 40u64;
        let endpoint = if (end - steps as i64) % 2 == 0 { end } else { end + 1 };
        let field = stationary_field(&spec, seed, steps).unwrap();
        let src = RandomSource::new(seed, Stream::WalkUniforms);
        let y = run_backward(&field, &src, eps, endpoint, steps).unwrap();
        prop_assert_eq!(y.positions[steps as usize], endpoint);
        for m in 1..=steps as usize {
            let here = y.positions[m];
            let a = direction(field.get(here, m as u64) == 1, src.uniform_at(here, m as u64), eps);
            prop_assert_eq!(y.positions[m - 1], here - a);
        }
    }
}

#[test]
fn wrong_parity_endpoint_is_rejected() {
    let spec = EnvironmentSpec::new(EnvKind::EastRandomScan, 8, 0.7);
    let field = stationary_field(&spec, 1, 10).unwrap();
    let src = RandomSource::new(1, Stream::WalkUniforms);
    assert!(run_backward(&field, &src, 0.2, 3, 10).is_err());
    assert!(run_backward(&field, &src, 0.2, 4, 10).is_ok());
    assert!(run_backward(&field, &src, 0.2, 4, 12).is_err());
}

#[test]
fn independent_uniforms_do_cross() {
    assert!(broken_coupling_crossings(2000, 5).unwrap() > 0);
}

#[test]
fn backward_path_law_at_tiny_horizon() {
    for kind in [EnvKind::EastRandomScan, EnvKind::SsepRandomScan] {
        let cfg = SimConfig::discrete(EnvironmentSpec::new(kind, 6, 0.7), 0.3, 4, 1, 99);
        let r = backward_path_law_test(&cfg, 0, 40_000).unwrap();
        assert!(r.pass, "{kind}: {r:?}");
    }
    let too_long = SimConfig::discrete(
        EnvironmentSpec::new(EnvKind::EastRandomScan, 6, 0.7),
        0.3,
        8,
        1,
        99,
    );
    assert!(backward_path_law_test(&too_long, 0, 10).is_err());
}

#[test]
fn backward_law_in_static_environments() {
    let frozen = EnvironmentSpec::new(EnvKind::FrozenBernoulli, 16, 0.5);
    for eps in [0.0, 0.3] {
        let cfg = SimConfig::discrete(frozen, eps, 64, 1, 7);
        let r = backward_law_test(&cfg, 0, 20_000).unwrap();
        assert!(r.pass(), "eps {eps}: {r:?}");
    }
}
