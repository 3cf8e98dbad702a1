use dynwalk::coupling::{couple, stationary_field};
use dynwalk::estimate::SweepRow;
use dynwalk::io::{write_pairs_csv, write_sweep_csv, RunManifest, PAIR_HEADER, SWEEP_HEADER};
use dynwalk::rng::{RandomSource, Stream};
use dynwalk::{EnvKind, EnvironmentSpec, SimConfig, TimeMode};
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = SimConfig> {
    (
        prop::sample::select(EnvKind::ALL.to_vec()),
        2usize..1000,
        0.0f64..=1.0,
        1usize..8,
        -0.5f64..=0.5,
        1u64..100_000,
        1usize..100_000,
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(kind, size, p, k, eps, steps, trials, seed, cont)| {
            let env = EnvironmentSpec::new(kind, size, p).with_substeps(k);
            if cont {
                SimConfig::continuous(env, eps, steps as f64 + 0.5, trials, seed)
            } else {
                SimConfig::discrete(env, eps, steps, trials, seed)
            }
        })
}

proptest! {
    #[test]
    fn config_round_trip(cfg in config_strategy()) {
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn config_defaults_when_fields_are_omitted() {
    let text = r#"{"epsilon":0.25,"env":{"kind":"east","L":64,"p":0.7},"horizon":100,"trials":10,"seed":1}"#;
    let cfg: SimConfig = serde_json::from_str(text).unwrap();
    assert_eq!(cfg.time_mode, TimeMode::Discrete);
    assert_eq!(cfg.env.substeps_k, 1);
    assert_eq!(cfg.env.kind, EnvKind::EastRandomScan);
}

#[test]
fn manifest_round_trip() {
    let cfg = SimConfig::discrete(
        EnvironmentSpec::new(EnvKind::SsepRandomScan, 8, 0.4),
        0.1,
        10,
        5,
        9,
    );
    let m = RunManifest {
        command: "estimate".into(),
        config: cfg,
        seed: 9,
        code_version: "0.1.0".into(),
        started: "2026-01-01T00:00:00Z".into(),
        finished: "2026-01-01T00:00:01Z".into(),
        arguments: serde_json::Value::Null,
        result: serde_json::json!({"mean": 0.5}),
    };
    let dir = std::env::temp_dir().join(format!("dynwalk-manifest-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("manifest.json");
    dynwalk::io::write_json(&path, &m).unwrap();
    let back: RunManifest = dynwalk::io::read_json(&path).unwrap();
    assert_eq!(back, m);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn pair_csv_layout() {
    let spec = EnvironmentSpec::new(EnvKind::EastRandomScan, 8, 0.6);
    let field = stationary_field(&spec, 2, 6).unwrap();
    let pair = couple(
        &field,
        &RandomSource::new(2, Stream::WalkUniforms),
        0.2,
        2,
        6,
    )
    .unwrap();
    let mut out = Vec::new();
    write_pairs_csv(&mut out, [(0, &pair)]).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], PAIR_HEADER);
    assert_eq!(lines.len(), 1 + 2 * 7);
    assert_eq!(lines[1], "0,forward,0,0");
    assert_eq!(lines[14], "0,backward,6,2");
}

#[test]
fn sweep_csv_leaves_missing_exact_empty() {
    let row = |eps: f64, exact| SweepRow {
        epsilon: eps,
        mean: 0.5,
        se: 0.25,
        ci_low: 0.0,
        ci_high: 1.0,
        exact_speed: exact,
    };
    let mut out = Vec::new();
    write_sweep_csv(&mut out, &[row(0.1, Some(0.125)), row(0.2, None)]).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        format!("{SWEEP_HEADER}\n0.1,0.5,0.25,0,1,0.125\n0.2,0.5,0.25,0,1,\n")
    );
}
