use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use dynwalk::coupling::{couple, proof_walkthrough, stationary_field};
use dynwalk::estimate::{antisymmetry_test, estimate_speed, sweep as sweep_rows, SweepRow};
use dynwalk::io::{
    read_json, write_json, write_pairs_csv, write_sweep_csv, write_trajectories_csv, RunManifest,
};
use dynwalk::oracle::{exact_speed, oracle_supports};
use dynwalk::rng::{trial_seed, RandomSource, Stream};
use dynwalk::suites::{self, Suite};
use dynwalk::walk::{run_continuous, run_discrete};
use dynwalk::{SimConfig, TimeMode, Trajectory};
use serde_json::{json, Value};

use crate::Failure;

const MIN_REPORTING_TRIALS: usize = 1000;

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn create_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Usage(format!("--out {}: {e}", out.display())))
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = out.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

/// Writes `report.json` and `manifest.json` into `out`.
fn persist(
    out: &Path,
    command: &str,
    config: &SimConfig,
    arguments: Value,
    result: &Value,
    started: String,
) -> Result<(), Failure> {
    create_dir(out)?;
    write_json(&out.join("report.json"), result)?;
    let manifest = RunManifest {
        command: command.to_string(),
        config: *config,
        seed: config.seed,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        arguments,
        result: result.clone(),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn exact_for(cfg: &SimConfig) -> Result<Option<f64>, Failure> {
    if cfg.time_mode == TimeMode::Discrete && oracle_supports(&cfg.env) {
        Ok(Some(exact_speed(&cfg.env, cfg.epsilon)?.exact_speed))
    } else {
        Ok(None)
    }
}

fn estimate_report(cfg: &SimConfig, antisymmetry: bool) -> Result<(Value, SweepRow), Failure> {
    let est = estimate_speed(cfg)?;
    let exact = exact_for(cfg)?;
    let anti = if antisymmetry {
        Some(antisymmetry_test(cfg)?)
    } else {
        None
    };
    let row = SweepRow {
        epsilon: cfg.epsilon,
        mean: est.mean,
        se: est.std_error,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        exact_speed: exact,
    };
    let report = json!({
        "command": "estimate",
        "config": cfg,
        "estimate": est,
        "exact_speed": exact,
        "antisymmetry": anti,
    });
    Ok((report, row))
}

fn trajectory(cfg: &SimConfig, trial: usize) -> Result<Trajectory, Failure> {
    let seed = trial_seed(cfg.seed, trial as u64);
    Ok(match cfg.time_mode {
        TimeMode::Discrete => {
            let field = stationary_field(&cfg.env, seed, cfg.steps())?;
            run_discrete(
                &field,
                &RandomSource::new(seed, Stream::WalkUniforms),
                cfg.epsilon,
                0,
                cfg.steps(),
            )?
        }
        TimeMode::Continuous => {
            run_continuous(&cfg.env, seed, cfg.epsilon, 0, cfg.horizon, false)?.trajectory
        }
    })
}

fn warn_small_sample(cfg: &SimConfig) {
    if cfg.trials < MIN_REPORTING_TRIALS {
        eprintln!(
            "warning: M = {} < {MIN_REPORTING_TRIALS}; the normal-approximation interval may be unreliable",
            cfg.trials
        );
    }
}

pub fn estimate(
    cfg: &SimConfig,
    antisymmetry: bool,
    trajectories: usize,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let started = now();
    warn_small_sample(cfg);
    let (report, row) = estimate_report(cfg, antisymmetry)?;
    print_json(&report);
    if let Some(out) = out {
        let args = json!({"antisymmetry": antisymmetry, "trajectories": trajectories});
        persist(out, "estimate", cfg, args, &report, started)?;
        write_sweep_csv(create(out, "sweep.csv")?, &[row])?;
        if trajectories > 0 {
            let paths = (0..trajectories.min(cfg.trials))
                .map(|i| trajectory(cfg, i))
                .collect::<Result<Vec<_>, _>>()?;
            write_trajectories_csv(create(out, "trajectories.csv")?, paths.iter().enumerate())?;
        }
    }
    Ok(())
}

fn sweep_report(cfg: &SimConfig, grid: &[f64]) -> Result<(Value, Vec<SweepRow>), Failure> {
    let rows = sweep_rows(cfg, grid)?;
    let report = json!({
        "command": "sweep",
        "config": cfg,
        "grid": grid,
        "rows": rows,
    });
    Ok((report, rows))
}

pub fn sweep(cfg: &SimConfig, grid: &[f64], out: Option<&Path>) -> Result<(), Failure> {
    let started = now();
    warn_small_sample(cfg);
    let (report, rows) = sweep_report(cfg, grid)?;
    match out {
        Some(out) => {
            persist(out, "sweep", cfg, json!({"grid": grid}), &report, started)?;
            write_sweep_csv(create(out, "sweep.csv")?, &rows)?;
            print_json(&report);
        }
        None => write_sweep_csv(std::io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn parse_suite(name: &str) -> Result<Suite, Failure> {
    Suite::parse(name).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        Failure::Usage(format!(
            "unknown suite `{name}` (expected one of: {})",
            names.join(", ")
        ))
    })
}

fn verify_report(suite: Suite, seed: u64) -> Result<(Value, suites::SuiteReport), Failure> {
    let report = suites::run(suite, seed)?;
    let value = json!({
        "command": "verify",
        "seed": seed,
        "report": report,
        "pass": report.pass(),
    });
    Ok((value, report))
}

pub fn verify(name: &str, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let suite = parse_suite(name)?;
    let started = now();
    let (value, report) = verify_report(suite, seed)?;
    for case in &report.cases {
        println!(
            "{} {}: {}",
            if case.pass { "PASS" } else { "FAIL" },
            case.name,
            case.detail
        );
    }
    println!(
        "{}: {} of {} cases passed",
        report.suite,
        report.cases.len() - report.failures(),
        report.cases.len()
    );
    if let Some(out) = out {
        let cfg = crate::settings::defaults().with_seed(seed);
        persist(
            out,
            "verify",
            &cfg,
            json!({"suite": suite.name()}),
            &value,
            started,
        )?;
    }
    if report.pass() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{} case(s) failed in {}",
            report.failures(),
            report.suite
        )))
    }
}

fn walkthrough_report(cfg: &SimConfig) -> Result<Value, Failure> {
    if cfg.time_mode != TimeMode::Discrete {
        return Err(Failure::Usage(
            "--mode: walkthrough runs in discrete time only".into(),
        ));
    }
    let (v_plus, v_minus, source) = match exact_for(cfg)? {
        Some(v) => (v, exact_speed(&cfg.env, -cfg.epsilon)?.exact_speed, "exact"),
        None => {
            let a = antisymmetry_test(cfg)?;
            (a.v_plus.mean, a.v_minus.mean, "estimated")
        }
    };
    let report = proof_walkthrough(cfg, v_plus, v_minus)?;
    Ok(json!({
        "command": "walkthrough",
        "config": cfg,
        "speeds": source,
        "walkthrough": report,
    }))
}

pub fn walkthrough(cfg: &SimConfig, pairs: usize, out: Option<&Path>) -> Result<(), Failure> {
    let started = now();
    let report = walkthrough_report(cfg)?;
    print_json(&report);
    if let Some(out) = out {
        persist(
            out,
            "walkthrough",
            cfg,
            json!({"pairs": pairs}),
            &report,
            started,
        )?;
        let endpoint = report["walkthrough"]["endpoint"]
            .as_i64()
            .expect("endpoint is recorded");
        let steps = cfg.steps();
        let built = (0..pairs.min(cfg.trials))
            .map(|i| {
                let seed = trial_seed(cfg.seed, i as u64);
                let field = stationary_field(&cfg.env, seed, steps)?;
                couple(
                    &field,
                    &RandomSource::new(seed, Stream::WalkUniforms),
                    cfg.epsilon,
                    endpoint,
                    steps,
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        write_pairs_csv(create(out, "pairs.csv")?, built.iter().enumerate())?;
    }
    Ok(())
}

pub fn replay(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let manifest: RunManifest =
        read_json(path).map_err(|e| Failure::Usage(format!("manifest {}: {e}", path.display())))?;
    let cfg = manifest.config;
    cfg.validate()?;
    let arg = |key: &str| manifest.arguments.get(key).cloned().unwrap_or(Value::Null);
    let started = now();
    let result = match manifest.command.as_str() {
        "estimate" => estimate_report(&cfg, arg("antisymmetry").as_bool().unwrap_or(false))?.0,
        "sweep" => {
            let grid: Vec<f64> = serde_json::from_value(arg("grid"))
                .map_err(|e| Failure::Usage(format!("manifest arguments.grid: {e}")))?;
            sweep_report(&cfg, &grid)?.0
        }
        "verify" => {
            let name = arg("suite");
            let suite = parse_suite(name.as_str().unwrap_or_default())?;
            verify_report(suite, manifest.seed)?.0
        }
        "walkthrough" => walkthrough_report(&cfg)?,
        other => {
            return Err(Failure::Usage(format!(
                "manifest command `{other}` cannot be replayed"
            )))
        }
    };
    if let Some(out) = out {
        persist(
            out,
            &manifest.command,
            &cfg,
            manifest.arguments.clone(),
            &result,
            started,
        )?;
    }
    if result == manifest.result {
        println!(
            "replay of {} reproduced the recorded result exactly",
            path.display()
        );
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "replay of {} produced a different result",
            path.display()
        )))
    }
}
