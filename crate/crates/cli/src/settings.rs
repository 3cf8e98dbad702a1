//! Configuration resolution: defaults, then the `--config` file, then flags.

use std::path::Path;

use dynwalk::{EnvKind, EnvironmentSpec, SimConfig, TimeMode};
use serde_json::Value;

use crate::Failure;

/// Flag values; `None` leaves the file or default value in place.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub env: Option<String>,
    pub size: Option<usize>,
    pub p: Option<f64>,
    pub substeps: Option<usize>,
    pub eps: Option<f64>,
    pub horizon: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<String>,
}

pub fn defaults() -> SimConfig {
    SimConfig::discrete(
        EnvironmentSpec::new(EnvKind::EastRandomScan, 64, 0.7),
        0.25,
        1000,
        1000,
        1,
    )
}

/// Deep-merges `patch` into `base`; objects merge key by key, anything else
/// replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, p) => *slot = p,
    }
}

fn load_file(path: &Path, base: SimConfig) -> Result<SimConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let patch: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let mut merged = serde_json::to_value(base).expect("config serializes");
    merge(&mut merged, patch);
    serde_path_to_error::deserialize(merged).map_err(|e| {
        Failure::Usage(format!(
            "config {}: field `{}`: {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })
}

fn flag_for(message: &str) -> Option<&'static str> {
    [
        ("epsilon", "--eps"),
        ("env.L", "--L"),
        ("env.p", "--p"),
        ("env.substeps_k", "--substeps"),
        ("horizon", "--N"),
        ("trials", "--M"),
    ]
    .into_iter()
    .find(|(field, _)| message.starts_with(field))
    .map(|(_, flag)| flag)
}

pub fn resolve(config: Option<&Path>, flags: &Overrides) -> Result<SimConfig, Failure> {
    let mut cfg = match config {
        Some(path) => load_file(path, defaults())?,
        None => defaults(),
    };
    if let Some(name) = &flags.env {
        cfg.env.kind = EnvKind::parse(name).ok_or_else(|| {
            Failure::Usage(format!(
                "--env: unknown environment `{name}` (expected frozen, iid, ssep or east)"
            ))
        })?;
    }
    if let Some(mode) = &flags.mode {
        cfg.time_mode = match mode.as_str() {
            "discrete" => TimeMode::Discrete,
            "continuous" => TimeMode::Continuous,
            _ => {
                return Err(Failure::Usage(format!(
                    "--mode: expected discrete or continuous, got `{mode}`"
                )))
            }
        };
    }
    cfg.env.size = flags.size.unwrap_or(cfg.env.size);
    cfg.env.p = flags.p.unwrap_or(cfg.env.p);
    cfg.env.substeps_k = flags.substeps.unwrap_or(cfg.env.substeps_k);
    cfg.epsilon = flags.eps.unwrap_or(cfg.epsilon);
    cfg.horizon = flags.horizon.unwrap_or(cfg.horizon);
    cfg.trials = flags.trials.unwrap_or(cfg.trials);
    cfg.seed = flags.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(|e| {
        let msg = match e {
            dynwalk::Error::InvalidArgument(m) => m,
            other => other.to_string(),
        };
        match flag_for(&msg) {
            Some(flag) => Failure::Usage(format!("invalid configuration ({flag}): {msg}")),
            None => Failure::Usage(format!("invalid configuration: {msg}")),
        }
    })?;
    Ok(cfg)
}

/// `start:stop:step` (inclusive, values rounded to 12 decimals) or a
/// comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |what: &str| Failure::Usage(format!("--grid: {what} in `{spec}`"));
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("`{s}` is not a number")))
    };
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad("step must be positive and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err(bad("empty grid"));
    }
    if let Some(e) = grid.iter().find(|e| !(-0.5..=0.5).contains(*e)) {
        return Err(Failure::Usage(format!(
            "--grid: epsilon {e} is outside [-1/2, 1/2]; 1/2 ± epsilon must be probabilities"
        )));
    }
    Ok(grid)
}
