//! CSV and JSON persistence.
//!
//! Trajectory CSV: `trial,step,time,position`. `time` is empty for discrete
//! walks; for continuous walks row `step = k` holds the position after the
//! `k`-th jump, at `time = T_k` (`0` for the start row).
//!
//! Coupled-pair CSV: `pair,walk,step,position` with `walk` in
//! `forward | backward`.
//!
//! Sweep CSV: `epsilon,mean,se,ci_low,ci_high,exact_speed`, the last column
//! empty where no exact value exists.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::coupling::CoupledPair;
use crate::error::Result;
use crate::estimate::SweepRow;
use crate::walk::Trajectory;

pub const TRAJECTORY_HEADER: &str = "trial,step,time,position";
pub const PAIR_HEADER: &str = "pair,walk,step,position";
pub const SWEEP_HEADER: &str = "epsilon,mean,se,ci_low,ci_high,exact_speed";

pub fn write_trajectories_csv<'a, W: Write>(
    mut w: W,
    trajectories: impl IntoIterator<Item = (usize, &'a Trajectory)>,
) -> Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (trial, t) in trajectories {
        for (k, x) in t.positions.iter().enumerate() {
            match &t.jump_times {
                None => writeln!(w, "{trial},{k},,{x}")?,
                Some(times) => {
                    let time = if k == 0 { 0.0 } else { times[k - 1] };
                    writeln!(w, "{trial},{k},{time},{x}")?
                }
            }
        }
    }
    Ok(())
}

pub fn write_pairs_csv<'a, W: Write>(
    mut w: W,
    pairs: impl IntoIterator<Item = (usize, &'a CoupledPair)>,
) -> Result<()> {
    writeln!(w, "{PAIR_HEADER}")?;
    for (id, pair) in pairs {
        for (label, t) in [("forward", &pair.forward), ("backward", &pair.backward)] {
            for (k, x) in t.positions.iter().enumerate() {
                writeln!(w, "{id},{label},{k},{x}")?;
            }
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        let exact = r.exact_speed.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.epsilon, r.mean, r.se, r.ci_low, r.ci_high, exact
        )?;
    }
    Ok(())
}

/// Record of one CLI run. Replaying `config` under the same command
/// reproduces `result` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: SimConfig,
    pub seed: u64,
    pub code_version: String,
    pub started: String,
    pub finished: String,
    /// Extra command arguments needed for a replay (e.g. the epsilon grid).
    #[serde(default)]
    pub arguments: serde_json::Value,
    pub result: serde_json::Value,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_trajectory_rows() {
        let t = Trajectory::discrete(0, vec![0, 1, 0]);
        let mut out = Vec::new();
        write_trajectories_csv(&mut out, [(3, &t)]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "trial,step,time,position\n3,0,,0\n3,1,,1\n3,2,,0\n"
        );
    }

    #[test]
    fn continuous_trajectory_rows() {
        let t = Trajectory {
            start: 2,
            positions: vec![2, 1],
            jump_times: Some(vec![0.25]),
        };
        let mut out = Vec::new();
        write_trajectories_csv(&mut out, [(0, &t)]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "trial,step,time,position\n0,0,0,2\n0,1,0.25,1\n"
        );
    }

    #[test]
    fn pair_rows() {
        let pair = CoupledPair {
            forward: Trajectory::discrete(0, vec![0, 1]),
            backward: Trajectory::discrete(2, vec![2, 1]),
            endpoint: 1,
            horizon: 1,
        };
        let mut out = Vec::new();
        write_pairs_csv(&mut out, [(7, &pair)]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "pair,walk,step,position\n7,forward,0,0\n7,forward,1,1\n7,backward,0,2\n7,backward,1,1\n"
        );
    }

    #[test]
    fn sweep_rows() {
        let rows = [SweepRow {
            epsilon: 0.1,
            mean: 0.05,
            se: 0.01,
            ci_low: 0.03,
            ci_high: 0.07,
            exact_speed: None,
        }];
        let mut out = Vec::new();
        write_sweep_csv(&mut out, &rows).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "epsilon,mean,se,ci_low,ci_high,exact_speed\n0.1,0.05,0.01,0.03,0.07,\n"
        );
    }
}
