//! Monte Carlo speed estimates and the antisymmetry checks built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SimConfig, TimeMode};
use crate::environment::{sample_stationary, EnvironmentProcess, Occupancy};
use crate::error::{invalid, Result};
use crate::oracle::{exact_speed, oracle_supports};
use crate::rng::{derived_seed, trial_seed, RandomSource, Stream};
use crate::stats::mean_and_std;
use crate::walk::{check_epsilon, continuous_displacement, direction, DirectionField};

/// Normal 97.5% quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub horizon: f64,
}

impl SpeedEstimate {
    /// Builds the estimate from per-trial speeds `X_N / N`.
    pub fn from_samples(samples: &[f64], horizon: f64) -> Self {
        let (mean, std) = mean_and_std(samples);
        let std_error = std / (samples.len() as f64).sqrt();
        Self {
            mean,
            std_error,
            ci_low: mean - Z_95 * std_error,
            ci_high: mean + Z_95 * std_error,
            trials: samples.len(),
            horizon,
        }
    }

    pub fn ci_contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Endpoint of one discrete trial, with the environment evolved alongside
/// the walker instead of being stored.
pub fn discrete_displacement(config: &SimConfig, seed: u64) -> Result<i64> {
    let spec = config.env;
    let init = sample_stationary(&spec, &RandomSource::new(seed, Stream::InitialConfig))?;
    let mut env =
        EnvironmentProcess::new(spec, RandomSource::new(seed, Stream::Environment), init)?;
    let walk = RandomSource::new(seed, Stream::WalkUniforms);
    let eps = config.epsilon;
    let steps = config.steps();
    let mut x = 0i64;
    for n in 0..steps {
        x += direction(env.occupied(x), walk.uniform_at(x, n), eps);
        if n + 1 < steps {
            env.step();
        }
    }
    Ok(x)
}

/// Per-trial speeds, in trial order.
pub fn trial_speeds(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let horizon = config.horizon;
    (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.seed, i as u64);
            let x = match config.time_mode {
                TimeMode::Discrete => discrete_displacement(config, seed)?,
                TimeMode::Continuous => {
                    continuous_displacement(&config.env, seed, config.epsilon, horizon)?.0
                }
            };
            Ok(x as f64 / horizon)
        })
        .collect()
}

/// Averages `X_N / N` over independent trials started from the stationary
/// environment.
pub fn estimate_speed(config: &SimConfig) -> Result<SpeedEstimate> {
    Ok(SpeedEstimate::from_samples(
        &trial_speeds(config)?,
        config.horizon,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisymmetryReport {
    pub v_plus: SpeedEstimate,
    pub v_minus: SpeedEstimate,
    pub sum: f64,
    pub sum_se: f64,
    pub pass: bool,
}

/// Seed of the `-eps` arm of an antisymmetry comparison.
pub fn minus_arm_seed(seed: u64) -> u64 {
    derived_seed(seed, 0xa5)
}

/// Estimates `v(eps)` and `v(-eps)` with independent seeds and checks
/// `|v(eps) + v(-eps)| <= 4 sqrt(SE+^2 + SE-^2)`.
pub fn antisymmetry_test(config: &SimConfig) -> Result<AntisymmetryReport> {
    let minus = config
        .with_epsilon(-config.epsilon)
        .with_seed(minus_arm_seed(config.seed));
    compare_opposite(config, &minus)
}

pub(crate) fn compare_opposite(plus: &SimConfig, minus: &SimConfig) -> Result<AntisymmetryReport> {
    let v_plus = estimate_speed(plus)?;
    let v_minus = estimate_speed(minus)?;
    let sum = v_plus.mean + v_minus.mean;
    let sum_se = v_plus.std_error.hypot(v_minus.std_error);
    Ok(AntisymmetryReport {
        v_plus,
        v_minus,
        sum,
        sum_se,
        pass: sum.abs() <= 4.0 * sum_se,
    })
}

/// A frozen Bernoulli field on the whole of `Z`, realized lazily from
/// coordinate-addressed randomness.
#[derive(Debug, Clone, Copy)]
pub struct StaticBernoulliField {
    src: RandomSource,
    p: f64,
}

impl StaticBernoulliField {
    pub fn new(seed: u64, p: f64) -> Self {
        Self {
            src: RandomSource::new(seed, Stream::InitialConfig),
            p,
        }
    }
}

impl Occupancy for StaticBernoulliField {
    #[inline(always)]
    fn occupied(&self, x: i64, _n: u64) -> bool {
        self.src.uniform_at(x, 0) < self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaticRegime {
    BallisticRight,
    BallisticLeft,
    ZeroSpeed,
}

/// Closed-form speed of a walk in a static iid environment where each site
/// is occupied with probability `p`. Returns `E[rho]`, `E[1/rho]`, the
/// regime, and the speed (`(1 - E rho) / (1 + E rho)` to the right,
/// the mirror formula to the left, zero otherwise).
pub fn static_speed(p: f64, epsilon: f64) -> (f64, f64, StaticRegime, f64) {
    // rho = P(left) / P(right) at a site
    let rho_occ = (0.5 - epsilon) / (0.5 + epsilon);
    let rho_empty = (0.5 + epsilon) / (0.5 - epsilon);
    let e_rho = p * rho_occ + (1.0 - p) * rho_empty;
    let e_inv = p / rho_occ + (1.0 - p) / rho_empty;
    if e_rho < 1.0 {
        (
            e_rho,
            e_inv,
            StaticRegime::BallisticRight,
            (1.0 - e_rho) / (1.0 + e_rho),
        )
    } else if e_inv < 1.0 {
        (
            e_rho,
            e_inv,
            StaticRegime::BallisticLeft,
            -(1.0 - e_inv) / (1.0 + e_inv),
        )
    } else {
        (e_rho, e_inv, StaticRegime::ZeroSpeed, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticCheckReport {
    pub p: f64,
    pub epsilon: f64,
    pub expected_rho: f64,
    pub expected_inverse_rho: f64,
    pub regime: StaticRegime,
    /// Closed-form speed, present only in a ballistic regime.
    pub formula_speed: Option<f64>,
    pub v_plus: SpeedEstimate,
    pub v_minus: SpeedEstimate,
    /// `|v_plus - formula| <= 4 SE`, present only in a ballistic regime.
    pub formula_match: Option<bool>,
    pub antisymmetry_sum: f64,
    pub antisymmetry_se: f64,
    pub antisymmetry_pass: bool,
}

fn static_trials(p: f64, epsilon: f64, steps: u64, trials: usize, seed: u64) -> SpeedEstimate {
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i as u64);
            let field = StaticBernoulliField::new(s, p);
            let walk = RandomSource::new(s, Stream::WalkUniforms);
            let dir = DirectionField::new(field, walk, epsilon);
            let mut x = 0i64;
            for n in 0..steps {
                x += dir.at(x, n);
            }
            x as f64 / steps as f64
        })
        .collect();
    SpeedEstimate::from_samples(&samples, steps as f64)
}

/// Walk on a frozen Bernoulli field over all of `Z`, compared with the
/// closed-form static speed, plus the `v(eps) + v(-eps)` check.
pub fn static_env_solomon_check(
    p: f64,
    epsilon: f64,
    steps: u64,
    trials: usize,
    seed: u64,
) -> Result<StaticCheckReport> {
    check_epsilon(epsilon)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1], got {p}")));
    }
    if epsilon.abs() >= 0.5 {
        return Err(invalid(
            "the static check needs |epsilon| < 1/2 so that rho is finite",
        ));
    }
    if steps == 0 || trials < 2 {
        return Err(invalid("the static check needs N >= 1 and M >= 2"));
    }
    let (expected_rho, expected_inverse_rho, regime, speed) = static_speed(p, epsilon);
    let v_plus = static_trials(p, epsilon, steps, trials, seed);
    let v_minus = static_trials(p, -epsilon, steps, trials, minus_arm_seed(seed));
    let ballistic = regime != StaticRegime::ZeroSpeed;
    let antisymmetry_sum = v_plus.mean + v_minus.mean;
    let antisymmetry_se = v_plus.std_error.hypot(v_minus.std_error);
    Ok(StaticCheckReport {
        p,
        epsilon,
        expected_rho,
        expected_inverse_rho,
        regime,
        formula_speed: ballistic.then_some(speed),
        v_plus,
        v_minus,
        formula_match: ballistic.then(|| (v_plus.mean - speed).abs() <= 4.0 * v_plus.std_error),
        antisymmetry_sum,
        antisymmetry_se,
        antisymmetry_pass: antisymmetry_sum.abs() <= 4.0 * antisymmetry_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact_speed: Option<f64>,
}

/// One speed estimate per `eps` in `grid`, with the exact ring speed when
/// the oracle supports the environment (discrete mode only).
pub fn sweep(base: &SimConfig, grid: &[f64]) -> Result<Vec<SweepRow>> {
    for &eps in grid {
        check_epsilon(eps)?;
    }
    grid.iter()
        .enumerate()
        .map(|(i, &eps)| {
            let cfg = base
                .with_epsilon(eps)
                .with_seed(derived_seed(base.seed, i as u64));
            let est = estimate_speed(&cfg)?;
            let exact = if base.time_mode == TimeMode::Discrete && oracle_supports(&base.env) {
                Some(exact_speed(&base.env, eps)?.exact_speed)
            } else {
                None
            };
            Ok(SweepRow {
                epsilon: eps,
                mean: est.mean,
                se: est.std_error,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                exact_speed: exact,
            })
        })
        .collect()
}

/// Speed of a continuous run measured per unit time against the speed of
/// its embedded jump chain measured per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub continuous: SpeedEstimate,
    pub embedded: SpeedEstimate,
    pub difference: f64,
    pub joint_se: f64,
    pub pass: bool,
}

pub fn continuous_reduction_check(config: &SimConfig) -> Result<ReductionReport> {
    config.validate()?;
    let horizon = config.horizon;
    let pairs: Vec<(f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.seed, i as u64);
            let (x, events) = continuous_displacement(&config.env, seed, config.epsilon, horizon)?;
            Ok((x as f64 / horizon, x as f64 / events.max(1) as f64))
        })
        .collect::<Result<_>>()?;
    let (cont, emb): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let continuous = SpeedEstimate::from_samples(&cont, horizon);
    let embedded = SpeedEstimate::from_samples(&emb, horizon);
    let difference = continuous.mean - embedded.mean;
    let joint_se = continuous.std_error.hypot(embedded.std_error);
    Ok(ReductionReport {
        continuous,
        embedded,
        difference,
        joint_se,
        pass: difference.abs() <= 4.0 * joint_se,
    })
}
