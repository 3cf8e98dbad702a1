//! Forward/backward coupling on a shared direction field.
//!
//! The forward walk `X` uses `A_{X_n, n}` to go from time `n` to `n + 1`;
//! the backward walk `Y`, pinned at `Y_N = x`, uses `A_{Y_m, m}` to go from
//! time `m` to `m - 1`. When `Y_0` and `X_0` share parity the two paths never
//! swap sides, and `Y` read backwards is a `(-eps)`-walk in the reversed
//! environment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::environment::{
    evolve_discrete, sample_stationary, EnvKind, EnvironmentSpec, OccupancyField,
};
use crate::error::{invalid, Result};
use crate::rng::{derived_seed, trial_seed, RandomSource, Stream};
use crate::stats::{two_sample_chi_square, ChiSquareReport};
use crate::walk::{check_epsilon, run_discrete, DirectionField, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub forward: Trajectory,
    pub backward: Trajectory,
    pub endpoint: i64,
    pub horizon: u64,
}

fn check_parity(endpoint: i64, steps: u64) -> Result<()> {
    if (endpoint - steps as i64).rem_euclid(2) != 0 {
        return Err(invalid(format!(
            "endpoint {endpoint} must have the parity of the horizon {steps}"
        )));
    }
    Ok(())
}

fn check_rows(field: &OccupancyField, steps: u64) -> Result<()> {
    if steps > field.horizon() {
        return Err(invalid(format!(
            "horizon {steps} exceeds the {} rows of the environment field",
            field.num_rows()
        )));
    }
    Ok(())
}

/// Backward walk pinned at `Y_N = endpoint`, reading the same uniforms as the
/// forward walk. Positions are indexed by forward time.
pub fn run_backward(
    field: &OccupancyField,
    src: &RandomSource,
    epsilon: f64,
    endpoint: i64,
    steps: u64,
) -> Result<Trajectory> {
    check_epsilon(epsilon)?;
    check_parity(endpoint, steps)?;
    check_rows(field, steps)?;
    Ok(DirectionField::new(field, src, epsilon).walk_backward(endpoint, steps))
}

/// Builds the forward walk from 0 and the backward walk pinned at `endpoint`
/// on one direction field.
pub fn couple(
    field: &OccupancyField,
    src: &RandomSource,
    epsilon: f64,
    endpoint: i64,
    steps: u64,
) -> Result<CoupledPair> {
    let forward = run_discrete(field, src, epsilon, 0, steps)?;
    let backward = run_backward(field, src, epsilon, endpoint, steps)?;
    Ok(CoupledPair {
        forward,
        backward,
        endpoint,
        horizon: steps,
    })
}

/// `floor((v - delta/2) N)`, bumped by one if needed to match the parity of `N`.
pub fn choose_endpoint(v_eps: f64, delta: f64, steps: u64) -> i64 {
    let tilde = ((v_eps - delta / 2.0) * steps as f64).floor() as i64;
    if (tilde - steps as i64).rem_euclid(2) == 0 {
        tilde
    } else {
        tilde + 1
    }
}

/// `(Y_0 - X_0)(Y_N - X_N)`, in exact integer arithmetic.
pub fn check_non_crossing(pair: &CoupledPair) -> i128 {
    let n = pair.horizon as usize;
    let start = pair.backward.positions[0] as i128 - pair.forward.positions[0] as i128;
    let end = pair.backward.positions[n] as i128 - pair.forward.positions[n] as i128;
    start * end
}

/// `Y_n - X_n` is even for every `n` and changes by `-2`, `0` or `+2` per step.
pub fn check_step_structure(pair: &CoupledPair) -> bool {
    let gaps: Vec<i64> = pair
        .backward
        .positions
        .iter()
        .zip(&pair.forward.positions)
        .map(|(y, x)| y - x)
        .collect();
    gaps.iter().all(|g| g.rem_euclid(2) == 0)
        && gaps.windows(2).all(|w| matches!(w[1] - w[0], -2 | 0 | 2))
}

/// Stationary initial configuration followed by `steps` kernel steps, all
/// derived from one trial seed.
pub fn stationary_field(spec: &EnvironmentSpec, seed: u64, steps: u64) -> Result<OccupancyField> {
    let init = sample_stationary(spec, &RandomSource::new(seed, Stream::InitialConfig))?;
    evolve_discrete(
        spec,
        &RandomSource::new(seed, Stream::Environment),
        steps,
        &init,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonCrossingReport {
    pub cases: usize,
    pub violations: usize,
    pub step_structure_failures: usize,
    pub min_product: i128,
    /// Cases in which the two paths met at least once.
    pub meetings: usize,
}

impl NonCrossingReport {
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.step_structure_failures == 0
    }
}

const SWEEP_EPSILONS: [f64; 6] = [0.1, -0.1, 0.25, -0.25, 0.4, -0.4];
const SWEEP_SIZES: [usize; 3] = [8, 16, 32];

/// Parameters of case `i` of the randomized non-crossing sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepCase {
    pub spec: EnvironmentSpec,
    pub epsilon: f64,
    pub steps: u64,
    pub offset: i64,
    pub seed: u64,
}

pub fn sweep_case(seed: u64, i: usize, max_steps: u64) -> SweepCase {
    let case_seed = trial_seed(seed, i as u64);
    let draw = RandomSource::new(derived_seed(case_seed, 7), Stream::InitialConfig).at_time(0);
    let kind = EnvKind::ALL[i % 4];
    let epsilon = SWEEP_EPSILONS[(i / 4) % SWEEP_EPSILONS.len()];
    let size = SWEEP_SIZES[(draw.uniform(0, 1) * 3.0) as usize % 3];
    let p = 0.2 + 0.6 * draw.uniform(0, 2);
    let substeps = 1 + (draw.uniform(0, 3) * 3.0) as usize;
    let span = max_steps.max(16) - 16 + 1;
    let steps = 16 + ((draw.uniform(0, 4) * span as f64) as u64).min(span - 1);
    let offset = 2 * ((draw.uniform(0, 5) * 5.0) as i64 - 2);
    SweepCase {
        spec: EnvironmentSpec::new(kind, size, p).with_substeps(substeps),
        epsilon,
        steps,
        offset,
        seed: case_seed,
    }
}

fn run_sweep_case(case: &SweepCase) -> Result<(i128, bool, bool)> {
    let field = stationary_field(&case.spec, case.seed, case.steps)?;
    let src = RandomSource::new(case.seed, Stream::WalkUniforms);
    let forward = run_discrete(&field, &src, case.epsilon, 0, case.steps)?;
    // pin the backward walk near the forward endpoint so that meetings are common
    let endpoint = forward.end() + case.offset;
    let backward = run_backward(&field, &src, case.epsilon, endpoint, case.steps)?;
    let pair = CoupledPair {
        forward,
        backward,
        endpoint,
        horizon: case.steps,
    };
    let met = pair
        .forward
        .positions
        .iter()
        .zip(&pair.backward.positions)
        .any(|(a, b)| a == b);
    Ok((check_non_crossing(&pair), check_step_structure(&pair), met))
}

/// Randomized sweep over kinds, signs of epsilon, horizons in `16..=max_steps`
/// and endpoints close to the forward endpoint.
pub fn non_crossing_sweep(cases: usize, seed: u64, max_steps: u64) -> Result<NonCrossingReport> {
    let results: Vec<(i128, bool, bool)> = (0..cases)
        .into_par_iter()
        .map(|i| run_sweep_case(&sweep_case(seed, i, max_steps)))
        .collect::<Result<_>>()?;
    Ok(NonCrossingReport {
        cases,
        violations: results.iter().filter(|r| r.0 < 0).count(),
        step_structure_failures: results.iter().filter(|r| !r.1).count(),
        min_product: results.iter().map(|r| r.0).min().unwrap_or(0),
        meetings: results.iter().filter(|r| r.2).count(),
    })
}

/// Deliberately broken coupling: the backward walk reads uniforms from a
/// different seed. Returns the number of crossings (negative products).
pub fn broken_coupling_crossings(attempts: usize, seed: u64) -> Result<usize> {
    let crossings: Vec<bool> = (0..attempts)
        .into_par_iter()
        .map(|i| {
            let case = sweep_case(seed, i, 64);
            let field = stationary_field(&case.spec, case.seed, case.steps)?;
            let src = RandomSource::new(case.seed, Stream::WalkUniforms);
            let other = RandomSource::new(derived_seed(case.seed, 99), Stream::WalkUniforms);
            let forward = run_discrete(&field, &src, case.epsilon, 0, case.steps)?;
            let endpoint = forward.end() + case.offset;
            let backward = run_backward(&field, &other, case.epsilon, endpoint, case.steps)?;
            let pair = CoupledPair {
                forward,
                backward,
                endpoint,
                horizon: case.steps,
            };
            Ok(check_non_crossing(&pair) < 0)
        })
        .collect::<Result<_>>()?;
    Ok(crossings.into_iter().filter(|&c| c).count())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardLawReport {
    pub endpoint: i64,
    pub trials: usize,
    pub direct_epsilon: f64,
    pub backward_mean: f64,
    pub direct_mean: f64,
    pub chi_square: ChiSquareReport,
}

impl BackwardLawReport {
    pub fn pass(&self) -> bool {
        self.chi_square.pass
    }
}

/// Which environment the coupled walks are built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSource {
    /// The discrete random-scan chain.
    Discrete,
    /// The continuous-time environment observed at Poisson event times.
    Embedded,
}

impl FieldSource {
    pub fn build(self, spec: &EnvironmentSpec, seed: u64, steps: u64) -> Result<OccupancyField> {
        match self {
            FieldSource::Discrete => stationary_field(spec, seed, steps),
            FieldSource::Embedded => crate::walk::embedded_field(spec, seed, steps as usize + 1),
        }
    }
}

const SIGNIFICANCE: f64 = 0.01;

/// Compares `Y_0 - x` over independent coupled pairs with the displacement of
/// independent direct walks with parameter `-eps`.
pub fn backward_law_test(
    config: &SimConfig,
    endpoint: i64,
    trials: usize,
) -> Result<BackwardLawReport> {
    backward_law_against(
        config,
        endpoint,
        trials,
        -config.epsilon,
        FieldSource::Discrete,
    )
}

/// As [`backward_law_test`], with the direct walk's parameter and the
/// environment source chosen by the caller.
pub fn backward_law_against(
    config: &SimConfig,
    endpoint: i64,
    trials: usize,
    direct_epsilon: f64,
    source: FieldSource,
) -> Result<BackwardLawReport> {
    config.validate()?;
    check_epsilon(direct_epsilon)?;
    let steps = config.steps();
    check_parity(endpoint, steps)?;
    let spec = config.env;
    let eps = config.epsilon;
    let backward: Vec<i64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.seed, i as u64);
            let field = source.build(&spec, seed, steps)?;
            let src = RandomSource::new(seed, Stream::WalkUniforms);
            let y = DirectionField::new(&field, &src, eps).walk_backward(endpoint, steps);
            Ok(y.positions[0] - endpoint)
        })
        .collect::<Result<_>>()?;
    let direct_seed = derived_seed(config.seed, 1);
    let direct: Vec<i64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(direct_seed, i as u64);
            let field = source.build(&spec, seed, steps)?;
            let src = RandomSource::new(seed, Stream::WalkUniforms);
            Ok(DirectionField::new(&field, &src, direct_epsilon)
                .walk_forward(0, steps)
                .end())
        })
        .collect::<Result<_>>()?;
    let mean = |v: &[i64]| v.iter().sum::<i64>() as f64 / v.len() as f64;
    Ok(BackwardLawReport {
        endpoint,
        trials,
        direct_epsilon,
        backward_mean: mean(&backward),
        direct_mean: mean(&direct),
        chi_square: two_sample_chi_square(&backward, &direct, SIGNIFICANCE),
    })
}

pub const MAX_PATH_LAW_STEPS: u64 = 6;

/// Full-path version for tiny horizons: the step sequence of the backward
/// walk read in reverse time against the step sequence of direct `(-eps)`
/// walks, over all `2^N` patterns.
pub fn backward_path_law_test(
    config: &SimConfig,
    endpoint: i64,
    trials: usize,
) -> Result<ChiSquareReport> {
    config.validate()?;
    let steps = config.steps();
    if steps > MAX_PATH_LAW_STEPS {
        return Err(invalid(format!(
            "path-law test enumerates 2^N patterns; N must be at most {MAX_PATH_LAW_STEPS}"
        )));
    }
    check_parity(endpoint, steps)?;
    let spec = config.env;
    let eps = config.epsilon;
    let pattern = |positions: &[i64]| -> i64 {
        positions
            .windows(2)
            .enumerate()
            .fold(0, |acc, (k, w)| acc | (((w[1] > w[0]) as i64) << k))
    };
    let backward: Vec<i64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.seed, i as u64);
            let field = stationary_field(&spec, seed, steps)?;
            let src = RandomSource::new(seed, Stream::WalkUniforms);
            let mut path = DirectionField::new(&field, &src, eps)
                .walk_backward(endpoint, steps)
                .positions;
            path.reverse();
            Ok(pattern(&path))
        })
        .collect::<Result<_>>()?;
    let direct_seed = derived_seed(config.seed, 2);
    let direct: Vec<i64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(direct_seed, i as u64);
            let field = stationary_field(&spec, seed, steps)?;
            let src = RandomSource::new(seed, Stream::WalkUniforms);
            Ok(pattern(
                &DirectionField::new(&field, &src, -eps)
                    .walk_forward(0, steps)
                    .positions,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(two_sample_chi_square(&backward, &direct, SIGNIFICANCE))
}

/// Frequencies behind the contradiction step of the antisymmetry argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkthroughReport {
    pub v_plus: f64,
    pub v_minus: f64,
    pub delta: f64,
    pub endpoint: i64,
    pub horizon: u64,
    pub trials: usize,
    /// Fraction with `X_N / N >= v(eps) - delta/4`.
    pub forward_event: f64,
    /// Fraction with `(Y_0 - x) / N >= v(-eps) - delta/4`.
    pub backward_event: f64,
    /// Fraction with both.
    pub joint_event: f64,
    pub non_crossing_violations: usize,
}

/// Builds coupled pairs pinned at [`choose_endpoint`] and records how often
/// the forward and backward walks reach their typical displacements.
pub fn proof_walkthrough(
    config: &SimConfig,
    v_plus: f64,
    v_minus: f64,
) -> Result<WalkthroughReport> {
    config.validate()?;
    let steps = config.steps();
    let delta = v_plus + v_minus;
    let endpoint = choose_endpoint(v_plus, delta, steps);
    let n = steps as f64;
    let outcomes: Vec<(bool, bool, bool)> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(config.seed, i as u64);
            let field = stationary_field(&config.env, seed, steps)?;
            let src = RandomSource::new(seed, Stream::WalkUniforms);
            let pair = couple(&field, &src, config.epsilon, endpoint, steps)?;
            let fwd = pair.forward.end() as f64 / n >= v_plus - delta / 4.0;
            let bwd = (pair.backward.positions[0] - endpoint) as f64 / n >= v_minus - delta / 4.0;
            Ok((fwd, bwd, check_non_crossing(&pair) < 0))
        })
        .collect::<Result<_>>()?;
    let m = config.trials as f64;
    let frac = |f: &dyn Fn(&(bool, bool, bool)) -> bool| {
        outcomes.iter().filter(|o| f(o)).count() as f64 / m
    };
    Ok(WalkthroughReport {
        v_plus,
        v_minus,
        delta,
        endpoint,
        horizon: steps,
        trials: config.trials,
        forward_event: frac(&|o| o.0),
        backward_event: frac(&|o| o.1),
        joint_event: frac(&|o| o.0 && o.1),
        non_crossing_violations: outcomes.iter().filter(|o| o.2).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::direction;

    #[test]
    fn endpoint_examples() {
        assert_eq!(choose_endpoint(0.6, 0.2, 10), 6);
        assert_eq!(choose_endpoint(0.0, 0.0, 4), 0);
        assert_eq!(choose_endpoint(-0.35, 0.1, 11), -5);
    }

    #[test]
    fn endpoint_parity_always_matches() {
        for steps in 1..40u64 {
            for k in -20..20 {
                let x = choose_endpoint(k as f64 * 0.037, 0.013 * k as f64, steps);
                assert_eq!((x - steps as i64).rem_euclid(2), 0);
            }
        }
    }

    fn all_ones(rows: usize) -> OccupancyField {
        let spec = EnvironmentSpec::new(EnvKind::FrozenBernoulli, 4, 1.0);
        OccupancyField::from_rows(spec, &vec![vec![1; 4]; rows]).unwrap()
    }

    #[test]
    fn backward_on_full_drift() {
        let field = all_ones(21);
        let src = RandomSource::new(3, Stream::WalkUniforms);
        let y = run_backward(&field, &src, 0.5, 30, 20).unwrap();
        assert_eq!(y.positions[0], 10);
        assert_eq!(y.positions[20], 30);
        y.check_invariants().unwrap();
    }

    #[test]
    fn backward_rejects_wrong_parity() {
        let field = all_ones(21);
        let src = RandomSource::new(3, Stream::WalkUniforms);
        assert!(run_backward(&field, &src, 0.1, 3, 20).is_err());
        assert!(run_backward(&field, &src, 0.1, 2, 21).is_err());
    }

    /// Fixed table of uniforms for hand-checked paths.
    struct Table(Vec<((i64, u64), f64)>);

    impl crate::walk::UniformField for Table {
        fn uniform(&self, x: i64, n: u64) -> f64 {
            self.0
                .iter()
                .find(|(k, _)| *k == (x, n))
                .map(|&(_, u)| u)
                .unwrap_or_else(|| panic!("no uniform at ({x}, {n})"))
        }
    }

    #[test]
    fn backward_three_steps_by_hand() {
        // ring of 4, rows: t0 = 1000, t1 = 0100, t2 = 0010, t3 = 0001
        let spec = EnvironmentSpec::new(EnvKind::FrozenBernoulli, 4, 0.5);
        let rows: Vec<Vec<u8>> = (0..4)
            .map(|t| (0..4).map(|x| (x == t) as u8).collect())
            .collect();
        let field = OccupancyField::from_rows(spec, &rows).unwrap();
        // eps = 0.2: thresholds 0.7 (occupied) / 0.3 (empty)
        // Y_3 = 1: eta_3(1) = 0, u = 0.1 <= 0.3 -> A = +1 -> Y_2 = 0
        // Y_2 = 0: eta_2(0) = 0, u = 0.5 > 0.3  -> A = -1 -> Y_1 = 1
        // Y_1 = 1: eta_1(1) = 1, u = 0.65 <= 0.7 -> A = +1 -> Y_0 = 0
        let table = Table(vec![((1, 3), 0.1), ((0, 2), 0.5), ((1, 1), 0.65)]);
        let y = DirectionField::new(&field, &table, 0.2).walk_backward(1, 3);
        assert_eq!(y.positions, vec![0, 1, 0, 1]);
    }

    #[test]
    fn coinciding_pair_gives_zero() {
        let field = all_ones(11);
        let src = RandomSource::new(3, Stream::WalkUniforms);
        let pair = couple(&field, &src, 0.5, 10, 10).unwrap();
        assert_eq!(pair.forward.end(), 10);
        assert_eq!(pair.backward.positions[0], 0);
        assert_eq!(check_non_crossing(&pair), 0);
        assert!(check_step_structure(&pair));
    }

    #[test]
    fn time_reversal_identity() {
        // -A^eps(occ, u) == A^{-eps}(occ, 1 - u) away from the threshold
        for occupied in [false, true] {
            for eps in [0.2, -0.2] {
                let threshold = if occupied { 0.5 + eps } else { 0.5 - eps };
                for u in [threshold - 0.05, threshold + 0.05] {
                    assert_eq!(
                        -direction(occupied, u, eps),
                        direction(occupied, 1.0 - u, -eps),
                        "occupied={occupied} eps={eps} u={u}"
                    );
                }
            }
        }
    }

    #[test]
    fn small_sweep_has_no_violation() {
        let r = non_crossing_sweep(2000, 5, 128).unwrap();
        assert!(r.pass(), "{r:?}");
        assert!(r.meetings > 500, "{r:?}");
    }

    #[test]
    fn broken_coupling_crosses() {
        assert!(broken_coupling_crossings(2000, 6).unwrap() > 0);
    }

    #[test]
    fn sweep_cases_cover_the_grid() {
        let cases: Vec<SweepCase> = (0..400).map(|i| sweep_case(1, i, 512)).collect();
        assert!(cases.iter().all(|c| (16..=512).contains(&c.steps)));
        for kind in EnvKind::ALL {
            for eps in SWEEP_EPSILONS {
                assert!(cases
                    .iter()
                    .any(|c| c.spec.kind == kind && c.epsilon == eps));
            }
        }
    }
}
