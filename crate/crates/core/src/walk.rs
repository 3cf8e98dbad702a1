//! The epsilon-random walk in discrete and continuous time.

use serde::{Deserialize, Serialize};

use crate::environment::{
    sample_stationary, ContinuousEnvironment, EnvironmentSpec, Occupancy, OccupancyField,
};
use crate::error::{invalid, Result};
use crate::rng::{exponential_gap, walk_uniform, RandomSource, Stream};

/// Step taken from a site: `+1` iff the uniform falls below `1/2 + eps` on an
/// occupied site or below `1/2 - eps` on an empty one.
#[inline(always)]
pub fn direction(occupied: bool, u: f64, epsilon: f64) -> i64 {
    let threshold = if occupied {
        0.5 + epsilon
    } else {
        0.5 - epsilon
    };
    if u <= threshold {
        1
    } else {
        -1
    }
}

pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(-0.5..=0.5).contains(&epsilon) {
        return Err(invalid(format!(
            "epsilon must lie in [-1/2, 1/2] so that 1/2 ± epsilon are probabilities, got {epsilon}"
        )));
    }
    Ok(())
}

/// Source of the uniforms `U_{x,n}` attached to space-time points.
pub trait UniformField {
    fn uniform(&self, x: i64, n: u64) -> f64;
}

impl UniformField for RandomSource {
    #[inline(always)]
    fn uniform(&self, x: i64, n: u64) -> f64 {
        self.uniform_at(x, n)
    }
}

impl<F: UniformField + ?Sized> UniformField for &F {
    #[inline(always)]
    fn uniform(&self, x: i64, n: u64) -> f64 {
        (**self).uniform(x, n)
    }
}

/// The field `A^eps_{x,n}` of ±1 directions built from an environment and a
/// uniform field.
#[derive(Debug, Clone, Copy)]
pub struct DirectionField<E, U> {
    pub env: E,
    pub uniforms: U,
    pub epsilon: f64,
}

impl<E: Occupancy, U: UniformField> DirectionField<E, U> {
    pub fn new(env: E, uniforms: U, epsilon: f64) -> Self {
        Self {
            env,
            uniforms,
            epsilon,
        }
    }

    #[inline(always)]
    pub fn at(&self, x: i64, n: u64) -> i64 {
        direction(
            self.env.occupied(x, n),
            self.uniforms.uniform(x, n),
            self.epsilon,
        )
    }

    /// Forward walk: `X_{n+1} = X_n + A_{X_n, n}`.
    pub fn walk_forward(&self, start: i64, steps: u64) -> Trajectory {
        let mut positions = Vec::with_capacity(steps as usize + 1);
        let mut x = start;
        positions.push(x);
        for n in 0..steps {
            x += self.at(x, n);
            positions.push(x);
        }
        Trajectory::discrete(start, positions)
    }

    /// Backward walk pinned at time `steps`: `Y_{m-1} = Y_m - A_{Y_m, m}`.
    /// Returned indexed by forward time, so `positions[steps] == end`.
    pub fn walk_backward(&self, end: i64, steps: u64) -> Trajectory {
        let mut positions = vec![0; steps as usize + 1];
        let mut y = end;
        positions[steps as usize] = y;
        for m in (1..=steps).rev() {
            y -= self.at(y, m);
            positions[m as usize - 1] = y;
        }
        Trajectory::discrete(positions[0], positions)
    }
}

impl<F: Occupancy + ?Sized> Occupancy for &F {
    #[inline(always)]
    fn occupied(&self, x: i64, n: u64) -> bool {
        (**self).occupied(x, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: i64,
    pub positions: Vec<i64>,
    /// Event times of a continuous-time walk; `positions[k]` holds on
    /// `[jump_times[k-1], jump_times[k])`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_times: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn discrete(start: i64, positions: Vec<i64>) -> Self {
        Self {
            start,
            positions,
            jump_times: None,
        }
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn end(&self) -> i64 {
        *self.positions.last().expect("trajectory is never empty")
    }

    pub fn displacement(&self) -> i64 {
        self.end() - self.positions[0]
    }

    /// Checks nearest-neighbour steps, plus the parity rule in discrete mode
    /// and strictly increasing jump times in continuous mode.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.positions.is_empty() {
            return Err("empty trajectory".into());
        }
        if self.positions[0] != self.start {
            return Err(format!(
                "positions[0] = {} differs from start {}",
                self.positions[0], self.start
            ));
        }
        if let Some(k) = self
            .positions
            .windows(2)
            .position(|w| (w[1] - w[0]).abs() != 1)
        {
            return Err(format!("step {k} is not nearest-neighbour"));
        }
        match &self.jump_times {
            None => {
                if let Some(n) = self
                    .positions
                    .iter()
                    .enumerate()
                    .position(|(n, &x)| (x - self.start - n as i64).rem_euclid(2) != 0)
                {
                    return Err(format!("parity broken at step {n}"));
                }
            }
            Some(times) => {
                if times.len() + 1 != self.positions.len() {
                    return Err("positions must have one entry more than jump_times".into());
                }
                if times.windows(2).any(|w| !(w[0] < w[1]))
                    || times.first().is_some_and(|&t| t <= 0.0)
                {
                    return Err("jump times must be positive and strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    /// Position at continuous time `t` (last jump at or before `t`).
    pub fn position_at(&self, t: f64) -> i64 {
        match &self.jump_times {
            None => self.positions[(t.max(0.0) as usize).min(self.steps())],
            Some(times) => self.positions[times.partition_point(|&s| s <= t)],
        }
    }
}

/// Discrete walk on a stored environment, with uniforms `U_{x,n}` from `src`.
pub fn run_discrete(
    field: &OccupancyField,
    src: &RandomSource,
    epsilon: f64,
    start: i64,
    steps: u64,
) -> Result<Trajectory> {
    check_epsilon(epsilon)?;
    if steps > field.horizon() {
        return Err(invalid(format!(
            "horizon {steps} exceeds the {} rows of the environment field",
            field.num_rows()
        )));
    }
    let traj = DirectionField::new(field, src, epsilon).walk_forward(start, steps);
    debug_assert!(traj.check_invariants().is_ok());
    Ok(traj)
}

/// Result of a continuous-time run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRun {
    pub trajectory: Trajectory,
    pub horizon: f64,
    /// Ring size of the environment.
    pub size: usize,
    /// Environment configuration seen at each walker event, `sigma_n = eta_{T_n}`.
    pub embedded: Vec<Vec<u8>>,
    /// `U_n` used at each event.
    pub uniforms: Vec<f64>,
}

/// The streams a continuous run draws from, all under one seed.
fn streams(seed: u64) -> [RandomSource; 4] {
    [
        RandomSource::new(seed, Stream::InitialConfig),
        RandomSource::new(seed, Stream::Environment),
        RandomSource::new(seed, Stream::Poisson),
        RandomSource::new(seed, Stream::WalkUniforms),
    ]
}

/// Continuous-time walk: jumps at the events of a rate-one Poisson clock,
/// in an environment evolving under independent rate-one site clocks.
/// The initial environment is drawn from the stationary measure.
pub fn run_continuous(
    spec: &EnvironmentSpec,
    seed: u64,
    epsilon: f64,
    start: i64,
    horizon: f64,
    record_embedded: bool,
) -> Result<ContinuousRun> {
    check_epsilon(epsilon)?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let [init_src, env_src, clock_src, walk_src] = streams(seed);
    let init = sample_stationary(spec, &init_src)?;
    let mut env = ContinuousEnvironment::new(*spec, env_src, init)?;
    let mut positions = vec![start];
    let mut times = Vec::new();
    let mut embedded = Vec::new();
    let mut uniforms = Vec::new();
    let mut x = start;
    let mut t = 0.0;
    for n in 0.. {
        t += exponential_gap(&clock_src, 0, n, 1.0);
        if t > horizon {
            break;
        }
        env.advance_to(t);
        let u = walk_uniform(&walk_src, n);
        x += direction(env.occupied(x), u, epsilon);
        positions.push(x);
        times.push(t);
        if record_embedded {
            embedded.push(env.config().to_vec());
            uniforms.push(u);
        }
    }
    Ok(ContinuousRun {
        trajectory: Trajectory {
            start,
            positions,
            jump_times: Some(times),
        },
        horizon,
        size: spec.size,
        embedded,
        uniforms,
    })
}

/// Displacement per unit time of a continuous run, without recording the path.
pub fn continuous_displacement(
    spec: &EnvironmentSpec,
    seed: u64,
    epsilon: f64,
    horizon: f64,
) -> Result<(i64, u64)> {
    check_epsilon(epsilon)?;
    let [init_src, env_src, clock_src, walk_src] = streams(seed);
    let init = sample_stationary(spec, &init_src)?;
    let mut env = ContinuousEnvironment::new(*spec, env_src, init)?;
    let mut x = 0i64;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        t += exponential_gap(&clock_src, 0, events, 1.0);
        if t > horizon {
            break;
        }
        env.advance_to(t);
        x += direction(env.occupied(x), walk_uniform(&walk_src, events), epsilon);
        events += 1;
    }
    Ok((x, events))
}

/// The embedded chain of a continuous run: positions at the event times and
/// the environment configurations `sigma_n` read at those times.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChain {
    pub trajectory: Trajectory,
    pub sigma: Vec<Vec<u8>>,
}

pub fn embed_at_jump_times(run: &ContinuousRun) -> Result<EmbeddedChain> {
    let jumps = run.trajectory.positions.len() - 1;
    if run.embedded.len() != jumps {
        return Err(invalid(
            "the continuous run did not record the environment at its events",
        ));
    }
    Ok(EmbeddedChain {
        trajectory: Trajectory::discrete(run.trajectory.start, run.trajectory.positions.clone()),
        sigma: run.embedded.clone(),
    })
}

/// Records `rows` consecutive configurations `sigma_0..sigma_{rows-1}` of the
/// continuous environment sampled at the events of an independent rate-one
/// Poisson clock.
pub fn embedded_field(spec: &EnvironmentSpec, seed: u64, rows: usize) -> Result<OccupancyField> {
    let [init_src, env_src, clock_src, _] = streams(seed);
    let init = sample_stationary(spec, &init_src)?;
    let mut env = ContinuousEnvironment::new(*spec, env_src, init)?;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(rows);
    for n in 0..rows as u64 {
        t += exponential_gap(&clock_src, 0, n, 1.0);
        env.advance_to(t);
        out.push(env.config().to_vec());
    }
    OccupancyField::from_rows(*spec, &out)
}
