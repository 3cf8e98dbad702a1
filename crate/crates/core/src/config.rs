use serde::{Deserialize, Serialize};

use crate::environment::EnvironmentSpec;
use crate::error::{invalid, Result};
use crate::walk::check_epsilon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    #[default]
    Discrete,
    Continuous,
}

/// Full description of a Monte Carlo experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub epsilon: f64,
    pub env: EnvironmentSpec,
    /// Number of steps (discrete) or time horizon (continuous).
    pub horizon: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub time_mode: TimeMode,
}

impl SimConfig {
    pub fn discrete(
        env: EnvironmentSpec,
        epsilon: f64,
        steps: u64,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            epsilon,
            env,
            horizon: steps as f64,
            trials,
            seed,
            time_mode: TimeMode::Discrete,
        }
    }

    pub fn continuous(
        env: EnvironmentSpec,
        epsilon: f64,
        horizon: f64,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            time_mode: TimeMode::Continuous,
            ..Self::discrete(env, epsilon, 0, trials, seed)
        }
        .with_horizon(horizon)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        check_epsilon(self.epsilon)?;
        if !(self.horizon >= 1.0) || !self.horizon.is_finite() {
            return Err(invalid(format!(
                "horizon must be at least 1, got {}",
                self.horizon
            )));
        }
        if self.time_mode == TimeMode::Discrete && self.horizon.fract() != 0.0 {
            return Err(invalid(format!(
                "horizon must be a whole number of steps in discrete mode, got {}",
                self.horizon
            )));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        Ok(())
    }

    /// Horizon as a step count (discrete mode).
    pub fn steps(&self) -> u64 {
        self.horizon as u64
    }
}
